#include "eiv/io.hpp"

#include "eiv/error.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace eiv
{

namespace
{

double parse_double(const std::string &token, const std::string &path)
{
    double out = 0.0;
    const char *begin = token.data();
    const char *end = begin + token.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    require(ec == std::errc() && ptr == end, ErrorKind::parse,
            "csv: unreadable numeric token '" + token + "' in " + path);
    return out;
}

std::string trim(const std::string &s)
{
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos)
        return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

} // namespace

MatrixXd read_csv_matrix(const std::string &path)
{
    std::ifstream in(path);
    require(in.good(), ErrorKind::parse, "csv: cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line))
    {
        if (trim(line).empty())
            continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            row.push_back(parse_double(trim(cell), path));
        require(rows.empty() || row.size() == rows.front().size(), ErrorKind::shape,
                "csv: ragged row in " + path);
        rows.push_back(std::move(row));
    }
    require(!rows.empty(), ErrorKind::shape, "csv: no data rows in " + path);
    MatrixXd m(static_cast<Eigen::Index>(rows.size()),
               static_cast<Eigen::Index>(rows.front().size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            m(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
    return m;
}

VectorXd read_csv_vector(const std::string &path)
{
    const MatrixXd m = read_csv_matrix(path);
    require(m.cols() == 1, ErrorKind::shape, "csv: expected a single column in " + path);
    return m.col(0);
}

std::string format_double(double x)
{
    char buf[64];
    for (int prec = 15; prec <= 17; ++prec)
    {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, x);
        double back = 0.0;
        std::sscanf(buf, "%lf", &back);
        if (back == x)
            break;
    }
    return buf;
}

void write_csv_matrix(const std::string &path, const MatrixXd &m)
{
    std::ofstream out(path);
    require(out.good(), ErrorKind::parse, "csv: cannot write " + path);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
    {
        for (Eigen::Index j = 0; j < m.cols(); ++j)
        {
            if (j)
                out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
    require(out.good(), ErrorKind::parse, "csv: write failed for " + path);
}

void write_csv_vector(const std::string &path, const VectorXd &v)
{
    write_csv_matrix(path, v);
}

std::string read_text_file(const std::string &path)
{
    std::ifstream in(path);
    require(in.good(), ErrorKind::parse, "io: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string &path, const std::string &content)
{
    std::ofstream out(path);
    require(out.good(), ErrorKind::parse, "io: cannot write " + path);
    out << content;
    require(out.good(), ErrorKind::parse, "io: write failed for " + path);
}

} // namespace eiv
