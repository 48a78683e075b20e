#pragma once

#include <Eigen/Dense>
#include <string>

namespace eiv
{

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Plain numeric CSV with no header. Unreadable tokens or missing files raise
// parse errors; ragged or empty tables raise shape errors.
MatrixXd read_csv_matrix(const std::string &path);

// Single-column CSV (one value per line).
VectorXd read_csv_vector(const std::string &path);

void write_csv_matrix(const std::string &path, const MatrixXd &m);
void write_csv_vector(const std::string &path, const VectorXd &v);

std::string read_text_file(const std::string &path);
void write_text_file(const std::string &path, const std::string &content);

// Shortest representation that parses back to the identical double.
std::string format_double(double x);

} // namespace eiv
