// Command-line front end: simulate | fit | sensitivity | minimax.
//
// Exit codes: 0 success, 2 parse failure (bad flags, malformed files,
// invalid configuration), 3 shape mismatch, 4 infeasible program,
// 5 solver failure.

#include "eiv/bench.hpp"
#include "eiv/error.hpp"
#include "eiv/io.hpp"
#include "eiv/minimax.hpp"
#include "eiv/sensitivities.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

namespace
{

using eiv::MatrixXd;
using eiv::VectorXd;

void write_or_print(const std::string &out_path, const std::string &text)
{
    if (out_path.empty())
        std::cout << text;
    else
        eiv::write_text_file(out_path, text);
}

nlohmann::json vector_to_json(const VectorXd &v)
{
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        arr.push_back(v(i));
    return arr;
}

void add_simulate(CLI::App &app)
{
    auto *cmd = app.add_subcommand("simulate", "Run the Monte Carlo study from a JSON config");
    auto config_path = std::make_shared<std::string>();
    auto out_path = std::make_shared<std::string>();
    auto format = std::make_shared<std::string>("csv");
    cmd->add_option("--config", *config_path, "Simulation config (JSON)")->required();
    cmd->add_option("--out", *out_path, "Output file (stdout when omitted)");
    cmd->add_option("--format", *format, "Output format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    cmd->callback(
        [config_path, out_path, format]
        {
            const eiv::SimulationConfig cfg =
                eiv::parse_simulation_config(eiv::read_text_file(*config_path));
            const eiv::MetricsTable table = eiv::run_monte_carlo(cfg);
            write_or_print(*out_path,
                           *format == "json" ? eiv::emit_json(table) : eiv::emit_csv(table));
        });
}

void add_fit(CLI::App &app)
{
    auto *cmd = app.add_subcommand("fit", "Fit one estimator to data stored in CSV files");
    auto y_path = std::make_shared<std::string>();
    auto z_path = std::make_shared<std::string>();
    auto config_path = std::make_shared<std::string>();
    auto out_path = std::make_shared<std::string>();
    cmd->add_option("--y", *y_path, "Response vector (single-column CSV)")->required();
    cmd->add_option("--Z", *z_path, "Observed design matrix (CSV)")->required();
    cmd->add_option("--config", *config_path, "Estimator config (JSON)")->required();
    cmd->add_option("--out", *out_path, "Report file (stdout when omitted)");
    cmd->callback(
        [y_path, z_path, config_path, out_path]
        {
            const std::string report = eiv::fit_from_file(*y_path, *z_path, *config_path);
            write_or_print(*out_path, report + "\n");
        });
}

void add_sensitivity(CLI::App &app)
{
    auto *cmd = app.add_subcommand(
        "sensitivity", "Compute a sensitivity constant of a Gram matrix stored as CSV");
    auto matrix_path = std::make_shared<std::string>();
    auto out_path = std::make_shared<std::string>();
    auto q = std::make_shared<std::string>("inf");
    auto s = std::make_shared<int>(1);
    auto u = std::make_shared<double>(1.0);
    auto restarts = std::make_shared<int>(20);
    auto seed = std::make_shared<uint64_t>(0);
    cmd->add_option("--matrix", *matrix_path, "Gram matrix Psi (CSV)")->required();
    cmd->add_option("--s", *s, "Support size")->required()->check(CLI::PositiveNumber);
    cmd->add_option("--u", *u, "Cone opening constant")->required()->check(CLI::NonNegativeNumber);
    cmd->add_option("--q", *q, "Norm: 1, 2, inf, or pr")
        ->check(CLI::IsMember({"1", "2", "inf", "pr"}))
        ->capture_default_str();
    cmd->add_option("--restarts", *restarts, "Local-search restarts for q in {2, pr}")
        ->capture_default_str();
    cmd->add_option("--seed", *seed, "Local-search seed")->capture_default_str();
    cmd->add_option("--out", *out_path, "Report file (stdout when omitted)");
    cmd->callback(
        [matrix_path, out_path, q, s, u, restarts, seed]
        {
            const MatrixXd psi = eiv::read_csv_matrix(*matrix_path);
            eiv::SensitivityReport rep;
            if (*q == "1")
                rep = eiv::kappa_exact(psi, *s, *u, eiv::SensitivityNorm::l1);
            else if (*q == "inf")
                rep = eiv::kappa_exact(psi, *s, *u, eiv::SensitivityNorm::linf);
            else if (*q == "2")
                rep = eiv::kappa_local(psi, *s, *u, eiv::SensitivityNorm::l2, *restarts, *seed);
            else
                rep = eiv::kappa_local(psi, *s, *u, eiv::SensitivityNorm::pr, *restarts, *seed);

            nlohmann::json report;
            report["q"] = *q;
            report["s"] = *s;
            report["u"] = *u;
            report["p"] = psi.rows();
            report["value"] = rep.value;
            report["lower"] = rep.lower;
            report["upper"] = rep.upper;
            report["method"] = rep.method == eiv::SensitivityReport::Method::exact_lp
                                   ? "exact_lp"
                                   : "local_search";
            report["witness"] = vector_to_json(rep.witness);
            report["witness_support"] = rep.witness_support;
            report["coherence"] = eiv::coherence(psi);
            write_or_print(*out_path, report.dump(2) + "\n");
        });
}

void add_minimax(CLI::App &app)
{
    auto *cmd = app.add_subcommand(
        "minimax", "Build the packing-based hypothesis family and its separation/KL report");
    auto p = std::make_shared<Eigen::Index>(0);
    auto s = std::make_shared<int>(0);
    auto n = std::make_shared<Eigen::Index>(0);
    auto radius = std::make_shared<double>(1.0);
    auto c1 = std::make_shared<double>(0.1);
    auto c2 = std::make_shared<double>(1.0);
    auto seed = std::make_shared<uint64_t>(1);
    auto sigma = std::make_shared<double>(0.128);
    auto sigma_star = std::make_shared<double>(0.45);
    auto rho = std::make_shared<double>(0.25);
    auto family_path = std::make_shared<std::string>();
    auto out_path = std::make_shared<std::string>();
    cmd->add_option("--p", *p, "Ambient dimension")->required()->check(CLI::PositiveNumber);
    cmd->add_option("--s", *s, "Sparsity of each hypothesis")
        ->required()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--n", *n, "Sample size entering the KL budget")
        ->required()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--R", *radius, "Radius of the hypothesis sphere")->capture_default_str();
    cmd->add_option("--c1", *c1, "Packing cardinality constant")->capture_default_str();
    cmd->add_option("--c2", *c2, "KL budget constant")->capture_default_str();
    cmd->add_option("--seed", *seed, "Packing shuffle seed")->capture_default_str();
    cmd->add_option("--sigma", *sigma, "Response noise sd for the KL model")
        ->capture_default_str();
    cmd->add_option("--sigma-star", *sigma_star, "Design noise sd for the KL model")
        ->capture_default_str();
    cmd->add_option("--rho", *rho, "AR(1) correlation of the design covariance")
        ->capture_default_str();
    cmd->add_option("--family", *family_path, "CSV file for the hypothesis matrix (row = one)");
    cmd->add_option("--out", *out_path, "JSON report file (stdout when omitted)");
    cmd->callback(
        [p, s, n, radius, c1, c2, seed, sigma, sigma_star, rho, family_path, out_path]
        {
            const double gamma = eiv::gamma_select(*n, *p, *s, *radius, *c1, *c2);
            const eiv::PackingSet pack = eiv::vg_packing(*p, *s, *seed, *c1);
            const eiv::HypothesisFamily fam = eiv::hypothesis_family(pack, *radius, gamma);

            const size_t m = fam.omega_bars.size();
            if (!family_path->empty())
            {
                MatrixXd rows(Eigen::Index(m), *p);
                for (size_t j = 0; j < m; ++j)
                    rows.row(Eigen::Index(j)) = fam.omega_bars[j].transpose();
                eiv::write_csv_matrix(*family_path, rows);
            }

            double min_l1 = std::numeric_limits<double>::infinity();
            double min_l2 = min_l1, min_linf = min_l1;
            for (size_t a = 0; a < m; ++a)
                for (size_t b = a + 1; b < m; ++b)
                {
                    const VectorXd d = fam.omega_bars[a] - fam.omega_bars[b];
                    min_l1 = std::min(min_l1, d.lpNorm<1>());
                    min_l2 = std::min(min_l2, d.norm());
                    min_linf = std::min(min_linf, d.lpNorm<Eigen::Infinity>());
                }

            MatrixXd sig(*p, *p);
            for (Eigen::Index i = 0; i < *p; ++i)
                for (Eigen::Index j = 0; j < *p; ++j)
                    sig(i, j) = std::pow(*rho, double(std::abs(i - j)));
            const eiv::KlModel model(sig, *sigma, *sigma_star);
            nlohmann::json kls = nlohmann::json::array();
            double kl_max = 0.0;
            for (size_t j = 1; j < m; ++j)
            {
                const double v = eiv::kl_exact(model, fam.omega_bars[0], fam.omega_bars[j]);
                kls.push_back(v);
                kl_max = std::max(kl_max, v);
            }

            nlohmann::json report;
            report["p"] = *p;
            report["s"] = *s;
            report["n"] = *n;
            report["R"] = *radius;
            report["gamma"] = gamma;
            report["hypotheses"] = m;
            report["codewords"] = pack.codewords.size();
            report["min_pairwise_hamming"] = pack.min_pairwise_dist;
            report["log_cardinality"] = pack.log_cardinality;
            report["cardinality_target"] = pack.cardinality_target;
            report["meets_cardinality_bound"] = pack.meets_cardinality_bound;
            report["min_separation"] = {{"l1", min_l1}, {"l2", min_l2}, {"linf", min_linf}};
            report["kl_per_observation"] = kls;
            report["kl_max"] = kl_max;
            report["kl_budget"] = *c2 * double(*n) * kl_max;
            write_or_print(*out_path, report.dump(2) + "\n");
        });
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Sparse errors-in-variables regression toolkit"};
    app.require_subcommand(1);
    add_simulate(app);
    add_fit(app);
    add_sensitivity(app);
    add_minimax(app);

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    catch (const eiv::Error &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.kind);
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    }
    return 0;
}
