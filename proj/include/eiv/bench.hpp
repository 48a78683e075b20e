#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eiv/estimators.hpp"
#include "eiv/model.hpp"

namespace eiv
{

enum class EstimatorKind
{
    conic,
    comp_mu,
    mu,
    dantzig_x,
    dantzig_z,
};

std::string estimator_name(EstimatorKind kind);
EstimatorKind estimator_from_name(const std::string &name);

// One Monte Carlo sweep: replicated draws from the AR(1) errors-in-variables
// process, fitted by every requested estimator under the practical tuning
// rule mu = tau = sigma sqrt(log(p/epsilon)/n) with D_hat = sigma_star^2 I
// (override tau/mu to pin the levels instead).
struct SimulationConfig
{
    Eigen::Index n = 300;
    Eigen::Index p = 10;
    int replications = 100;
    std::string theta_star_choice = "first"; // first | second | custom
    VectorXd theta_custom;
    double sigma = 0.128;
    double sigma_star = 0.45;
    double rho = 0.25;
    double epsilon = 0.05;
    std::vector<double> lambdas = {0.5, 0.75, 1.0};
    std::vector<EstimatorKind> estimators = {EstimatorKind::conic, EstimatorKind::comp_mu,
                                             EstimatorKind::dantzig_x, EstimatorKind::dantzig_z};
    uint64_t base_seed = 1;
    std::optional<double> tau_override;
    std::optional<double> mu_override;
};

struct ReplicationRecord
{
    int replication = 0;
    bool feasible = false;
    double seconds = 0.0;
    VectorXd theta_hat; // empty when infeasible
};

struct MetricsRow
{
    std::string method;
    std::optional<double> lambda; // set for the conic estimator only
    double bias = 0.0;
    double rmse = 0.0;
    double pr = 0.0;
    int feasible = 0;
    int total = 0;
    double mean_seconds = 0.0;
    std::vector<ReplicationRecord> records;
};

struct MetricsTable
{
    Eigen::Index n = 0;
    Eigen::Index p = 0;
    VectorXd theta_star;
    double tau = 0.0;
    double mu = 0.0;
    uint64_t base_seed = 0;
    std::vector<MetricsRow> rows;
};

struct Metrics
{
    double bias = 0.0;
    double rmse = 0.0;
    double pr = 0.0;
};

// theta* for the named choice: (1,1,1,1,1,0,...) or (1,1/2,1/3,1/4,1/5,0,...)
// or the custom vector. Requires p >= 5 for the named choices.
VectorXd theta_star_for(const SimulationConfig &cfg);

// bias = |mean(theta_hat) - theta*|_2, rmse = sqrt(mean |theta_hat -
// theta*|_2^2), pr = sqrt(mean (1/n)|X(theta_hat - theta*)|_2^2). The designs
// are passed per replication and aligned with theta_hats.
Metrics compute_metrics(const std::vector<VectorXd> &theta_hats, const std::vector<MatrixXd> &Xs,
                        const VectorXd &theta_star);

// Replications run on a worker pool (size from the EIV_WORKERS environment
// variable, default all cores); aggregates are reduced in replication order
// so results are bit-identical for any worker count. Infeasible fits are
// excluded from aggregates and counted in the row.
MetricsTable run_monte_carlo(const SimulationConfig &cfg);

struct RateScanRow
{
    Eigen::Index n = 0;
    double rmse = 0.0;
};

struct RateScanResult
{
    std::vector<RateScanRow> points;
    std::optional<double> slope; // d log(rmse) / d log(n), needs >= 2 points
};

// RMSE of the conic estimator (first configured lambda) against n, with the
// fitted log-log slope; cfg.n is overridden by each entry of n_list.
RateScanResult rate_scan(const SimulationConfig &cfg, const std::vector<Eigen::Index> &n_list);

// CSV has the fixed header Method,Lambda,Bias,RMSE,PR,Feasible,MeanSeconds;
// JSON mirrors the table and keeps the per-replication records.
std::string emit_csv(const MetricsTable &table);
std::string emit_json(const MetricsTable &table);
MetricsTable parse_metrics_json(const std::string &text);

SimulationConfig parse_simulation_config(const std::string &json_text);

// Fits user-supplied data: y and Z from single-column/matrix CSVs, estimator
// settings from a JSON config with fields estimator, tau, and (per estimator)
// mu, lambda, d_hat. Returns the fit serialized as JSON.
std::string fit_from_file(const std::string &y_path, const std::string &z_path,
                          const std::string &config_path);

} // namespace eiv
