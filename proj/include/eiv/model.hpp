#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <utility>

#include "eiv/error.hpp"

namespace eiv
{

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Observed regression data: y = X theta* + xi observed through Z = X + W.
// X is kept only when the generator produced it (oracle fits, prediction
// metrics); real data has no X.
struct Dataset
{
    VectorXd y;
    MatrixXd Z;
    std::optional<MatrixXd> X_opt;
    Eigen::Index n = 0;
    Eigen::Index p = 0;
};

// Ground truth of the data-generating process. Sigma is AR(1) with
// parameter rho by default; a dense PSD matrix may be supplied instead.
struct TrueModel
{
    VectorXd theta_star;
    double sigma = 0.0;      // sd of the response noise xi
    double sigma_star = 0.0; // sd of the design noise W
    double rho = 0.0;        // AR(1) correlation of Sigma
    uint64_t seed = 0;
    std::optional<MatrixXd> Sigma_dense; // overrides the AR(1) family
};

// Design observed through a Bernoulli missingness mask: Z_tilde holds the
// masked values (zero where missing), pi[j] the per-column missing rate.
struct MissingDataSample
{
    MatrixXd Z_tilde;
    VectorXd pi;
};

enum class CompensationMode
{
    known,     // D known exactly (e.g. sigma_star^2 I)
    estimated, // D estimated from data (missing-data estimator)
    zero,      // no compensation (plain MU selector)
};

// Diagonal compensation matrix D_hat used in the score
// S(theta) = (1/n) Z^T (y - Z theta) + D_hat theta.
struct Compensation
{
    VectorXd d_hat;
    CompensationMode mode = CompensationMode::known;

    static Compensation isotropic(double sigma_star_sq, Eigen::Index p,
                                  CompensationMode mode = CompensationMode::known)
    {
        Compensation c;
        c.d_hat = VectorXd::Constant(p, sigma_star_sq);
        c.mode = mode;
        return c;
    }
    static Compensation none(Eigen::Index p)
    {
        Compensation c;
        c.d_hat = VectorXd::Zero(p);
        c.mode = CompensationMode::zero;
        return c;
    }
};

// Constants entering the theoretical tuning rule. gamma0/t0 and gamma2/t2
// are the sub-exponential constants of the cross-term and off-diagonal
// deviation bounds; c_b, c_b_prime control the D_hat estimation error term.
struct TuningConstants
{
    double epsilon = 0.05;
    double gamma0 = 1.0;
    double t0 = 1.0;
    double gamma2 = 1.0;
    double t2 = 1.0;
    double c_b = 1.0;
    double c_b_prime = 1.0;
    double m2 = 1.0;

    // Scale-aware defaults: gamma = sigma*sigma_star + sigma_star^2 matches the
    // variance scale of the products bounded by delta3/delta4/delta5, and
    // t = 1/(2 max(sigma,sigma_star)^2) the sub-exponential tail scale.
    static TuningConstants defaults(double sigma, double sigma_star, double epsilon, double m2)
    {
        TuningConstants tc;
        tc.epsilon = epsilon;
        tc.m2 = m2;
        const double g = sigma * sigma_star + sigma_star * sigma_star;
        const double t = 1.0 / (2.0 * std::max({sigma, sigma_star, 1e-12}) *
                                std::max({sigma, sigma_star, 1e-12}));
        tc.gamma0 = tc.gamma2 = std::max(g, 1e-12);
        tc.t0 = tc.t2 = t;
        return tc;
    }
};

// Tuning triple of the conic program plus the optional polyhedral
// parameter set Theta = {theta : G theta <= h}.
struct EstimatorConfig
{
    double lambda = 0.5;
    double mu = 0.0;
    double tau = 0.0;
    std::optional<std::pair<MatrixXd, VectorXd>> theta_set;
};

// Draws a Dataset from the model: rows x_i ~ N(0, Sigma), w_i ~ N(0,
// sigma_star^2 I), xi_i ~ N(0, sigma^2), all independent; deterministic
// given the seed.
Dataset generate_dgp(const TrueModel &model, Eigen::Index n, Eigen::Index p);

// Inverse-probability rescaling of masked data: Z_ij = Z_tilde_ij/(1-pi_j),
// and the compensation estimate sigma_hat_j^2 = pi_j/(1-pi_j)^2 * mean_i
// Z_tilde_ij^2 (unbiased for sigma_j^2 since E Z_tilde_ij^2 = (1-pi_j) X_ij^2).
std::pair<MatrixXd, Compensation> missing_data_rescale(const MissingDataSample &sample);

// max_j (1/n) sum_i |X_ij|^k  (the empirical k-th moment bound m_k).
double compute_m_k(const MatrixXd &X, double k);

// Psi = (1/n) X^T X.
MatrixXd gram(const MatrixXd &X);

// Theoretical tuning: mu = delta1' + delta4' + delta5 + b, tau = delta2 +
// delta3, with the deltas evaluated from the sub-Gaussian/sub-exponential
// tail bounds at confidence epsilon. b = 0 when mode == known.
std::pair<double, double> theoretical_tuning(const TuningConstants &tc, Eigen::Index n,
                                             Eigen::Index p, double sigma, double sigma_star,
                                             CompensationMode mode);

// Practical rule: mu = tau = sigma sqrt(log(p/epsilon)/n).
std::pair<double, double> practical_tuning(double epsilon, Eigen::Index n, Eigen::Index p,
                                           double sigma);

} // namespace eiv
