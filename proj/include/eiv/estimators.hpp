#pragma once

#include "eiv/model.hpp"
#include "eiv/solver.hpp"

namespace eiv
{

// Output of one selector fit. t_hat is the conic auxiliary variable for the
// conic estimator and |theta_hat|_1 for the LP-reformulated selectors;
// residual_stat reports |S(theta_hat)|_inf so callers can verify which score
// constraints are active.
struct FitResult
{
    VectorXd theta_hat;
    double t_hat = 0.0;
    double objective = 0.0;
    double residual_stat = 0.0;
    SolverResult solver;
};

// Score vector S(theta) = (1/n) Z'(y - Z theta) + D_hat theta.
VectorXd score_vector(const Dataset &data, const Compensation &comp, const VectorXd &theta);

// Second-order cone estimator: minimize |theta|_1 + lambda t subject to
// |S(theta)|_inf <= mu t + tau, ||theta||_2 <= t, theta in Theta. Solved by
// splitting theta = theta+ - theta- with 2p linear score constraints and one
// second-order cone.
FitResult fit_conic(const Dataset &data, const Compensation &comp, const EstimatorConfig &cfg,
                    double tol = 1e-8);

// Compensated matrix-uncertainty selector: minimize t = sum(theta+ + theta-)
// subject to |S(theta)|_inf <= mu t + tau. A single LP whose optimum solves
// the nonconvex program with t = |theta|_1 (no-padding fixed-point argument);
// the identity |theta_hat|_1 = t_hat is asserted to 10*tol.
FitResult fit_compensated_mu(const Dataset &data, const Compensation &comp,
                             const EstimatorConfig &cfg, double tol = 1e-8);

// Plain matrix-uncertainty selector: the same LP with D_hat = 0.
FitResult fit_mu_selector(const Dataset &data, const EstimatorConfig &cfg, double tol = 1e-8);

// Dantzig selector on the design M (caller passes M = X for the oracle
// variant or M = Z for the naive one):
// minimize |theta|_1 subject to |(1/n) M'(y - M theta)|_inf <= tau.
FitResult fit_dantzig(const VectorXd &y, const MatrixXd &M, double tau,
                      const std::optional<std::pair<MatrixXd, VectorXd>> &theta_set = std::nullopt,
                      double tol = 1e-8);

// Bisection oracle for the fixed-point characterization of the compensated
// selector: phi(r) = min{|theta|_1 : |S(theta)|_inf <= mu r + tau} is convex
// and non-increasing; returns theta achieving phi(r_bar) at a root of
// phi(r) = r with |phi(r_bar) - r_bar| <= r_tol. Used as an independent
// cross-check of fit_compensated_mu.
FitResult fixed_point_oracle(const Dataset &data, const Compensation &comp,
                             const EstimatorConfig &cfg, double r_tol = 1e-9);

} // namespace eiv
