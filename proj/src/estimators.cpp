#include "eiv/estimators.hpp"

#include "eiv/error.hpp"

#include <cmath>
#include <sstream>

namespace eiv
{

namespace
{

struct ScoreData
{
    VectorXd r; // (1/n) Z'y
    MatrixXd Q; // (1/n) Z'Z - D_hat
};

ScoreData score_data(const VectorXd &y, const MatrixXd &Z, const VectorXd &d_hat)
{
    const Eigen::Index n = Z.rows(), p = Z.cols();
    require(y.size() == n, ErrorKind::shape, "estimator: y length differs from rows of Z");
    require(d_hat.size() == p, ErrorKind::shape, "estimator: compensation length differs from p");
    require(n >= 1 && p >= 1, ErrorKind::shape, "estimator: empty data");
    ScoreData sd;
    sd.r = Z.transpose() * y / static_cast<double>(n);
    sd.Q = Z.transpose() * Z / static_cast<double>(n);
    sd.Q = ((sd.Q + sd.Q.transpose()) * 0.5).eval();
    sd.Q.diagonal() -= d_hat;
    return sd;
}

void check_theta_set(const std::optional<std::pair<MatrixXd, VectorXd>> &theta_set,
                     Eigen::Index p)
{
    if (!theta_set)
        return;
    require(theta_set->first.cols() == p, ErrorKind::shape,
            "estimator: theta_set column count differs from p");
    require(theta_set->first.rows() == theta_set->second.size(), ErrorKind::shape,
            "estimator: theta_set rows differ from bound length");
}

[[noreturn]] void throw_infeasible(const ScoreData &sd, double tau)
{
    std::ostringstream os;
    os << "estimator: constraint set empty at tau = " << tau
       << "; smallest feasible tau at theta = 0 is |S(0)|_inf = "
       << sd.r.lpNorm<Eigen::Infinity>();
    throw Error(ErrorKind::infeasible, os.str());
}

// Shared LP for the MU-type selectors in split variables (theta+, theta-):
// minimize 1'(theta+ + theta-) subject to
//   +/-(r - Q theta) <= mu 1'(theta+ + theta-) + tau,   theta+/- >= 0,
// plus optional polyhedral rows G theta <= h.
LinearProgram selector_lp(const ScoreData &sd, double mu, double tau,
                          const std::optional<std::pair<MatrixXd, VectorXd>> &theta_set)
{
    const Eigen::Index p = sd.Q.cols();
    const Eigen::Index extra = theta_set ? theta_set->first.rows() : 0;
    LinearProgram lp;
    lp.c = VectorXd::Ones(2 * p);
    lp.A_ineq = MatrixXd::Zero(2 * p + extra, 2 * p);
    lp.b_ineq = VectorXd::Zero(2 * p + extra);
    // r - Q theta <= mu t + tau  ->  -Q theta - mu 1't <= tau - r
    lp.A_ineq.topLeftCorner(p, p) = -sd.Q;
    lp.A_ineq.block(0, p, p, p) = sd.Q;
    // -(r - Q theta) <= mu t + tau  ->  Q theta - mu 1't <= tau + r
    lp.A_ineq.block(p, 0, p, p) = sd.Q;
    lp.A_ineq.block(p, p, p, p) = -sd.Q;
    lp.A_ineq.topRows(2 * p).array() -= mu;
    lp.b_ineq.head(p) = VectorXd::Constant(p, tau) - sd.r;
    lp.b_ineq.segment(p, p) = VectorXd::Constant(p, tau) + sd.r;
    if (extra)
    {
        lp.A_ineq.bottomLeftCorner(extra, p) = theta_set->first;
        lp.A_ineq.block(2 * p, p, extra, p) = -theta_set->first;
        lp.b_ineq.tail(extra) = theta_set->second;
    }
    lp.nonneg_mask.assign(2 * p, true);
    return lp;
}

FitResult lp_selector_fit(const VectorXd &y, const MatrixXd &Z, const VectorXd &d_hat, double mu,
                          double tau,
                          const std::optional<std::pair<MatrixXd, VectorXd>> &theta_set,
                          double tol, bool assert_fixed_point)
{
    require(mu >= 0.0 && tau >= 0.0, ErrorKind::parse, "estimator: mu and tau must be >= 0");
    const Eigen::Index p = Z.cols();
    check_theta_set(theta_set, p);
    const ScoreData sd = score_data(y, Z, d_hat);

    const LinearProgram lp = selector_lp(sd, mu, tau, theta_set);
    SolverResult sol = solve_lp(lp, tol);
    if (sol.status == SolveStatus::infeasible)
        throw_infeasible(sd, tau);
    require(sol.status == SolveStatus::optimal, ErrorKind::solver,
            "estimator: LP solver did not reach an optimum");

    FitResult fr;
    fr.theta_hat = sol.x.head(p) - sol.x.tail(p);
    fr.t_hat = sol.objective;
    fr.objective = sol.objective;
    const Eigen::Index n = Z.rows();
    VectorXd S = Z.transpose() * (y - Z * fr.theta_hat) / static_cast<double>(n) +
                 d_hat.cwiseProduct(fr.theta_hat);
    fr.residual_stat = S.lpNorm<Eigen::Infinity>();
    fr.solver = std::move(sol);

    if (assert_fixed_point)
    {
        // Padding (theta+_j and theta-_j both active) signals that the
        // fixed-point equation r = phi(r) has no solution.
        const double gap = fr.t_hat - fr.theta_hat.lpNorm<1>();
        if (std::abs(gap) > 10.0 * tol * (1.0 + fr.t_hat))
            throw Error(ErrorKind::infeasible,
                        "estimator: no fixed point r = phi(r); the selector needs slack "
                        "beyond |theta|_1 to satisfy its own constraint");
    }
    return fr;
}

// phi(r) = min |theta|_1 over |S(theta)|_inf <= mu r + tau (+ Theta rows);
// returns the witness through *theta_out. +inf indicates an empty level set.
double phi_of_r(const ScoreData &sd, double mu, double tau, double r,
                const std::optional<std::pair<MatrixXd, VectorXd>> &theta_set, double tol,
                VectorXd *theta_out, SolverResult *sol_out)
{
    const LinearProgram lp = selector_lp(sd, 0.0, tau + mu * r, theta_set);
    SolverResult sol = solve_lp(lp, tol);
    if (sol.status == SolveStatus::infeasible)
        return std::numeric_limits<double>::infinity();
    require(sol.status == SolveStatus::optimal, ErrorKind::solver,
            "fixed_point_oracle: LP solver did not reach an optimum");
    const Eigen::Index p = sd.Q.cols();
    if (theta_out)
        *theta_out = sol.x.head(p) - sol.x.tail(p);
    const double value = sol.objective;
    if (sol_out)
        *sol_out = std::move(sol);
    return value;
}

// min_theta |S(theta)|_inf (over Theta when given): the smallest score level
// any theta can reach, i.e. the infimum of feasible tau at mu = 0.
double min_score_norm(const ScoreData &sd,
                      const std::optional<std::pair<MatrixXd, VectorXd>> &theta_set, double tol)
{
    const Eigen::Index p = sd.Q.cols();
    const Eigen::Index extra = theta_set ? theta_set->first.rows() : 0;
    LinearProgram lp;
    lp.c = VectorXd::Zero(p + 1);
    lp.c(p) = 1.0;
    lp.A_ineq = MatrixXd::Zero(2 * p + extra, p + 1);
    lp.b_ineq = VectorXd::Zero(2 * p + extra);
    lp.A_ineq.topLeftCorner(p, p) = -sd.Q;
    lp.A_ineq.block(p, 0, p, p) = sd.Q;
    lp.A_ineq.col(p).head(2 * p).array() = -1.0;
    lp.b_ineq.head(p) = -sd.r;
    lp.b_ineq.segment(p, p) = sd.r;
    if (extra)
    {
        lp.A_ineq.bottomLeftCorner(extra, p) = theta_set->first;
        lp.b_ineq.tail(extra) = theta_set->second;
    }
    SolverResult sol = solve_lp(lp, tol);
    if (sol.status == SolveStatus::infeasible)
        throw Error(ErrorKind::infeasible, "fixed_point_oracle: Theta constraint set is empty");
    require(sol.status == SolveStatus::optimal, ErrorKind::solver,
            "fixed_point_oracle: score minimization failed");
    return sol.objective;
}

} // namespace

VectorXd score_vector(const Dataset &data, const Compensation &comp, const VectorXd &theta)
{
    require(theta.size() == data.Z.cols(), ErrorKind::shape,
            "score_vector: theta length differs from p");
    require(comp.d_hat.size() == data.Z.cols(), ErrorKind::shape,
            "score_vector: compensation length differs from p");
    return data.Z.transpose() * (data.y - data.Z * theta) / static_cast<double>(data.Z.rows()) +
           comp.d_hat.cwiseProduct(theta);
}

FitResult fit_conic(const Dataset &data, const Compensation &comp, const EstimatorConfig &cfg,
                    double tol)
{
    require(cfg.lambda > 0.0, ErrorKind::parse, "fit_conic: lambda must be positive");
    require(cfg.mu >= 0.0 && cfg.tau >= 0.0, ErrorKind::parse,
            "fit_conic: mu and tau must be >= 0");
    const Eigen::Index p = data.Z.cols();
    check_theta_set(cfg.theta_set, p);
    const ScoreData sd = score_data(data.y, data.Z, comp.d_hat);

    // Variables (theta+, theta-, t, theta), sizes (p, p, 1, p).
    const Eigen::Index nv = 3 * p + 1;
    const Eigen::Index extra = cfg.theta_set ? cfg.theta_set->first.rows() : 0;
    SecondOrderConeProgram socp;
    LinearProgram &lp = socp.lp;
    lp.c = VectorXd::Zero(nv);
    lp.c.head(2 * p).setOnes();
    lp.c(2 * p) = cfg.lambda;

    lp.A_eq = MatrixXd::Zero(p, nv); // theta+ - theta- - theta = 0
    lp.A_eq.leftCols(p) = MatrixXd::Identity(p, p);
    lp.A_eq.block(0, p, p, p) = -MatrixXd::Identity(p, p);
    lp.A_eq.rightCols(p) = -MatrixXd::Identity(p, p);
    lp.b_eq = VectorXd::Zero(p);

    lp.A_ineq = MatrixXd::Zero(2 * p + extra, nv);
    lp.b_ineq = VectorXd::Zero(2 * p + extra);
    // +/-(r - Q theta) <= mu t + tau
    lp.A_ineq.block(0, 2 * p + 1, p, p) = -sd.Q;
    lp.A_ineq.block(p, 2 * p + 1, p, p) = sd.Q;
    lp.A_ineq.col(2 * p).head(2 * p).array() = -cfg.mu;
    lp.b_ineq.head(p) = VectorXd::Constant(p, cfg.tau) - sd.r;
    lp.b_ineq.segment(p, p) = VectorXd::Constant(p, cfg.tau) + sd.r;
    if (extra)
    {
        lp.A_ineq.block(2 * p, 2 * p + 1, extra, p) = cfg.theta_set->first;
        lp.b_ineq.tail(extra) = cfg.theta_set->second;
    }
    lp.nonneg_mask.assign(static_cast<size_t>(nv), false);
    for (Eigen::Index i = 0; i < 2 * p; ++i)
        lp.nonneg_mask[static_cast<size_t>(i)] = true;

    ConeBlock cb;
    cb.t_idx = 2 * p;
    for (Eigen::Index i = 0; i < p; ++i)
        cb.x_idx.push_back(2 * p + 1 + i);
    socp.cone_blocks.push_back(cb);

    SolverResult sol = solve_socp(socp, tol);
    if (sol.status == SolveStatus::infeasible)
        throw_infeasible(sd, cfg.tau);
    require(sol.status == SolveStatus::optimal, ErrorKind::solver,
            "fit_conic: conic solver did not reach an optimum");

    FitResult fr;
    fr.theta_hat = sol.x.tail(p);
    fr.t_hat = sol.x(2 * p);
    fr.objective = sol.objective;
    fr.residual_stat = (sd.r - sd.Q * fr.theta_hat).lpNorm<Eigen::Infinity>();
    fr.solver = std::move(sol);
    return fr;
}

FitResult fit_compensated_mu(const Dataset &data, const Compensation &comp,
                             const EstimatorConfig &cfg, double tol)
{
    return lp_selector_fit(data.y, data.Z, comp.d_hat, cfg.mu, cfg.tau, cfg.theta_set, tol,
                           /*assert_fixed_point=*/true);
}

FitResult fit_mu_selector(const Dataset &data, const EstimatorConfig &cfg, double tol)
{
    return lp_selector_fit(data.y, data.Z, VectorXd::Zero(data.Z.cols()), cfg.mu, cfg.tau,
                           cfg.theta_set, tol, /*assert_fixed_point=*/true);
}

FitResult fit_dantzig(const VectorXd &y, const MatrixXd &M, double tau,
                      const std::optional<std::pair<MatrixXd, VectorXd>> &theta_set, double tol)
{
    return lp_selector_fit(y, M, VectorXd::Zero(M.cols()), 0.0, tau, theta_set, tol,
                           /*assert_fixed_point=*/false);
}

FitResult fixed_point_oracle(const Dataset &data, const Compensation &comp,
                             const EstimatorConfig &cfg, double r_tol)
{
    require(cfg.mu >= 0.0 && cfg.tau >= 0.0, ErrorKind::parse,
            "fixed_point_oracle: mu and tau must be >= 0");
    require(r_tol > 0.0, ErrorKind::parse, "fixed_point_oracle: r_tol must be positive");
    const Eigen::Index p = data.Z.cols();
    check_theta_set(cfg.theta_set, p);
    const ScoreData sd = score_data(data.y, data.Z, comp.d_hat);
    const double lp_tol = std::min(1e-9, 0.01 * r_tol);

    const double v_star = min_score_norm(sd, cfg.theta_set, lp_tol);

    FitResult fr;
    auto finish = [&](double r_bar) {
        VectorXd theta;
        SolverResult sol;
        const double val = phi_of_r(sd, cfg.mu, cfg.tau, r_bar, cfg.theta_set, lp_tol, &theta, &sol);
        require(std::isfinite(val), ErrorKind::solver,
                "fixed_point_oracle: level set unexpectedly empty at the root");
        fr.theta_hat = theta;
        fr.t_hat = r_bar;
        fr.objective = val;
        fr.residual_stat = score_vector(data, comp, theta).lpNorm<Eigen::Infinity>();
        fr.solver = std::move(sol);
        return fr;
    };

    if (cfg.mu == 0.0)
    {
        // phi is constant in r; a fixed point exists iff the level set at tau
        // is nonempty, and then r_bar = phi.
        if (v_star > cfg.tau + 1e-12)
            throw Error(ErrorKind::infeasible,
                        "fixed_point_oracle: no fixed point (mu = 0 and tau below the minimal "
                        "attainable score norm)");
        const double val = phi_of_r(sd, 0.0, cfg.tau, 0.0, cfg.theta_set, lp_tol, nullptr, nullptr);
        return finish(val);
    }

    double r_min = std::max(0.0, (v_star - cfg.tau) / cfg.mu);
    if (r_min > 0.0)
        r_min += 1e-9 * (1.0 + r_min); // stay strictly inside the feasible range

    double lo = r_min;
    double phi_lo = phi_of_r(sd, cfg.mu, cfg.tau, lo, cfg.theta_set, lp_tol, nullptr, nullptr);
    require(std::isfinite(phi_lo), ErrorKind::solver,
            "fixed_point_oracle: level set empty above the computed minimal radius");
    if (phi_lo < lo - 1e-9 * (1.0 + lo))
        throw Error(ErrorKind::infeasible,
                    "fixed_point_oracle: no fixed point (phi jumps below the diagonal at the "
                    "smallest feasible radius)");
    if (std::abs(phi_lo - lo) <= r_tol)
        return finish(lo);

    double hi = phi_lo; // phi decreasing => phi(hi) <= phi(lo) = hi
    for (int it = 0; it < 300; ++it)
    {
        const double mid = 0.5 * (lo + hi);
        const double val = phi_of_r(sd, cfg.mu, cfg.tau, mid, cfg.theta_set, lp_tol, nullptr, nullptr);
        if (std::abs(val - mid) <= 0.5 * r_tol)
            return finish(mid);
        if (val > mid)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-15 * (1.0 + hi))
            break;
    }
    return finish(0.5 * (lo + hi));
}

} // namespace eiv
