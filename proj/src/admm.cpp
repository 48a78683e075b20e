#include "eiv/solver.hpp"

#include "eiv/error.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace eiv
{

namespace
{

// Euclidean projection onto R_+^lp x SOC(d_1) x ...
void project_cone(const StandardConeProblem &P, VectorXd &v)
{
    v.head(P.num_lp_rows) = v.head(P.num_lp_rows).cwiseMax(0.0);
    Eigen::Index k = P.num_lp_rows;
    for (Eigen::Index d : P.soc_dims)
    {
        const double t = v(k);
        const double r = v.segment(k + 1, d - 1).norm();
        if (r <= t)
        {
            // inside: leave as is
        }
        else if (r <= -t)
        {
            v.segment(k, d).setZero();
        }
        else
        {
            const double scale = 0.5 * (1.0 + t / r);
            v(k) = scale * r;
            v.segment(k + 1, d - 1) *= scale;
        }
        k += d;
    }
}

} // namespace

// Operator-splitting fallback for the same standard-form problem the
// interior-point method consumes:
//   min c'x s.t. Ax = b, Gx + s = h, s in K.
// Scaled-form alternating updates with a single factorization of
// rho (A'A + G'G) + eps I; the x-update solves the regularized normal
// equations, the s-update projects onto the cone. Accuracy is limited
// compared to the interior-point method; intended as a cross-check.
SolverResult solve_admm(const StandardConeProblem &P, const SolverOptions &options)
{
    const Eigen::Index n = P.c.size();
    const Eigen::Index neq = P.b.size();
    const Eigen::Index m = P.h.size();
    const double rho = 1.0;
    const double eps = 1e-8;
    const int max_iter = std::max(options.max_iter, 20000);
    const double tol = std::max(options.tol, 1e-9);

    MatrixXd M = rho * (P.G.transpose() * P.G);
    if (neq)
        M += rho * (P.A.transpose() * P.A);
    M.diagonal().array() += eps;
    Eigen::LLT<MatrixXd> llt(M);
    require(llt.info() == Eigen::Success, ErrorKind::solver, "admm: normal-equation factorization failed");

    VectorXd x = VectorXd::Zero(n);
    VectorXd s = VectorXd::Zero(m);
    VectorXd u = VectorXd::Zero(m);     // scaled dual for the cone rows
    VectorXd ueq = VectorXd::Zero(neq); // scaled dual for the equalities

    SolverResult res;
    res.status = SolveStatus::max_iter;

    int it = 0;
    for (; it < max_iter; ++it)
    {
        VectorXd rhs = -P.c + rho * (P.G.transpose() * (P.h - s - u));
        if (neq)
            rhs += rho * (P.A.transpose() * (P.b - ueq));
        x = llt.solve(rhs);

        VectorXd s_old = s;
        s = P.h - P.G * x - u;
        project_cone(P, s);

        VectorXd rcone = P.G * x + s - P.h;
        u += rcone;
        double prim = rcone.lpNorm<Eigen::Infinity>();
        if (neq)
        {
            VectorXd req = P.A * x - P.b;
            ueq += req;
            prim = std::max(prim, req.lpNorm<Eigen::Infinity>());
        }
        const double dual = rho * (P.G.transpose() * (s - s_old)).lpNorm<Eigen::Infinity>();
        if (prim < tol && dual < tol)
        {
            res.status = SolveStatus::optimal;
            ++it;
            break;
        }
    }

    res.x = x;
    res.objective = P.c.dot(res.x);
    res.iterations = it;
    res.y_eq = rho * ueq;
    res.z_cone = rho * u;
    res.s_cone = s;
    res.kkt = evaluate_kkt(P, res.x, res.y_eq, res.z_cone);
    return res;
}

} // namespace eiv
