#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "eiv/error.hpp"

namespace eiv
{

using Eigen::MatrixXd;
using Eigen::VectorXd;

// min c'x  s.t.  A_ineq x <= b_ineq,  A_eq x = b_eq,  x_i >= 0 where flagged.
// Empty blocks (0 rows / empty mask) are simply absent.
struct LinearProgram
{
    VectorXd c;
    MatrixXd A_ineq;
    VectorXd b_ineq;
    MatrixXd A_eq;
    VectorXd b_eq;
    std::vector<bool> nonneg_mask;
};

// One second-order cone ||x[x_idx]||_2 <= x[t_idx] over existing variables.
struct ConeBlock
{
    Eigen::Index t_idx = 0;
    std::vector<Eigen::Index> x_idx;
};

struct SecondOrderConeProgram
{
    LinearProgram lp;
    std::vector<ConeBlock> cone_blocks;
};

enum class SolveStatus
{
    optimal,
    infeasible,
    unbounded,
    max_iter,
};

// Residuals of the returned point, evaluated on the standard-form data
// after unscaling (see evaluate_kkt for the exact formulas).
struct KktRecord
{
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double gap = 0.0;
};

struct SolverResult
{
    VectorXd x;             // primal point in the caller's variables
    double objective = 0.0; // c'x (NaN unless status is optimal/max_iter)
    SolveStatus status = SolveStatus::max_iter;
    KktRecord kkt;
    int iterations = 0;
    // Standard-form dual/slack certificates backing the kkt record; an
    // independent evaluator can re-derive kkt from (x, y_eq, z_cone) alone.
    VectorXd y_eq;
    VectorXd z_cone;
    VectorXd s_cone;
};

struct SolverOptions
{
    enum class Method
    {
        ipm,  // primal-dual interior point (default)
        admm, // first-order fallback, loose tolerance
    };
    double tol = 1e-8;
    int max_iter = 200;
    Method method = Method::ipm;
};

// Internal standard form: min c'x s.t. Ax = b, Gx + s = h,
// s in (R_+)^{num_nonneg_rows} x SOC(d_1) x ... x SOC(d_k).
struct StandardConeProblem
{
    VectorXd c;
    MatrixXd A;
    VectorXd b;
    MatrixXd G;
    VectorXd h;
    Eigen::Index num_lp_rows = 0;
    std::vector<Eigen::Index> soc_dims;
};

// Deterministic conversion (nonneg rows, then A_ineq rows, then one block
// of rows [-e_t; -e_idx...] per cone). Exposed so residuals can be
// re-evaluated outside the solver.
StandardConeProblem to_standard_form(const SecondOrderConeProgram &socp);

// Recomputes the KktRecord from a candidate solution: primal_residual =
// max(||Ax-b||_inf, cone violation of h-Gx), dual_residual = ||c + A'y +
// G'z||_inf combined with the dual-cone violation of z, gap = |c'x + b'y + h'z|.
KktRecord evaluate_kkt(const StandardConeProblem &P, const VectorXd &x, const VectorXd &y,
                       const VectorXd &z);

SolverResult solve_standard(const StandardConeProblem &P, const SolverOptions &options);

SolverResult solve_lp(const LinearProgram &lp, double tol);
SolverResult solve_lp(const LinearProgram &lp, const SolverOptions &options);
SolverResult solve_socp(const SecondOrderConeProgram &socp, double tol);
SolverResult solve_socp(const SecondOrderConeProgram &socp, const SolverOptions &options);

// Plain-text dump of the standard form for external cross-checks.
std::string dump_standard_form(const StandardConeProblem &P);

// First-order splitting fallback (see SolverOptions::Method::admm).
SolverResult solve_admm(const StandardConeProblem &P, const SolverOptions &options);

} // namespace eiv
