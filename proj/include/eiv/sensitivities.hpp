#pragma once

#include "eiv/model.hpp"

#include <vector>

namespace eiv
{

// Norm index of a sensitivity: l1 and linf admit exact LP enumeration, l2
// and pr (prediction seminorm) are bracketed by local search plus certified
// inequalities.
enum class SensitivityNorm
{
    l1,
    l2,
    linf,
    pr,
};

// Result of a sensitivity computation over the cone
// C_J(u) = {Delta : |Delta_{J^c}|_1 <= u |Delta_J|_1} minimized over all
// supports |J| <= s. For exact norms value = lower = upper; for bracketed
// norms value repeats the upper bound (the attained ratio of the best
// witness) and [lower, upper] is the certified bracket.
struct SensitivityReport
{
    MatrixXd psi;
    int s = 0;
    double u = 0.0;
    SensitivityNorm q = SensitivityNorm::l1;
    double value = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    VectorXd witness;
    std::vector<Eigen::Index> witness_support;
    enum class Method
    {
        exact_lp,
        local_search,
        bound,
    } method = Method::exact_lp;
};

// Exact kappa_q(s, u) = min_{|J| <= s} min_{Delta in C_J(u), |Delta|_q = 1}
// |Psi Delta|_inf for q in {l1, linf}, by enumeration of size-s supports and
// sign patterns; the l1 case refines its LP relaxation by branch-and-bound
// on coordinates where the positive and negative parts are simultaneously
// active. Enumeration budget: p <= p_max, s <= s_max.
SensitivityReport kappa_exact(const MatrixXd &psi, int s, double u, SensitivityNorm q,
                              int p_max = 20, int s_max = 4);

// Bracketed kappa for q in {l2, pr}: upper bound from multi-start
// linearization ascent over the nonconvex normalization surface, lower bound
// from the certified inequalities kappa_2 >= ((1+u)s)^{-1/2} kappa_inf and
// kappa_pr >= sqrt(kappa_1).
SensitivityReport kappa_local(const MatrixXd &psi, int s, double u, SensitivityNorm q,
                              int restarts = 20, uint64_t seed = 0);

// Largest absolute off-diagonal entry of Psi normalized to unit diagonal.
double coherence(const MatrixXd &psi);

} // namespace eiv
