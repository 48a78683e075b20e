#include "eiv/sensitivities.hpp"

#include "eiv/error.hpp"
#include "eiv/rng.hpp"
#include "eiv/solver.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace eiv
{

namespace
{

constexpr double kLpTol = 1e-9;
constexpr double kAscentBox = 1e6;

void check_psi(const MatrixXd &psi)
{
    require(psi.rows() == psi.cols() && psi.rows() >= 1, ErrorKind::shape,
            "sensitivity: Psi must be square and nonempty");
    const double scale = std::max(1.0, psi.cwiseAbs().maxCoeff());
    require((psi - psi.transpose()).cwiseAbs().maxCoeff() <= 1e-8 * scale, ErrorKind::shape,
            "sensitivity: Psi must be symmetric");
}

// All size-s subsets of {0..p-1} in lexicographic order.
std::vector<std::vector<Eigen::Index>> subsets(Eigen::Index p, int s)
{
    std::vector<std::vector<Eigen::Index>> out;
    std::vector<Eigen::Index> cur(static_cast<size_t>(s));
    std::function<void(Eigen::Index, int)> rec = [&](Eigen::Index start, int depth) {
        if (depth == s)
        {
            out.push_back(cur);
            return;
        }
        for (Eigen::Index i = start; i <= p - (s - depth); ++i)
        {
            cur[static_cast<size_t>(depth)] = i;
            rec(i + 1, depth + 1);
        }
    };
    rec(0, 0);
    return out;
}

std::vector<Eigen::Index> complement(const std::vector<Eigen::Index> &J, Eigen::Index p)
{
    std::vector<Eigen::Index> out;
    size_t k = 0;
    for (Eigen::Index i = 0; i < p; ++i)
    {
        if (k < J.size() && J[k] == i)
            ++k;
        else
            out.push_back(i);
    }
    return out;
}

// Sign patterns over J. When the subproblem is invariant under the global
// flip Delta -> -Delta (the l1 case, whose only normalization is
// |Delta|_1 = 1) the first sign can be pinned to +1 and 2^(s-1) patterns
// suffice. The linf subproblems pin Delta_k = +1, which spends the flip
// symmetry, so they must enumerate all 2^s patterns.
std::vector<VectorXd> sign_patterns(int s, bool pin_first)
{
    std::vector<VectorXd> out;
    const int free_bits = pin_first ? s - 1 : s;
    for (int mask = 0; mask < (1 << free_bits); ++mask)
    {
        VectorXd sg = VectorXd::Ones(s);
        for (int b = 0; b < free_bits; ++b)
            if (mask & (1 << b))
                sg(pin_first ? b + 1 : b) = -1.0;
        out.push_back(sg);
    }
    return out;
}

// ---- exact kappa_inf -----------------------------------------------------
//
// Per (J, sigma, k): min |Psi Delta|_inf with Delta_k = 1, |Delta|_inf <= 1,
// and sum_{J^c} g <= u sigma' Delta_J where g_i >= |Delta_i| through its two
// envelope rows. Since g only appears on the small side of the cone row the
// encoding is exact, and the union over sigma covers sign(Delta_J).
struct SubResult
{
    double value = std::numeric_limits<double>::infinity();
    VectorXd delta;
};

SubResult solve_inf_sub(const MatrixXd &psi, const std::vector<Eigen::Index> &J,
                        const std::vector<Eigen::Index> &Jc, const VectorXd &sigma, double u,
                        Eigen::Index k)
{
    const Eigen::Index p = psi.rows();
    const Eigen::Index nc = static_cast<Eigen::Index>(Jc.size());
    const Eigen::Index nv = p + nc + 1; // Delta, g, v
    LinearProgram lp;
    lp.c = VectorXd::Zero(nv);
    lp.c(nv - 1) = 1.0;
    const Eigen::Index rows = 2 * p + 2 * p + 2 * nc + 1;
    lp.A_ineq = MatrixXd::Zero(rows, nv);
    lp.b_ineq = VectorXd::Zero(rows);
    Eigen::Index r = 0;
    // |Psi Delta| <= v
    lp.A_ineq.block(r, 0, p, p) = psi;
    lp.A_ineq.col(nv - 1).segment(r, p).array() = -1.0;
    r += p;
    lp.A_ineq.block(r, 0, p, p) = -psi;
    lp.A_ineq.col(nv - 1).segment(r, p).array() = -1.0;
    r += p;
    // box |Delta| <= 1
    lp.A_ineq.block(r, 0, p, p) = MatrixXd::Identity(p, p);
    lp.b_ineq.segment(r, p).array() = 1.0;
    r += p;
    lp.A_ineq.block(r, 0, p, p) = -MatrixXd::Identity(p, p);
    lp.b_ineq.segment(r, p).array() = 1.0;
    r += p;
    // g_i >= +/- Delta_{Jc_i}
    for (Eigen::Index i = 0; i < nc; ++i)
    {
        lp.A_ineq(r, Jc[static_cast<size_t>(i)]) = 1.0;
        lp.A_ineq(r, p + i) = -1.0;
        ++r;
        lp.A_ineq(r, Jc[static_cast<size_t>(i)]) = -1.0;
        lp.A_ineq(r, p + i) = -1.0;
        ++r;
    }
    // cone: sum g - u sigma' Delta_J <= 0
    for (Eigen::Index i = 0; i < nc; ++i)
        lp.A_ineq(r, p + i) = 1.0;
    for (size_t j = 0; j < J.size(); ++j)
        lp.A_ineq(r, J[j]) = -u * sigma(static_cast<Eigen::Index>(j));
    ++r;

    lp.A_eq = MatrixXd::Zero(1, nv);
    lp.A_eq(0, k) = 1.0;
    lp.b_eq = VectorXd::Ones(1);

    SolverResult sol = solve_lp(lp, kLpTol);
    SubResult out;
    if (sol.status != SolveStatus::optimal)
        return out; // infeasible pinning: contributes nothing to the min
    out.value = sol.objective;
    out.delta = sol.x.head(p);
    return out;
}

// ---- exact kappa_1 via branch and bound ------------------------------------
//
// Per (J, sigma): variables (a, g+, g-, v) with Delta_J = sigma .* a,
// Delta_{J^c} = g+ - g-, constraints 1'a + 1'(g+ + g-) = 1 and
// 1'(g+ + g-) <= u 1'a. The LP relaxation can "pad" (g+_i and g-_i both
// active) which undercuts the true minimum, so coordinates with active
// padding are branched on (g+_i = 0 vs g-_i = 0); unpadded leaves are exact.
struct L1Node
{
    std::vector<int8_t> state; // 0 free, 1 force g- = 0, 2 force g+ = 0
};

struct L1Best
{
    double value = std::numeric_limits<double>::infinity();
    VectorXd delta;
};

void l1_branch_and_bound(const MatrixXd &psi, const std::vector<Eigen::Index> &J,
                         const std::vector<Eigen::Index> &Jc, const VectorXd &sigma, double u,
                         L1Best &best, long &node_budget)
{
    const Eigen::Index p = psi.rows();
    const Eigen::Index s = static_cast<Eigen::Index>(J.size());
    const Eigen::Index nc = static_cast<Eigen::Index>(Jc.size());
    const Eigen::Index nv = s + 2 * nc + 1; // a, g+, g-, v

    MatrixXd psi_J(p, s), psi_Jc(p, nc);
    for (Eigen::Index j = 0; j < s; ++j)
        psi_J.col(j) = psi.col(J[static_cast<size_t>(j)]) * sigma(j);
    for (Eigen::Index i = 0; i < nc; ++i)
        psi_Jc.col(i) = psi.col(Jc[static_cast<size_t>(i)]);

    std::vector<L1Node> stack;
    stack.push_back({std::vector<int8_t>(static_cast<size_t>(nc), 0)});

    while (!stack.empty())
    {
        require(--node_budget > 0, ErrorKind::solver,
                "kappa_exact: enumeration budget exceeded in the l1 branch and bound");
        L1Node node = std::move(stack.back());
        stack.pop_back();

        Eigen::Index forced = 0;
        for (int8_t st : node.state)
            forced += st != 0;

        LinearProgram lp;
        lp.c = VectorXd::Zero(nv);
        lp.c(nv - 1) = 1.0;
        lp.A_ineq = MatrixXd::Zero(2 * p + 1, nv);
        lp.b_ineq = VectorXd::Zero(2 * p + 1);
        lp.A_ineq.block(0, 0, p, s) = psi_J;
        lp.A_ineq.block(0, s, p, nc) = psi_Jc;
        lp.A_ineq.block(0, s + nc, p, nc) = -psi_Jc;
        lp.A_ineq.block(p, 0, p, s) = -psi_J;
        lp.A_ineq.block(p, s, p, nc) = -psi_Jc;
        lp.A_ineq.block(p, s + nc, p, nc) = psi_Jc;
        lp.A_ineq.col(nv - 1).head(2 * p).array() = -1.0;
        // cone: 1'(g+ + g-) - u 1'a <= 0
        lp.A_ineq.row(2 * p).head(s).array() = -u;
        lp.A_ineq.row(2 * p).segment(s, 2 * nc).array() = 1.0;

        lp.A_eq = MatrixXd::Zero(1 + forced, nv);
        lp.b_eq = VectorXd::Zero(1 + forced);
        lp.A_eq.row(0).head(s + 2 * nc).array() = 1.0; // 1'a + 1'(g+ + g-) = 1
        lp.b_eq(0) = 1.0;
        Eigen::Index er = 1;
        for (Eigen::Index i = 0; i < nc; ++i)
        {
            const int8_t st = node.state[static_cast<size_t>(i)];
            if (st == 1)
                lp.A_eq(er++, s + nc + i) = 1.0; // g-_i = 0
            else if (st == 2)
                lp.A_eq(er++, s + i) = 1.0; // g+_i = 0
        }
        lp.nonneg_mask.assign(static_cast<size_t>(nv), true);
        lp.nonneg_mask[static_cast<size_t>(nv - 1)] = false;

        SolverResult sol = solve_lp(lp, kLpTol);
        if (sol.status != SolveStatus::optimal)
            continue; // only possible for over-restricted children
        if (sol.objective >= best.value - 1e-12)
            continue; // bound: the relaxation already matches the incumbent

        const VectorXd a = sol.x.head(s);
        const VectorXd gp = sol.x.segment(s, nc);
        const VectorXd gm = sol.x.segment(s + nc, nc);

        // Repair to a genuinely feasible witness: drop padding, renormalize.
        VectorXd delta = VectorXd::Zero(p);
        for (Eigen::Index j = 0; j < s; ++j)
            delta(J[static_cast<size_t>(j)]) = sigma(j) * a(j);
        double lam = a.sum();
        for (Eigen::Index i = 0; i < nc; ++i)
        {
            const double d = gp(i) - gm(i);
            delta(Jc[static_cast<size_t>(i)]) = d;
            lam += std::abs(d);
        }
        const double candidate = sol.objective / lam;
        if (candidate < best.value)
        {
            best.value = candidate;
            best.delta = delta / lam;
        }

        // Branch on the most padded coordinate, if any.
        Eigen::Index ib = -1;
        double pad = 1e-10;
        for (Eigen::Index i = 0; i < nc; ++i)
        {
            const double m = std::min(gp(i), gm(i));
            if (node.state[static_cast<size_t>(i)] == 0 && m > pad)
            {
                pad = m;
                ib = i;
            }
        }
        if (ib < 0)
            continue; // unpadded: the relaxation is exact at this node
        L1Node left = node, right = node;
        left.state[static_cast<size_t>(ib)] = 1;
        right.state[static_cast<size_t>(ib)] = 2;
        stack.push_back(std::move(left));
        stack.push_back(std::move(right));
    }
}

} // namespace

SensitivityReport kappa_exact(const MatrixXd &psi, int s, double u, SensitivityNorm q, int p_max,
                              int s_max)
{
    check_psi(psi);
    const Eigen::Index p = psi.rows();
    require(q == SensitivityNorm::l1 || q == SensitivityNorm::linf, ErrorKind::parse,
            "kappa_exact: q must be l1 or linf");
    require(s >= 1 && s <= p, ErrorKind::parse, "kappa_exact: s must lie in [1, p]");
    require(u >= 0.0, ErrorKind::parse, "kappa_exact: u must be >= 0");
    require(p <= p_max && s <= s_max, ErrorKind::parse,
            "kappa_exact: enumeration budget exceeded (p or s too large)");
    const MatrixXd S = ((psi + psi.transpose()) * 0.5).eval();

    SensitivityReport rep;
    rep.psi = S;
    rep.s = s;
    rep.u = u;
    rep.q = q;
    rep.method = SensitivityReport::Method::exact_lp;

    double best = std::numeric_limits<double>::infinity();
    VectorXd best_delta;
    std::vector<Eigen::Index> best_J;

    const auto Js = subsets(p, s);
    const auto sigmas = sign_patterns(s, /*pin_first=*/q == SensitivityNorm::l1);
    long node_budget = 200000;

    for (const auto &J : Js)
    {
        const auto Jc = complement(J, p);
        for (const auto &sigma : sigmas)
        {
            if (q == SensitivityNorm::linf)
            {
                for (Eigen::Index k = 0; k < p; ++k)
                {
                    SubResult sr = solve_inf_sub(S, J, Jc, sigma, u, k);
                    if (sr.value < best)
                    {
                        best = sr.value;
                        best_delta = sr.delta;
                        best_J = J;
                    }
                }
            }
            else
            {
                L1Best lb;
                lb.value = best;
                lb.delta = best_delta;
                l1_branch_and_bound(S, J, Jc, sigma, u, lb, node_budget);
                if (lb.value < best)
                {
                    best = lb.value;
                    best_delta = lb.delta;
                    best_J = J;
                }
            }
        }
    }

    require(std::isfinite(best), ErrorKind::solver, "kappa_exact: no feasible subproblem");
    rep.value = rep.lower = rep.upper = std::max(0.0, best);
    rep.witness = best_delta;
    rep.witness_support = best_J;
    return rep;
}

SensitivityReport kappa_local(const MatrixXd &psi, int s, double u, SensitivityNorm q,
                              int restarts, uint64_t seed)
{
    check_psi(psi);
    const Eigen::Index p = psi.rows();
    require(q == SensitivityNorm::l2 || q == SensitivityNorm::pr, ErrorKind::parse,
            "kappa_local: q must be l2 or pr");
    require(s >= 1 && s <= p, ErrorKind::parse, "kappa_local: s must lie in [1, p]");
    require(u >= 0.0, ErrorKind::parse, "kappa_local: u must be >= 0");
    require(restarts >= 1, ErrorKind::parse, "kappa_local: restarts must be >= 1");
    const MatrixXd S = ((psi + psi.transpose()) * 0.5).eval();

    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(S);
    const double emax = std::max(1.0, eig.eigenvalues().maxCoeff());
    require(eig.eigenvalues().minCoeff() >= -1e-8 * emax, ErrorKind::parse,
            "kappa_local: Psi must be positive semidefinite");

    SensitivityReport rep;
    rep.psi = S;
    rep.s = s;
    rep.u = u;
    rep.q = q;
    rep.method = SensitivityReport::Method::local_search;

    // Certified lower bound plus a warm start from the exact witness.
    SensitivityReport exact_rep;
    if (q == SensitivityNorm::l2)
    {
        // On the cone |Delta|_1 <= (1+u)|Delta_J|_1 <= (1+u) s |Delta|_inf, so
        // |Delta|_2 = 1 forces |Delta|_inf >= ((1+u)s)^{-1/2}; the constant is
        // tight (all-equal vectors sit on the cone boundary), so a larger one
        // such as (2s)^{-1/2} would overshoot the true kappa_2 whenever u > 1.
        exact_rep = kappa_exact(S, s, u, SensitivityNorm::linf);
        rep.lower = std::max(0.0, exact_rep.value / std::sqrt((1.0 + u) * s) - 1e-9);
    }
    else
    {
        exact_rep = kappa_exact(S, s, u, SensitivityNorm::l1);
        rep.lower = std::max(0.0, std::sqrt(std::max(0.0, exact_rep.value)) - 1e-9);
    }

    const auto norm_of = [&](const VectorXd &d) {
        if (q == SensitivityNorm::l2)
            return d.norm();
        return std::sqrt(std::max(0.0, d.dot(S * d)));
    };

    // One ascent: maximize the (Psi-)norm over {|Psi Delta|_inf <= 1} cap
    // C_J(u) by iterated linearizations; every iterate is feasible, so the
    // attained |Psi Delta|_inf / norm ratio is a valid upper bound.
    const auto ascend = [&](const std::vector<Eigen::Index> &J, const VectorXd &sigma,
                            VectorXd d) -> std::pair<double, VectorXd> {
        const auto Jc = complement(J, p);
        const Eigen::Index nc = static_cast<Eigen::Index>(Jc.size());
        const Eigen::Index nv = p + nc;
        LinearProgram lp;
        lp.c = VectorXd::Zero(nv);
        const Eigen::Index rows = 2 * p + 2 * p + 2 * nc + 1;
        lp.A_ineq = MatrixXd::Zero(rows, nv);
        lp.b_ineq = VectorXd::Zero(rows);
        Eigen::Index r = 0;
        lp.A_ineq.block(r, 0, p, p) = S;
        lp.b_ineq.segment(r, p).array() = 1.0;
        r += p;
        lp.A_ineq.block(r, 0, p, p) = -S;
        lp.b_ineq.segment(r, p).array() = 1.0;
        r += p;
        lp.A_ineq.block(r, 0, p, p) = MatrixXd::Identity(p, p);
        lp.b_ineq.segment(r, p).array() = kAscentBox;
        r += p;
        lp.A_ineq.block(r, 0, p, p) = -MatrixXd::Identity(p, p);
        lp.b_ineq.segment(r, p).array() = kAscentBox;
        r += p;
        for (Eigen::Index i = 0; i < nc; ++i)
        {
            lp.A_ineq(r, Jc[static_cast<size_t>(i)]) = 1.0;
            lp.A_ineq(r, p + i) = -1.0;
            ++r;
            lp.A_ineq(r, Jc[static_cast<size_t>(i)]) = -1.0;
            lp.A_ineq(r, p + i) = -1.0;
            ++r;
        }
        for (Eigen::Index i = 0; i < nc; ++i)
            lp.A_ineq(r, p + i) = 1.0;
        for (size_t j = 0; j < J.size(); ++j)
            lp.A_ineq(r, J[j]) = -u * sigma(static_cast<Eigen::Index>(j));

        double cur = 0.0;
        VectorXd delta = VectorXd::Zero(p);
        for (int it = 0; it < 40; ++it)
        {
            lp.c.setZero();
            lp.c.head(p) = (q == SensitivityNorm::l2) ? VectorXd(-d) : VectorXd(-(S * d));
            SolverResult sol = solve_lp(lp, kLpTol);
            if (sol.status != SolveStatus::optimal)
                break;
            VectorXd nd = sol.x.head(p);
            const double nn = norm_of(nd);
            if (nn <= cur * (1.0 + 1e-9))
                break;
            cur = nn;
            delta = nd;
            d = nd;
        }
        return {cur, delta};
    };

    double best_ratio = std::numeric_limits<double>::infinity();
    VectorXd best_delta;
    std::vector<Eigen::Index> best_J;

    const auto try_start = [&](const std::vector<Eigen::Index> &J, const VectorXd &sigma,
                               const VectorXd &d0) {
        auto [nrm, delta] = ascend(J, sigma, d0);
        if (nrm <= 1e-12)
            return;
        const double ratio = (S * delta).lpNorm<Eigen::Infinity>() / nrm;
        if (ratio < best_ratio)
        {
            best_ratio = ratio;
            best_delta = delta / nrm;
            best_J = J;
        }
    };

    // Warm start at the exact witness's support and signs.
    {
        const auto J = exact_rep.witness_support;
        VectorXd sigma(s);
        for (size_t j = 0; j < J.size(); ++j)
        {
            const double v = exact_rep.witness(J[j]);
            sigma(static_cast<Eigen::Index>(j)) = v >= 0.0 ? 1.0 : -1.0;
        }
        try_start(J, sigma, exact_rep.witness);
    }

    Rng rng(mix_seed(seed, 0x5ea5));
    std::vector<Eigen::Index> idx(static_cast<size_t>(p));
    std::iota(idx.begin(), idx.end(), 0);
    for (int t = 0; t < restarts; ++t)
    {
        for (size_t i = idx.size(); i > 1; --i)
            std::swap(idx[i - 1], idx[rng.next_u64() % i]);
        std::vector<Eigen::Index> J(idx.begin(), idx.begin() + s);
        std::sort(J.begin(), J.end());
        VectorXd sigma(s);
        VectorXd d0(p);
        for (Eigen::Index j = 0; j < s; ++j)
            sigma(j) = rng.next_uniform() < 0.5 ? -1.0 : 1.0;
        for (Eigen::Index i = 0; i < p; ++i)
            d0(i) = rng.next_normal();
        try_start(J, sigma, d0);
    }

    require(std::isfinite(best_ratio), ErrorKind::solver,
            "kappa_local: no ascent produced a nonzero-norm point");
    rep.upper = best_ratio;
    rep.value = best_ratio;
    rep.witness = best_delta;
    rep.witness_support = best_J;
    require(rep.lower <= rep.upper + 1e-9, ErrorKind::solver,
            "kappa_local: certified lower bound exceeds the attained upper bound");
    return rep;
}

double coherence(const MatrixXd &psi)
{
    check_psi(psi);
    const Eigen::Index p = psi.rows();
    double best = 0.0;
    for (Eigen::Index i = 0; i < p; ++i)
        require(psi(i, i) > 0.0, ErrorKind::parse, "coherence: zero or negative diagonal entry");
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j)
            if (i != j)
                best = std::max(best, std::abs(psi(i, j)) / std::sqrt(psi(i, i) * psi(j, j)));
    return best;
}

} // namespace eiv
