#include "doctest.h"

#include "eiv/error.hpp"
#include "eiv/rng.hpp"
#include "eiv/sensitivities.hpp"
#include "eiv/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

using namespace eiv;

namespace
{

MatrixXd ar1_matrix(Eigen::Index p, double rho)
{
    MatrixXd m(p, p);
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j)
            m(i, j) = std::pow(rho, std::abs(double(i - j)));
    return m;
}

MatrixXd random_spd(Eigen::Index p, uint64_t seed)
{
    Rng rng(seed);
    MatrixXd a(p, p);
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j)
            a(i, j) = rng.next_normal();
    MatrixXd m = a.transpose() * a / double(p) + 0.1 * MatrixXd::Identity(p, p);
    return ((m + m.transpose()) * 0.5).eval();
}

double l1_on(const VectorXd &v, const std::vector<Eigen::Index> &idx)
{
    double acc = 0.0;
    for (Eigen::Index i : idx)
        acc += std::abs(v(i));
    return acc;
}

bool cone_ok(const VectorXd &delta, const std::vector<Eigen::Index> &J, double u, double tol)
{
    std::vector<Eigen::Index> Jc;
    std::vector<bool> in_j(static_cast<size_t>(delta.size()), false);
    for (Eigen::Index i : J)
        in_j[static_cast<size_t>(i)] = true;
    for (Eigen::Index i = 0; i < delta.size(); ++i)
        if (!in_j[static_cast<size_t>(i)])
            Jc.push_back(i);
    return l1_on(delta, Jc) <= u * l1_on(delta, J) + tol;
}

std::vector<std::vector<Eigen::Index>> all_subsets(Eigen::Index p, int s)
{
    std::vector<std::vector<Eigen::Index>> out;
    std::vector<Eigen::Index> cur;
    auto rec = [&](auto &&self, Eigen::Index start) -> void {
        if (static_cast<int>(cur.size()) == s)
        {
            out.push_back(cur);
            return;
        }
        for (Eigen::Index i = start; i < p; ++i)
        {
            cur.push_back(i);
            self(self, i + 1);
            cur.pop_back();
        }
    };
    rec(rec, 0);
    return out;
}

// Independent oracle: enumerate every sign orthant of the full vector (first
// coordinate pinned positive by the Delta -> -Delta symmetry). Within an
// orthant all constraints are linear in the magnitudes x >= 0, so each cell is
// one exact LP and the sensitivity is the minimum over cells and supports.
double brute_kappa(const MatrixXd &psi, int s, double u, SensitivityNorm q)
{
    const Eigen::Index p = psi.rows();
    const auto Js = all_subsets(p, s);
    double best = std::numeric_limits<double>::infinity();
    for (long mask = 0; mask < (1L << (p - 1)); ++mask)
    {
        VectorXd sg(p);
        sg(0) = 1.0;
        for (Eigen::Index i = 1; i < p; ++i)
            sg(i) = (mask >> (i - 1)) & 1 ? -1.0 : 1.0;
        const MatrixXd psi_s = psi * sg.asDiagonal(); // columns signed
        for (const auto &J : Js)
        {
            VectorXd cone_row = VectorXd::Ones(p); // 1'x_{Jc} - u 1'x_J <= 0
            for (Eigen::Index i : J)
                cone_row(i) = -u;
            if (q == SensitivityNorm::l1)
            {
                LinearProgram lp;
                const Eigen::Index nv = p + 1;
                lp.c = VectorXd::Zero(nv);
                lp.c(p) = 1.0;
                lp.A_ineq = MatrixXd::Zero(2 * p + 1, nv);
                lp.b_ineq = VectorXd::Zero(2 * p + 1);
                lp.A_ineq.block(0, 0, p, p) = psi_s;
                lp.A_ineq.block(p, 0, p, p) = -psi_s;
                lp.A_ineq.col(p).head(2 * p).array() = -1.0;
                lp.A_ineq.row(2 * p).head(p) = cone_row.transpose();
                lp.A_eq = MatrixXd::Zero(1, nv);
                lp.A_eq.row(0).head(p).array() = 1.0; // |Delta|_1 = 1
                lp.b_eq = VectorXd::Ones(1);
                lp.nonneg_mask.assign(static_cast<size_t>(nv), true);
                lp.nonneg_mask[static_cast<size_t>(p)] = false;
                SolverResult sol = solve_lp(lp, 1e-9);
                if (sol.status == SolveStatus::optimal)
                    best = std::min(best, sol.objective);
            }
            else
            {
                for (Eigen::Index k = 0; k < p; ++k)
                {
                    LinearProgram lp;
                    const Eigen::Index nv = p + 1;
                    lp.c = VectorXd::Zero(nv);
                    lp.c(p) = 1.0;
                    lp.A_ineq = MatrixXd::Zero(3 * p + 1, nv);
                    lp.b_ineq = VectorXd::Zero(3 * p + 1);
                    lp.A_ineq.block(0, 0, p, p) = psi_s;
                    lp.A_ineq.block(p, 0, p, p) = -psi_s;
                    lp.A_ineq.col(p).head(2 * p).array() = -1.0;
                    lp.A_ineq.block(2 * p, 0, p, p) = MatrixXd::Identity(p, p);
                    lp.b_ineq.segment(2 * p, p).array() = 1.0; // x <= 1
                    lp.A_ineq.row(3 * p).head(p) = cone_row.transpose();
                    lp.A_eq = MatrixXd::Zero(1, nv);
                    lp.A_eq(0, k) = 1.0; // |Delta|_inf attained at k
                    lp.b_eq = VectorXd::Ones(1);
                    lp.nonneg_mask.assign(static_cast<size_t>(nv), true);
                    lp.nonneg_mask[static_cast<size_t>(p)] = false;
                    SolverResult sol = solve_lp(lp, 1e-9);
                    if (sol.status == SolveStatus::optimal)
                        best = std::min(best, sol.objective);
                }
            }
        }
    }
    return best;
}

} // namespace

TEST_CASE("identity design: exact sensitivities match closed forms")
{
    const MatrixXd eye = MatrixXd::Identity(10, 10);
    const auto inf = kappa_exact(eye, 2, 2.0, SensitivityNorm::linf);
    CHECK(inf.value == doctest::Approx(1.0).epsilon(1e-8));
    const auto one = kappa_exact(eye, 2, 2.0, SensitivityNorm::l1);
    CHECK(one.value == doctest::Approx(1.0 / 6.0).epsilon(1e-8));

    // Mass spreads over (1+u)s coordinates, so for u = 2 the l1 value drops
    // strictly below the (2s)^{-1} level that holds when u <= 1.
    CHECK(one.value < 0.25 - 1e-6);

    // u = 0 pins the support to J: the minimum splits mass evenly over s.
    const auto one_u0 = kappa_exact(eye, 2, 0.0, SensitivityNorm::l1);
    CHECK(one_u0.value == doctest::Approx(0.5).epsilon(1e-8));
    const auto inf_u0 = kappa_exact(eye, 2, 0.0, SensitivityNorm::linf);
    CHECK(inf_u0.value == doctest::Approx(1.0).epsilon(1e-8));

    // s = p makes the cone all of R^p: the l1 minimum spreads over p.
    const MatrixXd eye4 = MatrixXd::Identity(4, 4);
    const auto one_full = kappa_exact(eye4, 4, 1.0, SensitivityNorm::l1);
    CHECK(one_full.value == doctest::Approx(0.25).epsilon(1e-8));
}

TEST_CASE("exact sensitivities match the sign-orthant enumeration oracle")
{
    const std::vector<MatrixXd> designs = {
        ar1_matrix(5, 0.25), ar1_matrix(5, 0.7), random_spd(5, 11), random_spd(5, 12),
        random_spd(5, 13),   MatrixXd::Identity(5, 5),
    };
    for (size_t d = 0; d < designs.size(); ++d)
    {
        for (double u : {0.5, 2.0})
        {
            const auto inf = kappa_exact(designs[d], 2, u, SensitivityNorm::linf);
            const double inf_brute = brute_kappa(designs[d], 2, u, SensitivityNorm::linf);
            CHECK(inf.value == doctest::Approx(inf_brute).epsilon(1e-6));

            const auto one = kappa_exact(designs[d], 2, u, SensitivityNorm::l1);
            const double one_brute = brute_kappa(designs[d], 2, u, SensitivityNorm::l1);
            CHECK(one.value == doctest::Approx(one_brute).epsilon(1e-6));
        }
    }
}

TEST_CASE("exact values lower-bound every randomly sampled cone point")
{
    const MatrixXd psi = ar1_matrix(6, 0.4);
    const int s = 2;
    const double u = 1.5;
    const auto inf = kappa_exact(psi, s, u, SensitivityNorm::linf);
    const auto one = kappa_exact(psi, s, u, SensitivityNorm::l1);

    Rng rng(2024);
    double seen_inf = std::numeric_limits<double>::infinity();
    double seen_one = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 100000; ++it)
    {
        VectorXd delta(6);
        for (Eigen::Index i = 0; i < 6; ++i)
            delta(i) = rng.next_normal();
        // The best support for the cone test is the top-s coordinates.
        std::vector<Eigen::Index> idx = {0, 1, 2, 3, 4, 5};
        std::sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
            return std::abs(delta(a)) > std::abs(delta(b));
        });
        idx.resize(s);
        if (!cone_ok(delta, idx, u, 0.0))
            continue;
        const double score = (psi * delta).lpNorm<Eigen::Infinity>();
        seen_inf = std::min(seen_inf, score / delta.lpNorm<Eigen::Infinity>());
        seen_one = std::min(seen_one, score / delta.lpNorm<1>());
    }
    CHECK(seen_inf >= inf.value - 1e-6);
    CHECK(seen_one >= one.value - 1e-6);
    // The sampler should also land reasonably close from above.
    CHECK(seen_inf <= inf.value * 3.0);
    CHECK(seen_one <= one.value * 3.0);
}

TEST_CASE("exact sensitivities scale linearly in Psi")
{
    const MatrixXd psi = random_spd(5, 21);
    const double alpha = 3.7;
    for (auto q : {SensitivityNorm::l1, SensitivityNorm::linf})
    {
        const auto base = kappa_exact(psi, 2, 1.0, q);
        const auto scaled = kappa_exact(alpha * psi, 2, 1.0, q);
        CHECK(scaled.value == doctest::Approx(alpha * base.value).epsilon(1e-7));
    }
}

TEST_CASE("exact sensitivities decrease as the cone grows")
{
    for (uint64_t seed : {31, 32, 33})
    {
        const MatrixXd psi = random_spd(6, seed);
        for (auto q : {SensitivityNorm::l1, SensitivityNorm::linf})
        {
            const double u_small = kappa_exact(psi, 2, 0.5, q).value;
            const double u_mid = kappa_exact(psi, 2, 1.0, q).value;
            const double u_big = kappa_exact(psi, 2, 3.0, q).value;
            CHECK(u_small >= u_mid - 1e-8);
            CHECK(u_mid >= u_big - 1e-8);
            const double s1 = kappa_exact(psi, 1, 1.0, q).value;
            const double s2 = kappa_exact(psi, 2, 1.0, q).value;
            const double s3 = kappa_exact(psi, 3, 1.0, q).value;
            CHECK(s1 >= s2 - 1e-8);
            CHECK(s2 >= s3 - 1e-8);
        }
    }
}

TEST_CASE("exact witnesses are feasible and attain the reported value")
{
    for (uint64_t seed : {41, 42})
    {
        const MatrixXd psi = random_spd(6, seed);
        for (auto q : {SensitivityNorm::l1, SensitivityNorm::linf})
        {
            const auto rep = kappa_exact(psi, 2, 1.5, q);
            const double nq = q == SensitivityNorm::l1 ? rep.witness.lpNorm<1>()
                                                       : rep.witness.lpNorm<Eigen::Infinity>();
            CHECK(nq == doctest::Approx(1.0).epsilon(1e-6));
            CHECK(cone_ok(rep.witness, rep.witness_support, 1.5, 1e-7));
            CHECK((psi * rep.witness).lpNorm<Eigen::Infinity>() ==
                  doctest::Approx(rep.value).epsilon(1e-6));
            CHECK(rep.lower == rep.value);
            CHECK(rep.upper == rep.value);
        }
    }
}

TEST_CASE("sensitivity inequalities with explicit constants hold where provable")
{
    // At u <= 1 the chain |Delta|_1 <= (1+u)s|Delta|_inf gives
    // kappa_1 >= (2s)^{-1} kappa_inf; at general u the sound constant is
    // ((1+u)s)^{-1}, tight on identity-like designs.
    for (uint64_t seed : {51, 52, 53, 54, 55, 56, 57, 58, 59, 60})
    {
        const MatrixXd psi = random_spd(6, seed);
        const int s = 2;
        for (double u : {0.5, 1.0})
        {
            const double k1 = kappa_exact(psi, s, u, SensitivityNorm::l1).value;
            const double kinf = kappa_exact(psi, s, u, SensitivityNorm::linf).value;
            CHECK(k1 >= kinf / (2.0 * s) - 1e-9);
        }
        const double u = 2.5;
        const double k1 = kappa_exact(psi, s, u, SensitivityNorm::l1).value;
        const double kinf = kappa_exact(psi, s, u, SensitivityNorm::linf).value;
        CHECK(k1 >= kinf / ((1.0 + u) * s) - 1e-9);
    }
}

TEST_CASE("sup-norm enumeration covers both signs at the pinned coordinate")
{
    // Regression: pinning Delta_k = +1 spends the global flip symmetry, so
    // the support sign patterns must be enumerated in full. With the halved
    // pattern set this design returned 0.175485 instead of the true minimum
    // (frozen from the sign-orthant oracle), violating the provable
    // kappa_1 >= kappa_inf/(2s) at u = 1.
    Rng rng(4217);
    MatrixXd a(8, 8);
    for (Eigen::Index i = 0; i < 8; ++i)
        for (Eigen::Index j = 0; j < 8; ++j)
            a(i, j) = rng.next_normal();
    MatrixXd m = a.transpose() * a / 8.0 + 0.2 * MatrixXd::Identity(8, 8);
    const MatrixXd psi = ((m + m.transpose()) * 0.5).eval();
    const auto inf = kappa_exact(psi, 2, 1.0, SensitivityNorm::linf);
    const auto one = kappa_exact(psi, 2, 1.0, SensitivityNorm::l1);
    CHECK(inf.value == doctest::Approx(0.170180161750).epsilon(1e-9));
    CHECK(one.value == doctest::Approx(0.043365921363).epsilon(1e-9));
    CHECK(one.value >= inf.value / 4.0 - 1e-9);
}

TEST_CASE("local l2 sensitivity on the identity hits the tight closed form")
{
    // For p = (1+u)s the all-equal vector sits on the cone boundary and the
    // certified lower bound ((1+u)s)^{-1/2} kappa_inf is attained exactly.
    const MatrixXd eye = MatrixXd::Identity(6, 6);
    const auto rep = kappa_local(eye, 2, 2.0, SensitivityNorm::l2, 24, 7);
    const double expect = 1.0 / std::sqrt(6.0);
    CHECK(rep.lower == doctest::Approx(expect).epsilon(1e-6));
    CHECK(rep.upper == doctest::Approx(expect).epsilon(1e-4));
    CHECK(rep.lower <= rep.upper + 1e-9);
    CHECK(rep.witness.norm() == doctest::Approx(1.0).epsilon(1e-7));
    CHECK((eye * rep.witness).lpNorm<Eigen::Infinity>() ==
          doctest::Approx(rep.upper).epsilon(1e-7));
}

TEST_CASE("local prediction sensitivity brackets against the l1 certificate")
{
    for (uint64_t seed : {71, 72, 73})
    {
        const MatrixXd psi = random_spd(6, seed);
        const auto rep = kappa_local(psi, 2, 1.0, SensitivityNorm::pr, 16, seed);
        const double k1 = kappa_exact(psi, 2, 1.0, SensitivityNorm::l1).value;
        CHECK(rep.lower == doctest::Approx(std::sqrt(k1)).epsilon(1e-6));
        CHECK(rep.lower <= rep.upper + 1e-9);
        CHECK(rep.upper >= std::sqrt(k1) - 1e-9);
        // The witness attains the reported ratio in the prediction norm.
        const double pn = std::sqrt(rep.witness.dot(psi * rep.witness));
        CHECK(pn == doctest::Approx(1.0).epsilon(1e-6));
        CHECK((psi * rep.witness).lpNorm<Eigen::Infinity>() ==
              doctest::Approx(rep.upper).epsilon(1e-6));
    }
    // On the identity the l1 certificate is tight: kappa_pr = sqrt(kappa_1).
    const MatrixXd eye = MatrixXd::Identity(6, 6);
    const auto rep = kappa_local(eye, 2, 2.0, SensitivityNorm::pr, 24, 3);
    CHECK(rep.upper == doctest::Approx(1.0 / std::sqrt(6.0)).epsilon(1e-4));
    CHECK(rep.lower == doctest::Approx(1.0 / std::sqrt(6.0)).epsilon(1e-6));
}

TEST_CASE("local sensitivity search is deterministic and upper bounds sampling")
{
    const MatrixXd psi = ar1_matrix(6, 0.3);
    const auto a = kappa_local(psi, 2, 1.0, SensitivityNorm::l2, 12, 99);
    const auto b = kappa_local(psi, 2, 1.0, SensitivityNorm::l2, 12, 99);
    CHECK(a.value == b.value);
    CHECK((a.witness - b.witness).lpNorm<Eigen::Infinity>() == 0.0);

    // A crude sampler can never beat the reported upper bound by much.
    Rng rng(5150);
    double seen = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 50000; ++it)
    {
        VectorXd delta(6);
        for (Eigen::Index i = 0; i < 6; ++i)
            delta(i) = rng.next_normal();
        std::vector<Eigen::Index> idx = {0, 1, 2, 3, 4, 5};
        std::sort(idx.begin(), idx.end(), [&](Eigen::Index x, Eigen::Index y) {
            return std::abs(delta(x)) > std::abs(delta(y));
        });
        idx.resize(2);
        if (!cone_ok(delta, idx, 1.0, 0.0))
            continue;
        seen = std::min(seen, (psi * delta).lpNorm<Eigen::Infinity>() / delta.norm());
    }
    CHECK(a.upper <= seen + 1e-6);
    CHECK(a.lower <= seen + 1e-9);
}

TEST_CASE("coherence matches hand values and rejects bad diagonals")
{
    CHECK(coherence(MatrixXd::Identity(5, 5)) == doctest::Approx(0.0));
    MatrixXd equi = MatrixXd::Constant(4, 4, 0.3);
    equi.diagonal().setOnes();
    CHECK(coherence(equi) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(coherence(ar1_matrix(6, 0.25)) == doctest::Approx(0.25).epsilon(1e-12));
    MatrixXd scaled(2, 2);
    scaled << 4.0, 0.6, 0.6, 1.0;
    CHECK(coherence(scaled) == doctest::Approx(0.3).epsilon(1e-12));
    MatrixXd bad = MatrixXd::Identity(3, 3);
    bad(1, 1) = 0.0;
    CHECK_THROWS_AS(coherence(bad), Error);
}

TEST_CASE("sensitivity entry points validate their arguments")
{
    const MatrixXd eye = MatrixXd::Identity(6, 6);
    CHECK_THROWS_AS(kappa_exact(eye, 2, 1.0, SensitivityNorm::l2), Error);
    CHECK_THROWS_AS(kappa_exact(eye, 0, 1.0, SensitivityNorm::l1), Error);
    CHECK_THROWS_AS(kappa_exact(eye, 2, -0.5, SensitivityNorm::l1), Error);
    CHECK_THROWS_AS(kappa_exact(MatrixXd::Identity(25, 25), 2, 1.0, SensitivityNorm::l1), Error);
    CHECK_THROWS_AS(kappa_exact(eye, 5, 1.0, SensitivityNorm::l1), Error);
    CHECK_THROWS_AS(kappa_local(eye, 2, 1.0, SensitivityNorm::linf), Error);
    CHECK_THROWS_AS(kappa_local(eye, 2, 1.0, SensitivityNorm::l2, 0), Error);
    MatrixXd rect(3, 4);
    rect.setZero();
    CHECK_THROWS_AS(kappa_exact(rect, 1, 1.0, SensitivityNorm::l1), Error);
    MatrixXd asym = MatrixXd::Identity(4, 4);
    asym(0, 1) = 0.5;
    CHECK_THROWS_AS(kappa_exact(asym, 1, 1.0, SensitivityNorm::l1), Error);
    MatrixXd indef = MatrixXd::Identity(4, 4);
    indef(3, 3) = -1.0;
    CHECK_THROWS_AS(kappa_local(indef, 1, 1.0, SensitivityNorm::l2), Error);

    try
    {
        kappa_exact(eye, 2, 1.0, SensitivityNorm::l2);
        CHECK(false);
    }
    catch (const Error &e)
    {
        CHECK(e.kind == ErrorKind::parse);
    }
}
