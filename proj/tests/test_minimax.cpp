#include "doctest.h"

#include "eiv/error.hpp"
#include "eiv/minimax.hpp"
#include "eiv/rng.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

using namespace eiv;

namespace
{

MatrixXd random_spd(Eigen::Index p, uint64_t seed)
{
    Rng rng(seed);
    MatrixXd a(p, p);
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j)
            a(i, j) = rng.next_normal();
    MatrixXd m = a.transpose() * a / double(p) + 0.2 * MatrixXd::Identity(p, p);
    return ((m + m.transpose()) * 0.5).eval();
}

VectorXd random_vec(Eigen::Index p, Rng &rng, double scale)
{
    VectorXd v(p);
    for (Eigen::Index i = 0; i < p; ++i)
        v(i) = scale * rng.next_normal();
    return v;
}

int hamming(const Eigen::VectorXi &a, const Eigen::VectorXi &b)
{
    return (a - b).cwiseAbs().sum();
}

} // namespace

TEST_CASE("packing of weight-1 vectors keeps all sixteen candidates")
{
    const auto pack = vg_packing(17, 2, 0);
    CHECK(pack.codewords.size() == 16);
    CHECK(pack.min_pairwise_dist == 2);
    for (const auto &c : pack.codewords)
    {
        CHECK(c.size() == 16);
        CHECK(c.sum() == 1);
    }
    CHECK(pack.meets_cardinality_bound);
    CHECK(pack.log_cardinality == doctest::Approx(std::log(16.0)).epsilon(1e-12));
}

TEST_CASE("packing stays nonempty in the degenerate square case")
{
    const auto pack = vg_packing(4, 4, 3);
    CHECK(pack.codewords.size() == 1);
    CHECK(pack.codewords[0].sum() == 3);
    CHECK(pack.min_pairwise_dist == 0);
}

TEST_CASE("packing respects the distance threshold for every pair")
{
    for (uint64_t seed : {0, 1, 2})
    {
        const auto pack = vg_packing(12, 4, seed);
        CHECK(pack.codewords.size() >= 2);
        const double threshold = 4.0 / 16.0;
        for (size_t i = 0; i < pack.codewords.size(); ++i)
        {
            CHECK(pack.codewords[i].sum() == 3);
            for (size_t j = i + 1; j < pack.codewords.size(); ++j)
                CHECK(double(hamming(pack.codewords[i], pack.codewords[j])) > threshold);
        }
        CHECK(pack.min_pairwise_dist >= 1);
    }
}

TEST_CASE("packing handles a distance threshold above one")
{
    // weight-16 vectors of length 17 differ pairwise in exactly two slots,
    // which still clears the threshold 17/16.
    const auto pack = vg_packing(18, 17, 5);
    CHECK(pack.codewords.size() == 17);
    CHECK(pack.min_pairwise_dist == 2);
}

TEST_CASE("packing is deterministic in the seed")
{
    const auto a = vg_packing(12, 3, 42);
    const auto b = vg_packing(12, 3, 42);
    REQUIRE(a.codewords.size() == b.codewords.size());
    for (size_t i = 0; i < a.codewords.size(); ++i)
        CHECK(a.codewords[i] == b.codewords[i]);
}

TEST_CASE("packing rejects invalid inputs")
{
    CHECK_THROWS_AS(vg_packing(10, 1, 0), Error);
    CHECK_THROWS_AS(vg_packing(3, 4, 0), Error);
    // 40 choose 20 candidates is far beyond the enumeration budget.
    CHECK_THROWS_AS(vg_packing(41, 21, 0), Error);
}

TEST_CASE("hypothesis vectors sit on the sphere with the required sparsity")
{
    const auto pack = vg_packing(17, 2, 7);
    const double R = 2.5;
    const double gamma = 0.8;
    const auto fam = hypothesis_family(pack, R, gamma);
    REQUIRE(fam.omega_bars.size() == pack.codewords.size() + 1);

    CHECK((fam.omega_bars[0] - R * VectorXd::Unit(17, 0)).lpNorm<Eigen::Infinity>() == 0.0);
    for (size_t j = 0; j < fam.omega_bars.size(); ++j)
    {
        const auto &v = fam.omega_bars[j];
        CHECK(std::abs(v.norm() - R) <= 1e-12 * R);
        int nnz = 0;
        for (Eigen::Index i = 0; i < v.size(); ++i)
            nnz += v(i) != 0.0;
        CHECK(nnz == (j == 0 ? 1 : 2));
    }
}

TEST_CASE("hypothesis construction has exact norm in the s=2, gamma=1, R=1 case")
{
    const auto pack = vg_packing(17, 2, 1);
    const auto fam = hypothesis_family(pack, 1.0, 1.0);
    for (const auto &v : fam.omega_bars)
        CHECK(v.squaredNorm() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("hypothesis vectors collapse to the base point as gamma vanishes")
{
    const auto pack = vg_packing(17, 2, 2);
    const double R = 1.7;
    const auto fam = hypothesis_family(pack, R, 1e-9);
    for (const auto &v : fam.omega_bars)
        CHECK((v - R * VectorXd::Unit(17, 0)).lpNorm<Eigen::Infinity>() <= 3e-9 * R);
}

TEST_CASE("hypothesis separation scales with the packing distance")
{
    const auto pack = vg_packing(14, 4, 9);
    const double R = 2.0;
    const double gamma = 0.35;
    const auto fam = hypothesis_family(pack, R, gamma);
    const double scale = R * gamma / std::sqrt(1.0 + gamma * gamma * 3.0);
    const int s = 4;

    for (double q : {1.0, 2.0, std::numeric_limits<double>::infinity()})
    {
        double min_dist = std::numeric_limits<double>::infinity();
        for (size_t j = 1; j < fam.omega_bars.size(); ++j)
            for (size_t k = j + 1; k < fam.omega_bars.size(); ++k)
            {
                const VectorXd d = fam.omega_bars[j] - fam.omega_bars[k];
                min_dist = std::min(min_dist, std::isinf(q) ? d.lpNorm<Eigen::Infinity>()
                                              : q == 1.0   ? d.lpNorm<1>()
                                                           : d.norm());
            }
        const double floor =
            std::isinf(q) ? scale : scale * std::pow(double(s) / 16.0, 1.0 / q);
        CHECK(min_dist >= floor - 1e-12);

        // Distance to the base point grows at the same rate.
        for (size_t j = 1; j < fam.omega_bars.size(); ++j)
        {
            const VectorXd d = fam.omega_bars[j] - fam.omega_bars[0];
            const double dq = std::isinf(q) ? d.lpNorm<Eigen::Infinity>()
                              : q == 1.0   ? d.lpNorm<1>()
                                           : d.norm();
            CHECK(dq >= scale * std::pow(double(s - 1), 1.0 / q) - 1e-12);
        }
    }
}

TEST_CASE("hypothesis construction validates its inputs")
{
    const auto pack = vg_packing(17, 2, 0);
    CHECK_THROWS_AS(hypothesis_family(pack, -1.0, 0.5), Error);
    CHECK_THROWS_AS(hypothesis_family(pack, 1.0, 0.0), Error);
}

TEST_CASE("spacing formula matches frozen values and scaling laws")
{
    CHECK(gamma_select(100, 20, 2, 1.0) == doctest::Approx(0.01696535106103778).epsilon(1e-12));
    // (1 + R^2)/R^2 tends to one as R grows.
    CHECK(gamma_select(100, 20, 2, 1e9) ==
          doctest::Approx(0.011996314780470203).epsilon(1e-9));
    // Quadrupling n halves gamma exactly.
    CHECK(gamma_select(400, 20, 2, 1.0) ==
          doctest::Approx(0.5 * gamma_select(100, 20, 2, 1.0)).epsilon(1e-14));
    // p = s collapses the log factor to zero.
    CHECK(gamma_select(50, 5, 5, 1.0) == 0.0);
    CHECK_THROWS_AS(gamma_select(0, 20, 2, 1.0), Error);
    CHECK_THROWS_AS(gamma_select(100, 2, 5, 1.0), Error);
    CHECK_THROWS_AS(gamma_select(100, 20, 2, -1.0), Error);
}

TEST_CASE("noise mixing matrices have the advertised structure")
{
    for (uint64_t seed : {10, 11})
    {
        const MatrixXd S = random_spd(4, seed);
        const KlModel model(S, 0.7, 0.9);
        const MatrixXd eye = MatrixXd::Identity(4, 4);
        CHECK((model.sigma_tilde + model.gamma_mat - eye).cwiseAbs().maxCoeff() <= 1e-12);
        Eigen::SelfAdjointEigenSolver<MatrixXd> eig(model.gamma_mat);
        CHECK(eig.eigenvalues().minCoeff() > 0.0);
        CHECK(eig.eigenvalues().maxCoeff() < 1.0);
        const MatrixXd shifted = S + 0.81 * eye;
        CHECK((model.m_mat - model.gamma_mat * shifted * model.gamma_mat).cwiseAbs().maxCoeff() <=
              1e-10);
    }
    MatrixXd bad = MatrixXd::Identity(3, 3);
    bad(2, 2) = -1.0;
    CHECK_THROWS_AS(KlModel(bad, 0.5, 0.5), Error);
    CHECK_THROWS_AS(KlModel(MatrixXd::Identity(3, 3), 0.0, 0.5), Error);
    CHECK_THROWS_AS(KlModel(MatrixXd::Random(3, 2), 0.5, 0.5), Error);
}

TEST_CASE("divergence vanishes at equal parameters and is never negative")
{
    Rng rng(77);
    const MatrixXd S = random_spd(3, 99);
    const KlModel model(S, 0.6, 0.8);
    const VectorXd t = random_vec(3, rng, 1.0);
    CHECK(kl_exact(model, t, t) == 0.0);

    for (int it = 0; it < 100; ++it)
    {
        const VectorXd a = random_vec(3, rng, 1.5);
        const VectorXd b = random_vec(3, rng, 1.5);
        CHECK(kl_exact(model, a, b) >= -1e-12);
    }
}

TEST_CASE("divergence is symmetric when the conditional variances agree")
{
    // With Sigma = I the mixing matrix is a multiple of the identity, so
    // equal radii force equal conditional variances.
    const KlModel model(MatrixXd::Identity(4, 4), 0.5, 0.7);
    Rng rng(123);
    for (int it = 0; it < 20; ++it)
    {
        VectorXd a = random_vec(4, rng, 1.0);
        VectorXd b = a;
        std::swap(b(0), b(2));
        b(1) = -b(1);
        CHECK(model.noise_var(a) == doctest::Approx(model.noise_var(b)).epsilon(1e-12));
        CHECK(kl_exact(model, a, b) == doctest::Approx(kl_exact(model, b, a)).epsilon(1e-12));
    }
}

TEST_CASE("divergence growth constant over equal-radius pairs is bounded")
{
    const MatrixXd S = random_spd(5, 321);
    const KlModel model(S, 0.4, 0.9);
    Rng rng(555);
    double fitted = 0.0;
    for (int it = 0; it < 20; ++it)
    {
        VectorXd a = random_vec(5, rng, 1.2);
        VectorXd b = a;
        for (size_t i = 5; i > 1; --i)
            std::swap(b(Eigen::Index(i - 1)), b(Eigen::Index(rng.next_u64() % i)));
        if ((a - b).norm() < 1e-9)
            continue;
        const double kl = kl_exact(model, a, b);
        const double denom =
            (a - b).squaredNorm() + std::abs(model.c_theta(a) - model.c_theta(b));
        fitted = std::max(fitted, kl * (1.0 + a.squaredNorm()) / denom);
    }
    CHECK(fitted > 0.0);
    CHECK(std::isfinite(fitted));
    MESSAGE("fitted equal-radius divergence constant: ", fitted);
}

TEST_CASE("divergence matches a Monte Carlo likelihood-ratio estimate")
{
    Rng cfg_rng(2718);
    int checked = 0;
    for (int cfg = 0; cfg < 10; ++cfg)
    {
        const Eigen::Index p = 2 + (cfg % 2);
        const MatrixXd S = random_spd(p, 1000 + uint64_t(cfg));
        const double sigma = 0.4 + 0.5 * cfg_rng.next_uniform();
        const double sigma_star = 0.3 + 0.6 * cfg_rng.next_uniform();
        const KlModel model(S, sigma, sigma_star);
        const VectorXd t1 = random_vec(p, cfg_rng, 0.8);
        const VectorXd t2 = t1 + random_vec(p, cfg_rng, 0.25);
        const double exact = kl_exact(model, t1, t2);

        const MatrixXd L = S.llt().matrixL();
        const double v1 = model.noise_var(t1);
        const double v2 = model.noise_var(t2);
        const VectorXd g1 = model.gamma_mat * t1;
        const VectorXd g2 = model.gamma_mat * t2;

        Rng rng(mix_seed(9000, uint64_t(cfg)));
        const int n_samples = 1000000;
        double sum = 0.0, sumsq = 0.0;
        VectorXd z(p), a(p), v(p);
        for (int i = 0; i < n_samples; ++i)
        {
            for (Eigen::Index k = 0; k < p; ++k)
                z(k) = rng.next_normal();
            a = L * z;
            for (Eigen::Index k = 0; k < p; ++k)
                v(k) = a(k) + sigma_star * rng.next_normal();
            const double u = t1.dot(a) + sigma * rng.next_normal();
            const double r1 = u - g1.dot(v);
            const double r2 = u - g2.dot(v);
            const double llr = 0.5 * std::log(v2 / v1) + r2 * r2 / (2.0 * v2) -
                               r1 * r1 / (2.0 * v1);
            sum += llr;
            sumsq += llr * llr;
        }
        const double mean = sum / n_samples;
        const double var = std::max(0.0, sumsq / n_samples - mean * mean);
        const double stderr_mc = std::sqrt(var / n_samples);
        CHECK(std::abs(mean - exact) <= 3.0 * stderr_mc + 1e-12);
        ++checked;
    }
    CHECK(checked == 10);
}
