#include "eiv/minimax.hpp"

#include "eiv/error.hpp"
#include "eiv/rng.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

namespace eiv
{

namespace
{

constexpr double kCandidateBudget = 200000.0;

int hamming(const Eigen::VectorXi &a, const Eigen::VectorXi &b)
{
    return (a - b).cwiseAbs().sum();
}

} // namespace

PackingSet vg_packing(Eigen::Index p, int s, uint64_t seed, double c1_prime)
{
    require(s >= 2, ErrorKind::parse, "vg_packing: s must be >= 2");
    require(p >= s, ErrorKind::parse, "vg_packing: need p >= s");
    require(c1_prime > 0.0, ErrorKind::parse, "vg_packing: c1_prime must be positive");

    const Eigen::Index len = p - 1;
    const int w = s - 1;
    double count = 1.0;
    for (int i = 0; i < w; ++i)
        count *= double(len - i) / double(i + 1);
    require(count <= kCandidateBudget, ErrorKind::parse,
            "vg_packing: too many weight-(s-1) candidates to enumerate");

    // All weight-w binary vectors of length p-1, in lexicographic order of
    // their support, then visited in a seed-shuffled order.
    std::vector<Eigen::VectorXi> candidates;
    std::vector<int> pos(static_cast<size_t>(w));
    for (int i = 0; i < w; ++i)
        pos[static_cast<size_t>(i)] = i;
    while (true)
    {
        Eigen::VectorXi v = Eigen::VectorXi::Zero(len);
        for (int i : pos)
            v(i) = 1;
        candidates.push_back(std::move(v));
        int k = w - 1;
        while (k >= 0 && pos[static_cast<size_t>(k)] == len - w + k)
            --k;
        if (k < 0)
            break;
        ++pos[static_cast<size_t>(k)];
        for (int j = k + 1; j < w; ++j)
            pos[static_cast<size_t>(j)] = pos[static_cast<size_t>(j - 1)] + 1;
    }

    Rng rng(mix_seed(seed, 0x9ac5));
    for (size_t i = candidates.size(); i > 1; --i)
        std::swap(candidates[i - 1], candidates[rng.next_u64() % i]);

    PackingSet out;
    out.p = p;
    out.s = s;
    const double threshold = double(s) / 16.0;
    for (const auto &cand : candidates)
    {
        bool ok = true;
        for (const auto &acc : out.codewords)
            if (double(hamming(cand, acc)) <= threshold)
            {
                ok = false;
                break;
            }
        if (ok)
            out.codewords.push_back(cand);
    }

    int min_dist = std::numeric_limits<int>::max();
    for (size_t i = 0; i < out.codewords.size(); ++i)
        for (size_t j = i + 1; j < out.codewords.size(); ++j)
            min_dist = std::min(min_dist, hamming(out.codewords[i], out.codewords[j]));
    out.min_pairwise_dist = out.codewords.size() >= 2 ? min_dist : 0;

    out.log_cardinality = std::log(double(out.codewords.size()));
    out.cardinality_target = c1_prime * double(s) * std::log(double(p) / double(s));
    out.meets_cardinality_bound = out.log_cardinality >= out.cardinality_target;
    return out;
}

HypothesisFamily hypothesis_family(const PackingSet &packing, double R, double gamma)
{
    require(R > 0.0, ErrorKind::parse, "hypothesis_family: R must be positive");
    require(gamma > 0.0, ErrorKind::parse, "hypothesis_family: gamma must be positive");
    const Eigen::Index p = packing.p;
    const int s = packing.s;
    require(p >= 2 && s >= 2, ErrorKind::parse, "hypothesis_family: packing is empty");

    HypothesisFamily fam;
    fam.gamma = gamma;
    fam.R = R;
    fam.s = s;

    VectorXd omega0 = VectorXd::Zero(p);
    omega0(0) = 1.0;
    fam.omega_bars.push_back(R * omega0);

    const double scale = R / std::sqrt(1.0 + gamma * gamma * double(s - 1));
    for (const auto &code : packing.codewords)
    {
        require(code.size() == p - 1 && code.sum() == s - 1, ErrorKind::shape,
                "hypothesis_family: codeword has the wrong length or weight");
        VectorXd v = omega0;
        for (Eigen::Index i = 0; i < p - 1; ++i)
            if (code(i) != 0)
                v(i + 1) = gamma;
        v *= scale;
        require(std::abs(v.norm() - R) <= 1e-12 * std::max(1.0, R), ErrorKind::solver,
                "hypothesis_family: constructed vector leaves the radius-R sphere");
        fam.omega_bars.push_back(std::move(v));
    }
    return fam;
}

double gamma_select(Eigen::Index n, Eigen::Index p, int s, double R, double c1_prime,
                    double c2_prime)
{
    require(n >= 1 && p >= 1 && s >= 1, ErrorKind::parse,
            "gamma_select: n, p, s must be positive");
    require(p >= s, ErrorKind::parse, "gamma_select: need p >= s");
    require(R > 0.0 && c1_prime > 0.0 && c2_prime > 0.0, ErrorKind::parse,
            "gamma_select: R, c1_prime, c2_prime must be positive");
    const double ratio = (1.0 + R * R) / (R * R);
    return std::sqrt(c1_prime / (16.0 * c2_prime * double(n)) * ratio *
                     std::log(double(p) / double(s)));
}

KlModel::KlModel(MatrixXd sigma_mat, double sigma_in, double sigma_star_in)
    : Sigma(std::move(sigma_mat)), sigma(sigma_in), sigma_star(sigma_star_in)
{
    const Eigen::Index p = Sigma.rows();
    require(Sigma.cols() == p && p >= 1, ErrorKind::shape, "KlModel: Sigma must be square");
    const double scale = std::max(1.0, Sigma.cwiseAbs().maxCoeff());
    require((Sigma - Sigma.transpose()).cwiseAbs().maxCoeff() <= 1e-8 * scale, ErrorKind::shape,
            "KlModel: Sigma must be symmetric");
    require(sigma > 0.0 && sigma_star > 0.0, ErrorKind::parse,
            "KlModel: sigma and sigma_star must be positive");
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(Sigma);
    require(eig.eigenvalues().minCoeff() > 0.0, ErrorKind::parse,
            "KlModel: Sigma must be positive definite");

    const MatrixXd shifted = Sigma + sigma_star * sigma_star * MatrixXd::Identity(p, p);
    sigma_tilde = sigma_star * sigma_star * shifted.llt().solve(MatrixXd::Identity(p, p));
    sigma_tilde = ((sigma_tilde + sigma_tilde.transpose()) * 0.5).eval();
    gamma_mat = MatrixXd::Identity(p, p) - sigma_tilde;
    m_mat = gamma_mat * shifted * gamma_mat;
    m_mat = ((m_mat + m_mat.transpose()) * 0.5).eval();
}

double KlModel::c_theta(const VectorXd &theta) const
{
    require(theta.size() == Sigma.rows(), ErrorKind::shape,
            "KlModel: theta length does not match Sigma");
    return theta.dot(gamma_mat * theta);
}

double KlModel::noise_var(const VectorXd &theta) const
{
    return sigma * sigma + c_theta(theta) * sigma_star * sigma_star;
}

double kl_exact(const KlModel &model, const VectorXd &theta1, const VectorXd &theta2)
{
    require(theta1.size() == model.Sigma.rows() && theta2.size() == model.Sigma.rows(),
            ErrorKind::shape, "kl_exact: theta length does not match Sigma");
    const double v1 = model.noise_var(theta1);
    const double v2 = model.noise_var(theta2);
    const VectorXd delta = theta1 - theta2;
    return 0.5 * (std::log(v2 / v1) + v1 / v2 - 1.0) +
           delta.dot(model.m_mat * delta) / (2.0 * v2);
}

} // namespace eiv
