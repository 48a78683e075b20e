#include "eiv/model.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "eiv/rng.hpp"

namespace eiv
{

Dataset generate_dgp(const TrueModel &model, Eigen::Index n, Eigen::Index p)
{
    require(n >= 1 && p >= 1, ErrorKind::shape, "generate_dgp: n and p must be positive");
    require(model.theta_star.size() == p, ErrorKind::shape,
            "generate_dgp: theta_star length does not match p");
    require(model.sigma >= 0.0 && model.sigma_star >= 0.0, ErrorKind::parse,
            "generate_dgp: noise levels must be nonnegative");
    require(model.rho >= 0.0 && model.rho < 1.0, ErrorKind::parse,
            "generate_dgp: rho must lie in [0,1)");

    Rng rng(model.seed);

    MatrixXd X(n, p);
    if (model.Sigma_dense)
    {
        const MatrixXd &S = *model.Sigma_dense;
        require(S.rows() == p && S.cols() == p, ErrorKind::shape,
                "generate_dgp: Sigma size does not match p");
        Eigen::LLT<MatrixXd> llt(S);
        require(llt.info() == Eigen::Success, ErrorKind::parse,
                "generate_dgp: Sigma is not positive definite");
        MatrixXd L = llt.matrixL();
        VectorXd g(p);
        for (Eigen::Index i = 0; i < n; ++i)
        {
            for (Eigen::Index j = 0; j < p; ++j)
                g(j) = rng.next_normal();
            X.row(i) = (L * g).transpose();
        }
    }
    else
    {
        // AR(1) rows: x_1 = g_1, x_j = rho x_{j-1} + sqrt(1-rho^2) g_j gives
        // exactly Cov(x_i,x_j) = rho^{|i-j|} with unit variances.
        const double rho = model.rho;
        const double scale = std::sqrt(1.0 - rho * rho);
        for (Eigen::Index i = 0; i < n; ++i)
        {
            X(i, 0) = rng.next_normal();
            for (Eigen::Index j = 1; j < p; ++j)
                X(i, j) = rho * X(i, j - 1) + scale * rng.next_normal();
        }
    }

    MatrixXd W(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j)
            W(i, j) = model.sigma_star * rng.next_normal();

    VectorXd xi(n);
    for (Eigen::Index i = 0; i < n; ++i)
        xi(i) = model.sigma * rng.next_normal();

    Dataset data;
    data.X_opt = X;
    data.Z = X + W;
    data.y = X * model.theta_star + xi;
    data.n = n;
    data.p = p;
    return data;
}

std::pair<MatrixXd, Compensation> missing_data_rescale(const MissingDataSample &sample)
{
    const Eigen::Index n = sample.Z_tilde.rows();
    const Eigen::Index p = sample.Z_tilde.cols();
    require(sample.pi.size() == p, ErrorKind::shape,
            "missing_data_rescale: pi length does not match column count");
    require(n >= 1, ErrorKind::shape, "missing_data_rescale: empty sample");

    MatrixXd Z(n, p);
    Compensation comp;
    comp.d_hat = VectorXd(p);
    comp.mode = CompensationMode::estimated;
    for (Eigen::Index j = 0; j < p; ++j)
    {
        const double pij = sample.pi(j);
        require(pij >= 0.0 && pij < 1.0, ErrorKind::parse,
                "missing_data_rescale: pi_j must lie in [0,1)");
        const double q = 1.0 - pij;
        Z.col(j) = sample.Z_tilde.col(j) / q;
        comp.d_hat(j) =
            pij / (q * q) * sample.Z_tilde.col(j).squaredNorm() / static_cast<double>(n);
    }
    return {Z, comp};
}

double compute_m_k(const MatrixXd &X, double k)
{
    require(X.size() > 0, ErrorKind::shape, "compute_m_k: empty matrix");
    const double n = static_cast<double>(X.rows());
    double best = 0.0;
    for (Eigen::Index j = 0; j < X.cols(); ++j)
    {
        const double v = X.col(j).array().abs().pow(k).sum() / n;
        best = std::max(best, v);
    }
    return best;
}

MatrixXd gram(const MatrixXd &X)
{
    MatrixXd Psi = X.transpose() * X / static_cast<double>(X.rows());
    // Symmetrize to make Psi == Psi^T hold bitwise.
    Psi = ((Psi + Psi.transpose()) * 0.5).eval();
    return Psi;
}

std::pair<double, double> theoretical_tuning(const TuningConstants &tc, Eigen::Index n,
                                             Eigen::Index p, double sigma, double sigma_star,
                                             CompensationMode mode)
{
    require(tc.epsilon > 0.0 && tc.epsilon < 1.0, ErrorKind::parse,
            "theoretical_tuning: epsilon must lie in (0,1)");
    require(tc.gamma0 > 0.0 && tc.t0 > 0.0 && tc.gamma2 > 0.0 && tc.t2 > 0.0 && tc.m2 > 0.0 &&
                tc.c_b > 0.0 && tc.c_b_prime > 0.0,
            ErrorKind::parse, "theoretical_tuning: constants must be positive");
    require(n >= 1 && p >= 1, ErrorKind::shape, "theoretical_tuning: n and p must be positive");

    const double nn = static_cast<double>(n);
    const double L = std::log(2.0 * static_cast<double>(p) / tc.epsilon);
    const double delta2 = sigma * std::sqrt(2.0 * tc.m2 * L / nn);
    const double delta1p = sigma_star * std::sqrt(2.0 * tc.m2 * L / nn);
    const double delta3 = std::max(tc.gamma0 * std::sqrt(2.0 * L / nn), 2.0 * L / (tc.t0 * nn));
    const double delta5 = delta3;
    const double delta4p = std::max(tc.gamma2 * std::sqrt(2.0 * L / nn), 2.0 * L / (tc.t2 * nn));
    double b = 0.0;
    if (mode == CompensationMode::estimated)
        b = tc.c_b * std::sqrt(std::log(tc.c_b_prime * static_cast<double>(p) / tc.epsilon) / nn);

    const double mu = delta1p + delta4p + delta5 + b;
    const double tau = delta2 + delta3;
    return {mu, tau};
}

std::pair<double, double> practical_tuning(double epsilon, Eigen::Index n, Eigen::Index p,
                                           double sigma)
{
    require(epsilon > 0.0 && epsilon < 1.0, ErrorKind::parse,
            "practical_tuning: epsilon must lie in (0,1)");
    require(n >= 1 && p >= 1, ErrorKind::shape, "practical_tuning: n and p must be positive");
    const double v =
        sigma * std::sqrt(std::log(static_cast<double>(p) / epsilon) / static_cast<double>(n));
    return {v, v};
}

} // namespace eiv
