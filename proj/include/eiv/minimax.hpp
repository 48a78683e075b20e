#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "eiv/model.hpp"

namespace eiv
{

// Packing of binary weight-(s-1) vectors in {0,1}^(p-1) whose pairwise
// Hamming distance exceeds s/16.
struct PackingSet
{
    std::vector<Eigen::VectorXi> codewords;
    int min_pairwise_dist = 0; // 0 when fewer than two codewords
    Eigen::Index p = 0;
    int s = 0;
    // Greedy sets can fall short of the log-cardinality target
    // log(count) >= c1 * s * log(p/s); reported rather than enforced.
    bool meets_cardinality_bound = false;
    double log_cardinality = 0.0;
    double cardinality_target = 0.0;
};

// Hypothesis vectors on the sphere of radius R: omega_bars[0] = R e_1 has
// sparsity one, every later vector has sparsity s and l2 norm exactly R.
struct HypothesisFamily
{
    std::vector<VectorXd> omega_bars;
    double gamma = 0.0;
    double R = 0.0;
    int s = 0;
};

// Joint Gaussian observation model for the lower-bound instances: V = A + B
// with A ~ N(0, Sigma), B ~ N(0, sigma_star^2 I), and U = theta'A + eta with
// eta ~ N(0, sigma^2). Conditionally U | V ~ N(theta' Gamma V, noise_var).
struct KlModel
{
    KlModel(MatrixXd sigma_mat, double sigma, double sigma_star);

    MatrixXd Sigma;
    double sigma = 0.0;
    double sigma_star = 0.0;
    MatrixXd sigma_tilde; // sigma_star^2 (Sigma + sigma_star^2 I)^{-1}
    MatrixXd gamma_mat;   // I - sigma_tilde, eigenvalues in (0, 1)
    MatrixXd m_mat;       // gamma_mat (Sigma + sigma_star^2 I) gamma_mat

    double c_theta(const VectorXd &theta) const;   // theta' gamma_mat theta
    double noise_var(const VectorXd &theta) const; // sigma^2 + c_theta sigma_star^2
};

// Greedy first-fit packing over all weight-(s-1) binary vectors, visited in a
// seed-shuffled order; a candidate is accepted iff its Hamming distance to
// every accepted codeword exceeds s/16.
PackingSet vg_packing(Eigen::Index p, int s, uint64_t seed, double c1_prime = 0.1);

// Builds omega_bar_0 = R e_1 and, per codeword, the spaced vector
// (R / sqrt(1 + gamma^2 (s-1))) (e_1 + gamma * (0, codeword)).
HypothesisFamily hypothesis_family(const PackingSet &packing, double R, double gamma);

// Spacing level gamma = sqrt(c1/(16 c2 n) * (1 + R^2)/R^2 * log(p/s)).
double gamma_select(Eigen::Index n, Eigen::Index p, int s, double R, double c1_prime = 0.1,
                    double c2_prime = 1.0);

// Exact one-observation Kullback-Leibler divergence between the joint laws of
// (U, V) at theta1 and theta2; the n-observation divergence is n times this.
double kl_exact(const KlModel &model, const VectorXd &theta1, const VectorXd &theta2);

} // namespace eiv
