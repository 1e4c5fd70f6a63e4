#pragma once

#include <Eigen/Dense>
#include <memory>

#include "seqkernel/linalg.hpp"

namespace seqkernel {

// Conditional mean embedding of A given B, held as the factorization of
// (K_BB + n*lambda*I). The embedding at b is sum_i w_i(b) phi(A_i).
struct ConditionalEmbeddingFit {
  std::shared_ptr<const RegularizedFactor> factorization;
  double lambda = 0.0;
  Eigen::Index n = 0;

  double jitter_used() const { return factorization ? factorization->jitter() : 0.0; }
};

ConditionalEmbeddingFit fit_cme(const Eigen::MatrixXd& K_BB, double lambda);

// (K_BB + n*lambda*I)^{-1} K_Bb, column by column for matrix queries.
Eigen::VectorXd embedding_weights(const ConditionalEmbeddingFit& fit, const Eigen::VectorXd& K_Bb);
Eigen::MatrixXd embedding_weights(const ConditionalEmbeddingFit& fit, const Eigen::MatrixXd& K_Bb);

// Uniform 1/n weights of the empirical measure.
Eigen::VectorXd mean_embedding_weights(Eigen::Index n);

}  // namespace seqkernel
