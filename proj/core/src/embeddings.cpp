#include "seqkernel/embeddings.hpp"

#include <cmath>

#include "seqkernel/errors.hpp"

namespace seqkernel {

ConditionalEmbeddingFit fit_cme(const Eigen::MatrixXd& K_BB, double lambda) {
  if (K_BB.rows() != K_BB.cols()) throw_input("fit_cme: Gram matrix is not square");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw_config("fit_cme: penalty must be positive");
  ConditionalEmbeddingFit fit;
  fit.n = K_BB.rows();
  fit.lambda = lambda;
  fit.factorization = std::make_shared<RegularizedFactor>(K_BB, static_cast<double>(fit.n) * lambda);
  return fit;
}

Eigen::VectorXd embedding_weights(const ConditionalEmbeddingFit& fit, const Eigen::VectorXd& K_Bb) {
  if (K_Bb.size() != fit.n) throw_input("embedding_weights: kernel vector length mismatch");
  return fit.factorization->solve(K_Bb);
}

Eigen::MatrixXd embedding_weights(const ConditionalEmbeddingFit& fit, const Eigen::MatrixXd& K_Bb) {
  if (K_Bb.rows() != fit.n) throw_input("embedding_weights: kernel matrix row mismatch");
  return fit.factorization->solve(K_Bb);
}

Eigen::VectorXd mean_embedding_weights(Eigen::Index n) {
  if (n < 1) throw_input("mean_embedding_weights: n must be >= 1");
  return Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
}

}  // namespace seqkernel
