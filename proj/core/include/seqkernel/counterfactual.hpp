#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "seqkernel/kernels.hpp"
#include "seqkernel/linalg.hpp"
#include "seqkernel/mediation.hpp"
#include "seqkernel/ridge.hpp"
#include "seqkernel/timevarying.hpp"

namespace seqkernel {

// Embedding of a counterfactual outcome law: y -> sum_i w_i k_Y(Y_i, y).
struct DistEmbedding {
  Eigen::VectorXd weights;
  KernelSpec y_kernel;
  Eigen::VectorXd y_train;

  double evaluate(double y) const;
  Eigen::VectorXd evaluate(const std::vector<double>& ys) const;
};

// Ridge system (K + n lambda I) with the outcome-kernel target used by the
// distribution embeddings; lambda is tuned against K_YY.
struct OutcomeEmbeddingFit {
  KernelSpec y_kernel;
  Eigen::VectorXd y_train;
  double lambda = 0.0;
  std::shared_ptr<const RegularizedFactor> factorization;
};

OutcomeEmbeddingFit fit_outcome_embedding(const Eigen::MatrixXd& K, const Eigen::VectorXd& Y,
                                          const KernelSpec& y_kernel, const TuningOptions& options = {},
                                          const Penalty& penalty = Penalty::tuned());
// Uses the model's own product Gram (K_DD.K_MM.K_XX or the 4-way product).
OutcomeEmbeddingFit fit_outcome_embedding(const MediationModel& model, const KernelSpec& y_kernel,
                                          const TuningOptions& options = {},
                                          const Penalty& penalty = Penalty::tuned());
OutcomeEmbeddingFit fit_outcome_embedding(const TimeVaryingModel& model, const KernelSpec& y_kernel,
                                          const TuningOptions& options = {},
                                          const Penalty& penalty = Penalty::tuned());

// EQ with the median-heuristic lengthscale, or Indicator for discrete outcomes.
KernelSpec outcome_kernel(const Eigen::VectorXd& Y, ColumnKind kind = ColumnKind::Continuous);

enum class DistKind { Mediation, TimeVarying, DistributionShift };

DistEmbedding dist_embedding_me(const MediationModel& model, const OutcomeEmbeddingFit& fit, double d,
                                double d_prime);
DistEmbedding dist_embedding_gf(const TimeVaryingModel& model, const OutcomeEmbeddingFit& fit, double d1,
                                double d2);
DistEmbedding dist_embedding_ds(const TimeVaryingModel& model, const OutcomeEmbeddingFit& fit, double d1,
                                double d2);

struct HerdSet {
  std::vector<double> samples;
  std::vector<double> grid;
  std::vector<double> objective;  // objective value at each selection
};

// 512 equally spaced points on [min Y, max Y] merged with the unique training outcomes.
inline constexpr int kHerdingGridPoints = 512;
std::vector<double> default_herding_grid(const Eigen::VectorXd& Y);

// Greedy argmax of embedding(y) - (1/(j+1)) sum_{l<j} k(Y~_l, y) for j = 1..J.
// Ties go to the smallest candidate.
HerdSet herd(const DistEmbedding& embedding, const std::vector<double>& grid, int J);

// Squared MMD between the samples' empirical embedding and the target.
double mmd_diag(const std::vector<double>& samples, const DistEmbedding& embedding);

}  // namespace seqkernel
