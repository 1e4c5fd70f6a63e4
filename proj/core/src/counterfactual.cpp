#include "seqkernel/counterfactual.hpp"

#include <algorithm>
#include <cmath>

#include "seqkernel/errors.hpp"

namespace seqkernel {

namespace {

Eigen::MatrixXd as_column(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

DistEmbedding make_embedding(const OutcomeEmbeddingFit& fit, const Eigen::VectorXd& v) {
  DistEmbedding e;
  e.weights = fit.factorization->solve(v);
  e.y_kernel = fit.y_kernel;
  e.y_train = fit.y_train;
  if (!e.weights.allFinite()) throw_numerical("distribution embedding weights are not finite");
  return e;
}

}  // namespace

double DistEmbedding::evaluate(double y) const {
  return weights.dot(kernel_column(y_kernel, Eigen::MatrixXd(y_train), y));
}

Eigen::VectorXd DistEmbedding::evaluate(const std::vector<double>& ys) const {
  return gram(y_kernel, Eigen::MatrixXd(as_column(ys)), Eigen::MatrixXd(y_train)).entries * weights;
}

OutcomeEmbeddingFit fit_outcome_embedding(const Eigen::MatrixXd& K, const Eigen::VectorXd& Y,
                                          const KernelSpec& y_kernel, const TuningOptions& options,
                                          const Penalty& penalty) {
  if (K.rows() != Y.size()) throw_input("outcome embedding: Gram and outcome sizes differ");
  OutcomeEmbeddingFit fit;
  fit.y_kernel = y_kernel;
  fit.y_train = Y;
  const Eigen::MatrixXd Ym = Y;
  const Eigen::MatrixXd K_YY = gram(y_kernel, Ym).entries;
  fit.lambda = resolve_penalty_matrix(penalty, K, K_YY, options);
  fit.factorization = std::make_shared<RegularizedFactor>(K, static_cast<double>(K.rows()) * fit.lambda);
  return fit;
}

OutcomeEmbeddingFit fit_outcome_embedding(const MediationModel& model, const KernelSpec& y_kernel,
                                          const TuningOptions& options, const Penalty& penalty) {
  const Eigen::MatrixXd K = model.K_DD.cwiseProduct(model.K_XX).cwiseProduct(model.K_MM);
  return fit_outcome_embedding(K, model.Y, y_kernel, options, penalty);
}

OutcomeEmbeddingFit fit_outcome_embedding(const TimeVaryingModel& model, const KernelSpec& y_kernel,
                                          const TuningOptions& options, const Penalty& penalty) {
  Eigen::MatrixXd K = model.K_D1.cwiseProduct(model.K_X1);
  K.array() *= model.K_D2.array() * model.K_X2.array();
  return fit_outcome_embedding(K, model.Y, y_kernel, options, penalty);
}

KernelSpec outcome_kernel(const Eigen::VectorXd& Y, ColumnKind kind) {
  return block_kernel(Eigen::MatrixXd(Y), {ColumnSetting{kind, std::nullopt}});
}

DistEmbedding dist_embedding_me(const MediationModel& model, const OutcomeEmbeddingFit& fit, double d,
                                double d_prime) {
  return make_embedding(fit, mediation_vector(model, d, d_prime));
}

DistEmbedding dist_embedding_gf(const TimeVaryingModel& model, const OutcomeEmbeddingFit& fit, double d1,
                                double d2) {
  return make_embedding(fit, gf_vector(model, d1, d2));
}

DistEmbedding dist_embedding_ds(const TimeVaryingModel& model, const OutcomeEmbeddingFit& fit, double d1,
                                double d2) {
  return make_embedding(fit, ds_vector(model, d1, d2));
}

std::vector<double> default_herding_grid(const Eigen::VectorXd& Y) {
  if (Y.size() == 0) throw_input("herding grid needs at least one outcome");
  const double lo = Y.minCoeff();
  const double hi = Y.maxCoeff();
  std::vector<double> grid(Y.data(), Y.data() + Y.size());
  for (int i = 0; i < kHerdingGridPoints; ++i) {
    grid.push_back(lo + (hi - lo) * static_cast<double>(i) / (kHerdingGridPoints - 1));
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

HerdSet herd(const DistEmbedding& embedding, const std::vector<double>& grid, int J) {
  if (grid.empty()) throw_input("herding grid is empty");
  if (J < 1) throw_input("herding needs J >= 1");
  HerdSet out;
  out.grid = grid;
  const Eigen::VectorXd target = embedding.evaluate(grid);
  const Eigen::MatrixXd G = as_column(grid);
  Eigen::VectorXd penalty = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
  for (int j = 1; j <= J; ++j) {
    const double scale = 1.0 / static_cast<double>(j + 1);
    Eigen::Index best = 0;
    double best_val = target(0) - scale * penalty(0);
    for (Eigen::Index g = 1; g < target.size(); ++g) {
      const double v = target(g) - scale * penalty(g);
      if (v > best_val || (v == best_val && grid[static_cast<std::size_t>(g)] < grid[static_cast<std::size_t>(best)])) {
        best_val = v;
        best = g;
      }
    }
    const double chosen = grid[static_cast<std::size_t>(best)];
    out.samples.push_back(chosen);
    out.objective.push_back(best_val);
    penalty += kernel_column(embedding.y_kernel, G, chosen);
  }
  return out;
}

double mmd_diag(const std::vector<double>& samples, const DistEmbedding& embedding) {
  if (samples.empty()) throw_input("MMD needs at least one sample");
  const double J = static_cast<double>(samples.size());
  const Eigen::MatrixXd S = as_column(samples);
  const Eigen::MatrixXd Yt = embedding.y_train;
  const double ss = gram(embedding.y_kernel, S).entries.sum() / (J * J);
  const double sy = (gram(embedding.y_kernel, S, Yt).entries * embedding.weights).sum() / J;
  const double yy = embedding.weights.dot(gram(embedding.y_kernel, Yt).entries * embedding.weights);
  return ss - 2.0 * sy + yy;
}

}  // namespace seqkernel
