#include "seqkernel/timevarying.hpp"

#include <string>

#include "seqkernel/errors.hpp"

namespace seqkernel {

namespace {

void validate(const TimeVaryingData& data) {
  const Eigen::Index n = data.n();
  if (n < 5) throw_input("time-varying fit needs at least 5 observations, got " + std::to_string(n));
  if (data.d1.rows() != n || data.d2.rows() != n || data.x1.rows() != n || data.x2.rows() != n) {
    throw_input("time-varying data columns have unequal lengths");
  }
  if (data.d1.cols() != 1 || data.d2.cols() != 1) throw_input("treatments must be single columns");
  if (!data.y.allFinite() || !data.d1.allFinite() || !data.d2.allFinite() || !data.x1.allFinite() ||
      !data.x2.allFinite()) {
    throw_input("time-varying data contains non-finite values");
  }
}

AltState fit_alt(const TimeVaryingModel& model, const AltPopulation& alt, const TimeVaryingTuning& tuning) {
  const Eigen::Index m = alt.n();
  if (m < 2) throw_input("alternative population needs at least 2 rows");
  if (alt.x1.rows() != m || alt.x2.rows() != m || alt.d1.cols() != 1) {
    throw_input("alternative population columns have unequal lengths");
  }
  if (alt.x1.cols() != model.X1.cols() || alt.x2.cols() != model.X2.cols()) {
    throw_input("alternative population covariates do not match the source schema");
  }
  AltState s;
  s.data = alt;
  s.K_D1 = gram(model.kernels.d1, s.data.d1).entries;
  s.K_X1 = gram(model.kernels.x1, s.data.x1).entries;
  s.K_X1_cross = gram(model.kernels.x1, model.X1, s.data.x1).entries;
  s.K_X2_cross = gram(model.kernels.x2, model.X2, s.data.x2).entries;

  const Eigen::MatrixXd K = s.K_D1.cwiseProduct(s.K_X1);
  const Eigen::MatrixXd K_X2_alt = gram(model.kernels.x2, s.data.x2).entries;
  s.lambda5 = resolve_penalty_matrix(tuning.alt_embedding, K, K_X2_alt, tuning.options);
  double effective = s.lambda5;
  if (tuning.alt_scale == AltPenaltyScale::SourceSampleSize) {
    effective *= static_cast<double>(model.n()) / static_cast<double>(m);
  }
  s.embedding = fit_cme(K, effective);
  s.A = s.embedding.factorization->solve(Eigen::MatrixXd(s.K_X2_cross.transpose())).transpose();
  s.A.array() *= (s.K_X1_cross * s.K_X1).array() / static_cast<double>(m);
  return s;
}

const AltState& require_alt(const TimeVaryingModel& model) {
  if (!model.alt) throw_input("distribution-shift queries need an alternative population");
  return *model.alt;
}

}  // namespace

TimeVaryingData TimeVaryingData::rows(const std::vector<Eigen::Index>& idx) const {
  return {y(idx), d1(idx, Eigen::all), d2(idx, Eigen::all), x1(idx, Eigen::all), x2(idx, Eigen::all)};
}

TimeVaryingKernels resolve_kernels(const TimeVaryingData& data, const TimeVaryingKernelSettings& settings) {
  return {block_kernel(data.d1, settings.d1), block_kernel(data.d2, settings.d2),
          block_kernel(data.x1, settings.x1), block_kernel(data.x2, settings.x2)};
}

TimeVaryingModel fit_gf(const TimeVaryingData& data, const TimeVaryingKernels& kernels,
                        const TimeVaryingTuning& tuning, const std::optional<AltPopulation>& alt) {
  validate(data);
  TimeVaryingModel model;
  model.kernels = kernels;
  model.D1 = data.d1;
  model.D2 = data.d2;
  model.X1 = data.x1;
  model.X2 = data.x2;
  model.Y = data.y;
  model.K_D1 = gram(kernels.d1, model.D1).entries;
  model.K_D2 = gram(kernels.d2, model.D2).entries;
  model.K_X1 = gram(kernels.x1, model.X1).entries;
  model.K_X2 = gram(kernels.x2, model.X2).entries;
  const double n = static_cast<double>(data.n());

  Eigen::MatrixXd K = model.K_D1.cwiseProduct(model.K_X1);
  model.lambda4 = resolve_penalty_matrix(tuning.embedding, K, model.K_X2, tuning.options);
  model.embedding = fit_cme(K, model.lambda4);

  model.A = model.embedding.factorization->solve(model.K_X2).transpose();
  model.A.array() *= (model.K_X1 * model.K_X1).array() / n;

  K.array() *= model.K_D2.array() * model.K_X2.array();
  model.lambda = resolve_penalty(tuning.outcome, K, model.Y, tuning.options);
  model.outcome = solve_regularized(K, model.Y, model.lambda);

  if (alt) model.alt = fit_alt(model, *alt, tuning);
  return model;
}

double gamma_hat(const TimeVaryingModel& model, double d1, double d2, std::span<const double> x1,
                 std::span<const double> x2) {
  const Eigen::VectorXd k = kernel_column(model.kernels.d1, model.D1, d1)
                                .cwiseProduct(kernel_column(model.kernels.d2, model.D2, d2))
                                .cwiseProduct(kernel_column(model.kernels.x1, model.X1, x1))
                                .cwiseProduct(kernel_column(model.kernels.x2, model.X2, x2));
  return predict(model.outcome, k);
}

double omega_hat(const TimeVaryingModel& model, double d1, double d2, std::span<const double> x1) {
  const Eigen::VectorXd k_d1 = kernel_column(model.kernels.d1, model.D1, d1);
  const Eigen::VectorXd k_x1 = kernel_column(model.kernels.x1, model.X1, x1);
  const Eigen::VectorXd w = embedding_weights(model.embedding, Eigen::VectorXd(k_d1.cwiseProduct(k_x1)));
  const Eigen::VectorXd v = k_d1.cwiseProduct(kernel_column(model.kernels.d2, model.D2, d2))
                                .cwiseProduct(k_x1)
                                .cwiseProduct(model.K_X2 * w);
  return model.outcome.alpha.dot(v);
}

Eigen::VectorXd omega_hat_batch(const TimeVaryingModel& model, double d1, double d2,
                                const Eigen::MatrixXd& X1q) {
  const Eigen::MatrixXd K_xq = gram(model.kernels.x1, model.X1, X1q).entries;
  const Eigen::VectorXd k_d1 = kernel_column(model.kernels.d1, model.D1, d1);
  const Eigen::MatrixXd W = model.embedding.factorization->solve(Eigen::MatrixXd(k_d1.asDiagonal() * K_xq));
  const Eigen::MatrixXd V = (model.K_X2 * W).cwiseProduct(K_xq);
  const Eigen::VectorXd c = model.outcome.alpha.cwiseProduct(k_d1).cwiseProduct(
      kernel_column(model.kernels.d2, model.D2, d2));
  return V.transpose() * c;
}

Eigen::VectorXd gf_vector(const TimeVaryingModel& model, double d1, double d2) {
  const Eigen::VectorXd k_d1 = kernel_column(model.kernels.d1, model.D1, d1);
  return k_d1.cwiseProduct(kernel_column(model.kernels.d2, model.D2, d2)).cwiseProduct(model.A * k_d1);
}

Eigen::VectorXd ds_vector(const TimeVaryingModel& model, double d1, double d2) {
  const AltState& alt = require_alt(model);
  const Eigen::VectorXd k_alt = kernel_column(model.kernels.d1, alt.data.d1, d1);
  return kernel_column(model.kernels.d1, model.D1, d1)
      .cwiseProduct(kernel_column(model.kernels.d2, model.D2, d2))
      .cwiseProduct(alt.A * k_alt);
}

double theta_gf(const TimeVaryingModel& model, double d1, double d2) {
  return model.outcome.alpha.dot(gf_vector(model, d1, d2));
}

namespace {

Eigen::MatrixXd kernel_columns(const KernelSpec& spec, const Eigen::MatrixXd& A, const std::vector<double>& v) {
  Eigen::MatrixXd out(A.rows(), static_cast<Eigen::Index>(v.size()));
  for (std::size_t j = 0; j < v.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = kernel_column(spec, A, v[j]);
  return out;
}

}  // namespace

Eigen::MatrixXd theta_gf_surface(const TimeVaryingModel& model, const std::vector<double>& d1,
                                 const std::vector<double>& d2) {
  const Eigen::MatrixXd K1 = kernel_columns(model.kernels.d1, model.D1, d1);
  const Eigen::MatrixXd L = K1.cwiseProduct(model.A * K1);
  return L.transpose() * (model.outcome.alpha.asDiagonal() * kernel_columns(model.kernels.d2, model.D2, d2));
}

Eigen::MatrixXd theta_ds_surface(const TimeVaryingModel& model, const std::vector<double>& d1,
                                 const std::vector<double>& d2) {
  const AltState& alt = require_alt(model);
  const Eigen::MatrixXd L =
      kernel_columns(model.kernels.d1, model.D1, d1).cwiseProduct(alt.A * kernel_columns(model.kernels.d1, alt.data.d1, d1));
  return L.transpose() * (model.outcome.alpha.asDiagonal() * kernel_columns(model.kernels.d2, model.D2, d2));
}

double theta_gf_grad(const TimeVaryingModel& model, double d1, double d2) {
  if (!model.kernels.d2.is_scalar_eq()) {
    throw_unsupported("incremental responses need a continuous treatment with an exponentiated-quadratic kernel");
  }
  const Eigen::VectorXd k_d1 = kernel_column(model.kernels.d1, model.D1, d1);
  const Eigen::VectorXd v = k_d1.cwiseProduct(grad_kernel_column(model.kernels.d2, model.D2, d2))
                                .cwiseProduct(model.A * k_d1);
  return model.outcome.alpha.dot(v);
}

double theta_ds(const TimeVaryingModel& model, double d1, double d2) {
  return model.outcome.alpha.dot(ds_vector(model, d1, d2));
}

Eigen::VectorXd omega_ds_rows(const TimeVaryingModel& model, double d1, double d2) {
  const AltState& alt = require_alt(model);
  const Eigen::VectorXd k_alt = kernel_column(model.kernels.d1, alt.data.d1, d1);
  const Eigen::MatrixXd W = alt.embedding.factorization->solve(Eigen::MatrixXd(k_alt.asDiagonal() * alt.K_X1));
  const Eigen::MatrixXd V = (alt.K_X2_cross * W).cwiseProduct(alt.K_X1_cross);
  const Eigen::VectorXd c = model.outcome.alpha
                                .cwiseProduct(kernel_column(model.kernels.d1, model.D1, d1))
                                .cwiseProduct(kernel_column(model.kernels.d2, model.D2, d2));
  return V.transpose() * c;
}

}  // namespace seqkernel
