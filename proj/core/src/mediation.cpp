#include "seqkernel/mediation.hpp"

#include <string>

#include "seqkernel/errors.hpp"

namespace seqkernel {

namespace {

void validate(const MediationData& data) {
  const Eigen::Index n = data.n();
  if (n < 5) throw_input("mediation fit needs at least 5 observations, got " + std::to_string(n));
  if (data.d.rows() != n || data.m.rows() != n || data.x.rows() != n) {
    throw_input("mediation data columns have unequal lengths");
  }
  if (data.d.cols() != 1) throw_input("treatment must be a single column");
  if (!data.y.allFinite() || !data.d.allFinite() || !data.m.allFinite() || !data.x.allFinite()) {
    throw_input("mediation data contains non-finite values");
  }
}

}  // namespace

MediationData MediationData::rows(const std::vector<Eigen::Index>& idx) const {
  return {y(idx), d(idx, Eigen::all), m(idx, Eigen::all), x(idx, Eigen::all)};
}

MediationKernels resolve_kernels(const MediationData& data, const MediationKernelSettings& settings) {
  return {block_kernel(data.d, settings.d), block_kernel(data.m, settings.m), block_kernel(data.x, settings.x)};
}

MediationModel fit_mediation(const MediationData& data, const MediationKernels& kernels,
                             const MediationTuning& tuning) {
  validate(data);
  MediationModel model;
  model.kernels = kernels;
  model.D = data.d;
  model.M = data.m;
  model.X = data.x;
  model.Y = data.y;
  model.K_DD = gram(kernels.d, model.D).entries;
  model.K_MM = gram(kernels.m, model.M).entries;
  model.K_XX = gram(kernels.x, model.X).entries;
  const double n = static_cast<double>(data.n());

  Eigen::MatrixXd K = model.K_DD.cwiseProduct(model.K_XX);
  model.lambda1 = resolve_penalty_matrix(tuning.embedding, K, model.K_MM, tuning.options);
  model.embedding = fit_cme(K, model.lambda1);

  model.A = model.embedding.factorization->solve(model.K_MM).transpose();
  model.A.array() *= (model.K_XX * model.K_XX).array() / n;

  K.array() *= model.K_MM.array();
  model.lambda = resolve_penalty(tuning.outcome, K, model.Y, tuning.options);
  model.outcome = solve_regularized(K, model.Y, model.lambda);
  return model;
}

double gamma_hat(const MediationModel& model, double d, std::span<const double> m, std::span<const double> x) {
  const Eigen::VectorXd k = kernel_column(model.kernels.d, model.D, d)
                                .cwiseProduct(kernel_column(model.kernels.m, model.M, m))
                                .cwiseProduct(kernel_column(model.kernels.x, model.X, x));
  return predict(model.outcome, k);
}

double omega_hat(const MediationModel& model, double d, double d_prime, std::span<const double> x) {
  const Eigen::VectorXd k_x = kernel_column(model.kernels.x, model.X, x);
  const Eigen::VectorXd w =
      embedding_weights(model.embedding, Eigen::VectorXd(kernel_column(model.kernels.d, model.D, d).cwiseProduct(k_x)));
  const Eigen::VectorXd v =
      kernel_column(model.kernels.d, model.D, d_prime).cwiseProduct(model.K_MM * w).cwiseProduct(k_x);
  return model.outcome.alpha.dot(v);
}

Eigen::VectorXd omega_hat_batch(const MediationModel& model, double d, double d_prime,
                                const Eigen::MatrixXd& Xq) {
  const Eigen::MatrixXd K_xq = gram(model.kernels.x, model.X, Xq).entries;
  const Eigen::VectorXd k_d = kernel_column(model.kernels.d, model.D, d);
  const Eigen::MatrixXd W = model.embedding.factorization->solve(Eigen::MatrixXd(k_d.asDiagonal() * K_xq));
  const Eigen::MatrixXd V = (model.K_MM * W).cwiseProduct(K_xq);
  const Eigen::VectorXd c =
      model.outcome.alpha.cwiseProduct(kernel_column(model.kernels.d, model.D, d_prime));
  return V.transpose() * c;
}

Eigen::VectorXd mediation_vector(const MediationModel& model, double d, double d_prime) {
  return kernel_column(model.kernels.d, model.D, d_prime)
      .cwiseProduct(model.A * kernel_column(model.kernels.d, model.D, d));
}

double theta_me(const MediationModel& model, double d, double d_prime) {
  return model.outcome.alpha.dot(mediation_vector(model, d, d_prime));
}

namespace {

Eigen::MatrixXd kernel_columns(const KernelSpec& spec, const Eigen::MatrixXd& A, const std::vector<double>& v) {
  Eigen::MatrixXd out(A.rows(), static_cast<Eigen::Index>(v.size()));
  for (std::size_t j = 0; j < v.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = kernel_column(spec, A, v[j]);
  return out;
}

}  // namespace

Eigen::MatrixXd theta_me_surface(const MediationModel& model, const std::vector<double>& d,
                                 const std::vector<double>& d_prime) {
  const Eigen::MatrixXd AK = model.A * kernel_columns(model.kernels.d, model.D, d);
  const Eigen::MatrixXd KP = kernel_columns(model.kernels.d, model.D, d_prime);
  return AK.transpose() * (model.outcome.alpha.asDiagonal() * KP);
}

double theta_me_grad(const MediationModel& model, double d, double d_prime) {
  if (!model.kernels.d.is_scalar_eq()) {
    throw_unsupported("incremental responses need a continuous treatment with an exponentiated-quadratic kernel");
  }
  const Eigen::VectorXd v = grad_kernel_column(model.kernels.d, model.D, d_prime)
                                .cwiseProduct(model.A * kernel_column(model.kernels.d, model.D, d));
  return model.outcome.alpha.dot(v);
}

double theta_me_diagonal(const MediationModel& model, double d) {
  const Eigen::VectorXd k = kernel_column(model.kernels.d, model.D, d);
  return model.outcome.alpha.dot(k.cwiseProduct(model.A * k));
}

Decomposition decompose_values(double me, double me_dd, double me_dpdp) {
  Decomposition out;
  out.me = me;
  out.me_dd = me_dd;
  out.me_dpdp = me_dpdp;
  out.te = me_dpdp - me_dd;
  out.ie = me_dpdp - me;
  out.de = me - me_dd;
  return out;
}

Decomposition decompose(const MediationModel& model, double d, double d_prime) {
  const double me_dd = theta_me(model, d, d);
  const double me_dpdp = d == d_prime ? me_dd : theta_me(model, d_prime, d_prime);
  const double me = d == d_prime ? me_dd : theta_me(model, d, d_prime);
  return decompose_values(me, me_dd, me_dpdp);
}

}  // namespace seqkernel
