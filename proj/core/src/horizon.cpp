#include "seqkernel/horizon.hpp"

#include <string>

#include "seqkernel/errors.hpp"
#include "seqkernel/linalg.hpp"

namespace seqkernel {

namespace {

void validate(const HorizonData& data) {
  const std::size_t T = data.periods();
  if (T < 2) throw_input("horizon estimator needs at least 2 periods; use a plain dose response for T=1");
  if (data.x.size() != T) throw_input("one covariate block per period is required");
  const Eigen::Index n = data.n();
  if (n < 5) throw_input("horizon fit needs at least 5 observations");
  for (std::size_t t = 0; t < T; ++t) {
    if (data.d[t].rows() != n || data.x[t].rows() != n) throw_input("horizon columns have unequal lengths");
    if (data.d[t].cols() != 1) throw_input("treatments must be single columns");
  }
}

// History covariate periods (1-based) for stage t.
std::vector<std::size_t> covariate_history(std::size_t t, bool markov) {
  if (markov) return {t - 1};
  std::vector<std::size_t> out;
  for (std::size_t s = 1; s < t; ++s) out.push_back(s);
  return out;
}

Eigen::MatrixXd hadamard(const std::vector<Eigen::MatrixXd>& grams, const std::vector<std::size_t>& periods) {
  Eigen::MatrixXd out = grams[periods.front() - 1];
  for (std::size_t i = 1; i < periods.size(); ++i) out.array() *= grams[periods[i] - 1].array();
  return out;
}

}  // namespace

std::vector<std::size_t> HorizonModel::treatment_history(std::size_t t) const {
  return covariate_history(t, markov);
}

HorizonKernels resolve_kernels(const HorizonData& data, const std::vector<std::vector<ColumnSetting>>& d_settings,
                               const std::vector<std::vector<ColumnSetting>>& x_settings) {
  HorizonKernels k;
  for (std::size_t t = 0; t < data.d.size(); ++t) {
    k.d.push_back(block_kernel(data.d[t], t < d_settings.size() ? d_settings[t] : std::vector<ColumnSetting>{}));
  }
  for (std::size_t t = 0; t < data.x.size(); ++t) {
    k.x.push_back(block_kernel(data.x[t], t < x_settings.size() ? x_settings[t] : std::vector<ColumnSetting>{}));
  }
  return k;
}

HorizonModel fit_horizon(const HorizonData& data, const HorizonKernels& kernels, const HorizonTuning& tuning) {
  validate(data);
  const std::size_t T = data.periods();
  if (kernels.d.size() != T || kernels.x.size() != T) throw_config("one kernel per treatment and covariate period");
  HorizonModel model;
  model.T = T;
  model.markov = data.markov;
  model.kernels = kernels;
  model.D = data.d;
  model.Y = data.y;
  const Eigen::Index n = data.n();
  const double nd = static_cast<double>(n);

  std::vector<Eigen::MatrixXd> K_D(T), K_X(T);
  for (std::size_t t = 0; t < T; ++t) {
    K_D[t] = gram(kernels.d[t], data.d[t]).entries;
    K_X[t] = gram(kernels.x[t], data.x[t]).entries;
  }

  {
    Eigen::MatrixXd K = K_D[0].cwiseProduct(K_X[0]);
    for (std::size_t t = 1; t < T; ++t) K.array() *= K_D[t].array() * K_X[t].array();
    model.lambda = resolve_penalty(tuning.outcome, K, model.Y, tuning.options);
    model.outcome = solve_regularized(K, model.Y, model.lambda);
  }

  model.stage_lambda.assign(T - 1, 0.0);
  model.P.resize(T >= 3 ? T - 2 : 0);
  for (std::size_t t = T; t >= 2; --t) {
    const std::vector<std::size_t> hist = covariate_history(t, model.markov);
    Eigen::MatrixXd K_hist = hadamard(K_X, hist);
    Eigen::MatrixXd K_stage = hadamard(K_D, hist).cwiseProduct(K_hist);
    const Eigen::MatrixXd& target = K_X[t - 1];
    const double lam = resolve_penalty_matrix(tuning.stage, K_stage, target, tuning.options);
    model.stage_lambda[t - 2] = lam;
    const RegularizedFactor factor(K_stage, nd * lam);
    if (t == T) {
      model.Q = factor.solve(target).transpose();
    } else {
      model.P[t - 2] = factor.inverse();
    }
    if (t >= 3) {
      if (model.K_H.size() < T - 2) model.K_H.resize(T - 2);
      model.K_H[t - 3] = std::move(K_hist);
    }
  }
  for (std::size_t t = 2; t + 1 <= T; ++t) model.K_X.push_back(K_X[t - 1]);
  model.S = K_X[0] * K_X[0];
  return model;
}

double theta_gf_T(const HorizonModel& model, std::span<const double> d_path) {
  const std::size_t T = model.T;
  if (d_path.size() != T) {
    throw_input("treatment path has " + std::to_string(d_path.size()) + " entries, model has " +
                std::to_string(T) + " periods");
  }
  const Eigen::Index n = model.n();
  std::vector<Eigen::VectorXd> k_d(T);
  for (std::size_t t = 0; t < T; ++t) k_d[t] = kernel_column(model.kernels.d[t], model.D[t], d_path[t]);

  auto stage_weights = [&](std::size_t t) {
    Eigen::VectorXd kd = Eigen::VectorXd::Ones(n);
    for (std::size_t s : model.treatment_history(t)) kd.array() *= k_d[s - 1].array();
    return kd;
  };

  Eigen::VectorXd c = model.outcome.alpha;
  for (std::size_t t = 0; t < T; ++t) c.array() *= k_d[t].array();

  // B carries the propagated stage-2 weights before the final history contraction.
  Eigen::MatrixXd B;
  if (T == 2) {
    B = model.Q;
  } else {
    Eigen::MatrixXd M = model.Q * (stage_weights(T).asDiagonal() * model.K_H[T - 3]);
    for (std::size_t t = T - 1; t >= 3; --t) {
      const Eigen::MatrixXd G = model.K_X[t - 2].cwiseProduct(M) * model.P[t - 2];
      M = G * (stage_weights(t).asDiagonal() * model.K_H[t - 3]);
    }
    B = model.K_X[0].cwiseProduct(M) * model.P[0];
  }
  const Eigen::VectorXd kd2 = stage_weights(2);
  return c.dot(B.cwiseProduct(model.S) * kd2) / static_cast<double>(n);
}

double theta_gf_T(const HorizonData& data, std::span<const double> d_path) {
  return theta_gf_T(fit_horizon(data, resolve_kernels(data)), d_path);
}

}  // namespace seqkernel
