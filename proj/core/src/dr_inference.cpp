#include "seqkernel/dr_inference.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

#include "seqkernel/errors.hpp"
#include "seqkernel/gaussian.hpp"
#include "seqkernel/parallel.hpp"
#include "seqkernel/rng.hpp"

namespace seqkernel {

namespace {

void check_binary(const Eigen::MatrixXd& col, const char* name) {
  for (Eigen::Index i = 0; i < col.rows(); ++i) {
    const double v = col(i, 0);
    if (v != 0.0 && v != 1.0) {
      throw_input(std::string(name) + " must be coded 0/1 for semiparametric inference (row " +
                  std::to_string(i + 1) + " has " + std::to_string(v) + ")");
    }
  }
}

void check_cells(const std::vector<TreatmentCell>& cells) {
  if (cells.empty()) throw_input("no treatment cells requested");
  for (const auto& [a, b] : cells) {
    if ((a != 0.0 && a != 1.0) || (b != 0.0 && b != 1.0)) throw_input("treatment values must be 0 or 1");
  }
}

void check_arms(const Eigen::MatrixXd& col, int fold, const char* name) {
  bool has0 = false;
  bool has1 = false;
  for (Eigen::Index i = 0; i < col.rows(); ++i) (col(i, 0) == 1.0 ? has1 : has0) = true;
  if (!has0 || !has1) {
    throw_input("training complement of fold " + std::to_string(fold + 1) + " lacks " +
                (has0 ? "treated" : "untreated") + " rows of " + name + "; cannot cross-fit");
  }
}

Eigen::VectorXd indicator(const Eigen::MatrixXd& col, double value) {
  return (col.col(0).array() == value).cast<double>();
}

// KRR fits of 1{D = 0} and 1{D = 1} sharing one eigendecomposition.
std::array<Eigen::VectorXd, 2> propensity_weights(const Eigen::MatrixXd& K, const Eigen::MatrixXd& D,
                                                  const TuningOptions& tuning) {
  const SpectralTuner tuner(K);
  std::array<Eigen::VectorXd, 2> out;
  for (int a = 0; a < 2; ++a) {
    const Eigen::VectorXd target = indicator(D, a);
    const double lambda = tuner.tune(target, tuning.grid, tuning.criterion).lambda;
    out[a] = solve_regularized(K, target, lambda).alpha;
  }
  return out;
}

void check_propensity(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw_input("propensity " + std::to_string(p) + " lies outside (0, 1); trim before use");
  }
}

void check_partition(const FoldPartition& folds, Eigen::Index n) {
  if (folds.n != n || folds.assignment.size() != static_cast<std::size_t>(n)) {
    throw_input("fold partition covers " + std::to_string(folds.n) + " rows but the data has " + std::to_string(n));
  }
  if (folds.L < 2) throw_config("cross-fitting needs at least 2 folds");
  std::vector<Eigen::Index> sizes(static_cast<std::size_t>(folds.L), 0);
  for (int f : folds.assignment) {
    if (f < 0 || f >= folds.L) throw_input("fold label " + std::to_string(f) + " out of range");
    ++sizes[static_cast<std::size_t>(f)];
  }
  for (int f = 0; f < folds.L; ++f) {
    if (sizes[static_cast<std::size_t>(f)] == 0) throw_input("fold " + std::to_string(f + 1) + " is empty");
  }
}

std::vector<InferenceResult> collect(const std::vector<Eigen::VectorXd>& psi, double level) {
  std::vector<InferenceResult> out;
  out.reserve(psi.size());
  for (const auto& p : psi) out.push_back(summarize_moments(p, level));
  return out;
}

}  // namespace

std::vector<Eigen::Index> FoldPartition::test_rows(int fold) const {
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (assignment[static_cast<std::size_t>(i)] == fold) out.push_back(i);
  }
  return out;
}

std::vector<Eigen::Index> FoldPartition::train_rows(int fold) const {
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (assignment[static_cast<std::size_t>(i)] != fold) out.push_back(i);
  }
  return out;
}

FoldPartition make_folds(Eigen::Index n, int L, std::uint64_t seed) {
  if (L < 2) throw_config("cross-fitting needs at least 2 folds");
  if (n < 2 * static_cast<Eigen::Index>(L)) {
    throw_input("cross-fitting with " + std::to_string(L) + " folds needs at least " + std::to_string(2 * L) +
                " rows, got " + std::to_string(n));
  }
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  Rng rng = make_rng(seed, kFoldStream);
  std::shuffle(perm.begin(), perm.end(), rng);
  FoldPartition out;
  out.n = n;
  out.L = L;
  out.assignment.assign(static_cast<std::size_t>(n), 0);
  const Eigen::Index base = n / L;
  const Eigen::Index extra = n % L;
  Eigen::Index pos = 0;
  for (int f = 0; f < L; ++f) {
    const Eigen::Index size = base + (f < extra ? 1 : 0);
    for (Eigen::Index k = 0; k < size; ++k) out.assignment[static_cast<std::size_t>(perm[pos++])] = f;
  }
  return out;
}

double trim(double p) {
  if (!std::isfinite(p)) throw_input("cannot trim a non-finite propensity");
  return std::min(std::max(p, kPropensityFloor), kPropensityCeiling);
}

double psi_me(double d, double d_prime, const MediationNuisanceValues& nu, double y, double D) {
  check_propensity(nu.pi_d);
  check_propensity(nu.rho_d);
  check_propensity(nu.rho_dprime);
  const double on_dprime = D == d_prime ? 1.0 : 0.0;
  const double on_d = D == d ? 1.0 : 0.0;
  return nu.omega + on_dprime / nu.rho_dprime * nu.rho_d / nu.pi_d * (y - nu.gamma) +
         on_d / nu.pi_d * (nu.gamma - nu.omega);
}

double psi_gf(double d1, double d2, const TimeVaryingNuisanceValues& nu, double y, double D1, double D2) {
  check_propensity(nu.pi);
  check_propensity(nu.rho);
  const double on_d1 = D1 == d1 ? 1.0 : 0.0;
  const double on_both = on_d1 * (D2 == d2 ? 1.0 : 0.0);
  return nu.omega + on_both / (nu.pi * nu.rho) * (y - nu.gamma) + on_d1 / nu.pi * (nu.gamma - nu.omega);
}

InferenceResult summarize_moments(const Eigen::VectorXd& psi, double level) {
  const Eigen::Index n = psi.size();
  if (n < 1) throw_input("no moment values to summarize");
  const double z = critical_value(level);
  InferenceResult r;
  r.level = level;
  r.per_obs_psi = psi;
  r.theta_hat = psi.sum() / static_cast<double>(n);
  r.sigma_hat = std::sqrt((psi.array() - r.theta_hat).square().sum() / static_cast<double>(n));
  const double half = z * r.sigma_hat / std::sqrt(static_cast<double>(n));
  r.ci_low = r.theta_hat - half;
  r.ci_high = r.theta_hat + half;
  return r;
}

std::vector<InferenceResult> dml_mediation(const MediationData& data, const std::vector<TreatmentCell>& cells,
                                           const DmlOptions& options, const MediationKernelSettings& settings) {
  return dml_mediation(data, cells, make_folds(data.n(), options.folds, options.seed), options, settings);
}

std::vector<InferenceResult> dml_mediation(const MediationData& data, const std::vector<TreatmentCell>& cells,
                                           const FoldPartition& folds, const DmlOptions& options,
                                           const MediationKernelSettings& settings) {
  check_cells(cells);
  check_binary(data.d, "treatment");
  const Eigen::Index n = data.n();
  check_partition(folds, n);
  MediationKernelSettings fold_settings = settings;
  fold_settings.d = {ColumnSetting{ColumnKind::Discrete, std::nullopt}};
  MediationTuning tuning;
  tuning.options = options.tuning;

  std::vector<Eigen::VectorXd> psi(cells.size(), Eigen::VectorXd::Zero(n));
  parallel_for(static_cast<std::size_t>(folds.L), options.threads, [&](std::size_t f) {
    const int fold = static_cast<int>(f);
    const auto train = folds.train_rows(fold);
    const auto test = folds.test_rows(fold);
    const MediationData tr = data.rows(train);
    check_arms(tr.d, fold, "the treatment");
    const MediationData te = data.rows(test);

    const MediationModel model = fit_mediation(tr, resolve_kernels(tr, fold_settings), tuning);
    const Eigen::MatrixXd K_x = gram(model.kernels.x, model.X, te.x).entries;
    const Eigen::MatrixXd K_mx = gram(model.kernels.m, model.M, te.m).entries.cwiseProduct(K_x);

    const auto pi_alpha = propensity_weights(model.K_XX, tr.d, options.tuning);
    const auto rho_alpha = propensity_weights(model.K_MM.cwiseProduct(model.K_XX), tr.d, options.tuning);
    std::array<Eigen::VectorXd, 2> pi_hat, rho_hat;
    for (int a = 0; a < 2; ++a) {
      pi_hat[a] = K_x.transpose() * pi_alpha[a];
      rho_hat[a] = K_mx.transpose() * rho_alpha[a];
    }

    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto [d, dp] = cells[c];
      const Eigen::VectorXd gamma =
          K_mx.transpose() * model.outcome.alpha.cwiseProduct(kernel_column(model.kernels.d, model.D, dp));
      const Eigen::VectorXd omega = omega_hat_batch(model, d, dp, te.x);
      for (std::size_t k = 0; k < test.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        MediationNuisanceValues nu;
        nu.gamma = gamma(i);
        nu.omega = omega(i);
        nu.pi_d = trim(pi_hat[static_cast<int>(d)](i));
        nu.rho_d = trim(rho_hat[static_cast<int>(d)](i));
        nu.rho_dprime = trim(rho_hat[static_cast<int>(dp)](i));
        psi[c](test[k]) = psi_me(d, dp, nu, te.y(i), te.d(i, 0));
      }
    }
  });
  return collect(psi, options.level);
}

std::vector<InferenceResult> dml_time_varying(const TimeVaryingData& data, const std::vector<TreatmentCell>& cells,
                                              const DmlOptions& options,
                                              const TimeVaryingKernelSettings& settings) {
  return dml_time_varying(data, cells, make_folds(data.n(), options.folds, options.seed), options, settings);
}

std::vector<InferenceResult> dml_time_varying(const TimeVaryingData& data, const std::vector<TreatmentCell>& cells,
                                              const FoldPartition& folds, const DmlOptions& options,
                                              const TimeVaryingKernelSettings& settings) {
  check_cells(cells);
  check_binary(data.d1, "first-period treatment");
  check_binary(data.d2, "second-period treatment");
  const Eigen::Index n = data.n();
  check_partition(folds, n);
  TimeVaryingKernelSettings fold_settings = settings;
  fold_settings.d1 = {ColumnSetting{ColumnKind::Discrete, std::nullopt}};
  fold_settings.d2 = {ColumnSetting{ColumnKind::Discrete, std::nullopt}};
  TimeVaryingTuning tuning;
  tuning.options = options.tuning;

  std::vector<Eigen::VectorXd> psi(cells.size(), Eigen::VectorXd::Zero(n));
  parallel_for(static_cast<std::size_t>(folds.L), options.threads, [&](std::size_t f) {
    const int fold = static_cast<int>(f);
    const auto train = folds.train_rows(fold);
    const auto test = folds.test_rows(fold);
    const TimeVaryingData tr = data.rows(train);
    check_arms(tr.d1, fold, "the first-period treatment");
    check_arms(tr.d2, fold, "the second-period treatment");
    const TimeVaryingData te = data.rows(test);

    const TimeVaryingModel model = fit_gf(tr, resolve_kernels(tr, fold_settings), tuning);
    const Eigen::MatrixXd K_x1 = gram(model.kernels.x1, model.X1, te.x1).entries;
    const Eigen::MatrixXd K_x12 = gram(model.kernels.x2, model.X2, te.x2).entries.cwiseProduct(K_x1);

    const auto pi_alpha = propensity_weights(model.K_X1, tr.d1, options.tuning);
    const auto rho_alpha =
        propensity_weights(model.K_D1.cwiseProduct(model.K_X1).cwiseProduct(model.K_X2), tr.d2, options.tuning);

    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto [d1, d2] = cells[c];
      const Eigen::VectorXd k_d1 = kernel_column(model.kernels.d1, model.D1, d1);
      const Eigen::VectorXd k_d2 = kernel_column(model.kernels.d2, model.D2, d2);
      const Eigen::VectorXd gamma = K_x12.transpose() * model.outcome.alpha.cwiseProduct(k_d1).cwiseProduct(k_d2);
      const Eigen::VectorXd omega = omega_hat_batch(model, d1, d2, te.x1);
      const Eigen::VectorXd pi_hat = K_x1.transpose() * pi_alpha[static_cast<int>(d1)];
      const Eigen::VectorXd rho_hat = K_x12.transpose() * rho_alpha[static_cast<int>(d2)].cwiseProduct(k_d1);
      for (std::size_t k = 0; k < test.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        TimeVaryingNuisanceValues nu;
        nu.gamma = gamma(i);
        nu.omega = omega(i);
        nu.pi = trim(pi_hat(i));
        nu.rho = trim(rho_hat(i));
        psi[c](test[k]) = psi_gf(d1, d2, nu, te.y(i), te.d1(i, 0), te.d2(i, 0));
      }
    }
  });
  return collect(psi, options.level);
}

InferenceResult dml_estimate(const MediationData& data, TreatmentCell cell, const DmlOptions& options,
                             const MediationKernelSettings& settings) {
  return dml_mediation(data, {cell}, options, settings).front();
}

InferenceResult dml_estimate(const TimeVaryingData& data, TreatmentCell cell, const DmlOptions& options,
                             const TimeVaryingKernelSettings& settings) {
  return dml_time_varying(data, {cell}, options, settings).front();
}

}  // namespace seqkernel
