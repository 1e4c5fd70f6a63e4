#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "seqkernel/mediation.hpp"
#include "seqkernel/ridge.hpp"
#include "seqkernel/timevarying.hpp"

namespace seqkernel {

struct FoldPartition {
  Eigen::Index n = 0;
  int L = 0;
  std::vector<int> assignment;  // fold index per row

  std::vector<Eigen::Index> test_rows(int fold) const;
  std::vector<Eigen::Index> train_rows(int fold) const;
};

// Seeded shuffle cut into contiguous blocks; the first n mod L folds get one extra row.
FoldPartition make_folds(Eigen::Index n, int L, std::uint64_t seed);

inline constexpr double kPropensityFloor = 0.05;
inline constexpr double kPropensityCeiling = 0.95;

double trim(double p);

// Nuisance values at one observation for the mediation cell (d, d').
struct MediationNuisanceValues {
  double gamma = 0.0;       // gamma(d', M, X)
  double omega = 0.0;       // omega(d, d'; X)
  double pi_d = 0.5;        // pi(d; X)
  double rho_d = 0.5;       // rho(d; M, X)
  double rho_dprime = 0.5;  // rho(d'; M, X)
};

// Nuisance values at one observation for the time-varying cell (d1, d2).
struct TimeVaryingNuisanceValues {
  double gamma = 0.0;  // gamma(d1, d2, X1, X2)
  double omega = 0.0;  // omega(d1, d2; X1)
  double pi = 0.5;     // pi(d1; X1)
  double rho = 0.5;    // rho(d2; d1, X1, X2)
};

double psi_me(double d, double d_prime, const MediationNuisanceValues& nu, double y, double D);
double psi_gf(double d1, double d2, const TimeVaryingNuisanceValues& nu, double y, double D1, double D2);

struct InferenceResult {
  double theta_hat = 0.0;
  double sigma_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double level = 0.95;
  Eigen::VectorXd per_obs_psi;
};

// theta = mean(psi), sigma^2 = mean((psi - theta)^2), CI theta +- z sigma / sqrt(n).
InferenceResult summarize_moments(const Eigen::VectorXd& psi, double level);

struct DmlOptions {
  int folds = 5;
  double level = 0.95;
  std::uint64_t seed = 0;
  TuningOptions tuning;
  int threads = 1;
};

using TreatmentCell = std::pair<double, double>;

enum class DmlKind { Mediation, TimeVarying };

// Covariate and mediator columns may carry settings; treatments always use
// the indicator kernel.
std::vector<InferenceResult> dml_mediation(const MediationData& data, const std::vector<TreatmentCell>& cells,
                                           const DmlOptions& options,
                                           const MediationKernelSettings& settings = {});
std::vector<InferenceResult> dml_time_varying(const TimeVaryingData& data, const std::vector<TreatmentCell>& cells,
                                              const DmlOptions& options,
                                              const TimeVaryingKernelSettings& settings = {});

// Cross-fit over a caller-supplied partition; options.folds and options.seed are unused.
std::vector<InferenceResult> dml_mediation(const MediationData& data, const std::vector<TreatmentCell>& cells,
                                           const FoldPartition& folds, const DmlOptions& options,
                                           const MediationKernelSettings& settings = {});
std::vector<InferenceResult> dml_time_varying(const TimeVaryingData& data, const std::vector<TreatmentCell>& cells,
                                              const FoldPartition& folds, const DmlOptions& options,
                                              const TimeVaryingKernelSettings& settings = {});

InferenceResult dml_estimate(const MediationData& data, TreatmentCell cell, const DmlOptions& options,
                             const MediationKernelSettings& settings = {});
InferenceResult dml_estimate(const TimeVaryingData& data, TreatmentCell cell, const DmlOptions& options,
                             const TimeVaryingKernelSettings& settings = {});

}  // namespace seqkernel
