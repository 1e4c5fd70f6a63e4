#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "seqkernel/embeddings.hpp"
#include "seqkernel/kernels.hpp"
#include "seqkernel/ridge.hpp"

namespace seqkernel {

struct TimeVaryingData {
  Eigen::VectorXd y;
  Eigen::MatrixXd d1;  // n x 1
  Eigen::MatrixXd d2;  // n x 1
  Eigen::MatrixXd x1;
  Eigen::MatrixXd x2;

  Eigen::Index n() const { return y.size(); }
  TimeVaryingData rows(const std::vector<Eigen::Index>& idx) const;
};

// Covariate law of the alternative population used for distribution shift.
struct AltPopulation {
  Eigen::MatrixXd d1;
  Eigen::MatrixXd x1;
  Eigen::MatrixXd x2;

  Eigen::Index n() const { return d1.rows(); }
};

struct TimeVaryingKernels {
  KernelSpec d1;
  KernelSpec d2;
  KernelSpec x1;
  KernelSpec x2;
};

struct TimeVaryingKernelSettings {
  std::vector<ColumnSetting> d1;
  std::vector<ColumnSetting> d2;
  std::vector<ColumnSetting> x1;
  std::vector<ColumnSetting> x2;
};

TimeVaryingKernels resolve_kernels(const TimeVaryingData& data, const TimeVaryingKernelSettings& settings = {});

// Which sample size multiplies lambda_5 in the alternative-population ridge system.
enum class AltPenaltyScale { AltSampleSize, SourceSampleSize };

struct TimeVaryingTuning {
  TuningOptions options;
  Penalty outcome;        // lambda
  Penalty embedding;      // lambda_4, target K_X2X2
  Penalty alt_embedding;  // lambda_5, target on the alternative sample
  AltPenaltyScale alt_scale = AltPenaltyScale::AltSampleSize;
};

struct AltState {
  AltPopulation data;
  Eigen::MatrixXd K_D1;        // alt x alt
  Eigen::MatrixXd K_X1;        // alt x alt
  Eigen::MatrixXd K_X1_cross;  // source x alt
  Eigen::MatrixXd K_X2_cross;  // source x alt
  double lambda5 = 0.0;
  ConditionalEmbeddingFit embedding;
  Eigen::MatrixXd A;  // (K_X2_cross Phi5^{-1}) . (K_X1_cross K_X1) / alt_n
};

struct TimeVaryingModel {
  TimeVaryingKernels kernels;
  Eigen::MatrixXd D1, D2, X1, X2;
  Eigen::VectorXd Y;
  Eigen::MatrixXd K_D1, K_D2, K_X1, K_X2;
  double lambda = 0.0;
  double lambda4 = 0.0;
  RidgeFit outcome;                   // over the 4-way product
  ConditionalEmbeddingFit embedding;  // over K_D1 . K_X1
  Eigen::MatrixXd A;                  // (K_X2 Phi4^{-1}) . K_X1^2 / n
  std::optional<AltState> alt;

  Eigen::Index n() const { return Y.size(); }
};

TimeVaryingModel fit_gf(const TimeVaryingData& data, const TimeVaryingKernels& kernels,
                        const TimeVaryingTuning& tuning = {},
                        const std::optional<AltPopulation>& alt = std::nullopt);

double gamma_hat(const TimeVaryingModel& model, double d1, double d2, std::span<const double> x1,
                 std::span<const double> x2);

// omega(d1, d2; x1): gamma integrated over the embedding of X2 given (d1, x1).
double omega_hat(const TimeVaryingModel& model, double d1, double d2, std::span<const double> x1);
Eigen::VectorXd omega_hat_batch(const TimeVaryingModel& model, double d1, double d2,
                                const Eigen::MatrixXd& X1q);

// K_D1d1 . K_D2d2 . (A K_D1d1).
Eigen::VectorXd gf_vector(const TimeVaryingModel& model, double d1, double d2);
Eigen::VectorXd ds_vector(const TimeVaryingModel& model, double d1, double d2);

double theta_gf(const TimeVaryingModel& model, double d1, double d2);
// Entry (i, j) is theta_gf(d1[i], d2[j]) (theta_ds for the second form).
Eigen::MatrixXd theta_gf_surface(const TimeVaryingModel& model, const std::vector<double>& d1,
                                 const std::vector<double>& d2);
Eigen::MatrixXd theta_ds_surface(const TimeVaryingModel& model, const std::vector<double>& d1,
                                 const std::vector<double>& d2);
double theta_gf_grad(const TimeVaryingModel& model, double d1, double d2);
double theta_ds(const TimeVaryingModel& model, double d1, double d2);
// Per alternative row partial means; theta_ds is their average.
Eigen::VectorXd omega_ds_rows(const TimeVaryingModel& model, double d1, double d2);

}  // namespace seqkernel
