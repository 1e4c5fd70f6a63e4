#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "seqkernel/linalg.hpp"

namespace seqkernel {

struct RidgeFit {
  Eigen::VectorXd alpha;
  double lambda = 0.0;
  Eigen::Index n = 0;
  std::shared_ptr<const RegularizedFactor> factorization;
  double jitter_used = 0.0;
};

// alpha = (K + n*lambda*I)^{-1} Y.
RidgeFit solve_regularized(const Eigen::MatrixXd& K, const Eigen::VectorXd& Y, double lambda);
double predict(const RidgeFit& fit, const Eigen::VectorXd& k_vec);

enum class Criterion { Loocv, Gcv };

// H = I - K (K + n*lambda*I)^{-1}.
// LOOCV: (1/n) |diag(H)^{-1} H Y|^2.   GCV: (1/n) |tr(H)^{-1} H Y|^2.
// GCV omits the usual 1/n inside the trace; this rescales every score by n^2
// and leaves the argmin unchanged.
double loocv_score(const Eigen::MatrixXd& K, const Eigen::VectorXd& Y, double lambda);
double gcv_score(const Eigen::MatrixXd& K, const Eigen::VectorXd& Y, double lambda);

std::vector<double> logspace_grid(double lo, double hi, int count);
// 30 log-spaced points on [1e-6, 1].
std::vector<double> default_lambda_grid();

struct TuneResult {
  double lambda = 0.0;
  std::vector<double> grid;
  std::vector<double> scores;
};

// Scores every grid value from one eigendecomposition of K. Matrix targets
// use the Frobenius form (1/n) |diag(H)^{-1} H K_target|_F^2.
class SpectralTuner {
 public:
  explicit SpectralTuner(const Eigen::MatrixXd& K);

  double score(const Eigen::VectorXd& Y, double lambda, Criterion criterion) const;
  double score_matrix(const Eigen::MatrixXd& target_factor, double lambda, Criterion criterion) const;

  TuneResult tune(const Eigen::VectorXd& Y, const std::vector<double>& grid, Criterion criterion) const;
  TuneResult tune_matrix(const Eigen::MatrixXd& K_target, const std::vector<double>& grid,
                         Criterion criterion) const;

  Eigen::Index size() const { return values_.size(); }

 private:
  Eigen::VectorXd shrink(double lambda) const;
  Eigen::VectorXd h_diag(const Eigen::VectorXd& h) const;

  Eigen::VectorXd values_;
  Eigen::MatrixXd vectors_;
  Eigen::MatrixXd vectors_sq_;
};

double tune_lambda(const Eigen::MatrixXd& K, const Eigen::VectorXd& Y, const std::vector<double>& grid,
                   Criterion criterion = Criterion::Loocv);
double tune_lambda_matrix(const Eigen::MatrixXd& K, const Eigen::MatrixXd& K_target,
                          const std::vector<double>& grid, Criterion criterion = Criterion::Loocv);

// n^{-1/(c + 1/b)}, b >= 1 (infinity allowed), c in (1, 2].
double schedule_lambda(double n, double b, double c);

// How one penalty is chosen: grid search, a fixed value, or the rate schedule.
struct Penalty {
  enum class Mode { Tune, Fixed, Schedule };
  Mode mode = Mode::Tune;
  double value = 0.0;
  double b = 0.0;
  double c = 0.0;

  static Penalty tuned() { return {}; }
  static Penalty fixed(double v) { return {Mode::Fixed, v, 0.0, 0.0}; }
  static Penalty schedule(double b, double c) { return {Mode::Schedule, 0.0, b, c}; }
};

struct TuningOptions {
  std::vector<double> grid = default_lambda_grid();
  Criterion criterion = Criterion::Loocv;
};

// Resolves a penalty for an outcome regression (vector target).
double resolve_penalty(const Penalty& p, const Eigen::MatrixXd& K, const Eigen::VectorXd& Y,
                       const TuningOptions& opts);
// Resolves a penalty for an embedding stage (matrix target).
double resolve_penalty_matrix(const Penalty& p, const Eigen::MatrixXd& K, const Eigen::MatrixXd& K_target,
                              const TuningOptions& opts);

}  // namespace seqkernel
