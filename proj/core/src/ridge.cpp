#include "seqkernel/ridge.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "seqkernel/errors.hpp"

namespace seqkernel {

namespace {

void check_system(const Eigen::MatrixXd& K, Eigen::Index y_rows, double lambda) {
  if (K.rows() != K.cols()) throw_input("Gram matrix must be square");
  if (y_rows != K.rows()) {
    throw_input("target has " + std::to_string(y_rows) + " rows, Gram matrix has " +
                std::to_string(K.rows()));
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw_config("ridge penalty must be finite and >= 0");
}

TuneResult pick(const std::vector<double>& grid, std::vector<double> scores) {
  TuneResult out;
  out.grid = grid;
  out.scores = std::move(scores);
  double best = std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double s = out.scores[i];
    if (!std::isfinite(s)) continue;
    if (!found || s < best || (s == best && grid[i] > out.lambda)) {
      best = s;
      out.lambda = grid[i];
      found = true;
    }
  }
  if (!found) throw_numerical("every penalty on the grid produced a non-finite score");
  return out;
}

void check_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw_config("penalty grid is empty");
  for (double g : grid) {
    if (!(g > 0.0) || !std::isfinite(g)) throw_config("penalty grid values must be positive");
  }
}

}  // namespace

RidgeFit solve_regularized(const Eigen::MatrixXd& K, const Eigen::VectorXd& Y, double lambda) {
  check_system(K, Y.size(), lambda);
  RidgeFit fit;
  fit.n = K.rows();
  fit.lambda = lambda;
  auto factor = std::make_shared<RegularizedFactor>(K, static_cast<double>(fit.n) * lambda);
  fit.alpha = factor->solve(Y);
  fit.jitter_used = factor->jitter();
  fit.factorization = std::move(factor);
  if (!fit.alpha.allFinite()) throw_numerical("ridge solve produced non-finite weights");
  return fit;
}

double predict(const RidgeFit& fit, const Eigen::VectorXd& k_vec) {
  if (k_vec.size() != fit.alpha.size()) throw_input("predict: kernel vector length mismatch");
  return fit.alpha.dot(k_vec);
}

SpectralTuner::SpectralTuner(const Eigen::MatrixXd& K) {
  if (K.rows() != K.cols()) throw_input("Gram matrix must be square");
  SymmetricEigen eig = eigen_symmetric(K);
  values_ = eig.values.cwiseMax(0.0);
  vectors_ = std::move(eig.vectors);
  vectors_sq_ = vectors_.cwiseAbs2();
}

Eigen::VectorXd SpectralTuner::shrink(double lambda) const {
  const double nl = static_cast<double>(values_.size()) * lambda;
  return (values_.array() + nl).inverse() * nl;
}

Eigen::VectorXd SpectralTuner::h_diag(const Eigen::VectorXd& h) const { return vectors_sq_ * h; }

double SpectralTuner::score(const Eigen::VectorXd& Y, double lambda, Criterion criterion) const {
  if (Y.size() != values_.size()) throw_input("tuning target length mismatch");
  if (!(lambda >= 0.0)) throw_config("ridge penalty must be >= 0");
  const double n = static_cast<double>(values_.size());
  const Eigen::VectorXd h = shrink(lambda);
  const Eigen::VectorXd hy = vectors_ * h.cwiseProduct(vectors_.transpose() * Y);
  if (criterion == Criterion::Gcv) {
    const double tr = h.sum();
    if (tr == 0.0) throw_numerical("GCV undefined: trace of H is zero");
    return hy.squaredNorm() / (tr * tr) / n;
  }
  const Eigen::VectorXd d = h_diag(h);
  if ((d.array() == 0.0).any()) throw_numerical("LOOCV undefined: zero diagonal entry in H (degenerate penalty)");
  return hy.cwiseQuotient(d).squaredNorm() / n;
}

double SpectralTuner::score_matrix(const Eigen::MatrixXd& F, double lambda, Criterion criterion) const {
  if (F.rows() != values_.size()) throw_input("tuning target row mismatch");
  const double n = static_cast<double>(values_.size());
  const Eigen::VectorXd h = shrink(lambda);
  const Eigen::MatrixXd P = vectors_.transpose() * F;
  const Eigen::MatrixXd Z = vectors_ * (h.asDiagonal() * P);
  const Eigen::MatrixXd S = F.transpose() * F;
  const Eigen::VectorXd row_sq = (Z * S).cwiseProduct(Z).rowwise().sum();
  if (criterion == Criterion::Gcv) {
    const double tr = h.sum();
    if (tr == 0.0) throw_numerical("GCV undefined: trace of H is zero");
    return row_sq.sum() / (tr * tr) / n;
  }
  const Eigen::VectorXd d = h_diag(h);
  if ((d.array() == 0.0).any()) throw_numerical("LOOCV undefined: zero diagonal entry in H (degenerate penalty)");
  return (row_sq.array() / d.array().square()).sum() / n;
}

TuneResult SpectralTuner::tune(const Eigen::VectorXd& Y, const std::vector<double>& grid,
                               Criterion criterion) const {
  check_grid(grid);
  if (Y.size() != values_.size()) throw_input("tuning target length mismatch");
  const double n = static_cast<double>(values_.size());
  const Eigen::VectorXd uy = vectors_.transpose() * Y;
  std::vector<double> scores;
  scores.reserve(grid.size());
  for (double lambda : grid) {
    const Eigen::VectorXd h = shrink(lambda);
    const Eigen::VectorXd hy = vectors_ * h.cwiseProduct(uy);
    double s;
    if (criterion == Criterion::Gcv) {
      const double tr = h.sum();
      s = hy.squaredNorm() / (tr * tr) / n;
    } else {
      s = hy.cwiseQuotient(h_diag(h)).squaredNorm() / n;
    }
    scores.push_back(s);
  }
  return pick(grid, std::move(scores));
}

TuneResult SpectralTuner::tune_matrix(const Eigen::MatrixXd& K_target, const std::vector<double>& grid,
                                      Criterion criterion) const {
  check_grid(grid);
  if (K_target.rows() != values_.size() || K_target.cols() != values_.size()) {
    throw_input("embedding target Gram has the wrong shape");
  }
  const double n = static_cast<double>(values_.size());
  const Eigen::MatrixXd F = low_rank_factor(K_target);
  const Eigen::MatrixXd P = vectors_.transpose() * F;
  const Eigen::MatrixXd S = F.transpose() * F;
  std::vector<double> scores;
  scores.reserve(grid.size());
  for (double lambda : grid) {
    const Eigen::VectorXd h = shrink(lambda);
    const Eigen::MatrixXd Z = vectors_ * (h.asDiagonal() * P);
    const Eigen::VectorXd row_sq = (Z * S).cwiseProduct(Z).rowwise().sum();
    double s;
    if (criterion == Criterion::Gcv) {
      const double tr = h.sum();
      s = row_sq.sum() / (tr * tr) / n;
    } else {
      s = (row_sq.array() / h_diag(h).array().square()).sum() / n;
    }
    scores.push_back(s);
  }
  return pick(grid, std::move(scores));
}

double loocv_score(const Eigen::MatrixXd& K, const Eigen::VectorXd& Y, double lambda) {
  check_system(K, Y.size(), lambda);
  return SpectralTuner(K).score(Y, lambda, Criterion::Loocv);
}

double gcv_score(const Eigen::MatrixXd& K, const Eigen::VectorXd& Y, double lambda) {
  check_system(K, Y.size(), lambda);
  return SpectralTuner(K).score(Y, lambda, Criterion::Gcv);
}

std::vector<double> logspace_grid(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 1) throw_config("invalid log-spaced grid bounds");
  std::vector<double> out;
  if (count == 1) return {lo};
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (int i = 0; i < count; ++i) out.push_back(std::pow(10.0, a + (b - a) * i / (count - 1)));
  return out;
}

std::vector<double> default_lambda_grid() { return logspace_grid(1e-6, 1.0, 30); }

double tune_lambda(const Eigen::MatrixXd& K, const Eigen::VectorXd& Y, const std::vector<double>& grid,
                   Criterion criterion) {
  check_grid(grid);
  check_system(K, Y.size(), grid.front());
  return SpectralTuner(K).tune(Y, grid, criterion).lambda;
}

double tune_lambda_matrix(const Eigen::MatrixXd& K, const Eigen::MatrixXd& K_target,
                          const std::vector<double>& grid, Criterion criterion) {
  check_grid(grid);
  return SpectralTuner(K).tune_matrix(K_target, grid, criterion).lambda;
}

double schedule_lambda(double n, double b, double c) {
  if (!(n >= 1.0)) throw_config("schedule_lambda: n must be >= 1");
  if (!(b >= 1.0)) throw_config("schedule_lambda: b must be >= 1");
  if (!(c > 1.0 && c <= 2.0)) throw_config("schedule_lambda: c must lie in (1, 2]");
  return std::pow(n, -1.0 / (c + 1.0 / b));
}

double resolve_penalty(const Penalty& p, const Eigen::MatrixXd& K, const Eigen::VectorXd& Y,
                       const TuningOptions& opts) {
  switch (p.mode) {
    case Penalty::Mode::Fixed:
      if (!(p.value > 0.0)) throw_config("fixed penalty must be positive");
      return p.value;
    case Penalty::Mode::Schedule:
      return schedule_lambda(static_cast<double>(K.rows()), p.b, p.c);
    case Penalty::Mode::Tune:
      break;
  }
  return tune_lambda(K, Y, opts.grid, opts.criterion);
}

double resolve_penalty_matrix(const Penalty& p, const Eigen::MatrixXd& K, const Eigen::MatrixXd& K_target,
                              const TuningOptions& opts) {
  switch (p.mode) {
    case Penalty::Mode::Fixed:
      if (!(p.value > 0.0)) throw_config("fixed penalty must be positive");
      return p.value;
    case Penalty::Mode::Schedule:
      return schedule_lambda(static_cast<double>(K.rows()), p.b, p.c);
    case Penalty::Mode::Tune:
      break;
  }
  return tune_lambda_matrix(K, K_target, opts.grid, opts.criterion);
}

}  // namespace seqkernel
