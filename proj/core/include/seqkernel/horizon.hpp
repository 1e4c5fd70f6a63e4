#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "seqkernel/kernels.hpp"
#include "seqkernel/ridge.hpp"

namespace seqkernel {

// T periods of treatments D_t (n x 1) and covariate blocks X_t.
struct HorizonData {
  Eigen::VectorXd y;
  std::vector<Eigen::MatrixXd> d;
  std::vector<Eigen::MatrixXd> x;
  bool markov = false;

  std::size_t periods() const { return d.size(); }
  Eigen::Index n() const { return y.size(); }
};

struct HorizonKernels {
  std::vector<KernelSpec> d;
  std::vector<KernelSpec> x;
};

HorizonKernels resolve_kernels(const HorizonData& data,
                               const std::vector<std::vector<ColumnSetting>>& d_settings = {},
                               const std::vector<std::vector<ColumnSetting>>& x_settings = {});

struct HorizonTuning {
  TuningOptions options;
  Penalty outcome;
  Penalty stage;  // every embedding stage, matrix target K_XtXt
};

// Stage t (t = 2..T) embeds X_t given treatments and covariate history:
// D_{1:t-1}, X_{1:t-1} in general, D_{t-1}, X_{t-1} under the Markov flag.
struct HorizonModel {
  std::size_t T = 0;
  bool markov = false;
  HorizonKernels kernels;
  std::vector<Eigen::MatrixXd> D;
  Eigen::VectorXd Y;
  double lambda = 0.0;
  std::vector<double> stage_lambda;  // index t - 2
  RidgeFit outcome;

  Eigen::MatrixXd Q;                   // K_XT Phi_T^{-1}
  std::vector<Eigen::MatrixXd> P;      // Phi_t^{-1}, t = 2..T-1 (index t - 2)
  std::vector<Eigen::MatrixXd> K_X;    // K_XtXt for t = 2..T-1 (index t - 2)
  std::vector<Eigen::MatrixXd> K_H;    // history Gram for t = 3..T (index t - 3)
  Eigen::MatrixXd S;                   // K_X1X1 K_X1X1

  Eigen::Index n() const { return Y.size(); }
  // Treatment periods that stage t conditions on (1-based).
  std::vector<std::size_t> treatment_history(std::size_t t) const;
};

HorizonModel fit_horizon(const HorizonData& data, const HorizonKernels& kernels, const HorizonTuning& tuning = {});

double theta_gf_T(const HorizonModel& model, std::span<const double> d_path);
double theta_gf_T(const HorizonData& data, std::span<const double> d_path);

}  // namespace seqkernel
