#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "seqkernel/embeddings.hpp"
#include "seqkernel/kernels.hpp"
#include "seqkernel/ridge.hpp"

namespace seqkernel {

struct MediationData {
  Eigen::VectorXd y;
  Eigen::MatrixXd d;  // n x 1
  Eigen::MatrixXd m;
  Eigen::MatrixXd x;

  Eigen::Index n() const { return y.size(); }
  MediationData rows(const std::vector<Eigen::Index>& idx) const;
};

struct MediationKernels {
  KernelSpec d;
  KernelSpec m;
  KernelSpec x;
};

struct MediationKernelSettings {
  std::vector<ColumnSetting> d;
  std::vector<ColumnSetting> m;
  std::vector<ColumnSetting> x;
};

MediationKernels resolve_kernels(const MediationData& data, const MediationKernelSettings& settings = {});

struct MediationTuning {
  TuningOptions options;
  Penalty outcome;    // lambda
  Penalty embedding;  // lambda_1, matrix target K_MM
};

struct MediationModel {
  MediationKernels kernels;
  Eigen::MatrixXd D, M, X;
  Eigen::VectorXd Y;
  Eigen::MatrixXd K_DD, K_MM, K_XX;
  double lambda = 0.0;
  double lambda1 = 0.0;
  RidgeFit outcome;                   // over K_DD . K_MM . K_XX
  ConditionalEmbeddingFit embedding;  // over K_DD . K_XX
  Eigen::MatrixXd A;                  // (K_MM (K_DD.K_XX + n lambda_1 I)^{-1}) . K_XX^2 / n

  Eigen::Index n() const { return Y.size(); }
};

MediationModel fit_mediation(const MediationData& data, const MediationKernels& kernels,
                             const MediationTuning& tuning = {});

// gamma(d, m, x) from the outcome regression.
double gamma_hat(const MediationModel& model, double d, std::span<const double> m, std::span<const double> x);

// Partial mean omega(d, d'; x): gamma(d', ., x) integrated against the
// embedding of M given (d, x). d sets the mediator, d' the outcome treatment.
double omega_hat(const MediationModel& model, double d, double d_prime, std::span<const double> x);
Eigen::VectorXd omega_hat_batch(const MediationModel& model, double d, double d_prime,
                                const Eigen::MatrixXd& Xq);

// K_Dd' . (A K_Dd): theta_me is alpha . v.
Eigen::VectorXd mediation_vector(const MediationModel& model, double d, double d_prime);

double theta_me(const MediationModel& model, double d, double d_prime);
// Entry (i, j) is theta_me(d[i], d_prime[j]), from one matrix product.
Eigen::MatrixXd theta_me_surface(const MediationModel& model, const std::vector<double>& d,
                                 const std::vector<double>& d_prime);
double theta_me_grad(const MediationModel& model, double d, double d_prime);
// theta_me with both treatment slots set to d.
double theta_me_diagonal(const MediationModel& model, double d);

struct Decomposition {
  double me = 0.0;        // ME(d, d')
  double me_dd = 0.0;     // ME(d, d)
  double me_dpdp = 0.0;   // ME(d', d')
  double te = 0.0;
  double de = 0.0;
  double ie = 0.0;
};

// TE = ME(d',d') - ME(d,d), IE = ME(d',d') - ME(d,d'), DE = ME(d,d') - ME(d,d).
Decomposition decompose(const MediationModel& model, double d, double d_prime);
Decomposition decompose_values(double me, double me_dd, double me_dpdp);

}  // namespace seqkernel
