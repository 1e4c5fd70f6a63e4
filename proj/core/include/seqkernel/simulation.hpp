#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "seqkernel/dr_inference.hpp"
#include "seqkernel/mediation.hpp"
#include "seqkernel/timevarying.hpp"

namespace seqkernel {

// h1: continuous mediation, h2: binary-treatment mediation,
// h3: continuous time-varying, h4: binary time-varying.
enum class DgpTag { H1, H2, H3, H4 };

DgpTag parse_dgp(const std::string& tag);
std::string dgp_name(DgpTag tag);
bool is_mediation(DgpTag tag);
bool has_binary_treatment(DgpTag tag);

struct TruthFn {
  DgpTag tag;
  // (d, d') for mediation designs, (d1, d2) for time-varying designs.
  double operator()(double a, double b) const;
};

struct SimulatedDataset {
  DgpTag tag = DgpTag::H1;
  Eigen::Index n = 0;
  int p = 1;
  std::uint64_t seed = 0;
  std::variant<MediationData, TimeVaryingData> data;

  const MediationData& mediation() const;
  const TimeVaryingData& time_varying() const;
  TruthFn truth() const { return {tag}; }
};

SimulatedDataset dgp_mediation_np(Eigen::Index n, std::uint64_t seed);
SimulatedDataset dgp_mediation_sp(Eigen::Index n, std::uint64_t seed);
SimulatedDataset dgp_tv_np(Eigen::Index n, int p, std::uint64_t seed);
SimulatedDataset dgp_tv_sp(Eigen::Index n, int p, std::uint64_t seed);
SimulatedDataset simulate(DgpTag tag, Eigen::Index n, int p, std::uint64_t seed);

// Truncated logistic link 0.8 * logistic(t) + 0.1.
double truncated_logistic(double t);
// beta_j = j^{-2}.
Eigen::VectorXd design_beta(int p);
// Tridiagonal covariance: 1 on the diagonal, 0.5 next to it.
Eigen::MatrixXd design_sigma(int p);

// Analytic nuisances of h2 and h4 at every observation.
std::vector<MediationNuisanceValues> true_nuisances(const MediationData& data, double d, double d_prime);
std::vector<TimeVaryingNuisanceValues> true_nuisances(const TimeVaryingData& data, double d1, double d2);

using GridPoint = std::pair<double, double>;

// 5 x 5 grids: [-1, 1]^2 for mediation designs, [0, 1]^2 for time-varying ones.
std::vector<GridPoint> default_mse_grid(DgpTag tag);

enum class Estimator { Rkhs, Truth, Oracle };
Estimator parse_estimator(const std::string& tag);
std::string estimator_name(Estimator e);

struct MseRow {
  Eigen::Index n = 0;
  int rep = 0;
  double mse = 0.0;
  double sup_error = 0.0;
};

struct MseSummary {
  Eigen::Index n = 0;
  double median_mse = 0.0;
  double mean_mse = 0.0;
  double median_sup_error = 0.0;
};

struct MseTable {
  std::vector<MseRow> rows;
  std::vector<MseSummary> summary;
};

struct StudyOptions {
  int p = 1;
  int threads = 1;
  TuningOptions tuning;
  int folds = 5;
};

// Replication r draws its data from stream_seed(seed, r).
MseTable run_mse(DgpTag tag, Estimator estimator, const std::vector<Eigen::Index>& n_list, int reps,
                 const std::vector<GridPoint>& grid, std::uint64_t seed, const StudyOptions& options = {});

struct CoverageRow {
  Eigen::Index n = 0;
  double a = 0.0;  // d or d1
  double b = 0.0;  // d' or d2
  double truth = 0.0;
  double mean_estimate = 0.0;
  double sd_estimate = 0.0;
  double se_estimate = 0.0;  // sd / sqrt(reps)
  double coverage = 0.0;
  double mean_ci_width = 0.0;
};

struct CoverageRep {
  Eigen::Index n = 0;
  int rep = 0;
  double a = 0.0;
  double b = 0.0;
  double theta = 0.0;
  double sigma = 0.0;
  double ci_width = 0.0;
  bool covered = false;
};

struct CoverageTable {
  std::vector<CoverageRow> rows;
  std::vector<CoverageRep> reps;
};

// Cells in the order (0,0), (1,0), (0,1), (1,1).
std::vector<TreatmentCell> coverage_cells();

// Estimator::Rkhs cross-fits kernel nuisances; Estimator::Oracle plugs in the
// analytic nuisances so intervals reflect only the moment's own variance.
CoverageTable run_coverage(DgpTag tag, const std::vector<Eigen::Index>& n_list, int reps, double level,
                           std::uint64_t seed, Estimator estimator = Estimator::Rkhs,
                           const StudyOptions& options = {});

}  // namespace seqkernel
