#include "seqkernel/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "seqkernel/errors.hpp"
#include "seqkernel/parallel.hpp"
#include "seqkernel/rng.hpp"

namespace seqkernel {

namespace {

constexpr std::uint64_t kDataStream = 0;

double h1_truth(double d, double dp) { return 0.3 * dp + 0.09 * d + 0.15 * d * dp + 0.25 * dp * dp * dp; }
double h3_truth(double d1, double d2) { return 0.6 * d1 + 0.5 * d1 * d1 + 1.2 * d2 + d2 * d2; }
double h4_truth(double d1, double d2) { return 1.1 * d1 + 2.2 * d2 + 0.5 * d1 * d2; }

void check_n(Eigen::Index n) {
  if (n < 1) throw_input("simulated sample size must be >= 1");
}

void check_p(int p) {
  if (p < 1) throw_input("covariate dimension must be >= 1");
}

SimulatedDataset mediation_design(Eigen::Index n, std::uint64_t seed, bool binary) {
  check_n(n);
  Rng rng = make_rng(seed, kDataStream);
  std::uniform_real_distribution<double> cov(-1.5, 1.5);
  std::uniform_real_distribution<double> noise(-2.0, 2.0);
  MediationData data{Eigen::VectorXd(n), Eigen::MatrixXd(n, 1), Eigen::MatrixXd(n, 1), Eigen::MatrixXd(n, 1)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = cov(rng);
    const double w = noise(rng);
    const double v = noise(rng);
    const double u = noise(rng);
    const double d = binary ? (0.3 * x + w > 0.0 ? 1.0 : 0.0) : 0.3 * x + w;
    const double m = 0.3 * d + 0.3 * x + v;
    data.y(i) = 0.3 * d + 0.3 * m + 0.5 * d * m + 0.3 * x + 0.25 * d * d * d + u;
    data.d(i, 0) = d;
    data.m(i, 0) = m;
    data.x(i, 0) = x;
  }
  SimulatedDataset out;
  out.tag = binary ? DgpTag::H2 : DgpTag::H1;
  out.n = n;
  out.p = 1;
  out.seed = seed;
  out.data = std::move(data);
  return out;
}

SimulatedDataset tv_design(Eigen::Index n, int p, std::uint64_t seed, bool binary) {
  check_n(n);
  check_p(p);
  Rng rng = make_rng(seed, kDataStream);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> nu(-2.0, 2.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Eigen::VectorXd beta = design_beta(p);
  const Eigen::MatrixXd L = design_sigma(p).llt().matrixL();
  TimeVaryingData data{Eigen::VectorXd(n), Eigen::MatrixXd(n, 1), Eigen::MatrixXd(n, 1), Eigen::MatrixXd(n, p),
                       Eigen::MatrixXd(n, p)};
  Eigen::VectorXd z(p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) z(j) = normal(rng);
    const Eigen::VectorXd x1 = L * z;
    const double s1 = x1.dot(beta);
    double d1;
    if (binary) {
      d1 = unit(rng) < truncated_logistic(s1) ? 1.0 : 0.0;
    } else {
      d1 = truncated_logistic(s1) + 0.75 * nu(rng);
    }
    for (int j = 0; j < p; ++j) z(j) = normal(rng);
    const Eigen::VectorXd x2 = 0.5 * (1.0 - d1) * x1 + 0.5 * (L * z);
    const double s2 = x2.dot(beta);
    const double index2 = 0.5 * s1 + s2 - 0.2 * d1;
    double d2;
    if (binary) {
      d2 = unit(rng) < truncated_logistic(index2) ? 1.0 : 0.0;
    } else {
      d2 = truncated_logistic(index2) + 0.75 * nu(rng);
    }
    const double eps = normal(rng);
    double y = 0.5 * (1.2 * d1 + 1.2 * s1 + d1 * d1 + d1 * x1(0)) + (1.2 * d2 + 1.2 * s2 + d2 * d2 + d2 * x2(0)) + eps;
    if (binary) y += 0.5 * d1 * d2;
    data.y(i) = y;
    data.d1(i, 0) = d1;
    data.d2(i, 0) = d2;
    data.x1.row(i) = x1.transpose();
    data.x2.row(i) = x2.transpose();
  }
  SimulatedDataset out;
  out.tag = binary ? DgpTag::H4 : DgpTag::H3;
  out.n = n;
  out.p = p;
  out.seed = seed;
  out.data = std::move(data);
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double uniform_density(double r) { return std::abs(r) < 2.0 ? 0.25 : 0.0; }

}  // namespace

DgpTag parse_dgp(const std::string& tag) {
  if (tag == "h1") return DgpTag::H1;
  if (tag == "h2") return DgpTag::H2;
  if (tag == "h3") return DgpTag::H3;
  if (tag == "h4") return DgpTag::H4;
  throw_input("unknown data-generating process '" + tag + "' (expected h1, h2, h3 or h4)");
}

std::string dgp_name(DgpTag tag) {
  switch (tag) {
    case DgpTag::H1: return "h1";
    case DgpTag::H2: return "h2";
    case DgpTag::H3: return "h3";
    case DgpTag::H4: return "h4";
  }
  return "h1";
}

bool is_mediation(DgpTag tag) { return tag == DgpTag::H1 || tag == DgpTag::H2; }
bool has_binary_treatment(DgpTag tag) { return tag == DgpTag::H2 || tag == DgpTag::H4; }

double TruthFn::operator()(double a, double b) const {
  switch (tag) {
    case DgpTag::H1:
    case DgpTag::H2: return h1_truth(a, b);
    case DgpTag::H3: return h3_truth(a, b);
    case DgpTag::H4: return h4_truth(a, b);
  }
  return 0.0;
}

const MediationData& SimulatedDataset::mediation() const {
  if (const auto* m = std::get_if<MediationData>(&data)) return *m;
  throw_input("dataset " + dgp_name(tag) + " is not a mediation design");
}

const TimeVaryingData& SimulatedDataset::time_varying() const {
  if (const auto* t = std::get_if<TimeVaryingData>(&data)) return *t;
  throw_input("dataset " + dgp_name(tag) + " is not a time-varying design");
}

SimulatedDataset dgp_mediation_np(Eigen::Index n, std::uint64_t seed) { return mediation_design(n, seed, false); }
SimulatedDataset dgp_mediation_sp(Eigen::Index n, std::uint64_t seed) { return mediation_design(n, seed, true); }
SimulatedDataset dgp_tv_np(Eigen::Index n, int p, std::uint64_t seed) { return tv_design(n, p, seed, false); }
SimulatedDataset dgp_tv_sp(Eigen::Index n, int p, std::uint64_t seed) { return tv_design(n, p, seed, true); }

SimulatedDataset simulate(DgpTag tag, Eigen::Index n, int p, std::uint64_t seed) {
  switch (tag) {
    case DgpTag::H1: return dgp_mediation_np(n, seed);
    case DgpTag::H2: return dgp_mediation_sp(n, seed);
    case DgpTag::H3: return dgp_tv_np(n, p, seed);
    case DgpTag::H4: return dgp_tv_sp(n, p, seed);
  }
  throw_input("unknown data-generating process");
}

double truncated_logistic(double t) { return 0.8 / (1.0 + std::exp(-t)) + 0.1; }

Eigen::VectorXd design_beta(int p) {
  check_p(p);
  Eigen::VectorXd beta(p);
  for (int j = 0; j < p; ++j) beta(j) = 1.0 / static_cast<double>((j + 1) * (j + 1));
  return beta;
}

Eigen::MatrixXd design_sigma(int p) {
  check_p(p);
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(p, p);
  for (int j = 0; j + 1 < p; ++j) s(j, j + 1) = s(j + 1, j) = 0.5;
  return s;
}

std::vector<MediationNuisanceValues> true_nuisances(const MediationData& data, double d, double d_prime) {
  std::vector<MediationNuisanceValues> out(static_cast<std::size_t>(data.n()));
  auto pi1 = [](double x) { return (2.0 + 0.3 * x) / 4.0; };
  auto rho = [&](double a, double m, double x) {
    const double p1 = pi1(x);
    const double f1 = p1 * uniform_density(m - 0.3 - 0.3 * x);
    const double f0 = (1.0 - p1) * uniform_density(m - 0.3 * x);
    const double r1 = f1 / (f1 + f0);
    return a == 1.0 ? r1 : 1.0 - r1;
  };
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double m = data.m(i, 0);
    const double x = data.x(i, 0);
    auto& nu = out[static_cast<std::size_t>(i)];
    nu.gamma = 0.3 * d_prime + 0.3 * m + 0.5 * d_prime * m + 0.3 * x + 0.25 * d_prime * d_prime * d_prime;
    nu.omega = 0.3 * d_prime + (0.3 + 0.5 * d_prime) * (0.3 * d + 0.3 * x) + 0.3 * x +
               0.25 * d_prime * d_prime * d_prime;
    nu.pi_d = trim(d == 1.0 ? pi1(x) : 1.0 - pi1(x));
    nu.rho_d = trim(rho(d, m, x));
    nu.rho_dprime = trim(rho(d_prime, m, x));
  }
  return out;
}

std::vector<TimeVaryingNuisanceValues> true_nuisances(const TimeVaryingData& data, double d1, double d2) {
  const int p = static_cast<int>(data.x1.cols());
  const Eigen::VectorXd beta = design_beta(p);
  std::vector<TimeVaryingNuisanceValues> out(static_cast<std::size_t>(data.n()));
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const Eigen::VectorXd x1 = data.x1.row(i).transpose();
    const Eigen::VectorXd x2 = data.x2.row(i).transpose();
    const double s1 = x1.dot(beta);
    const double s2 = x2.dot(beta);
    const double first = 0.5 * (1.2 * d1 + 1.2 * s1 + d1 * d1 + d1 * x1(0));
    auto& nu = out[static_cast<std::size_t>(i)];
    nu.gamma = first + (1.2 * d2 + 1.2 * s2 + d2 * d2 + d2 * x2(0)) + 0.5 * d1 * d2;
    const double shrink = 0.5 * (1.0 - d1);
    nu.omega = first + 1.2 * d2 + 1.2 * shrink * s1 + d2 * d2 + d2 * shrink * x1(0) + 0.5 * d1 * d2;
    const double p1 = truncated_logistic(s1);
    const double r1 = truncated_logistic(0.5 * s1 + s2 - 0.2 * d1);
    nu.pi = trim(d1 == 1.0 ? p1 : 1.0 - p1);
    nu.rho = trim(d2 == 1.0 ? r1 : 1.0 - r1);
  }
  return out;
}

std::vector<GridPoint> default_mse_grid(DgpTag tag) {
  const double lo = is_mediation(tag) ? -1.0 : 0.0;
  const double hi = 1.0;
  std::vector<GridPoint> out;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) out.emplace_back(lo + (hi - lo) * i / 4.0, lo + (hi - lo) * j / 4.0);
  }
  return out;
}

Estimator parse_estimator(const std::string& tag) {
  if (tag == "rkhs") return Estimator::Rkhs;
  if (tag == "truth") return Estimator::Truth;
  if (tag == "oracle") return Estimator::Oracle;
  throw_input("unknown estimator '" + tag + "' (expected rkhs, truth or oracle)");
}

std::string estimator_name(Estimator e) {
  switch (e) {
    case Estimator::Rkhs: return "rkhs";
    case Estimator::Truth: return "truth";
    case Estimator::Oracle: return "oracle";
  }
  return "rkhs";
}

MseTable run_mse(DgpTag tag, Estimator estimator, const std::vector<Eigen::Index>& n_list, int reps,
                 const std::vector<GridPoint>& grid, std::uint64_t seed, const StudyOptions& options) {
  if (reps < 1) throw_input("run_mse needs at least one replication");
  if (n_list.empty()) throw_input("run_mse needs at least one sample size");
  if (grid.empty()) throw_input("run_mse needs a nonempty evaluation grid");
  if (estimator == Estimator::Oracle) throw_input("the oracle estimator applies to coverage studies only");
  const TruthFn truth{tag};
  const std::size_t R = static_cast<std::size_t>(reps);
  MseTable table;
  table.rows.resize(n_list.size() * R);
  parallel_for(table.rows.size(), options.threads, [&](std::size_t job) {
    const Eigen::Index n = n_list[job / R];
    const int rep = static_cast<int>(job % R);
    std::vector<double> est(grid.size());
    if (estimator == Estimator::Truth) {
      for (std::size_t g = 0; g < grid.size(); ++g) est[g] = truth(grid[g].first, grid[g].second);
    } else {
      const SimulatedDataset ds = simulate(tag, n, options.p, stream_seed(seed, static_cast<std::uint64_t>(rep)));
      const ColumnSetting treat{has_binary_treatment(tag) ? ColumnKind::Discrete : ColumnKind::Continuous,
                                std::nullopt};
      if (is_mediation(tag)) {
        const MediationData& data = ds.mediation();
        MediationKernelSettings ks;
        ks.d = {treat};
        MediationTuning tuning;
        tuning.options = options.tuning;
        const MediationModel model = fit_mediation(data, resolve_kernels(data, ks), tuning);
        for (std::size_t g = 0; g < grid.size(); ++g) est[g] = theta_me(model, grid[g].first, grid[g].second);
      } else {
        const TimeVaryingData& data = ds.time_varying();
        TimeVaryingKernelSettings ks;
        ks.d1 = {treat};
        ks.d2 = {treat};
        TimeVaryingTuning tuning;
        tuning.options = options.tuning;
        const TimeVaryingModel model = fit_gf(data, resolve_kernels(data, ks), tuning);
        for (std::size_t g = 0; g < grid.size(); ++g) est[g] = theta_gf(model, grid[g].first, grid[g].second);
      }
    }
    MseRow row;
    row.n = n;
    row.rep = rep;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const double e = est[g] - truth(grid[g].first, grid[g].second);
      row.mse += e * e;
      row.sup_error = std::max(row.sup_error, std::abs(e));
    }
    row.mse /= static_cast<double>(grid.size());
    table.rows[job] = row;
  });
  for (std::size_t k = 0; k < n_list.size(); ++k) {
    std::vector<double> mse, sup;
    for (std::size_t r = 0; r < R; ++r) {
      mse.push_back(table.rows[k * R + r].mse);
      sup.push_back(table.rows[k * R + r].sup_error);
    }
    MseSummary s;
    s.n = n_list[k];
    s.median_mse = median(mse);
    double total = 0.0;
    for (double v : mse) total += v;
    s.mean_mse = total / static_cast<double>(R);
    s.median_sup_error = median(sup);
    table.summary.push_back(s);
  }
  return table;
}

std::vector<TreatmentCell> coverage_cells() { return {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}}; }

CoverageTable run_coverage(DgpTag tag, const std::vector<Eigen::Index>& n_list, int reps, double level,
                           std::uint64_t seed, Estimator estimator, const StudyOptions& options) {
  if (reps < 1) throw_input("run_coverage needs at least one replication (empty table)");
  if (n_list.empty()) throw_input("run_coverage needs at least one sample size");
  if (!has_binary_treatment(tag)) throw_input("coverage studies use the binary-treatment designs h2 and h4");
  if (estimator == Estimator::Truth) throw_input("coverage studies use the rkhs or oracle estimator");
  const auto cells = coverage_cells();
  const TruthFn truth{tag};
  const std::size_t R = static_cast<std::size_t>(reps);
  const std::size_t C = cells.size();
  CoverageTable table;
  table.reps.resize(n_list.size() * R * C);
  parallel_for(n_list.size() * R, options.threads, [&](std::size_t job) {
    const Eigen::Index n = n_list[job / R];
    const int rep = static_cast<int>(job % R);
    const std::uint64_t rep_seed = stream_seed(seed, static_cast<std::uint64_t>(rep));
    const SimulatedDataset ds = simulate(tag, n, options.p, rep_seed);
    std::vector<InferenceResult> results;
    if (estimator == Estimator::Rkhs) {
      DmlOptions dml;
      dml.folds = options.folds;
      dml.level = level;
      dml.seed = rep_seed;
      dml.tuning = options.tuning;
      results = is_mediation(tag) ? dml_mediation(ds.mediation(), cells, dml)
                                  : dml_time_varying(ds.time_varying(), cells, dml);
    } else {
      for (const auto& [a, b] : cells) {
        Eigen::VectorXd psi(n);
        if (is_mediation(tag)) {
          const MediationData& data = ds.mediation();
          const auto nu = true_nuisances(data, a, b);
          for (Eigen::Index i = 0; i < n; ++i) psi(i) = psi_me(a, b, nu[static_cast<std::size_t>(i)], data.y(i), data.d(i, 0));
        } else {
          const TimeVaryingData& data = ds.time_varying();
          const auto nu = true_nuisances(data, a, b);
          for (Eigen::Index i = 0; i < n; ++i) {
            psi(i) = psi_gf(a, b, nu[static_cast<std::size_t>(i)], data.y(i), data.d1(i, 0), data.d2(i, 0));
          }
        }
        results.push_back(summarize_moments(psi, level));
      }
    }
    for (std::size_t c = 0; c < C; ++c) {
      CoverageRep& r = table.reps[job * C + c];
      r.n = n;
      r.rep = rep;
      r.a = cells[c].first;
      r.b = cells[c].second;
      r.theta = results[c].theta_hat;
      r.sigma = results[c].sigma_hat;
      r.ci_width = results[c].ci_high - results[c].ci_low;
      const double t = truth(r.a, r.b);
      r.covered = results[c].ci_low <= t && t <= results[c].ci_high;
    }
  });
  for (std::size_t k = 0; k < n_list.size(); ++k) {
    for (std::size_t c = 0; c < C; ++c) {
      CoverageRow row;
      row.n = n_list[k];
      row.a = cells[c].first;
      row.b = cells[c].second;
      row.truth = truth(row.a, row.b);
      double sum = 0.0, hits = 0.0, width = 0.0;
      for (std::size_t r = 0; r < R; ++r) {
        const CoverageRep& rr = table.reps[(k * R + r) * C + c];
        sum += rr.theta;
        hits += rr.covered ? 1.0 : 0.0;
        width += rr.ci_width;
      }
      row.mean_estimate = sum / static_cast<double>(R);
      double ss = 0.0;
      for (std::size_t r = 0; r < R; ++r) {
        const double e = table.reps[(k * R + r) * C + c].theta - row.mean_estimate;
        ss += e * e;
      }
      row.sd_estimate = R > 1 ? std::sqrt(ss / static_cast<double>(R - 1)) : 0.0;
      row.se_estimate = row.sd_estimate / std::sqrt(static_cast<double>(R));
      row.coverage = hits / static_cast<double>(R);
      row.mean_ci_width = width / static_cast<double>(R);
      table.rows.push_back(row);
    }
  }
  return table;
}

}  // namespace seqkernel
