#include <doctest.h>

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "fixtures.hpp"
#include "seqkernel/dr_inference.hpp"
#include "seqkernel/errors.hpp"
#include "seqkernel/gaussian.hpp"
#include "seqkernel/simulation.hpp"

using namespace seqkernel;

namespace {

std::vector<Eigen::Index> fold_sizes(const FoldPartition& f) {
  std::vector<Eigen::Index> sizes(static_cast<std::size_t>(f.L), 0);
  for (int a : f.assignment) ++sizes[static_cast<std::size_t>(a)];
  return sizes;
}

// Term-by-term evaluation of the mediation moment.
double psi_me_sheet(double d, double dp, const MediationNuisanceValues& nu, double y, double D) {
  double t1 = nu.omega;
  double t2 = 0.0;
  if (D == dp) {
    const double ratio = nu.rho_d / nu.rho_dprime;
    t2 = ratio / nu.pi_d * (y - nu.gamma);
  }
  double t3 = 0.0;
  if (D == d) t3 = (nu.gamma - nu.omega) / nu.pi_d;
  return t1 + t2 + t3;
}

double psi_gf_sheet(double d1, double d2, const TimeVaryingNuisanceValues& nu, double y, double D1, double D2) {
  double out = nu.omega;
  if (D1 == d1) {
    out += (nu.gamma - nu.omega) / nu.pi;
    if (D2 == d2) out += (y - nu.gamma) / (nu.pi * nu.rho);
  }
  return out;
}

// Binary-treatment mediation design: X ~ U(-1.5, 1.5), D = 1(0.3X + w > 0),
// M = 0.3D + 0.3X + v, Y = 0.3D + 0.3M + 0.5DM + 0.3X + 0.25D^3 + u with u, v, w ~ U(-2, 2).
struct H2Law {
  static double p_treated(double x) {
    // P(w > -0.3x) for w uniform on (-2, 2).
    return (2.0 - (-0.3 * x)) / 4.0;
  }
  static double m_density(double m, double d, double x) {
    const double v = m - 0.3 * d - 0.3 * x;
    return (v > -2.0 && v < 2.0) ? 0.25 : 0.0;
  }
  static double outcome_mean(double d, double m, double x) {
    return 0.3 * d + 0.3 * m + 0.5 * d * m + 0.3 * x + 0.25 * d * d * d;
  }
  static double truth(double d, double dp) {
    // E[M(d)] = 0.3d and E[X] = 0.
    return outcome_mean(dp, 0.3 * d, 0.0);
  }
  static MediationNuisanceValues at(double d, double dp, double m, double x) {
    const double p1 = p_treated(x);
    const double f1 = p1 * m_density(m, 1.0, x);
    const double f0 = (1.0 - p1) * m_density(m, 0.0, x);
    auto post = [&](double a) { return a == 1.0 ? f1 / (f1 + f0) : f0 / (f1 + f0); };
    MediationNuisanceValues nu;
    nu.gamma = outcome_mean(dp, m, x);
    nu.omega = outcome_mean(dp, 0.3 * d + 0.3 * x, x);
    nu.pi_d = trim(d == 1.0 ? p1 : 1.0 - p1);
    nu.rho_d = trim(post(d));
    nu.rho_dprime = trim(post(dp));
    return nu;
  }
};

DmlOptions quick_options(std::uint64_t seed) {
  DmlOptions o;
  o.folds = 5;
  o.seed = seed;
  o.tuning.grid = {1e-4, 1e-3, 1e-2, 1e-1};
  return o;
}

}  // namespace

TEST_CASE("fold sizes follow the remainder rule") {
  const FoldPartition a = make_folds(10, 5, 3);
  CHECK(fold_sizes(a) == std::vector<Eigen::Index>{2, 2, 2, 2, 2});
  const FoldPartition b = make_folds(11, 5, 3);
  CHECK(fold_sizes(b) == std::vector<Eigen::Index>{3, 2, 2, 2, 2});
  for (Eigen::Index n : {10, 13, 57, 1000}) {
    const auto sizes = fold_sizes(make_folds(n, 5, 9));
    const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
    CHECK(*hi - *lo <= 1);
  }
}

TEST_CASE("every row lands in exactly one fold") {
  const FoldPartition f = make_folds(103, 4, 21);
  std::vector<int> seen(103, 0);
  for (int k = 0; k < f.L; ++k) {
    for (Eigen::Index i : f.test_rows(k)) ++seen[static_cast<std::size_t>(i)];
    CHECK(f.test_rows(k).size() + f.train_rows(k).size() == 103);
  }
  for (int s : seen) CHECK(s == 1);
}

TEST_CASE("fold assignment is seeded") {
  CHECK(make_folds(50, 5, 8).assignment == make_folds(50, 5, 8).assignment);
  CHECK(make_folds(50, 5, 8).assignment != make_folds(50, 5, 9).assignment);
}

TEST_CASE("fold construction errors") {
  CHECK_THROWS_AS(make_folds(9, 5, 0), InputError);
  CHECK_THROWS_AS(make_folds(10, 1, 0), ConfigError);
}

TEST_CASE("trim examples and idempotence") {
  CHECK(trim(0.5) == 0.5);
  CHECK(trim(-0.2) == 0.05);
  CHECK(trim(1.7) == 0.95);
  CHECK(trim(0.05) == 0.05);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 2.0);
  for (int k = 0; k < 200; ++k) {
    const double p = u(rng);
    CHECK(trim(trim(p)) == trim(p));
  }
  CHECK_THROWS_AS(trim(std::numeric_limits<double>::quiet_NaN()), InputError);
  CHECK_THROWS_AS(trim(std::numeric_limits<double>::infinity()), InputError);
}

TEST_CASE("mediation moment examples") {
  const double c = 1.7;
  MediationNuisanceValues nu;
  nu.gamma = nu.omega = c;
  nu.pi_d = 0.3;
  nu.rho_d = 0.6;
  nu.rho_dprime = 0.2;
  for (double D : {0.0, 1.0}) {
    for (auto [d, dp] : {std::pair{0.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}, {1.0, 1.0}}) {
      CHECK(psi_me(d, dp, nu, c, D) == doctest::Approx(c).epsilon(1e-15));
    }
  }
  MediationNuisanceValues half;
  half.gamma = half.omega = 0.0;
  half.pi_d = half.rho_d = half.rho_dprime = 0.5;
  CHECK(psi_me(1.0, 1.0, half, 2.5, 1.0) == 5.0);
}

TEST_CASE("mediation moment matches the term-by-term evaluation") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_real_distribution<double> p(0.05, 0.95);
  std::bernoulli_distribution b(0.5);
  for (int k = 0; k < 500; ++k) {
    MediationNuisanceValues nu{u(rng), u(rng), p(rng), p(rng), p(rng)};
    const double d = b(rng), dp = b(rng), D = b(rng), y = u(rng);
    const double expect = psi_me_sheet(d, dp, nu, y, D);
    CHECK(std::fabs(psi_me(d, dp, nu, y, D) - expect) <= 1e-12 * std::max(1.0, std::fabs(expect)));
  }
}

TEST_CASE("time-varying moment examples and term-by-term evaluation") {
  TimeVaryingNuisanceValues flat{2.0, 2.0, 0.4, 0.7};
  CHECK(psi_gf(1.0, 0.0, flat, 2.0, 1.0, 0.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(psi_gf(0.0, 1.0, flat, 2.0, 1.0, 1.0) == 2.0);
  TimeVaryingNuisanceValues nu{0.8, -1.3, 0.25, 0.6};
  CHECK(psi_gf(1.0, 1.0, nu, 9.0, 0.0, 1.0) == -1.3);

  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_real_distribution<double> p(0.05, 0.95);
  std::bernoulli_distribution b(0.5);
  for (int k = 0; k < 500; ++k) {
    TimeVaryingNuisanceValues v{u(rng), u(rng), p(rng), p(rng)};
    const double d1 = b(rng), d2 = b(rng), D1 = b(rng), D2 = b(rng), y = u(rng);
    const double expect = psi_gf_sheet(d1, d2, v, y, D1, D2);
    CHECK(std::fabs(psi_gf(d1, d2, v, y, D1, D2) - expect) <= 1e-12 * std::max(1.0, std::fabs(expect)));
  }
}

TEST_CASE("untrimmed propensities are refused") {
  MediationNuisanceValues nu;
  nu.pi_d = 0.0;
  CHECK_THROWS_AS(psi_me(1.0, 1.0, nu, 1.0, 1.0), InputError);
  nu.pi_d = 0.5;
  nu.rho_dprime = 1.0;
  CHECK_THROWS_AS(psi_me(1.0, 1.0, nu, 1.0, 1.0), InputError);
  TimeVaryingNuisanceValues tv{0.0, 0.0, 1.0, 0.5};
  CHECK_THROWS_AS(psi_gf(1.0, 1.0, tv, 1.0, 1.0, 1.0), InputError);
}

TEST_CASE("normal quantile agrees with a reference implementation") {
  const boost::math::normal_distribution<double> ref;
  double worst = 0.0;
  for (double p : {1e-12, 1e-8, 1e-4, 0.001, 0.01, 0.02425, 0.025, 0.1, 0.3, 0.5, 0.7, 0.9, 0.975, 0.97575, 0.999,
                   1.0 - 1e-6, 1.0 - 1e-10}) {
    worst = std::max(worst, std::fabs(normal_quantile(p) - boost::math::quantile(ref, p)));
  }
  for (int k = 1; k < 1000; ++k) {
    const double p = k / 1000.0;
    worst = std::max(worst, std::fabs(normal_quantile(p) - boost::math::quantile(ref, p)));
  }
  CHECK(worst < 1e-8);
  CHECK(std::fabs(critical_value(0.95) - boost::math::quantile(ref, 0.975)) < 1e-8);
  CHECK(std::fabs(critical_value(0.90) - boost::math::quantile(ref, 0.95)) < 1e-8);
  CHECK_THROWS_AS(normal_quantile(0.0), InputError);
  CHECK_THROWS_AS(normal_quantile(1.0), InputError);
  CHECK_THROWS_AS(critical_value(1.0), ConfigError);
}

TEST_CASE("summary statistics of moment values") {
  const Eigen::VectorXd psi = fixtures::normal_matrix(257, 1, 5).col(0).array() * 2.0 + 0.7;
  const InferenceResult r = summarize_moments(psi, 0.9);
  const double n = 257.0;
  double mean = 0.0;
  for (double v : psi) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : psi) var += (v - mean) * (v - mean);
  var /= n;
  CHECK(r.theta_hat == psi.mean());
  CHECK(std::fabs(r.theta_hat - mean) <= 1e-14);
  CHECK(std::fabs(r.sigma_hat * r.sigma_hat - var) <= 1e-12);
  const double z = boost::math::quantile(boost::math::normal_distribution<double>(), 0.95);
  CHECK(std::fabs(r.ci_low - (mean - z * std::sqrt(var / n))) <= 1e-10);
  CHECK(std::fabs(r.ci_high - (mean + z * std::sqrt(var / n))) <= 1e-10);
  CHECK(r.level == 0.9);
  CHECK(r.per_obs_psi == psi);
  CHECK_THROWS_AS(summarize_moments(Eigen::VectorXd(), 0.95), InputError);
}

TEST_CASE("cross-fit mediation estimate on binary data") {
  const MediationData data = fixtures::binary_mediation(300, 31);
  const auto res = dml_mediation(data, coverage_cells(), quick_options(2));
  REQUIRE(res.size() == 4);
  for (const auto& r : res) {
    CHECK(r.per_obs_psi.size() == 300);
    CHECK(r.theta_hat == r.per_obs_psi.mean());
    CHECK(r.sigma_hat >= 0.0);
    CHECK(r.ci_low <= r.theta_hat);
    CHECK(r.ci_high >= r.theta_hat);
  }
  // TE = DE + IE on the four cells with d = 0, d' = 1.
  const Decomposition dec = decompose_values(res[2].theta_hat, res[0].theta_hat, res[3].theta_hat);
  CHECK(std::fabs(dec.te - dec.de - dec.ie) <= 1e-12);
}

TEST_CASE("relabelling folds leaves the estimates unchanged") {
  const MediationData med = fixtures::binary_mediation(200, 32);
  const DmlOptions opt = quick_options(5);
  const FoldPartition folds = make_folds(200, 5, 5);
  FoldPartition relabelled = folds;
  const std::map<int, int> perm{{0, 3}, {1, 0}, {2, 4}, {3, 1}, {4, 2}};
  for (int& a : relabelled.assignment) a = perm.at(a);
  const auto a = dml_mediation(med, coverage_cells(), folds, opt);
  const auto b = dml_mediation(med, coverage_cells(), relabelled, opt);
  for (std::size_t c = 0; c < a.size(); ++c) {
    CHECK(std::fabs(a[c].theta_hat - b[c].theta_hat) <= 1e-12);
    CHECK(std::fabs(a[c].sigma_hat - b[c].sigma_hat) <= 1e-12);
  }
  const auto seeded = dml_mediation(med, coverage_cells(), opt);
  for (std::size_t c = 0; c < a.size(); ++c) CHECK(seeded[c].theta_hat == a[c].theta_hat);

  const SimulatedDataset h4 = simulate(DgpTag::H4, 200, 1, 6);
  const auto tv_a = dml_time_varying(h4.time_varying(), coverage_cells(), folds, opt);
  const auto tv_b = dml_time_varying(h4.time_varying(), coverage_cells(), relabelled, opt);
  for (std::size_t c = 0; c < tv_a.size(); ++c) {
    CHECK(std::fabs(tv_a[c].theta_hat - tv_b[c].theta_hat) <= 1e-12);
    CHECK(std::fabs(tv_a[c].sigma_hat - tv_b[c].sigma_hat) <= 1e-12);
  }
}

TEST_CASE("zero outcome gives a zero estimate") {
  MediationData data = fixtures::binary_mediation(200, 33);
  data.y.setZero();
  const InferenceResult r = dml_estimate(data, {1.0, 0.0}, quick_options(1));
  CHECK(std::fabs(r.theta_hat) <= 1e-12);
  CHECK(r.sigma_hat <= 1e-12);
  CHECK(r.ci_low <= 0.0);
  CHECK(r.ci_high >= 0.0);

  SimulatedDataset h4 = simulate(DgpTag::H4, 200, 1, 3);
  TimeVaryingData tv = h4.time_varying();
  tv.y.setZero();
  const InferenceResult g = dml_estimate(tv, {1.0, 1.0}, quick_options(1));
  CHECK(std::fabs(g.theta_hat) <= 1e-12);
  CHECK(g.ci_low <= 0.0);
  CHECK(g.ci_high >= 0.0);
}

TEST_CASE("cross-fitting input errors") {
  MediationData data = fixtures::binary_mediation(100, 34);
  CHECK_THROWS_AS(dml_estimate(data, {0.5, 1.0}, quick_options(1)), InputError);
  CHECK_THROWS_AS(dml_mediation(data, {}, quick_options(1)), InputError);
  MediationData continuous = fixtures::random_mediation(100, 34);
  CHECK_THROWS_AS(dml_estimate(continuous, {0.0, 1.0}, quick_options(1)), InputError);

  // Only three treated rows: some fold complement has none left.
  MediationData sparse = data;
  sparse.d.setZero();
  sparse.d(0, 0) = sparse.d(1, 0) = 1.0;
  FoldPartition folds = make_folds(100, 5, 0);
  folds.assignment[0] = folds.assignment[1] = 2;
  CHECK_THROWS_AS(dml_mediation(sparse, {{0.0, 1.0}}, folds, quick_options(1)), InputError);

  FoldPartition bad = make_folds(100, 5, 0);
  bad.assignment[4] = 7;
  CHECK_THROWS_AS(dml_mediation(data, {{0.0, 1.0}}, bad, quick_options(1)), InputError);
}

TEST_CASE("analytic nuisances of the binary mediation design") {
  const SimulatedDataset ds = simulate(DgpTag::H2, 400, 1, 77);
  const MediationData& data = ds.mediation();
  for (auto [d, dp] : coverage_cells()) {
    const auto lib = true_nuisances(data, d, dp);
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      const auto ref = H2Law::at(d, dp, data.m(i, 0), data.x(i, 0));
      const auto& got = lib[static_cast<std::size_t>(i)];
      CHECK(std::fabs(got.gamma - ref.gamma) <= 1e-12);
      CHECK(std::fabs(got.omega - ref.omega) <= 1e-12);
      CHECK(std::fabs(got.pi_d - ref.pi_d) <= 1e-12);
      CHECK(std::fabs(got.rho_d - ref.rho_d) <= 1e-12);
      CHECK(std::fabs(got.rho_dprime - ref.rho_dprime) <= 1e-12);
    }
  }
}

TEST_CASE("true nuisances give intervals that cover at the nominal rate") {
  const Eigen::Index n = 5000;
  const int reps = 100;
  std::map<std::pair<double, double>, int> hits;
  for (int r = 0; r < reps; ++r) {
    const SimulatedDataset ds = simulate(DgpTag::H2, n, 1, 9000 + static_cast<std::uint64_t>(r));
    const MediationData& data = ds.mediation();
    for (auto [d, dp] : coverage_cells()) {
      Eigen::VectorXd psi(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        psi(i) = psi_me_sheet(d, dp, H2Law::at(d, dp, data.m(i, 0), data.x(i, 0)), data.y(i), data.d(i, 0));
      }
      const InferenceResult res = summarize_moments(psi, 0.95);
      const double bound = 3.0 * res.sigma_hat / std::sqrt(static_cast<double>(n));
      if (std::fabs(res.theta_hat - H2Law::truth(d, dp)) <= bound) ++hits[{d, dp}];
    }
  }
  for (auto [cell, count] : hits) {
    INFO("cell (" << cell.first << ", " << cell.second << "): " << count << "/100");
    CHECK(count >= 95);
  }
  CHECK(hits.size() == 4);
}
