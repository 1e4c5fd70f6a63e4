#include "fixtures.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <unistd.h>

namespace fixtures {

using Eigen::Index;

Eigen::MatrixXd normal_matrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Eigen::MatrixXd out(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) out(i, j) = z(rng);
  return out;
}

Eigen::MatrixXd uniform_matrix(Index rows, Index cols, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd out(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) out(i, j) = u(rng);
  return out;
}

Eigen::MatrixXd spd_matrix(Index n, std::uint64_t seed) {
  const Eigen::MatrixXd G = normal_matrix(n, n, seed);
  Eigen::MatrixXd S = G * G.transpose() / static_cast<double>(n);
  S.diagonal().array() += 0.1;
  return S;
}

seqkernel::MediationData random_mediation(Index n, std::uint64_t seed, int x_dim) {
  seqkernel::MediationData out;
  out.x = normal_matrix(n, x_dim, seed);
  const Eigen::MatrixXd noise = normal_matrix(n, 3, seed + 1);
  out.d = Eigen::MatrixXd(n, 1);
  out.m = Eigen::MatrixXd(n, 1);
  out.y = Eigen::VectorXd(n);
  for (Index i = 0; i < n; ++i) {
    const double x = out.x(i, 0);
    const double d = 0.5 * x + noise(i, 0);
    const double m = 0.4 * d + 0.3 * std::sin(x) + noise(i, 1);
    out.d(i, 0) = d;
    out.m(i, 0) = m;
    out.y(i) = std::sin(d) + 0.5 * m * m + x + 0.3 * noise(i, 2);
  }
  return out;
}

seqkernel::TimeVaryingData random_time_varying(Index n, std::uint64_t seed, int x_dim) {
  seqkernel::TimeVaryingData out;
  out.x1 = normal_matrix(n, x_dim, seed);
  const Eigen::MatrixXd w2 = normal_matrix(n, x_dim, seed + 1);
  const Eigen::MatrixXd noise = normal_matrix(n, 3, seed + 2);
  out.d1 = Eigen::MatrixXd(n, 1);
  out.d2 = Eigen::MatrixXd(n, 1);
  out.x2 = Eigen::MatrixXd(n, x_dim);
  out.y = Eigen::VectorXd(n);
  for (Index i = 0; i < n; ++i) {
    const double d1 = 0.5 * out.x1(i, 0) + noise(i, 0);
    out.d1(i, 0) = d1;
    out.x2.row(i) = 0.5 * out.x1.row(i) + 0.3 * d1 * Eigen::RowVectorXd::Ones(x_dim) + 0.5 * w2.row(i);
    const double d2 = 0.4 * out.x2(i, 0) + 0.2 * d1 + noise(i, 1);
    out.d2(i, 0) = d2;
    out.y(i) = 0.6 * d1 + std::cos(d2) + out.x1(i, 0) * out.x2(i, 0) + 0.3 * noise(i, 2);
  }
  return out;
}

namespace {

double bernoulli(std::mt19937_64& rng, double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; }

}  // namespace

seqkernel::MediationData binary_mediation(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  seqkernel::MediationData out;
  out.d = Eigen::MatrixXd(n, 1);
  out.m = Eigen::MatrixXd(n, 1);
  out.x = Eigen::MatrixXd(n, 1);
  out.y = Eigen::VectorXd(n);
  for (Index i = 0; i < n; ++i) {
    const double x = bernoulli(rng, 0.5);
    const double d = bernoulli(rng, 0.3 + 0.4 * x);
    const double m = bernoulli(rng, 0.2 + 0.3 * d + 0.3 * x);
    out.x(i, 0) = x;
    out.d(i, 0) = d;
    out.m(i, 0) = m;
    out.y(i) = 1.0 + d + 2.0 * m + x + d * m + 0.5 * z(rng);
  }
  return out;
}

seqkernel::HorizonData binary_horizon(Index n, std::size_t T, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  seqkernel::HorizonData out;
  out.d.assign(T, Eigen::MatrixXd(n, 1));
  out.x.assign(T, Eigen::MatrixXd(n, 1));
  out.y = Eigen::VectorXd(n);
  for (Index i = 0; i < n; ++i) {
    double y = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      double x;
      if (t == 0) {
        x = bernoulli(rng, 0.5);
      } else {
        x = bernoulli(rng, 0.15 + 0.3 * out.d[t - 1](i, 0) + 0.25 * out.x[t - 1](i, 0) + 0.15 * out.x[0](i, 0));
      }
      out.x[t](i, 0) = x;
      const double prev = t == 0 ? 0.0 : out.d[t - 1](i, 0);
      const double d = bernoulli(rng, 0.25 + 0.35 * x + 0.15 * prev);
      out.d[t](i, 0) = d;
      y += static_cast<double>(t + 1) * d + x;
    }
    out.y(i) = y + out.d[0](i, 0) * out.x[T - 1](i, 0) + 0.5 * z(rng);
  }
  return out;
}

seqkernel::HorizonData markov_horizon(Index n, std::size_t T, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  seqkernel::HorizonData out;
  out.d.assign(T, Eigen::MatrixXd(n, 1));
  out.x.assign(T, Eigen::MatrixXd(n, 1));
  out.y = Eigen::VectorXd(n);
  for (Index i = 0; i < n; ++i) {
    double y = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      const double x = t == 0 ? z(rng) : 0.5 * out.x[t - 1](i, 0) + 0.4 * out.d[t - 1](i, 0) + 0.5 * z(rng);
      out.x[t](i, 0) = x;
      const double d = 0.4 * x + (t == 0 ? 0.0 : 0.3 * out.d[t - 1](i, 0)) + z(rng);
      out.d[t](i, 0) = d;
      y += 0.5 * d + 0.5 * x;
    }
    out.y(i) = y + 0.3 * z(rng);
  }
  return out;
}

seqkernel::TimeVaryingData as_time_varying(const seqkernel::HorizonData& h) {
  seqkernel::TimeVaryingData out;
  out.y = h.y;
  out.d1 = h.d[0];
  out.d2 = h.d[1];
  out.x1 = h.x[0];
  out.x2 = h.x[1];
  return out;
}

seqkernel::MediationKernels indicator_kernels(const seqkernel::MediationData& data) {
  return {seqkernel::KernelSpec::indicator(static_cast<std::size_t>(data.d.cols())),
          seqkernel::KernelSpec::indicator(static_cast<std::size_t>(data.m.cols())),
          seqkernel::KernelSpec::indicator(static_cast<std::size_t>(data.x.cols()))};
}

seqkernel::HorizonKernels indicator_kernels(const seqkernel::HorizonData& data) {
  seqkernel::HorizonKernels out;
  for (const auto& d : data.d) out.d.push_back(seqkernel::KernelSpec::indicator(static_cast<std::size_t>(d.cols())));
  for (const auto& x : data.x) out.x.push_back(seqkernel::KernelSpec::indicator(static_cast<std::size_t>(x.cols())));
  return out;
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("seqkernel_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace fixtures
