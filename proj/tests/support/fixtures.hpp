#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "seqkernel/horizon.hpp"
#include "seqkernel/mediation.hpp"
#include "seqkernel/timevarying.hpp"

namespace fixtures {

Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed);
Eigen::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, double lo, double hi, std::uint64_t seed);
// Random symmetric positive definite matrix with unit-scale spectrum.
Eigen::MatrixXd spd_matrix(Eigen::Index n, std::uint64_t seed);

// Smooth nonlinear data with continuous D, M, X.
seqkernel::MediationData random_mediation(Eigen::Index n, std::uint64_t seed, int x_dim = 1);
seqkernel::TimeVaryingData random_time_varying(Eigen::Index n, std::uint64_t seed, int x_dim = 1);

// All-binary designs with every cell populated at n in the thousands.
seqkernel::MediationData binary_mediation(Eigen::Index n, std::uint64_t seed);
// X_t depends on the whole history, so the Markov restriction does not hold.
seqkernel::HorizonData binary_horizon(Eigen::Index n, std::size_t T, std::uint64_t seed);
// Continuous design whose covariates are first-order Markov.
seqkernel::HorizonData markov_horizon(Eigen::Index n, std::size_t T, std::uint64_t seed);

seqkernel::TimeVaryingData as_time_varying(const seqkernel::HorizonData& h);

// Indicator kernels on every block.
seqkernel::MediationKernels indicator_kernels(const seqkernel::MediationData& data);
seqkernel::HorizonKernels indicator_kernels(const seqkernel::HorizonData& data);

// A fresh directory under the system temp path, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace fixtures
