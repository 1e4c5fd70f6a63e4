#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace seqkernel {

// exp(-1/2 sum_j (u_j - v_j)^2 / l_j^2), one lengthscale per input dimension.
struct ExponentiatedQuadratic {
  std::vector<double> lengthscales;
};

// 1 when every integer code matches exactly, else 0.
struct Indicator {
  std::size_t dim = 1;
};

struct KernelSpec;

// Multiplies factor kernels, each applied to its own block of input columns.
struct Product {
  std::vector<std::vector<std::size_t>> blocks;
  std::vector<KernelSpec> factors;
};

struct KernelSpec {
  std::variant<ExponentiatedQuadratic, Indicator, Product> form;

  static KernelSpec eq(std::vector<double> lengthscales);
  static KernelSpec eq(double lengthscale);
  static KernelSpec indicator(std::size_t dim = 1);
  static KernelSpec product(std::vector<std::vector<std::size_t>> blocks,
                            std::vector<KernelSpec> factors);

  std::size_t input_dim() const;
  bool is_scalar_eq() const;
  // Throws ConfigError for bad lengthscales or overlapping/missing product columns.
  void validate() const;
};

struct GramMatrix {
  Eigen::MatrixXd entries;
  bool symmetric = false;

  Eigen::Index rows() const { return entries.rows(); }
  Eigen::Index cols() const { return entries.cols(); }
};

double eval_kernel(const KernelSpec& spec, std::span<const double> u, std::span<const double> v);

// Rows of A and B are observations. Passing the same object twice yields a symmetric Gram.
GramMatrix gram(const KernelSpec& spec, const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);
GramMatrix gram(const KernelSpec& spec, const Eigen::MatrixXd& A);

// k(A_i, v) for every row i.
Eigen::VectorXd kernel_column(const KernelSpec& spec, const Eigen::MatrixXd& A,
                              std::span<const double> v);
Eigen::VectorXd kernel_column(const KernelSpec& spec, const Eigen::MatrixXd& A, double v);

// d/dv k(u, v) for a scalar exponentiated-quadratic kernel.
double grad_kernel(const KernelSpec& spec, double u, double v);
Eigen::VectorXd grad_kernel_column(const KernelSpec& spec, const Eigen::MatrixXd& A, double v);

// Per-column median of |x_i - x_j| over i < j. Zero medians fall back to 1.
// Above kMedianSubsample rows a fixed seeded subsample is used.
inline constexpr std::size_t kMedianSubsample = 2000;
std::vector<double> median_lengthscales(const Eigen::MatrixXd& data);

enum class ColumnKind { Continuous, Discrete };

struct ColumnSetting {
  ColumnKind kind = ColumnKind::Continuous;
  std::optional<double> lengthscale;  // empty: median heuristic
};

// Kernel for a block of columns: EQ over continuous columns, Indicator over
// discrete ones, their product when mixed. Empty settings mean all continuous.
KernelSpec block_kernel(const Eigen::MatrixXd& block, const std::vector<ColumnSetting>& settings = {});

}  // namespace seqkernel
