#include "seqkernel/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "seqkernel/errors.hpp"

namespace seqkernel {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Product kernels flattened to a column list: indicator columns must match,
// EQ columns contribute to one squared distance.
struct FlatKernel {
  std::vector<std::size_t> eq_cols;
  std::vector<double> eq_inv;
  std::vector<std::size_t> ind_cols;

  double operator()(const double* a, const double* b) const {
    for (std::size_t c : ind_cols) {
      if (a[c] != b[c]) return 0.0;
    }
    double s = 0.0;
    for (std::size_t j = 0; j < eq_cols.size(); ++j) {
      const double d = (a[eq_cols[j]] - b[eq_cols[j]]) * eq_inv[j];
      s += d * d;
    }
    return std::exp(-0.5 * s);
  }
};

void flatten(const KernelSpec& spec, const std::vector<std::size_t>& colmap, FlatKernel& out) {
  if (const auto* eq = std::get_if<ExponentiatedQuadratic>(&spec.form)) {
    for (std::size_t j = 0; j < eq->lengthscales.size(); ++j) {
      out.eq_cols.push_back(colmap[j]);
      out.eq_inv.push_back(1.0 / eq->lengthscales[j]);
    }
  } else if (const auto* ind = std::get_if<Indicator>(&spec.form)) {
    for (std::size_t j = 0; j < ind->dim; ++j) out.ind_cols.push_back(colmap[j]);
  } else {
    const auto& prod = std::get<Product>(spec.form);
    for (std::size_t b = 0; b < prod.blocks.size(); ++b) {
      std::vector<std::size_t> sub;
      sub.reserve(prod.blocks[b].size());
      for (std::size_t c : prod.blocks[b]) sub.push_back(colmap[c]);
      flatten(prod.factors[b], sub, out);
    }
  }
}

FlatKernel compile(const KernelSpec& spec) {
  spec.validate();
  std::vector<std::size_t> identity(spec.input_dim());
  std::iota(identity.begin(), identity.end(), std::size_t{0});
  FlatKernel flat;
  flatten(spec, identity, flat);
  return flat;
}

void check_cols(const KernelSpec& spec, Eigen::Index cols, const char* what) {
  if (static_cast<std::size_t>(cols) != spec.input_dim()) {
    throw_input(std::string(what) + ": kernel expects " + std::to_string(spec.input_dim()) +
                " input columns, got " + std::to_string(cols));
  }
}

double median_of(std::vector<double>& values) {
  const std::size_t m = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + m, values.end());
  const double hi = values[m];
  if (values.size() % 2 == 1) return hi;
  const double lo = *std::max_element(values.begin(), values.begin() + m);
  return 0.5 * (lo + hi);
}

}  // namespace

KernelSpec KernelSpec::eq(std::vector<double> lengthscales) {
  KernelSpec s{ExponentiatedQuadratic{std::move(lengthscales)}};
  s.validate();
  return s;
}

KernelSpec KernelSpec::eq(double lengthscale) { return eq(std::vector<double>{lengthscale}); }

KernelSpec KernelSpec::indicator(std::size_t dim) {
  KernelSpec s{Indicator{dim}};
  s.validate();
  return s;
}

KernelSpec KernelSpec::product(std::vector<std::vector<std::size_t>> blocks,
                               std::vector<KernelSpec> factors) {
  KernelSpec s{Product{std::move(blocks), std::move(factors)}};
  s.validate();
  return s;
}

std::size_t KernelSpec::input_dim() const {
  if (const auto* eq = std::get_if<ExponentiatedQuadratic>(&form)) return eq->lengthscales.size();
  if (const auto* ind = std::get_if<Indicator>(&form)) return ind->dim;
  std::size_t total = 0;
  for (const auto& b : std::get<Product>(form).blocks) total += b.size();
  return total;
}

bool KernelSpec::is_scalar_eq() const {
  const auto* eq = std::get_if<ExponentiatedQuadratic>(&form);
  return eq != nullptr && eq->lengthscales.size() == 1;
}

void KernelSpec::validate() const {
  if (const auto* eq = std::get_if<ExponentiatedQuadratic>(&form)) {
    if (eq->lengthscales.empty()) throw_config("exponentiated-quadratic kernel has no lengthscales");
    for (double l : eq->lengthscales) {
      if (!(l > 0.0) || !std::isfinite(l)) {
        throw_config("lengthscale must be positive and finite, got " + std::to_string(l));
      }
    }
    return;
  }
  if (const auto* ind = std::get_if<Indicator>(&form)) {
    if (ind->dim == 0) throw_config("indicator kernel needs at least one column");
    return;
  }
  const auto& prod = std::get<Product>(form);
  if (prod.blocks.empty() || prod.blocks.size() != prod.factors.size()) {
    throw_config("product kernel needs one factor per column block");
  }
  const std::size_t dim = input_dim();
  std::vector<int> seen(dim, 0);
  for (std::size_t b = 0; b < prod.blocks.size(); ++b) {
    prod.factors[b].validate();
    if (prod.blocks[b].size() != prod.factors[b].input_dim()) {
      throw_config("product block " + std::to_string(b) + " width does not match its factor");
    }
    for (std::size_t c : prod.blocks[b]) {
      if (c >= dim || seen[c]++ != 0) {
        throw_config("product blocks must partition the input columns");
      }
    }
  }
}

double eval_kernel(const KernelSpec& spec, std::span<const double> u, std::span<const double> v) {
  const FlatKernel k = compile(spec);
  if (u.size() != spec.input_dim() || v.size() != spec.input_dim()) {
    throw_input("eval_kernel: input dimension does not match kernel");
  }
  return k(u.data(), v.data());
}

GramMatrix gram(const KernelSpec& spec, const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  if (&A == &B) return gram(spec, A);
  check_cols(spec, A.cols(), "gram");
  check_cols(spec, B.cols(), "gram");
  const FlatKernel k = compile(spec);
  const RowMatrix ra = A;
  const RowMatrix rb = B;
  GramMatrix out;
  out.entries.resize(A.rows(), B.rows());
  for (Eigen::Index j = 0; j < rb.rows(); ++j) {
    const double* b = rb.row(j).data();
    for (Eigen::Index i = 0; i < ra.rows(); ++i) out.entries(i, j) = k(ra.row(i).data(), b);
  }
  return out;
}

GramMatrix gram(const KernelSpec& spec, const Eigen::MatrixXd& A) {
  check_cols(spec, A.cols(), "gram");
  const FlatKernel k = compile(spec);
  const RowMatrix ra = A;
  const Eigen::Index n = A.rows();
  GramMatrix out;
  out.symmetric = true;
  out.entries.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double* b = ra.row(j).data();
    for (Eigen::Index i = 0; i <= j; ++i) out.entries(i, j) = k(ra.row(i).data(), b);
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) out.entries(i, j) = out.entries(j, i);
  }
  return out;
}

Eigen::VectorXd kernel_column(const KernelSpec& spec, const Eigen::MatrixXd& A,
                              std::span<const double> v) {
  check_cols(spec, A.cols(), "kernel_column");
  if (v.size() != spec.input_dim()) throw_input("kernel_column: query dimension mismatch");
  const FlatKernel k = compile(spec);
  const RowMatrix ra = A;
  Eigen::VectorXd out(A.rows());
  for (Eigen::Index i = 0; i < A.rows(); ++i) out(i) = k(ra.row(i).data(), v.data());
  return out;
}

Eigen::VectorXd kernel_column(const KernelSpec& spec, const Eigen::MatrixXd& A, double v) {
  return kernel_column(spec, A, std::span<const double>(&v, 1));
}

double grad_kernel(const KernelSpec& spec, double u, double v) {
  if (!spec.is_scalar_eq()) {
    throw_unsupported("derivative kernels require a scalar exponentiated-quadratic kernel");
  }
  const double l = std::get<ExponentiatedQuadratic>(spec.form).lengthscales[0];
  const double d = u - v;
  return std::exp(-0.5 * d * d / (l * l)) * d / (l * l);
}

Eigen::VectorXd grad_kernel_column(const KernelSpec& spec, const Eigen::MatrixXd& A, double v) {
  if (A.cols() != 1) throw_input("grad_kernel_column: treatment must be a single column");
  Eigen::VectorXd out(A.rows());
  for (Eigen::Index i = 0; i < A.rows(); ++i) out(i) = grad_kernel(spec, A(i, 0), v);
  return out;
}

std::vector<double> median_lengthscales(const Eigen::MatrixXd& data) {
  if (data.rows() < 2) throw_input("median heuristic needs at least 2 rows");
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(data.rows()));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  if (rows.size() > kMedianSubsample) {
    std::mt19937_64 rng(0x6d656469616e5eedULL);
    std::shuffle(rows.begin(), rows.end(), rng);
    rows.resize(kMedianSubsample);
    std::sort(rows.begin(), rows.end());
  }
  const std::size_t m = rows.size();
  std::vector<double> out;
  std::vector<double> dist;
  dist.reserve(m * (m - 1) / 2);
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    dist.clear();
    for (std::size_t i = 0; i < m; ++i) {
      const double xi = data(rows[i], c);
      for (std::size_t j = i + 1; j < m; ++j) dist.push_back(std::abs(xi - data(rows[j], c)));
    }
    const double med = median_of(dist);
    out.push_back(med > 0.0 && std::isfinite(med) ? med : 1.0);
  }
  return out;
}

KernelSpec block_kernel(const Eigen::MatrixXd& block, const std::vector<ColumnSetting>& settings) {
  const auto cols = static_cast<std::size_t>(block.cols());
  if (cols == 0) throw_input("kernel block has no columns");
  if (!settings.empty() && settings.size() != cols) {
    throw_config("kernel block has " + std::to_string(cols) + " columns but " +
                 std::to_string(settings.size()) + " settings");
  }
  std::vector<std::size_t> cont;
  std::vector<std::size_t> disc;
  for (std::size_t c = 0; c < cols; ++c) {
    const bool discrete = !settings.empty() && settings[c].kind == ColumnKind::Discrete;
    (discrete ? disc : cont).push_back(c);
  }
  KernelSpec eq_part;
  if (!cont.empty()) {
    std::vector<double> ls(cont.size(), 0.0);
    std::vector<Eigen::Index> need;
    for (std::size_t j = 0; j < cont.size(); ++j) {
      if (!settings.empty() && settings[cont[j]].lengthscale) {
        ls[j] = *settings[cont[j]].lengthscale;
      } else {
        need.push_back(static_cast<Eigen::Index>(cont[j]));
      }
    }
    if (!need.empty()) {
      const std::vector<double> med = median_lengthscales(block(Eigen::all, need));
      std::size_t k = 0;
      for (std::size_t j = 0; j < cont.size(); ++j) {
        if (settings.empty() || !settings[cont[j]].lengthscale) ls[j] = med[k++];
      }
    }
    eq_part = KernelSpec::eq(std::move(ls));
    if (disc.empty()) return eq_part;
  }
  KernelSpec ind_part = KernelSpec::indicator(disc.size());
  if (cont.empty()) return ind_part;
  return KernelSpec::product({cont, disc}, {eq_part, ind_part});
}

}  // namespace seqkernel
