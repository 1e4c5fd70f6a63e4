// Exits 0 when LAPACKE_dsyevd returns a correct decomposition at n = 300.
#include <lapacke.h>

#include <cmath>
#include <cstdio>
#include <vector>

int main() {
  const int n = 300;
  std::vector<double> a(n * n), w(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      const double v = std::exp(-0.5 * (i - j) * (i - j) / 900.0) + (i == j ? 1e-3 : 0.0);
      a[i * n + j] = v;
      a[j * n + i] = v;
    }
  const std::vector<double> orig = a;
  if (LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', n, a.data(), n, w.data()) != 0) return 1;
  double err = 0.0;
  for (int k = 0; k < n; k += 7)
    for (int i = 0; i < n; ++i) {
      double av = 0.0;
      for (int j = 0; j < n; ++j) av += orig[i * n + j] * a[k * n + j];
      err = std::fmax(err, std::fabs(av - w[k] * a[k * n + i]));
    }
  std::printf("%g\n", err);
  return err < 1e-8 ? 0 : 1;
}
