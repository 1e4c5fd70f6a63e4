#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "seqkernel/embeddings.hpp"
#include "seqkernel/errors.hpp"
#include "seqkernel/kernels.hpp"
#include "seqkernel/ridge.hpp"

using namespace seqkernel;

TEST_CASE("fit_cme scalar and orthonormal cases") {
  const ConditionalEmbeddingFit one = fit_cme(Eigen::MatrixXd::Constant(1, 1, 1.0), 0.25);
  CHECK(embedding_weights(one, Eigen::VectorXd(Eigen::VectorXd::Constant(1, 0.6)))(0) == doctest::Approx(0.6 / 1.25).epsilon(1e-15));

  const ConditionalEmbeddingFit eye = fit_cme(Eigen::MatrixXd::Identity(6, 6), 0.1);
  const Eigen::VectorXd k = fixtures::normal_matrix(6, 1, 1).col(0);
  CHECK((embedding_weights(eye, k) - k / 1.6).cwiseAbs().maxCoeff() <= 1e-15);

  CHECK_THROWS_AS(fit_cme(Eigen::MatrixXd::Identity(3, 3), 0.0), ConfigError);
  CHECK_THROWS_AS(fit_cme(Eigen::MatrixXd::Zero(2, 3), 0.1), InputError);
  CHECK_THROWS_AS(embedding_weights(eye, Eigen::VectorXd(Eigen::VectorXd::Ones(2))), InputError);
}

TEST_CASE("embedding weights match a dense solve") {
  const Eigen::MatrixXd B = fixtures::normal_matrix(40, 2, 2);
  const Eigen::MatrixXd K = gram(block_kernel(B), B).entries;
  const Eigen::MatrixXd Q = fixtures::normal_matrix(5, 2, 3);
  const Eigen::MatrixXd Kq = gram(block_kernel(B), B, Q).entries;
  const ConditionalEmbeddingFit fit = fit_cme(K, 0.01);
  Eigen::MatrixXd R = K;
  R.diagonal().array() += 40 * 0.01;
  const Eigen::MatrixXd expect = oracle::solve(R, Kq);
  const Eigen::MatrixXd got = embedding_weights(fit, Kq);
  CHECK((got - expect).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, expect.cwiseAbs().maxCoeff()));
  for (Eigen::Index j = 0; j < 5; ++j) {
    const Eigen::VectorXd w = embedding_weights(fit, Eigen::VectorXd(Kq.col(j)));
    CHECK((R * w - Kq.col(j)).norm() <= 1e-8 * Kq.col(j).norm());
  }
}

TEST_CASE("embedding weights interpolate and vanish") {
  const ConditionalEmbeddingFit fit = fit_cme(Eigen::MatrixXd::Identity(5, 5), 1e-12);
  const Eigen::VectorXd w = embedding_weights(fit, Eigen::VectorXd(Eigen::VectorXd::Unit(5, 2)));
  CHECK((w - Eigen::VectorXd::Unit(5, 2)).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(embedding_weights(fit, Eigen::VectorXd(Eigen::VectorXd::Zero(5))) == Eigen::VectorXd::Zero(5));
}

TEST_CASE("embedding weights are linear in the query") {
  const Eigen::MatrixXd B = fixtures::normal_matrix(30, 1, 4);
  const ConditionalEmbeddingFit fit = fit_cme(gram(block_kernel(B), B).entries, 0.02);
  const Eigen::VectorXd k1 = fixtures::normal_matrix(30, 1, 5).col(0);
  const Eigen::VectorXd k2 = fixtures::normal_matrix(30, 1, 6).col(0);
  const Eigen::VectorXd lhs = embedding_weights(fit, Eigen::VectorXd(1.5 * k1 - 0.25 * k2));
  const Eigen::VectorXd rhs = 1.5 * embedding_weights(fit, k1) - 0.25 * embedding_weights(fit, k2);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("conditional mean of a Gaussian linear model is recovered") {
  const Eigen::Index n = 500;
  const Eigen::MatrixXd B = fixtures::normal_matrix(n, 1, 7);
  const Eigen::MatrixXd A = 2.0 * B + 0.5 * fixtures::normal_matrix(n, 1, 8);
  const KernelSpec kb = block_kernel(B);
  const Eigen::MatrixXd K = gram(kb, B).entries;
  const Eigen::MatrixXd KA = gram(block_kernel(A), A).entries;
  const ConditionalEmbeddingFit fit = fit_cme(K, tune_lambda_matrix(K, KA, default_lambda_grid()));
  double worst = 0.0;
  for (double b : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
    const Eigen::VectorXd w = embedding_weights(fit, kernel_column(kb, B, b));
    worst = std::max(worst, std::fabs(w.dot(A.col(0)) - 2.0 * b));
  }
  CHECK(worst <= 0.1);
}

TEST_CASE("mean_embedding_weights") {
  CHECK(mean_embedding_weights(4) == Eigen::VectorXd::Constant(4, 0.25));
  CHECK(mean_embedding_weights(1) == Eigen::VectorXd::Constant(1, 1.0));
  for (Eigen::Index n : {3, 7, 1000}) CHECK(mean_embedding_weights(n).sum() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(mean_embedding_weights(0), InputError);
}

TEST_CASE("sequential embedding reproduces the discrete mediation formula") {
  const MediationData data = fixtures::binary_mediation(2000, 9);
  const Eigen::Index n = data.n();
  const KernelSpec ind = KernelSpec::indicator();
  const Eigen::MatrixXd KDD = gram(ind, data.d).entries;
  const Eigen::MatrixXd KXX = gram(ind, data.x).entries;
  const ConditionalEmbeddingFit fit = fit_cme(KDD.cwiseProduct(KXX), 1e-8);
  auto f = [](double m, double x) { return 1.0 + 2.0 * m - 0.7 * x + 3.0 * m * x; };

  Eigen::MatrixXd cols(n, 3);
  cols << data.d, data.m, data.x;
  const oracle::FrequencyTable table(cols, data.y);
  for (double d : {0.0, 1.0}) {
    double inner = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd q = kernel_column(ind, data.d, d).cwiseProduct(KXX.col(i));
      const Eigen::VectorXd w = embedding_weights(fit, q);
      for (Eigen::Index j = 0; j < n; ++j) inner += w(j) * f(data.m(j, 0), data.x(i, 0));
    }
    inner /= static_cast<double>(n);
    double expect = 0.0;
    for (double m : {0.0, 1.0})
      for (double x : {0.0, 1.0})
        expect += f(m, x) * table.conditional(1, m, {0, 2}, {d, x}) * table.marginal(2, x);
    CHECK(inner == doctest::Approx(expect).epsilon(1e-3));
  }
}
