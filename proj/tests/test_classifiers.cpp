#include "cpt/classifier.hpp"
#include "cpt/parallel.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace cpt;
using testing::normal_matrix;

namespace {

ClassifierSpec logistic_with_ridge(double ridge, DesignKind design = DesignKind::main_effects)
{
  return ClassifierSpec{LogisticParams{design, ridge}};
}

TrainedModel forest_of_leaves(std::initializer_list<int> votes)
{
  ForestModel forest;
  for (int v : votes)
    forest.trees.push_back(DecisionTree{{TreeNode{.label = v}}});
  return TrainedModel{ClassifierSpec{ForestParams{}}, forest, 4, 1};
}

/// Central-difference gradient of the penalized objective.
Vector numeric_gradient(const Matrix& x, const Vector& y, const Vector& w, double ridge, double h)
{
  Vector g(w.size());
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    Vector up = w, down = w;
    up(j) += h;
    down(j) -= h;
    g(j) = (logistic_objective(x, y, up, ridge) - logistic_objective(x, y, down, ridge)) / (2 * h);
  }
  return g;
}

} // namespace

TEST_SUITE("classifiers")
{
  TEST_CASE("spec grammar round trips")
  {
    for (const char* text : {"logistic", "logistic2", "logistic2sq", "logistic:ridge=0.5", "knn:k=3",
                             "forest", "forest:trees=50,mtry=2,depth=4,min_leaf=2,seed_stream=9"}) {
      const ClassifierSpec s = parse_classifier(text);
      CHECK(to_string(parse_classifier(to_string(s))) == to_string(s));
    }
    CHECK(parse_classifier("forest").randomized());
    CHECK_FALSE(parse_classifier("knn").randomized());
    CHECK(std::get<ForestParams>(parse_classifier("forest:trees=7").params).trees == 7);
    CHECK(std::get<LogisticParams>(parse_classifier("logistic2").params).design == DesignKind::two_way);
    CHECK_THROWS_AS(parse_classifier("svm"), InvalidArgument);
    CHECK_THROWS_AS(parse_classifier("knn:k=0"), InvalidArgument);
    CHECK_THROWS_AS(parse_classifier("knn:depth=3"), InvalidArgument);
    CHECK_THROWS_AS(parse_classifier("logistic:ridge=-1"), InvalidArgument);
    CHECK_THROWS_AS(parse_classifier("forest:trees=abc"), InvalidArgument);
  }

  TEST_CASE("intercept-only fit recovers the log odds")
  {
    const Matrix x(4, 0);
    const Vector y = (Vector(4) << 1, 1, 1, 0).finished();
    const LogisticModel m = fit_logistic(x, y, 0.0);
    CHECK(m.converged);
    CHECK(m.weights(0) == doctest::Approx(std::log(3.0)).epsilon(1e-9));
  }

  TEST_CASE("separated data gives finite weights and perfect training accuracy")
  {
    const Matrix x = (Matrix(6, 1) << -3, -2, -1, 1, 2, 3).finished();
    const Labels t = (Labels(6) << 0, 0, 0, 1, 1, 1).finished();
    const TrainedModel m = train(logistic_with_ridge(1e-4), x, t, 0);
    const auto& w = std::get<LogisticModel>(m.state).weights;
    CHECK(w.allFinite());
    CHECK(classify_rows(m, x) == t);
  }

  TEST_CASE("1-nn reproduces its training labels")
  {
    Stream rng(3);
    const Matrix x = normal_matrix(30, 4, rng);
    Labels t(30);
    for (int i = 0; i < 30; ++i)
      t(i) = static_cast<int>(rng.below(2));
    const TrainedModel m = train(parse_classifier("knn:k=1"), x, t, 0);
    CHECK(classify_rows(m, x) == t);
  }

  TEST_CASE("tie rules")
  {
    TrainedModel zero{logistic_with_ridge(1.0), LogisticModel{Vector::Zero(3)}, 4, 2};
    Stream rng(1);
    const Matrix rows = normal_matrix(20, 2, rng);
    CHECK(classify_rows(zero, rows).isZero());

    CHECK(classify(forest_of_leaves({1, 1, 0}), RowVector::Zero(1)) == 1);
    CHECK(classify(forest_of_leaves({1, 0}), RowVector::Zero(1)) == 0);

    KnnModel knn{(Matrix(4, 1) << 0.0, 0.1, 0.2, 5.0).finished(), (Labels(4) << 0, 0, 1, 1).finished(), 3};
    CHECK(classify_knn(knn, RowVector::Zero(1)) == 0);
    knn.k = 2;
    knn.labels << 0, 1, 1, 1;
    CHECK(classify_knn(knn, RowVector::Zero(1)) == 0);
  }

  TEST_CASE("arity mismatch is rejected")
  {
    const Matrix x = Matrix::Identity(4, 2);
    const Labels t = (Labels(4) << 1, 0, 1, 0).finished();
    const TrainedModel m = train(parse_classifier("knn"), x, t, 0);
    CHECK_THROWS_AS(classify(m, RowVector::Zero(3)), InvalidArgument);
    CHECK_THROWS_AS(train(parse_classifier("logistic"), x, Labels::Zero(3), 0), InvalidArgument);
  }

  TEST_CASE("single-class training predicts that class")
  {
    Stream rng(8);
    const Matrix x = normal_matrix(10, 2, rng);
    for (const char* c : {"logistic", "forest:trees=5", "knn:k=3"}) {
      CHECK(classify_rows(train(parse_classifier(c), x, Labels::Ones(10), 1), x).isOnes());
      CHECK(classify_rows(train(parse_classifier(c), x, Labels::Zero(10), 1), x).isZero());
    }
  }

  TEST_CASE("log-likelihood values")
  {
    const Matrix none(2, 0);
    const Labels balanced = (Labels(2) << 1, 0).finished();
    const TrainedModel m = train(logistic_with_ridge(0.0), none, balanced, 0);
    CHECK(loglik(m, none, balanced) == doctest::Approx(2 * std::log(0.5)).epsilon(1e-12));

    const Matrix none6(6, 0);
    const TrainedModel zeros = train(logistic_with_ridge(0.0), none6, Labels::Zero(6), 0);
    const double ll = loglik(zeros, none6, Labels::Zero(6));
    CHECK(ll < 0.0);
    CHECK(ll > -1e-3);

    const TrainedModel knn = train(parse_classifier("knn"), Matrix::Identity(2, 2), balanced, 0);
    CHECK_THROWS_AS(loglik(knn, Matrix::Identity(2, 2), balanced), InvalidArgument);
  }

  TEST_CASE("nested fits never beat the full model")
  {
    Stream rng(21);
    for (int trial = 0; trial < 20; ++trial) {
      const Matrix x = normal_matrix(40, 4, rng);
      Labels t(40);
      for (int i = 0; i < 40; ++i)
        t(i) = rng.uniform() < 0.5 ? 1 : 0;
      t(0) = 1;
      t(1) = 0;
      const auto spec = logistic_with_ridge(1e-10);
      const Matrix nested = x.leftCols(2);
      const double full_ll = loglik(train(spec, x, t, 0), x, t);
      const double nested_ll = loglik(train(spec, nested, t, 0), nested, t);
      CHECK(full_ll >= nested_ll - 1e-9);
    }
  }

  TEST_CASE("analytic gradient matches finite differences")
  {
    Stream rng(77);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
      const auto n = static_cast<Eigen::Index>(5 + rng.below(36));
      const auto q = static_cast<Eigen::Index>(1 + rng.below(10));
      const Matrix x = normal_matrix(n, q, rng);
      Vector y(n);
      for (Eigen::Index i = 0; i < n; ++i)
        y(i) = rng.uniform() < 0.5 ? 1.0 : 0.0;
      Vector w(q + 1);
      for (Eigen::Index j = 0; j <= q; ++j)
        w(j) = 0.5 * rng.normal();
      const double ridge = 0.1 * rng.uniform();
      const Vector analytic = logistic_gradient(x, y, w, ridge);
      const Vector numeric = numeric_gradient(x, y, w, ridge, 1e-5);
      worst = std::max(worst, (analytic - numeric).norm() / std::max(1.0, analytic.norm()));
    }
    CHECK(worst < 1e-4);
  }

  TEST_CASE("penalized score vanishes at convergence")
  {
    Stream rng(4);
    for (int trial = 0; trial < 20; ++trial) {
      const Matrix x = normal_matrix(30, 5, rng);
      Vector y(30);
      for (int i = 0; i < 30; ++i)
        y(i) = rng.uniform() < 0.5 ? 1.0 : 0.0;
      const double ridge = 1e-4 * 30;
      const LogisticModel m = fit_logistic(x, y, ridge);
      REQUIRE(m.converged);
      CHECK(logistic_gradient(x, y, m.weights, ridge).lpNorm<Eigen::Infinity>() < 1e-6);
    }
  }

  TEST_CASE("forest is deterministic across worker counts")
  {
    Stream rng(12);
    const Matrix x = normal_matrix(60, 3, rng);
    Labels t(60);
    for (int i = 0; i < 60; ++i)
      t(i) = x(i, 0) * x(i, 1) > 0 ? 1 : 0;
    const auto spec = parse_classifier("forest:trees=40");
    const Matrix probe = normal_matrix(100, 3, rng);

    set_worker_count(1);
    const Labels serial = classify_rows(train(spec, x, t, 99), probe);
    set_worker_count(8);
    const Labels parallel = classify_rows(train(spec, x, t, 99), probe);
    set_worker_count(0);
    CHECK(serial == parallel);
    CHECK(classify_rows(train(spec, x, t, 98), probe) != serial);
  }

  TEST_CASE("forest fits random labels at least half the time")
  {
    Stream rng(31);
    for (int trial = 0; trial < 10; ++trial) {
      const Matrix x = normal_matrix(50, 3, rng);
      Labels t(50);
      for (int i = 0; i < 50; ++i)
        t(i) = static_cast<int>(rng.below(2));
      t(0) = 0;
      t(1) = 1;
      const TrainedModel m = train(parse_classifier("forest:trees=30"), x, t, trial);
      const double accuracy = (classify_rows(m, x).array() == t.array()).cast<double>().mean();
      CHECK(accuracy >= 0.5);
    }
  }

  TEST_CASE("knn is label symmetric for odd k")
  {
    Stream rng(17);
    const Matrix x = normal_matrix(40, 2, rng);
    Labels t(40);
    for (int i = 0; i < 40; ++i)
      t(i) = static_cast<int>(rng.below(2));
    const Matrix probe = normal_matrix(50, 2, rng);
    for (int k : {1, 3, 5}) {
      const auto spec = parse_classifier("knn:k=" + std::to_string(k));
      const Labels a = classify_rows(train(spec, x, t, 0), probe);
      const Labels flipped = (1 - t.array()).matrix();
      const Labels b = classify_rows(train(spec, x, flipped, 0), probe);
      CHECK((a.array() + b.array() == 1).all());
    }
  }

  TEST_CASE("interaction design separates a product rule")
  {
    Stream rng(2);
    const Matrix x = normal_matrix(200, 2, rng);
    Labels t(200);
    for (int i = 0; i < 200; ++i)
      t(i) = x(i, 0) * x(i, 1) > 0 ? 1 : 0;
    const auto main = parse_classifier("logistic");
    const auto inter = parse_classifier("logistic2");
    const auto acc = [&](const ClassifierSpec& s) {
      const Matrix f = prepare_features(s, x);
      return (classify_rows(train(s, f, t, 0), f).array() == t.array()).cast<double>().mean();
    };
    CHECK(acc(inter) > 0.9);
    CHECK(acc(main) < 0.7);
  }
}
