#include "cpt/stats.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>

using namespace cpt;
using testing::group_labels;
using testing::normal_matrix;

namespace {

// Independent 1-NN: nearest training row by squared distance, first index on ties.
int nearest_label(const Matrix& train_x, const Labels& train_y, const RowVector& x)
{
  Eigen::Index best = 0;
  double best_d = (train_x.row(0) - x).squaredNorm();
  for (Eigen::Index i = 1; i < train_x.rows(); ++i) {
    const double d = (train_x.row(i) - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return train_y(best);
}

// Averages the holdout accuracy over every within-group ordering, holding
// out the last kappa rows of each group.
double brute_force_out_sample(const Matrix& x, const Labels& t, int kappa)
{
  std::vector<Eigen::Index> treated, control;
  for (Eigen::Index i = 0; i < t.size(); ++i)
    (t(i) ? treated : control).push_back(i);
  double total = 0.0;
  long count = 0;
  std::vector<Eigen::Index> pt = treated;
  do {
    std::vector<Eigen::Index> pc = control;
    do {
      std::vector<Eigen::Index> train_rows(pt.begin(), pt.end() - kappa);
      train_rows.insert(train_rows.end(), pc.begin(), pc.end() - kappa);
      std::sort(train_rows.begin(), train_rows.end());
      const Matrix tx = x(train_rows, Eigen::all);
      const Labels ty = t(train_rows);
      int correct = 0;
      for (auto it = pt.end() - kappa; it != pt.end(); ++it)
        correct += nearest_label(tx, ty, x.row(*it)) == 1;
      for (auto it = pc.end() - kappa; it != pc.end(); ++it)
        correct += nearest_label(tx, ty, x.row(*it)) == 0;
      total += correct / (2.0 * kappa);
      ++count;
    } while (std::next_permutation(pc.begin(), pc.end()));
  } while (std::next_permutation(pt.begin(), pt.end()));
  return total / static_cast<double>(count);
}

StatSpec out_spec(int kappa, bool exact, int partitions = 30)
{
  return StatSpec{StatKind::out_of_sample, kappa, partitions, exact};
}

} // namespace

TEST_SUITE("stats")
{
  TEST_CASE("kappa defaults and bounds")
  {
    CHECK(default_kappa(100, 100) == 20);
    CHECK(default_kappa(3, 40) == 1);
    CHECK(default_kappa(2, 2) == 1);
    CHECK(resolve_kappa(StatSpec{StatKind::out_of_sample, 4}, 5, 9) == 4);
    CHECK_THROWS_AS(resolve_kappa(StatSpec{StatKind::out_of_sample, 5}, 5, 9), InvalidArgument);
    CHECK_THROWS_AS(resolve_kappa(StatSpec{StatKind::out_of_sample, 0}, 5, 9), InvalidArgument);
  }

  TEST_CASE("combinations")
  {
    CHECK(choose(8, 4) == 70.0);
    CHECK(choose(50, 25) == 126410606437752.0);
    int visits = 0;
    std::vector<Eigen::Index> last;
    for_each_combination(5, 3, [&](const std::vector<Eigen::Index>& c) {
      ++visits;
      CHECK(std::is_sorted(c.begin(), c.end()));
      if (!last.empty())
        CHECK(std::lexicographical_compare(last.begin(), last.end(), c.begin(), c.end()));
      last = c;
    });
    CHECK(visits == 10);
  }

  TEST_CASE("1-nn in-sample accuracy is one on distinct rows")
  {
    Stream rng(1);
    const Matrix x = normal_matrix(25, 3, rng);
    Labels t = group_labels(12, 13);
    CHECK(stat_in_sample(parse_classifier("knn:k=1"), x, t, 0) == 1.0);
  }

  TEST_CASE("constant covariates give one half")
  {
    const Matrix x = Matrix::Constant(10, 2, 3.0);
    CHECK(stat_in_sample(parse_classifier("logistic"), x, group_labels(5, 5), 0) == 0.5);
  }

  TEST_CASE("separable four-point data")
  {
    const Matrix x = (Matrix(4, 1) << 1, 2, -1, -2).finished();
    const Labels t = group_labels(2, 2);
    CHECK(stat_in_sample(parse_classifier("logistic"), x, t, 0) == 1.0);
  }

  TEST_CASE("exact out-of-sample matches the ordering oracle")
  {
    Stream rng(5);
    for (auto [l, m, kappa] : {std::tuple{2, 2, 1}, std::tuple{3, 4, 2}, std::tuple{4, 3, 1}}) {
      const Matrix x = normal_matrix(l + m, 2, rng);
      Labels t = group_labels(l, m);
      // Interleave labels so groups are not contiguous.
      std::vector<Eigen::Index> order(static_cast<std::size_t>(l + m));
      std::iota(order.begin(), order.end(), 0);
      shuffle(order, rng);
      t = Labels(t(order));
      const double expected = brute_force_out_sample(x, t, kappa);
      const double actual = stat_out_sample(parse_classifier("knn:k=1"), x, t, out_spec(kappa, true), 0);
      CHECK(actual == doctest::Approx(expected).epsilon(1e-12));
    }
  }

  TEST_CASE("separated groups score one in every partition")
  {
    Matrix x(10, 1);
    x << 5, 6, 7, 8, 9, -5, -6, -7, -8, -9;
    const Labels t = group_labels(5, 5);
    for (int kappa = 1; kappa < 5; ++kappa) {
      CHECK(stat_out_sample(parse_classifier("logistic"), x, t, out_spec(kappa, true), 0) == 1.0);
      CHECK(stat_out_sample(parse_classifier("logistic"), x, t, out_spec(kappa, false), 3) == 1.0);
    }
  }

  TEST_CASE("same-distribution holdout accuracy averages one half")
  {
    Stream rng(9);
    const auto spec = parse_classifier("knn:k=1");
    double sum = 0.0;
    const int draws = 500;
    for (int r = 0; r < draws; ++r) {
      const Matrix x = normal_matrix(10, 2, rng);
      sum += stat_out_sample(spec, x, group_labels(5, 5), out_spec(4, false, 10), r);
    }
    CHECK(std::abs(sum / draws - 0.5) <= 0.05);
  }

  TEST_CASE("Monte Carlo partitions converge to the exact average")
  {
    Stream rng(13);
    const auto spec = parse_classifier("logistic");
    for (int trial = 0; trial < 3; ++trial) {
      Matrix x = normal_matrix(12, 2, rng);
      x.topRows(6).array() += 0.7;
      const Labels t = group_labels(6, 6);
      const double exact = stat_out_sample(spec, x, t, out_spec(2, true), 0);
      const double mc = stat_out_sample(spec, x, t, out_spec(2, false, 2000), trial);
      CHECK(std::abs(exact - mc) <= 0.01);
    }
  }

  TEST_CASE("exact mode ignores within-group row order")
  {
    Stream rng(23);
    const Matrix x = normal_matrix(11, 3, rng);
    const Labels t = group_labels(5, 6);
    const auto spec = parse_classifier("logistic2");
    const double base = stat_out_sample(spec, prepare_features(spec, x), t, out_spec(2, true), 0);
    std::vector<Eigen::Index> order(11);
    std::iota(order.begin(), order.end(), 0);
    std::reverse(order.begin(), order.begin() + 5);
    std::rotate(order.begin() + 5, order.begin() + 7, order.end());
    const Matrix permuted = x(order, Eigen::all);
    const double moved = stat_out_sample(spec, prepare_features(spec, permuted), t, out_spec(2, true), 0);
    CHECK(moved == doctest::Approx(base).epsilon(1e-12));
  }

  TEST_CASE("statistics stay on their lattice")
  {
    Stream rng(41);
    for (int trial = 0; trial < 20; ++trial) {
      const Matrix x = normal_matrix(14, 2, rng);
      const Labels t = group_labels(6, 8);
      const double s_in = stat_in_sample(parse_classifier("logistic"), x, t, trial);
      CHECK(s_in >= 0.0);
      CHECK(s_in <= 1.0);
      CHECK(std::abs(s_in * 14 - std::round(s_in * 14)) < 1e-9);
      const int partitions = 7, kappa = 2;
      const double s_out =
          stat_out_sample(parse_classifier("knn:k=3"), x, t, out_spec(kappa, false, partitions), trial);
      CHECK(s_out >= 0.0);
      CHECK(s_out <= 1.0);
      const double units = s_out * 2 * kappa * partitions;
      CHECK(std::abs(units - std::round(units)) < 1e-9);
    }
  }

  TEST_CASE("exact mode refuses oversized enumerations")
  {
    Stream rng(2);
    const Matrix x = normal_matrix(60, 1, rng);
    CHECK_THROWS_AS(stat_out_sample(parse_classifier("logistic"), x, group_labels(30, 30), out_spec(5, true), 0),
                    InvalidArgument);
  }
}
