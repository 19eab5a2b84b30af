#include "cpt/dataset.hpp"
#include "cpt/design.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <filesystem>
#include <numeric>

using namespace cpt;

TEST_SUITE("dataset")
{
  TEST_CASE("four-row file parses")
  {
    const Dataset d = parse_csv("x1,x2,t\n1,2,1\n3,4,1\n5,6,0\n7,8,0\n", {.treatment_column = "t"});
    CHECK(d.n() == 4);
    CHECK(d.p() == 2);
    CHECK(d.n_treated() == 2);
    CHECK(d.n_control() == 2);
    CHECK(d.column_names == std::vector<std::string>{"x1", "x2"});
    CHECK(d.covariates(2, 1) == 6.0);
    CHECK_FALSE(d.blocks.has_value());
  }

  TEST_CASE("all-treated file is degenerate")
  {
    CHECK_THROWS_WITH_AS(parse_csv("x1,x2,t\n1,2,1\n3,4,1\n5,6,1\n7,8,1\n", {.treatment_column = "t"}),
                         doctest::Contains("degenerate treatment vector"), DataError);
  }

  TEST_CASE("block column yields blocks")
  {
    const Dataset d = parse_csv("x1,t,b\n1,1,A\n2,0,A\n3,1,B\n4,0,B\n",
                                {.treatment_column = "t", .block_column = "b"});
    REQUIRE(d.blocks.has_value());
    CHECK(d.blocks->count() == 2);
    CHECK(d.blocks->codes == std::vector<int>{0, 0, 1, 1});
    CHECK(d.p() == 1);
  }

  TEST_CASE("block with a single unit is rejected")
  {
    CHECK_THROWS_AS(parse_csv("x1,t,b\n1,1,A\n2,0,A\n3,1,B\n", {.treatment_column = "t", .block_column = "b"}),
                    DataError);
  }

  TEST_CASE("error paths name the problem")
  {
    CHECK_THROWS_AS(load_csv("/nonexistent/file.csv"), DataError);
    CHECK_THROWS_WITH_AS(parse_csv("x1,t\n1,1\n2,0\n", {.treatment_column = "treat"}),
                         doctest::Contains("'treat' not found"), DataError);
    CHECK_THROWS_WITH_AS(parse_csv("x1,t\n1,1\n2,2\n", {.treatment_column = "t"}),
                         doctest::Contains("row 3"), DataError);
    CHECK_THROWS_WITH_AS(parse_csv("x1,t\n1,1\nabc,0\n", {.treatment_column = "t"}),
                         doctest::Contains("row 3, column 'x1'"), DataError);
    CHECK_THROWS_WITH_AS(parse_csv("x1,t\n1,1\n,0\n", {.treatment_column = "t"}),
                         doctest::Contains("missing value"), DataError);
    CHECK_THROWS_AS(parse_csv("x1,t\n1,1\ninf,0\n", {.treatment_column = "t"}), DataError);
  }

  TEST_CASE("treatment accepts boolean tokens")
  {
    const Dataset d = parse_csv("x,t\n1,TRUE\n2,false\n3,yes\n", {.treatment_column = "t"});
    CHECK(d.treatment == (Labels(3) << 1, 0, 1).finished());
  }

  TEST_CASE("one-hot drops the lexicographically first level")
  {
    const Dataset d = parse_csv("x,color,t\n1,red,1\n2,blue,0\n3,green,1\n4,red,0\n",
                                {.treatment_column = "t", .one_hot = {"color"}});
    CHECK(d.column_names == std::vector<std::string>{"x", "color=green", "color=red"});
    CHECK(d.covariates.col(1) == Vector((Vector(4) << 0, 0, 1, 0).finished()));
    CHECK(d.covariates.col(2) == Vector((Vector(4) << 1, 0, 0, 1).finished()));
  }

  TEST_CASE("standardize gives zero mean and unit variance")
  {
    const Dataset d = parse_csv("x,y,t\n1,5,1\n2,5,0\n3,5,1\n6,5,0\n",
                                {.treatment_column = "t", .standardize = true});
    CHECK(std::abs(d.covariates.col(0).mean()) < 1e-12);
    CHECK(std::abs(d.covariates.col(0).squaredNorm() / 4.0 - 1.0) < 1e-12);
    CHECK(d.covariates.col(1).isZero());
  }

  TEST_CASE("csv round trip is bit exact")
  {
    Stream rng(5);
    Matrix x = testing::normal_matrix(12, 3, rng);
    x(0, 0) = 0.1;
    x(1, 1) = -1e-300;
    x(2, 2) = 123456789.123456789;
    std::vector<std::string> blocks;
    for (int i = 0; i < 12; ++i)
      blocks.push_back(i < 6 ? "north" : "south");
    Labels t = Labels::Zero(12);
    t(Eigen::seq(0, 11, 2)).setOnes();
    const Dataset d = make_dataset(x, t, make_blocks(blocks));

    const auto path = std::filesystem::temp_directory_path() / "cpt_roundtrip.csv";
    write_csv(d, path);
    const Dataset back = load_csv(path, {.block_column = "block"});
    std::filesystem::remove(path);
    CHECK(back.covariates == d.covariates);
    CHECK(back.treatment == d.treatment);
    CHECK(back.blocks->codes == d.blocks->codes);
    CHECK(back.column_names == d.column_names);
  }

  TEST_CASE("design widths")
  {
    CHECK(design_width(3, DesignKind::two_way) == 6);
    CHECK(design_width(1, DesignKind::two_way) == 1);
    for (Eigen::Index p = 1; p <= 50; ++p) {
      const Matrix x = Matrix::Ones(2, p);
      CHECK(expand_design(x, DesignKind::main_effects).cols() == p);
      CHECK(expand_design(x, DesignKind::two_way).cols() == p + p * (p - 1) / 2);
      CHECK(expand_design(x, DesignKind::two_way_squares).cols() == 2 * p + p * (p - 1) / 2);
    }
  }

  TEST_CASE("interaction columns are pair products in lexicographic order")
  {
    RowVector row(3);
    row << 2, 3, 5;
    const Matrix e = expand_design(row, DesignKind::two_way);
    REQUIRE(e.cols() == 6);
    CHECK(e(0, 3) == 6.0);
    CHECK(e(0, 4) == 10.0);
    CHECK(e(0, 5) == 15.0);
    const auto names = design_feature_names({"a", "b", "c"}, DesignKind::two_way_squares);
    CHECK(names == std::vector<std::string>{"a", "b", "c", "a:b", "a:c", "b:c", "a^2", "b^2", "c^2"});
  }

  TEST_CASE("expansion commutes with row permutations")
  {
    Stream rng(9);
    const Matrix x = testing::normal_matrix(10, 4, rng);
    std::vector<int> order(10);
    std::iota(order.begin(), order.end(), 0);
    for (int trial = 0; trial < 5; ++trial) {
      shuffle(order, rng);
      const Matrix permuted = x(order, Eigen::all);
      const Matrix lhs = expand_design(permuted, DesignKind::two_way);
      const Matrix rhs = expand_design(x, DesignKind::two_way)(order, Eigen::all);
      CHECK(lhs == rhs);
    }
  }
}
