#include <doctest.h>

#include <limits>

#include "omicscl/matrix.hpp"

using omicscl::Matrix;

TEST_CASE("matmul against hand-computed product") {
    const Matrix a{{1, 2, 3}, {4, 5, 6}};
    const Matrix b{{7, 8}, {9, 10}, {11, 12}};
    CHECK(omicscl::matmul(a, b) == Matrix{{58, 64}, {139, 154}});
    CHECK_THROWS_AS(omicscl::matmul(a, a), omicscl::DimensionError);
}

TEST_CASE("constructors validate sizes") {
    CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>{1, 2, 3}), omicscl::DimensionError);
    CHECK_THROWS(Matrix{{1, 2}, {3}});
    CHECK(Matrix::identity(2) == Matrix{{1, 0}, {0, 1}});
    CHECK(Matrix::scalar(3.5).item() == 3.5);
    CHECK_THROWS(Matrix(2, 1).item());
}

TEST_CASE("row normalization clips tiny rows instead of dividing by zero") {
    const Matrix m{{3, 4}, {0, 0}};
    const Matrix n = omicscl::row_l2_normalize(m);
    CHECK(n(0, 0) == doctest::Approx(0.6));
    CHECK(n(0, 1) == doctest::Approx(0.8));
    CHECK(n(1, 0) == 0.0);
    CHECK(n(1, 1) == 0.0);
}

TEST_CASE("select_rows, transpose, hconcat, column_means") {
    const Matrix m{{1, 2}, {3, 4}, {5, 6}};
    const std::vector<std::size_t> idx{2, 0};
    CHECK(m.select_rows(idx) == Matrix{{5, 6}, {1, 2}});
    CHECK(m.transpose() == Matrix{{1, 3, 5}, {2, 4, 6}});
    const std::vector<Matrix> blocks{m, Matrix{{7}, {8}, {9}}};
    CHECK(omicscl::hconcat(blocks) == Matrix{{1, 2, 7}, {3, 4, 8}, {5, 6, 9}});
    CHECK(omicscl::column_means(m) == std::vector<double>{3, 4});
    CHECK_THROWS_AS(m.select_rows(std::vector<std::size_t>{3}), omicscl::DimensionError);
}

TEST_CASE("all_finite flags NaN and infinity") {
    Matrix m(2, 2, 1.0);
    CHECK(m.all_finite());
    m(1, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_FALSE(m.all_finite());
}
