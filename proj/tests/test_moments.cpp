#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "driftlabel/moments.hpp"
#include "driftlabel/rng.hpp"

using namespace driftlabel;

namespace {

EncodedMatrix encoded(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(rows.size(), rows.begin()->size());
    Eigen::Index i = 0;
    for (const auto& row : rows) {
        Eigen::Index j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return EncodedMatrix{std::move(m), 1};
}

// Independent oracle: two-pass centered covariance E[(o - nu)(o - nu)^T].
Matrix centered_covariance(const Matrix& values) {
    const Vector mean = values.colwise().mean();
    Matrix acc = Matrix::Zero(values.cols(), values.cols());
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        const Vector d = values.row(i).transpose() - mean;
        acc += d * d.transpose();
    }
    return acc / static_cast<double>(values.rows());
}

EncodedMatrix random_encoded(SplitRng& rng, int q, int m) {
    Matrix v(q, m);
    for (int i = 0; i < q; ++i) {
        for (int j = 0; j < m; ++j) {
            const auto r = rng.next_below(3);
            v(i, j) = r == 0 ? 0.0 : (r == 1 ? 1.0 : -1.0);
        }
    }
    return EncodedMatrix{std::move(v), 1};
}

}  // namespace

TEST_CASE("labeling rates are column means") {
    CHECK(labeling_rates(encoded({{1}, {1}, {1}, {1}}))(0) == 1.0);
    CHECK(labeling_rates(encoded({{1}, {-1}, {1}, {-1}}))(0) == 0.0);
    CHECK(labeling_rates(encoded({{1}, {0}, {-1}, {0}, {1}, {0}}))(0) ==
          doctest::Approx(1.0 / 6.0).epsilon(1e-15));
}

TEST_CASE("perfectly correlated columns give equal on/off diagonal") {
    const auto m = covariance(encoded({{1, 1}, {-1, -1}, {1, 1}, {-1, -1}, {1, 1}}));
    CHECK(m.sigma_o(0, 1) == doctest::Approx(m.sigma_o(0, 0)).epsilon(1e-15));
}

TEST_CASE("covariance of the four sign patterns is the identity") {
    const auto m = covariance(encoded({{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}));
    CHECK(m.nu.norm() == 0.0);
    CHECK((m.sigma_o - Matrix::Identity(2, 2)).norm() < 1e-15);
    CHECK(m.n == 4);
}

TEST_CASE("a constant column zeroes its covariance row and column") {
    const auto m = covariance(encoded({{1, 1}, {1, -1}, {1, 1}}));
    CHECK(m.sigma_o.row(0).norm() == doctest::Approx(0.0));
    CHECK(m.sigma_o.col(0).norm() == doctest::Approx(0.0));
}

TEST_CASE("covariance rejects single-example batches") {
    CHECK_THROWS_AS(covariance(encoded({{1, -1}})), DegenerateBatchError);
}

TEST_CASE("covariance matches the two-pass centered oracle") {
    SplitRng rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        const int q = 2 + static_cast<int>(rng.next_below(49));
        const int m = 1 + static_cast<int>(rng.next_below(6));
        const EncodedMatrix enc = random_encoded(rng, q, m);
        const auto est = covariance(enc);
        CHECK((est.sigma_o - centered_covariance(enc.values)).cwiseAbs().maxCoeff() <=
              1e-10);
        CHECK((est.sigma_o - est.sigma_o.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("empirical covariance is PSD up to noise") {
    SplitRng rng(22);
    for (int trial = 0; trial < 25; ++trial) {
        const EncodedMatrix enc = random_encoded(rng, 30, 5);
        const auto est = covariance(enc);
        Eigen::SelfAdjointEigenSolver<Matrix> es(est.sigma_o);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    }
}

TEST_CASE("regularized inverse on well-conditioned input") {
    CHECK((regularized_inverse(Matrix::Identity(3, 3), 1e-6) - Matrix::Identity(3, 3))
              .norm() < 1e-12);

    Matrix d = Vector{{2.0, 4.0}}.asDiagonal();
    const Matrix inv = regularized_inverse(d, 1e-6);
    CHECK(inv(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(inv(1, 1) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(inv(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("rank-deficient input gets the relative ridge") {
    Matrix a(2, 2);
    a << 1.0, 1.0, 1.0, 1.0;
    const double delta = 1e-6;  // eps_rel * trace / m = 1e-6 * 2 / 2
    const Matrix inv = regularized_inverse(a, 1e-6);
    // closed form for ((a + delta I))^-1 of the 2x2 all-ones matrix
    const double det = (1.0 + delta) * (1.0 + delta) - 1.0;
    CHECK(inv(0, 0) == doctest::Approx((1.0 + delta) / det).epsilon(1e-9));
    CHECK(inv(0, 1) == doctest::Approx(-1.0 / det).epsilon(1e-9));
    CHECK(inv.allFinite());

    Matrix shifted = a + delta * Matrix::Identity(2, 2);
    CHECK((inv * shifted - Matrix::Identity(2, 2)).norm() <= 1e-8);
}

TEST_CASE("inverse times shifted matrix is the identity") {
    SplitRng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix g(4, 4);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) g(i, j) = rng.next_gaussian();
        const Matrix a = g * g.transpose() + Matrix::Identity(4, 4);
        const Matrix inv = regularized_inverse(a, 1e-6);
        CHECK((inv * a - Matrix::Identity(4, 4)).norm() <= 1e-8);
    }
}

TEST_CASE("hopelessly singular input is rejected") {
    // trace 0 means the ridge is 0 and the zero matrix stays singular
    CHECK_THROWS_AS(regularized_inverse(Matrix::Zero(3, 3), 1e-6), NotInvertibleError);
}

TEST_CASE("class prior bookkeeping") {
    const ClassPrior u = ClassPrior::uninformative();
    CHECK(u.e_y == 0.0);
    CHECK(u.sigma_s == 1.0);
    const ClassPrior p = ClassPrior::from_class_probability(0.75);
    CHECK(p.e_y == doctest::Approx(0.5));
    CHECK(p.sigma_s == doctest::Approx(0.75));
}
