#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "sdrnw/errors.hpp"
#include "sdrnw/reduction.hpp"
#include "sdrnw/rng.hpp"
#include "sdrnw/simulate.hpp"
#include "sdrnw/stats.hpp"

using namespace sdrnw;

namespace {

Eigen::MatrixXd normals(Eigen::Index rows, Eigen::Index cols, CounterRng& rng) {
    std::normal_distribution<double> nd;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = nd(rng);
    return m;
}

Eigen::MatrixXd random_orthogonal(Eigen::Index k, CounterRng& rng) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(normals(k, k, rng));
    return qr.householderQ() * Eigen::MatrixXd::Identity(k, k);
}

double abs_dot(const ReductionBasis& b, const Eigen::VectorXd& dir) {
    return std::abs(b.matrix().row(0).dot(dir.normalized()));
}

double semi_orthogonality(const ReductionBasis& b) {
    const auto d = static_cast<Eigen::Index>(b.d());
    return (b.matrix() * b.matrix().transpose() - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("pls_fit: recovers the covariance direction") {
    CounterRng rng(stream_key({101}));
    const Eigen::MatrixXd x = normals(10000, 2, rng);
    const Eigen::VectorXd y = x.col(0);
    const auto b = pls_fit(x, y, 1);
    CHECK(abs_dot(b, Eigen::Vector2d(1.0, 0.0)) >= 0.99);
    CHECK(semi_orthogonality(b) <= 1e-10);
    CHECK(b.matrix()(0, 0) > 0.0);  // sign convention
}

TEST_CASE("pls_fit: constant response is degenerate") {
    CounterRng rng(stream_key({102}));
    const Eigen::MatrixXd x = normals(50, 3, rng);
    CHECK_THROWS_AS(pls_fit(x, Eigen::VectorXd::Constant(50, 2.0), 1), DegenerateFitError);
    CHECK_THROWS_AS(pls_fit(x, Eigen::VectorXd::Constant(50, 2.0), 0), ArgumentError);
}

TEST_CASE("pls_fit: Model 1 direction is close to beta0 but not consistent") {
    // E[X (b'X)^2] = 0 under Model 1, so the population PLS weight vector is
    // zero and the first component is driven by sampling noise amplified
    // along the dominant eigenvector of Sigma. The alignment stays short of
    // the 0.99 level a consistent estimator would reach at n = 1000.
    const Model1 model;
    std::vector<double> dots;
    for (std::size_t rep = 0; rep < 100; ++rep) {
        const auto data = model.generate_stream(1000, stream_key({103, rep}));
        dots.push_back(abs_dot(pls_fit(data.x, data.y, 1), model.beta0().matrix().row(0).transpose()));
    }
    const double med = median(dots);
    CHECK(med >= 0.97);
    CHECK(med < 0.99);
}

TEST_CASE("pfc_fit: Model 2 recovers normalize(Delta^-1 A)") {
    const Model2 model;
    std::vector<double> dots;
    for (std::size_t rep = 0; rep < 100; ++rep) {
        const auto data = model.generate_stream(2000, stream_key({104, rep}));
        const auto b = pfc_fit(data.x, data.y, fy_linear_abs(), 1);
        CHECK(semi_orthogonality(b) <= 1e-10);
        dots.push_back(abs_dot(b, model.beta0().matrix().row(0).transpose()));
    }
    CHECK(median(dots) >= 0.95);
}

TEST_CASE("pfc_fit: exact one-dimensional fit and argument checks") {
    CounterRng rng(stream_key({105}));
    const Eigen::VectorXd y = normals(40, 1, rng).col(0);
    const Eigen::MatrixXd x = y;
    const auto b = pfc_fit(x, y, fy_polynomial(1), 1, 1e-6);
    CHECK(b.matrix()(0, 0) == doctest::Approx(1.0).epsilon(1e-15));

    const Eigen::MatrixXd small = normals(3, 1, rng);
    CHECK_THROWS_AS(pfc_fit(small, small.col(0), fy_polynomial(3), 1), ArgumentError);
    CHECK_THROWS_AS(pfc_fit(x, y, fy_linear_abs(), 1, -1.0), ArgumentError);

    // Collinear predictors leave a rank-deficient residual covariance.
    Eigen::MatrixXd coll(40, 3);
    const Eigen::VectorXd e = normals(40, 1, rng).col(0);
    coll.col(0) = y + e;
    coll.col(1) = 2.0 * e;
    coll.col(2) = -e;
    CHECK_THROWS_AS(pfc_fit(coll, y, fy_polynomial(1), 1, 0.0), NumericError);
}

TEST_CASE("sir_fit: linear single-index model") {
    CounterRng rng(stream_key({106}));
    const Eigen::MatrixXd x = normals(5000, 5, rng);
    Eigen::VectorXd beta(5);
    beta << 1.0, -2.0, 0.5, 0.0, 1.0;
    const Eigen::VectorXd y = x * beta + 0.5 * normals(5000, 1, rng).col(0);
    CHECK(abs_dot(sir_fit(x, y, 10, 1), beta) >= 0.95);
    CHECK_THROWS_AS(sir_fit(x.topRows(5), y.head(5), 10, 1), ArgumentError);
    CHECK(default_sir_slices(1000) == 10);
    CHECK(default_sir_slices(100) == 5);
}

TEST_CASE("projection_to_basis: exact projections") {
    CounterRng rng(stream_key({107}));
    const Eigen::MatrixXd q = random_orthogonal(6, rng);
    const auto b0 = ReductionBasis::from_rows(q.topRows(2), ReductionMethod::oracle);
    const auto p0 = ProjectionMatrix::from_basis(b0);
    const auto b = projection_to_basis(p0, 2);
    CHECK((b.matrix().transpose() * b.matrix() - p0.matrix()).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((p0.matrix() * b.matrix().transpose() - b.matrix().transpose()).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(principal_angles(b, b0).maxCoeff() <= 1e-8);

    const auto full = projection_to_basis(ProjectionMatrix(Eigen::MatrixXd::Identity(4, 4), 4), 4);
    CHECK(semi_orthogonality(full) <= 1e-15);

    CHECK_THROWS_AS(projection_to_basis(p0, 1), AmbiguousRankError);
    Eigen::MatrixXd bad = p0.matrix();
    bad(0, 1) += 1e-6;
    CHECK_THROWS_AS(ProjectionMatrix(bad, 2), ArgumentError);
}

TEST_CASE("projection_to_basis: round trip from every estimator") {
    const Model1 model;
    const auto data = model.generate_stream(500, stream_key({108}));
    for (auto b : {pls_fit(data.x, data.y, 2), sir_fit(data.x, data.y, 0, 2),
                   pfc_fit(data.x, data.y, fy_polynomial(2), 2)}) {
        CHECK(semi_orthogonality(b) <= 1e-10);
        const auto back = projection_to_basis(ProjectionMatrix::from_basis(b), 2);
        CHECK(principal_angles(back, b).maxCoeff() <= 1e-8);
    }
}

TEST_CASE("reduce: algebra") {
    const Eigen::RowVectorXd ones = Eigen::RowVectorXd::Ones(6);
    const auto b = ReductionBasis::from_rows(ones / std::sqrt(6.0), ReductionMethod::oracle);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(1, 6);
    CHECK(reduce(b, x)(0, 0) == doctest::Approx(std::sqrt(6.0)).epsilon(1e-15));

    const auto sel = ReductionBasis::from_rows(Eigen::MatrixXd::Identity(4, 4).topRows(2), ReductionMethod::given);
    CounterRng rng(stream_key({109}));
    const Eigen::MatrixXd z = normals(7, 4, rng);
    CHECK((reduce(sel, z) - z.leftCols(2)).cwiseAbs().maxCoeff() == 0.0);

    const Eigen::MatrixXd q = random_orthogonal(5, rng);
    const auto beta = ReductionBasis::from_rows(q.topRows(2), ReductionMethod::oracle);
    const Eigen::MatrixXd a = random_orthogonal(2, rng);
    const Eigen::MatrixXd x5 = normals(9, 5, rng);
    CHECK((reduce(beta.rotated(a), x5) - reduce(beta, x5) * a.transpose()).cwiseAbs().maxCoeff() <= 1e-13);
    CHECK_THROWS_AS(reduce(beta, z), ArgumentError);
}

TEST_CASE("orthonormalized: sign convention and rank loss") {
    Eigen::MatrixXd rows(2, 3);
    rows << -1.0, 2.0, 0.0, 0.0, -3.0, 1.0;
    const auto b = ReductionBasis::orthonormalized(rows, ReductionMethod::given);
    for (Eigen::Index i = 0; i < 2; ++i) {
        Eigen::Index j = 0;
        while (std::abs(b.matrix()(i, j)) < 1e-14) ++j;
        CHECK(b.matrix()(i, j) > 0.0);
    }
    Eigen::MatrixXd dup(2, 3);
    dup << 1.0, 2.0, 3.0, 2.0, 4.0, 6.0;
    CHECK_THROWS_AS(ReductionBasis::orthonormalized(dup, ReductionMethod::given), DegenerateFitError);
}

TEST_CASE("perturbed projections converge at the root-n rate") {
    const Model1 model;
    const auto est = perturbed_projection_estimator(model.beta0(), 1.0);
    std::vector<double> log_n;
    std::vector<double> log_angle;
    for (double n : {1e2, 1e3, 1e4, 1e5, 1e6}) {
        std::vector<double> angles;
        // The estimator only reads the sample size from X.
        const Eigen::MatrixXd fake = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), 1);
        for (std::size_t rep = 0; rep < 50; ++rep) {
            CounterRng rng(stream_key({110, static_cast<std::uint64_t>(n), rep}));
            angles.push_back(principal_angles(est(fake, Eigen::VectorXd(), rng), model.beta0())(0));
        }
        log_n.push_back(std::log(n));
        log_angle.push_back(std::log(median(angles)));
    }
    const double mx = mean(log_n);
    const double my = mean(log_angle);
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < log_n.size(); ++i) {
        sxy += (log_n[i] - mx) * (log_angle[i] - my);
        sxx += (log_n[i] - mx) * (log_n[i] - mx);
    }
    const double slope = sxy / sxx;
    CHECK(slope >= -0.7);
    CHECK(slope <= -0.3);
}
