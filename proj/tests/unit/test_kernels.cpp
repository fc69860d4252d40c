#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "sdrnw/errors.hpp"
#include "sdrnw/kernels.hpp"
#include "sdrnw/quadrature.hpp"
#include "sdrnw/rng.hpp"
#include "sdrnw/stats.hpp"

using namespace sdrnw;

namespace {

constexpr std::array kBuiltins{ProfileName::triweight_poly3, ProfileName::epanechnikov, ProfileName::biweight,
                               ProfileName::uniform};

RadialKernel builtin(ProfileName p, std::size_t d) { return make_kernel(KernelProfile::builtin(p), d); }

// Jittered-grid Monte Carlo estimate of int K over [-1, 1]^d: one uniform
// draw per cell, so the estimator is unbiased with a tiny variance.
double stratified_mass(const RadialKernel& k, std::size_t cells_per_axis, std::uint64_t seed) {
    const std::size_t d = k.dim();
    CounterRng rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double width = 2.0 / static_cast<double>(cells_per_axis);
    std::size_t total = 1;
    for (std::size_t i = 0; i < d; ++i) total *= cells_per_axis;
    std::vector<double> u(d);
    double sum = 0.0;
    for (std::size_t cell = 0; cell < total; ++cell) {
        std::size_t rest = cell;
        for (std::size_t i = 0; i < d; ++i) {
            u[i] = -1.0 + width * (static_cast<double>(rest % cells_per_axis) + unif(rng));
            rest /= cells_per_axis;
        }
        sum += k.eval(u);
    }
    return sum * std::pow(width, static_cast<double>(d));
}

}  // namespace

TEST_CASE("quadrature: Gauss-Legendre exactness and adaptive convergence") {
    const auto rule = quadrature::gauss_legendre(5);
    double s = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * std::pow(rule.nodes[i], 8);
    CHECK(s == doctest::Approx(2.0 / 9.0).epsilon(1e-15));
    const auto r = quadrature::integrate([](double x) { return std::exp(x); }, 0.0, 1.0);
    CHECK(r.converged);
    CHECK(std::abs(r.value - (std::numbers::e - 1.0)) < 1e-14);
}

TEST_CASE("stats: normal quantiles") {
    CHECK(std::abs(normal_quantile(0.975) - oracle::z_975) < 1e-9);
    CHECK(std::abs(two_sided_z(0.5) - oracle::z_75) < 1e-9);
    CHECK(std::abs(normal_quantile(0.5)) < 1e-12);
    CHECK(std::abs(normal_quantile(1e-10) + normal_quantile(1.0 - 1e-10)) < 1e-6);
    const std::vector<double> v{4.0, 1.0, 3.0, 2.0};
    CHECK(median(v) == doctest::Approx(2.5));
    CHECK(quantile(v, 0.25) == doctest::Approx(1.75));
}

TEST_CASE("make_kernel: closed-form normalization constants") {
    CHECK(std::abs(builtin(ProfileName::triweight_poly3, 1).norm_const() - oracle::triweight_norm_d1) <= 1e-10);
    CHECK(std::abs(builtin(ProfileName::triweight_poly3, 2).norm_const() - oracle::triweight_norm_d2) <= 1e-12);
    CHECK(std::abs(builtin(ProfileName::triweight_poly3, 3).norm_const() - oracle::triweight_norm_d3) <= 1e-12);
    CHECK(std::abs(builtin(ProfileName::uniform, 1).norm_const() - oracle::uniform_norm_d1) <= 1e-12);
    CHECK(std::abs(builtin(ProfileName::epanechnikov, 1).norm_const() - oracle::epanechnikov_norm_d1) <= 1e-12);
    CHECK(std::abs(builtin(ProfileName::biweight, 1).norm_const() - oracle::biweight_norm_d1) <= 1e-12);
}

TEST_CASE("make_kernel: variance constants and moments") {
    const auto k = builtin(ProfileName::triweight_poly3, 1);
    CHECK(std::abs(k.l2_const() - oracle::triweight_l2_d1) <= 1e-10);
    CHECK(k.moment_order() == 2);
    CHECK(std::abs(k.second_moment() - oracle::triweight_mu2) <= 1e-12);
    for (auto p : kBuiltins)
        for (std::size_t d = 1; d <= 3; ++d) {
            const auto kk = builtin(p, d);
            CHECK(kk.l2_const() > 0.0);
            CHECK(std::isfinite(kk.l2_const()));
            CHECK(kk.moment_order() == 2);
        }
}

TEST_CASE("make_kernel: normalization agrees with a Monte Carlo oracle") {
    const std::array<std::size_t, 4> cells{0, 100000, 1000, 126};
    for (auto p : kBuiltins)
        for (std::size_t d = 1; d <= 3; ++d) {
            const auto k = builtin(p, d);
            const double mc = stratified_mass(k, cells[d], stream_key({17, d, static_cast<std::uint64_t>(p)}));
            CAPTURE(to_string(p));
            CAPTURE(d);
            CHECK(std::abs(mc - 1.0) <= 1e-3);
            const auto rep = validate_conditions(k);
            CHECK(rep.find("integral_one")->pass);
            CHECK(rep.find("integral_one")->value <= 1e-8);
        }
}

TEST_CASE("make_kernel: l2 constant inside a Monte Carlo 3-sigma band") {
    for (std::size_t d = 1; d <= 2; ++d) {
        const auto k = builtin(ProfileName::triweight_poly3, d);
        CounterRng rng(stream_key({23, d}));
        std::uniform_real_distribution<double> unif(-1.0, 1.0);
        const std::size_t m = 1000000;
        double s = 0.0;
        double s2 = 0.0;
        std::vector<double> u(d);
        for (std::size_t i = 0; i < m; ++i) {
            for (auto& ui : u) ui = unif(rng);
            const double v = std::pow(2.0, static_cast<double>(d)) * std::pow(k.eval(u), 2);
            s += v;
            s2 += v * v;
        }
        const double mean = s / m;
        const double se = std::sqrt((s2 / m - mean * mean) / m);
        CAPTURE(d);
        CHECK(std::abs(k.l2_const() - mean) <= 3.0 * se + 1e-6);
    }
}

TEST_CASE("eval: values, support and radial symmetry") {
    const auto k1 = builtin(ProfileName::triweight_poly3, 1);
    const std::array<double, 1> zero{0.0};
    CHECK(k1.eval(zero) == doctest::Approx(oracle::triweight_norm_d1).epsilon(1e-14));
    for (auto p : kBuiltins) {
        const auto k = builtin(p, 2);
        const std::array<double, 2> far{2.0 * k.support_radius(), 0.0};
        CHECK(k.eval(far) == 0.0);
    }
    const auto k2 = builtin(ProfileName::triweight_poly3, 2);
    const double th = 0.7;
    const std::array<double, 2> u{0.3, -0.4};
    const std::array<double, 2> au{std::cos(th) * u[0] - std::sin(th) * u[1], std::sin(th) * u[0] + std::cos(th) * u[1]};
    CHECK(k2.eval(u) == doctest::Approx(k2.eval(au)).epsilon(1e-15));
    const std::array<double, 3> wrong{0.0, 0.0, 0.0};
    CHECK_THROWS_AS(k2.eval(wrong), ArgumentError);
}

TEST_CASE("validate_conditions: smooth and non-smooth profiles") {
    const auto rep = validate_conditions(builtin(ProfileName::triweight_poly3, 1));
    CHECK(rep.all_pass());
    CHECK(rep.find("odd_gradient_integral")->value <= 1e-10);
    CHECK(rep.find("first_moment")->value <= 1e-8);
    CHECK(builtin(ProfileName::triweight_poly3, 3).smooth());

    const auto uni = validate_conditions(builtin(ProfileName::uniform, 1));
    CHECK_FALSE(uni.all_pass());
    CHECK_FALSE(uni.find("slope_bound")->pass);
    CHECK_FALSE(uni.find("edge_smoothness")->pass);
    CHECK_FALSE(builtin(ProfileName::uniform, 1).smooth());
    CHECK_FALSE(builtin(ProfileName::epanechnikov, 2).smooth());
}

TEST_CASE("custom profile: 1 - t^2 normalizes with c = 3/4") {
    const auto prof = KernelProfile::custom([](double t) { return t < 1.0 ? 1.0 - t * t : 0.0; }, 1.0, 0);
    const auto k = make_kernel(prof, 1);
    CHECK(std::abs(k.norm_const() - 0.75) <= 1e-12);
    CHECK(validate_conditions(k).find("integral_one")->pass);
}

TEST_CASE("make_kernel: rejects non-integrable profiles") {
    const auto negative = KernelProfile::custom([](double t) { return t < 1.0 ? -(1.0 - t * t) : 0.0; }, 1.0, 0);
    CHECK_THROWS_AS(make_kernel(negative, 1), DomainError);
    const auto nan = KernelProfile::custom([](double) { return std::nan(""); }, 1.0, 0);
    CHECK_THROWS_AS(make_kernel(nan, 2), DomainError);
    CHECK_THROWS_AS(make_kernel(KernelProfile::builtin(ProfileName::triweight_poly3), 0), ArgumentError);
}
