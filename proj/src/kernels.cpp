#include "sdrnw/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "sdrnw/errors.hpp"
#include "sdrnw/quadrature.hpp"

namespace sdrnw {

namespace {

constexpr double kQuadTol = 1e-12;
constexpr double kQuadFailTol = 1e-10;
constexpr std::size_t kSlopeGrid = 10000;

double radial_integral(const std::function<double(double)>& g, double radius,
                       const char* what) {
    const auto res = quadrature::integrate(g, 0.0, radius, kQuadTol);
    if (!std::isfinite(res.value))
        throw DomainError(std::string("kernel profile is not integrable (") + what + ")");
    if (!res.converged && res.last_change > kQuadFailTol * std::max(1.0, std::abs(res.value))) {
        std::ostringstream msg;
        msg << "radial quadrature for " << what << " did not converge: change "
            << res.last_change << " after " << res.nodes << " nodes";
        throw NumericError(msg.str());
    }
    return res.value;
}

// int over S^(d-1) of theta_1. Zero analytically; evaluated with a symmetric
// Gauss-Legendre rule over the polar angle so the check is numeric.
double angular_first_moment(std::size_t d) {
    if (d == 1) return 0.0;  // unused: d = 1 is integrated directly
    const auto rule = quadrature::gauss_legendre(64);
    const double half = 0.5 * std::numbers::pi;
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double phi = half + half * rule.nodes[i];
        sum += rule.weights[i] * std::cos(phi) * std::pow(std::sin(phi), static_cast<double>(d) - 2.0);
    }
    return half * sum * unit_sphere_area(d - 1);
}

}  // namespace

std::string to_string(ProfileName name) {
    switch (name) {
        case ProfileName::triweight_poly3: return "triweight_poly3";
        case ProfileName::epanechnikov: return "epanechnikov";
        case ProfileName::biweight: return "biweight";
        case ProfileName::uniform: return "uniform";
        case ProfileName::custom: return "custom";
    }
    return "custom";
}

ProfileName profile_from_string(std::string_view name) {
    if (name == "triweight_poly3" || name == "triweight") return ProfileName::triweight_poly3;
    if (name == "epanechnikov") return ProfileName::epanechnikov;
    if (name == "biweight") return ProfileName::biweight;
    if (name == "uniform") return ProfileName::uniform;
    throw ArgumentError("unknown kernel profile '" + std::string(name) +
                        "' (expected triweight_poly3, epanechnikov, biweight, uniform)");
}

KernelProfile KernelProfile::builtin(ProfileName name) {
    KernelProfile p;
    p.name = name;
    p.support_radius = 1.0;
    switch (name) {
        case ProfileName::triweight_poly3:
            p.raw = [](double t) { const double v = 1.0 - t * t; return v * v * v; };
            p.derivative = [](double t) { const double v = 1.0 - t * t; return -6.0 * t * v * v; };
            p.smoothness_order = 2;
            break;
        case ProfileName::epanechnikov:
            p.raw = [](double t) { return 1.0 - t * t; };
            p.derivative = [](double t) { return -2.0 * t; };
            p.smoothness_order = 0;
            break;
        case ProfileName::biweight:
            p.raw = [](double t) { const double v = 1.0 - t * t; return v * v; };
            p.derivative = [](double t) { return -4.0 * t * (1.0 - t * t); };
            p.smoothness_order = 1;
            break;
        case ProfileName::uniform:
            p.raw = [](double) { return 1.0; };
            p.derivative = [](double) { return 0.0; };
            p.smoothness_order = -1;
            break;
        case ProfileName::custom:
            throw ArgumentError("custom profiles are built with KernelProfile::custom");
    }
    return p;
}

KernelProfile KernelProfile::custom(std::function<double(double)> raw, double support_radius,
                                    int smoothness_order,
                                    std::function<double(double)> derivative) {
    KernelProfile p;
    p.name = ProfileName::custom;
    p.raw = std::move(raw);
    p.derivative = std::move(derivative);
    p.support_radius = support_radius;
    p.smoothness_order = smoothness_order;
    return p;
}

double KernelProfile::value(double t) const {
    t = std::abs(t);
    return t > support_radius ? 0.0 : raw(t);
}

double KernelProfile::slope(double t) const {
    const double a = std::abs(t);
    if (a >= support_radius) return 0.0;
    if (derivative) return derivative(t);
    const double h = 1e-6 * std::max(1.0, support_radius);
    return (value(t + h) - value(t - h)) / (2.0 * h);
}

double unit_sphere_area(std::size_t d) {
    const double half = 0.5 * static_cast<double>(d);
    return 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
}

double RadialKernel::eval(std::span<const double> u) const {
    if (u.size() != dim_) {
        std::ostringstream msg;
        msg << "kernel of dimension " << dim_ << " evaluated at a vector of length " << u.size();
        throw ArgumentError(msg.str());
    }
    double sq = 0.0;
    for (double x : u) sq += x * x;
    return at_radius(std::sqrt(sq));
}

RadialKernel make_kernel(const KernelProfile& profile, std::size_t dim) {
    if (dim < 1) throw ArgumentError("kernel dimension must be >= 1");
    if (!(profile.support_radius > 0.0) || !std::isfinite(profile.support_radius))
        throw ArgumentError("kernel profile needs a positive finite support radius");
    if (!profile.raw) throw ArgumentError("kernel profile has no function");

    const double radius = profile.support_radius;
    const double dm1 = static_cast<double>(dim) - 1.0;
    const double area = unit_sphere_area(dim);
    const auto& k = profile.raw;

    const double mass = area * radial_integral(
        [&](double s) { return k(s) * std::pow(s, dm1); }, radius, "mass");
    if (!(mass > 0.0)) throw DomainError("kernel profile has non-positive mass");

    RadialKernel kernel;
    kernel.profile_ = profile;
    kernel.dim_ = dim;
    kernel.norm_const_ = 1.0 / mass;
    const double c = kernel.norm_const_;

    const double sq = radial_integral(
        [&](double s) { const double v = k(s); return v * v * std::pow(s, dm1); }, radius, "L2");
    kernel.l2_const_ = c * c * area * sq;

    const double dd = static_cast<double>(dim);
    kernel.second_moment_ = c * area / dd * radial_integral(
        [&](double s) { return k(s) * std::pow(s, dm1 + 2.0); }, radius, "second moment");
    const double fourth = c * area * 3.0 / (dd * (dd + 2.0)) * radial_integral(
        [&](double s) { return k(s) * std::pow(s, dm1 + 4.0); }, radius, "fourth moment");
    // Odd moments vanish for any radial kernel.
    if (std::abs(kernel.second_moment_) > 1e-12) kernel.moment_order_ = 2;
    else if (std::abs(fourth) > 1e-12) kernel.moment_order_ = 4;
    else kernel.moment_order_ = 5;

    const auto report = validate_conditions(kernel);
    const auto passes = [&](std::string_view name) {
        const auto* chk = report.find(name);
        return chk != nullptr && chk->pass;
    };
    kernel.smooth_ = passes("odd_gradient_integral") && passes("edge_smoothness") && passes("slope_bound");
    return kernel;
}

bool ConditionReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
}

const ConditionCheck* ConditionReport::find(std::string_view name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

ConditionReport validate_conditions(const RadialKernel& kernel) {
    const auto& prof = kernel.profile();
    const double radius = prof.support_radius;
    const double c = kernel.norm_const();
    const std::size_t d = kernel.dim();
    const double dm1 = static_cast<double>(d) - 1.0;
    const double area = unit_sphere_area(d);

    ConditionReport rep;
    rep.profile = to_string(prof.name);
    rep.dim = d;
    rep.norm_const = c;
    rep.l2_const = kernel.l2_const();
    rep.moment_order = kernel.moment_order();

    // Boundedness on [0, 2R].
    double sup = 0.0;
    double tail = 0.0;
    for (std::size_t i = 0; i <= kSlopeGrid; ++i) {
        const double t = 2.0 * radius * static_cast<double>(i) / kSlopeGrid;
        const double v = std::abs(c * prof.value(t));
        sup = std::max(sup, v);
        if (t > radius) tail = std::max(tail, t * v);
    }
    rep.checks.push_back({"bounded", sup, std::isfinite(sup), ""});

    // Normalization, by a composite rule independent of the adaptive one.
    const double total = area * quadrature::integrate_composite(
        [&](double s) { return c * prof.value(s) * std::pow(s, dm1); }, 0.0, radius, 64, 16);
    const double norm_err = std::abs(total - 1.0);
    rep.checks.push_back({"integral_one", norm_err, norm_err <= 1e-8, "|int K - 1|"});

    rep.checks.push_back({"tail_decay", tail, tail <= 1e-12, "max |u| K(u) beyond the support"});

    // Order two: int u_i K(u) du = (radial part) * (angular first moment).
    const double angular = angular_first_moment(d);
    const double radial1 = quadrature::integrate_composite(
        [&](double s) { return c * prof.value(s) * std::pow(s, dm1 + 1.0); }, 0.0, radius, 64, 16);
    // d = 1 integrates over the whole line; the angular factor would be an exact zero.
    const double first = d == 1 ? std::abs(quadrature::integrate_composite(
                                      [&](double s) { return c * prof.value(std::abs(s)) * s; }, -radius, radius, 64, 16))
                                : std::abs(radial1 * angular);
    rep.checks.push_back({"first_moment", first, first <= 1e-8, "max_i |int u_i K(u) du|"});

    // Odd symmetry: int k'(|w|) w/|w| dw.
    const double radial_slope = quadrature::integrate_composite(
        [&](double s) { return c * prof.slope(s) * std::pow(s, dm1); }, 0.0, radius, 64, 16);
    const double odd = d == 1 ? std::abs(quadrature::integrate_composite(
                                    [&](double s) { return c * prof.slope(std::abs(s)) * (s < 0.0 ? -1.0 : 1.0); },
                                    -radius, radius, 64, 16))
                              : std::abs(radial_slope * angular);
    rep.checks.push_back({"odd_gradient_integral", odd, odd <= 1e-10, "|int k'(|w|) w/|w| dw|"});

    const double t_edge = radius * (1.0 - 1e-6);
    const double edge_value = std::abs(c * prof.value(t_edge));
    const double edge_slope = std::abs(c * prof.slope(t_edge));
    const bool continuous_edge = edge_value <= 1e-4;
    const bool differentiable_edge = continuous_edge && edge_slope <= 1e-4;
    {
        ConditionCheck chk{"edge_smoothness", static_cast<double>(prof.smoothness_order),
                           prof.smoothness_order >= 2 && continuous_edge, ""};
        if (!continuous_edge) chk.note = "k jumps at the support edge";
        else if (prof.smoothness_order < 2) chk.note = "k is not twice continuously differentiable";
        rep.checks.push_back(chk);
    }

    // Slope bound: |k'(t)| <= C |t|, C estimated on a grid over the support.
    double slope_const = 0.0;
    for (std::size_t i = 0; i < kSlopeGrid; ++i) {
        const double t = radius * static_cast<double>(i) / (kSlopeGrid - 1);
        const double ratio = std::abs(c * prof.slope(t)) / std::max(std::abs(t), 1e-12);
        slope_const = std::max(slope_const, ratio);
    }
    {
        ConditionCheck chk{"slope_bound", slope_const,
                           std::isfinite(slope_const) && differentiable_edge, "estimated C"};
        if (!continuous_edge) chk.note = "k' is a delta at the support edge (step discontinuity)";
        else if (!differentiable_edge) chk.note = "k' jumps at the support edge";
        rep.checks.push_back(chk);
    }

    rep.checks.push_back({"l2_const", kernel.l2_const(),
                          kernel.l2_const() > 0.0 && std::isfinite(kernel.l2_const()), "int K^2"});
    return rep;
}

}  // namespace sdrnw
