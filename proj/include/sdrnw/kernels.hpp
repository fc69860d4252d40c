#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sdrnw {

enum class ProfileName { triweight_poly3, epanechnikov, biweight, uniform, custom };

std::string to_string(ProfileName name);
/// Accepts "triweight" as shorthand for triweight_poly3. Throws ArgumentError.
ProfileName profile_from_string(std::string_view name);

/// Radial profile t -> k_raw(t) on [0, inf), unnormalized.
struct KernelProfile {
    ProfileName name = ProfileName::custom;
    std::function<double(double)> raw;
    /// Optional analytic derivative; central differences are used when empty.
    std::function<double(double)> derivative;
    double support_radius = 1.0;
    /// Number of continuous derivatives of k; -1 for a jump.
    int smoothness_order = 2;

    static KernelProfile builtin(ProfileName name);
    static KernelProfile custom(std::function<double(double)> raw, double support_radius,
                                int smoothness_order,
                                std::function<double(double)> derivative = {});

    double value(double t) const;
    double slope(double t) const;
};

/// K(u) = c * k_raw(|u|) on R^d, normalized to integrate to one.
///
/// Immutable after construction. The constants are computed once by radial
/// Gauss-Legendre quadrature: the integral of g(|u|) over R^d reduces to
/// surface(d) * int_0^R g(s) s^(d-1) ds.
class RadialKernel {
public:
    const KernelProfile& profile() const { return profile_; }
    std::size_t dim() const { return dim_; }
    double norm_const() const { return norm_const_; }
    /// R(K) = int K^2.
    double l2_const() const { return l2_const_; }
    /// Smallest |alpha| >= 1 with a nonzero moment, searched up to 4 (5 means none found).
    int moment_order() const { return moment_order_; }
    /// int u_1^2 K(u) du.
    double second_moment() const { return second_moment_; }
    double support_radius() const { return profile_.support_radius; }
    /// True when the edge-smoothness, odd-gradient and slope-bound checks pass.
    bool smooth() const { return smooth_; }

    double eval(std::span<const double> u) const;
    double at_radius(double r) const {
        return r > profile_.support_radius ? 0.0 : norm_const_ * profile_.raw(r);
    }

private:
    friend RadialKernel make_kernel(const KernelProfile& profile, std::size_t dim);
    RadialKernel() = default;

    KernelProfile profile_;
    std::size_t dim_ = 0;
    double norm_const_ = 0.0;
    double l2_const_ = 0.0;
    double second_moment_ = 0.0;
    int moment_order_ = 0;
    bool smooth_ = false;
};

/// Throws NumericError when the radial quadrature does not reach 1e-10 and
/// DomainError for a profile with non-finite or non-positive mass.
RadialKernel make_kernel(const KernelProfile& profile, std::size_t dim);

/// Surface area of the unit sphere S^(d-1) in R^d.
double unit_sphere_area(std::size_t d);

struct ConditionCheck {
    std::string name;
    double value = 0.0;
    bool pass = false;
    std::string note;
};

struct ConditionReport {
    std::string profile;
    std::size_t dim = 0;
    double norm_const = 0.0;
    double l2_const = 0.0;
    int moment_order = 0;
    std::vector<ConditionCheck> checks;

    bool all_pass() const;
    /// nullptr when absent.
    const ConditionCheck* find(std::string_view name) const;
};

/// Numerical check of boundedness, normalization, tail decay, vanishing
/// first moments, the odd gradient integral, edge smoothness and the slope
/// bound. Never throws for a constructed kernel; failures live in the report.
ConditionReport validate_conditions(const RadialKernel& kernel);

}  // namespace sdrnw
