#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace sdrnw::quadrature {

struct Rule {
    std::vector<double> nodes;    // on [-1, 1], ascending
    std::vector<double> weights;
};

/// Gauss-Legendre rule with `order` nodes (Newton iteration on P_n).
Rule gauss_legendre(std::size_t order);

struct Result {
    double value = 0.0;
    double last_change = 0.0;  // |I_{2m} - I_m| at the final refinement
    std::size_t nodes = 0;
    bool converged = false;
};

/// Integrates f over [a, b], doubling the Gauss-Legendre order from
/// `start_order` until successive estimates differ by less than
/// `tol * max(1, |I|)` or `max_order` is reached.
Result integrate(const std::function<double(double)>& f, double a, double b,
                 double tol = 1e-12, std::size_t start_order = 8,
                 std::size_t max_order = 2048);

/// Composite rule: `panels` equal sub-intervals, fixed order on each.
double integrate_composite(const std::function<double(double)>& f, double a,
                           double b, std::size_t panels, std::size_t order);

}  // namespace sdrnw::quadrature
