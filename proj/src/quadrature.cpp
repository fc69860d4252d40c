#include "sdrnw/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>

namespace sdrnw::quadrature {

namespace {

// Returns (P_n(x), P_n'(x)).
std::pair<double, double> legendre(std::size_t n, double x) {
    double p0 = 1.0;
    double p1 = x;
    for (std::size_t k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
    }
    return {p1, static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0)};
}

Rule compute_rule(std::size_t order) {
    Rule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    const std::size_t half = (order + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
        // Tricomi initial guess, refined by Newton.
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(order) + 0.5));
        for (int iter = 0; iter < 100; ++iter) {
            const auto [p, dp] = legendre(order, x);
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double dp = legendre(order, x).second;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[order - 1 - i] = x;
        rule.nodes[i] = -x;
        rule.weights[i] = w;
        rule.weights[order - 1 - i] = w;
    }
    if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
    return rule;
}

}  // namespace

Rule gauss_legendre(std::size_t order) {
    static std::mutex mu;
    static std::map<std::size_t, Rule> cache;
    std::lock_guard lock(mu);
    auto it = cache.find(order);
    if (it == cache.end()) it = cache.emplace(order, compute_rule(order)).first;
    return it->second;
}

namespace {

double apply(const Rule& rule, const std::function<double(double)>& f, double a,
             double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
    return half * sum;
}

}  // namespace

Result integrate(const std::function<double(double)>& f, double a, double b,
                 double tol, std::size_t start_order, std::size_t max_order) {
    Result res;
    std::size_t order = start_order;
    double prev = apply(gauss_legendre(order), f, a, b);
    res.value = prev;
    res.nodes = order;
    while (order < max_order) {
        order *= 2;
        const double cur = apply(gauss_legendre(order), f, a, b);
        res.last_change = std::abs(cur - prev);
        res.value = cur;
        res.nodes = order;
        if (!std::isfinite(cur)) return res;
        if (res.last_change < tol * std::max(1.0, std::abs(cur))) {
            res.converged = true;
            return res;
        }
        prev = cur;
    }
    return res;
}

double integrate_composite(const std::function<double(double)>& f, double a,
                           double b, std::size_t panels, std::size_t order) {
    const Rule rule = gauss_legendre(order);
    const double width = (b - a) / static_cast<double>(panels);
    double sum = 0.0;
    for (std::size_t j = 0; j < panels; ++j) {
        const double lo = a + width * static_cast<double>(j);
        sum += apply(rule, f, lo, lo + width);
    }
    return sum;
}

}  // namespace sdrnw::quadrature
