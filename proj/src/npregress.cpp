#include "sdrnw/npregress.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "sdrnw/errors.hpp"
#include "sdrnw/stats.hpp"

namespace sdrnw {

std::string to_string(BandwidthKind k) {
    switch (k) {
        case BandwidthKind::power_rule: return "power_rule";
        case BandwidthKind::fixed: return "fixed";
        case BandwidthKind::loocv: return "loocv";
    }
    return "power_rule";
}

std::string to_string(ExponentDim e) {
    return e == ExponentDim::ambient_p ? "ambient_p" : "reduced_d";
}

ExponentDim exponent_dim_from_string(std::string_view s) {
    if (s == "ambient_p" || s == "p") return ExponentDim::ambient_p;
    if (s == "reduced_d" || s == "d") return ExponentDim::reduced_d;
    throw ArgumentError("unknown bandwidth exponent dimension '" + std::string(s) + "'");
}

BandwidthRule BandwidthRule::power(double constant, ExponentDim dim) {
    BandwidthRule r;
    r.kind = BandwidthKind::power_rule;
    r.constant = constant;
    r.exponent_dim = dim;
    return r;
}

BandwidthRule BandwidthRule::power_with_rate(double constant, double rate) {
    BandwidthRule r = power(constant);
    r.rate = rate;
    return r;
}

BandwidthRule BandwidthRule::fixed(double h) {
    BandwidthRule r;
    r.kind = BandwidthKind::fixed;
    r.h_fixed = h;
    return r;
}

BandwidthRule BandwidthRule::loocv(std::vector<double> grid) {
    BandwidthRule r;
    r.kind = BandwidthKind::loocv;
    r.cv_grid = std::move(grid);
    return r;
}

double bandwidth(const BandwidthRule& rule, std::size_t n, std::size_t p, std::size_t d) {
    if (n < 1) throw ArgumentError("bandwidth needs n >= 1");
    double h = 0.0;
    switch (rule.kind) {
        case BandwidthKind::power_rule: {
            const double m = static_cast<double>(rule.exponent_dim == ExponentDim::ambient_p ? p : d);
            const double rate = rule.rate ? *rule.rate : 1.0 / (4.0 + m);
            h = rule.constant * std::pow(static_cast<double>(n), -rate);
            break;
        }
        case BandwidthKind::fixed:
            h = rule.h_fixed;
            break;
        case BandwidthKind::loocv:
            if (rule.cv_grid.empty()) throw ArgumentError("loocv bandwidth needs a non-empty cv_grid");
            throw ArgumentError("loocv bandwidth needs data; use loocv_bandwidth");
    }
    if (!(h > 0.0) || !std::isfinite(h)) throw ArgumentError("bandwidth rule gives a non-positive h");
    return h;
}

double loocv_bandwidth(const RadialKernel& kernel, const Eigen::MatrixXd& w, const Eigen::VectorXd& y,
                       std::span<const double> grid) {
    if (grid.empty()) throw ArgumentError("loocv bandwidth needs a non-empty cv_grid");
    if (w.rows() != y.size()) throw ArgumentError("reduced data and response lengths differ");
    const Eigen::Index n = w.rows();
    const Eigen::Index d = w.cols();
    double best_h = 0.0;
    double best_score = std::numeric_limits<double>::infinity();
    for (double h : grid) {
        if (!(h > 0.0)) throw ArgumentError("cv_grid values must be positive");
        double score = 0.0;
        for (Eigen::Index i = 0; i < n && std::isfinite(score); ++i) {
            double s0 = 0.0;
            double s1 = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j == i) continue;
                double sq = 0.0;
                for (Eigen::Index k = 0; k < d; ++k) {
                    const double u = (w(i, k) - w(j, k)) / h;
                    sq += u * u;
                }
                const double kv = kernel.at_radius(std::sqrt(sq));
                s0 += kv;
                s1 += kv * y(j);
            }
            if (s0 <= 1e-12) {
                score = std::numeric_limits<double>::infinity();
            } else {
                const double r = y(i) - s1 / s0;
                score += r * r;
            }
        }
        if (score < best_score) {
            best_score = score;
            best_h = h;
        }
    }
    if (!std::isfinite(best_score))
        throw NumericError("every cv_grid bandwidth leaves some point with an empty window");
    return best_h;
}

namespace {

void check_kernel(const NWConfig& config) {
    if (!config.kernel.smooth() && !config.allow_nonsmooth_kernel)
        throw ArgumentError("kernel '" + to_string(config.kernel.profile().name) +
                            "' is not smooth at its support edge; confidence intervals need a smooth kernel "
                            "(set allow_nonsmooth_kernel to override)");
    if (!(config.ci_level > 0.0 && config.ci_level < 1.0))
        throw ArgumentError("ci_level must lie in (0, 1)");
}

std::string describe_point(std::span<const double> w0) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < w0.size(); ++i) os << (i ? ", " : "") << w0[i];
    os << ")";
    return os.str();
}

}  // namespace

NWFit nw_reduced(const NWConfig& config, const Eigen::MatrixXd& w, const Eigen::VectorXd& y,
                 std::span<const double> w0, double h) {
    const Eigen::Index n = w.rows();
    const Eigen::Index d = w.cols();
    if (static_cast<std::size_t>(d) != config.kernel.dim())
        throw ArgumentError("reduced data dimension differs from the kernel dimension");
    if (static_cast<Eigen::Index>(w0.size()) != d) throw ArgumentError("w0 has the wrong dimension");
    if (y.size() != n) throw ArgumentError("reduced data and response lengths differ");
    if (n < 2) throw ArgumentError("Nadaraya-Watson needs n >= 2");
    if (!(h > 0.0)) throw ArgumentError("bandwidth must be positive");

    const double radius = config.kernel.support_radius();
    const double radius_sq = radius * radius;
    std::vector<std::pair<Eigen::Index, double>> active;
    double s0 = 0.0;
    double s1 = 0.0;
    // Responses are accumulated relative to the first in-window value, so a
    // window of equal responses yields exactly that value and zero variance.
    double shift = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double sq = 0.0;
        for (Eigen::Index k = 0; k < d; ++k) {
            const double u = (w0[static_cast<std::size_t>(k)] - w(i, k)) / h;
            sq += u * u;
        }
        if (sq > radius_sq) continue;
        const double kv = config.kernel.at_radius(std::sqrt(sq));
        if (kv == 0.0) continue;
        if (active.empty()) shift = y(i);
        active.emplace_back(i, kv);
        s0 += kv;
        s1 += kv * (y(i) - shift);
    }

    const double nhd = static_cast<double>(n) * std::pow(h, static_cast<double>(d));
    const double f_hat = s0 / nhd;
    if (s0 < config.min_effective_mass) {
        std::ostringstream msg;
        msg << "empty kernel window at w0=" << describe_point(w0) << " with h=" << h
            << " (effective mass " << s0 << ")";
        throw EmptyWindowError(msg.str());
    }

    NWFit fit;
    fit.n = static_cast<std::size_t>(n);
    fit.h_used = h;
    fit.effective_mass = s0;
    fit.f_hat = f_hat;
    const double offset = s1 / s0;
    fit.eta_hat = shift + offset;
    double ss = 0.0;
    for (const auto& [i, kv] : active) {
        const double r = (y(i) - shift) - offset;
        ss += kv * r * r;
    }
    fit.sigma2_hat = std::max(ss / s0, 0.0);
    const double z = two_sided_z(config.ci_level);
    const double half = z * std::sqrt(fit.sigma2_hat * config.kernel.l2_const() / (nhd * f_hat));
    fit.ci_lo = fit.eta_hat - half;
    fit.ci_hi = fit.eta_hat + half;
    fit.w0 = Eigen::Map<const Eigen::VectorXd>(w0.data(), d);
    return fit;
}

double resolve_bandwidth(const NWConfig& config, const Eigen::MatrixXd& w, const Eigen::VectorXd& y,
                         std::size_t p) {
    if (config.bandwidth.kind == BandwidthKind::loocv)
        return loocv_bandwidth(config.kernel, w, y, config.bandwidth.cv_grid);
    return bandwidth(config.bandwidth, static_cast<std::size_t>(w.rows()), p,
                     static_cast<std::size_t>(w.cols()));
}

namespace {

void check_inputs(const NWConfig& config, const ReductionBasis& basis, const Eigen::MatrixXd& x,
                  const Eigen::VectorXd& y) {
    check_kernel(config);
    if (basis.d() != config.kernel.dim())
        throw ArgumentError("basis dimension d differs from the kernel dimension");
    if (static_cast<std::size_t>(x.cols()) != basis.p())
        throw ArgumentError("X columns differ from the basis ambient dimension p");
    if (x.rows() != y.size()) throw ArgumentError("X and Y lengths differ");
    if (x.rows() < 2) throw ArgumentError("Nadaraya-Watson needs n >= 2");
}

}  // namespace

NWFit nw_estimate(const NWConfig& config, const ReductionBasis& basis, const Eigen::MatrixXd& x,
                  const Eigen::VectorXd& y, const Eigen::VectorXd& x0) {
    check_inputs(config, basis, x, y);
    if (static_cast<std::size_t>(x0.size()) != basis.p()) throw ArgumentError("x0 has the wrong dimension");
    const Eigen::MatrixXd w = reduce(basis, x);
    const Eigen::VectorXd w0 = basis.matrix() * x0;
    const double h = resolve_bandwidth(config, w, y, basis.p());
    return nw_reduced(config, w, y, std::span<const double>(w0.data(), static_cast<std::size_t>(w0.size())), h);
}

NWFit nw_oracle_estimate(const NWConfig& config, const ReductionBasis& beta0, const Eigen::MatrixXd& x,
                         const Eigen::VectorXd& y, const Eigen::VectorXd& x0) {
    return nw_estimate(config, beta0, x, y, x0);
}

std::vector<NWBatchEntry> nw_batch(const NWConfig& config, const ReductionBasis& basis,
                                   const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                   const Eigen::MatrixXd& x0s) {
    check_inputs(config, basis, x, y);
    if (static_cast<std::size_t>(x0s.cols()) != basis.p()) throw ArgumentError("test points have the wrong dimension");
    const Eigen::MatrixXd w = reduce(basis, x);
    const Eigen::MatrixXd w0s = reduce(basis, x0s);
    const double h = resolve_bandwidth(config, w, y, basis.p());
    std::vector<NWBatchEntry> out(static_cast<std::size_t>(x0s.rows()));
    for (Eigen::Index j = 0; j < x0s.rows(); ++j) {
        const Eigen::VectorXd w0 = w0s.row(j).transpose();
        try {
            out[static_cast<std::size_t>(j)].fit =
                nw_reduced(config, w, y, std::span<const double>(w0.data(), static_cast<std::size_t>(w0.size())), h);
        } catch (const NumericError& e) {
            out[static_cast<std::size_t>(j)].error = e.what();
        }
    }
    return out;
}

double uniform_sup_error(const NWConfig& config, const ReductionBasis& basis, const Eigen::MatrixXd& x,
                         const Eigen::VectorXd& y, const Eigen::MatrixXd& grid,
                         const Eigen::VectorXd& truth) {
    check_inputs(config, basis, x, y);
    if (grid.rows() != truth.size()) throw ArgumentError("grid and truth lengths differ");
    if (static_cast<std::size_t>(grid.cols()) != basis.p()) throw ArgumentError("grid has the wrong dimension");
    const Eigen::MatrixXd w = reduce(basis, x);
    const Eigen::MatrixXd wg = reduce(basis, grid);
    const double h = resolve_bandwidth(config, w, y, basis.p());
    double sup = 0.0;
    for (Eigen::Index j = 0; j < grid.rows(); ++j) {
        const Eigen::VectorXd w0 = wg.row(j).transpose();
        const auto fit = nw_reduced(config, w, y, std::span<const double>(w0.data(), static_cast<std::size_t>(w0.size())), h);
        sup = std::max(sup, std::abs(fit.eta_hat - truth(j)));
    }
    return sup;
}

}  // namespace sdrnw
