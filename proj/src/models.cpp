#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "sdrnw/errors.hpp"
#include "sdrnw/simulate.hpp"

namespace sdrnw {

namespace {

Eigen::VectorXd standard_normal(std::size_t k, CounterRng& rng, std::normal_distribution<double>& nd) {
    Eigen::VectorXd z(static_cast<Eigen::Index>(k));
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = nd(rng);
    return z;
}

ReductionBasis model1_beta0(std::size_t p) {
    if (p < 2) throw ArgumentError("Model 1 needs p >= 2");
    Eigen::MatrixXd b = Eigen::MatrixXd::Constant(1, static_cast<Eigen::Index>(p),
                                                  1.0 / std::sqrt(static_cast<double>(p)));
    return ReductionBasis::orthonormalized(b, ReductionMethod::oracle);
}

}  // namespace

Model1::Model1(Model1Config cfg) : cfg_(cfg), beta0_(model1_beta0(cfg.p)) {
    if (!(cfg_.sigma_signal > 0.0) || !(cfg_.sigma_noise_cov > 0.0))
        throw ArgumentError("Model 1 covariance scales must be positive");
    if (!(cfg_.eps_sd >= 0.0)) throw ArgumentError("Model 1 noise sd must be >= 0");
    const auto p = static_cast<Eigen::Index>(cfg_.p);
    const Eigen::VectorXd b = beta0_.matrix().row(0).transpose();
    const Eigen::MatrixXd bb = b * b.transpose();
    sigma_ = cfg_.sigma_signal * bb + cfg_.sigma_noise_cov * (Eigen::MatrixXd::Identity(p, p) - bb);
    Eigen::LLT<Eigen::MatrixXd> llt(sigma_);
    if (llt.info() != Eigen::Success) throw ArgumentError("Model 1 covariance is not positive definite");
    chol_ = llt.matrixL();
}

SimData Model1::generate(std::size_t n, CounterRng& rng) const {
    const auto p = static_cast<Eigen::Index>(cfg_.p);
    std::normal_distribution<double> nd;
    SimData out;
    out.x.resize(static_cast<Eigen::Index>(n), p);
    out.y.resize(static_cast<Eigen::Index>(n));
    const Eigen::VectorXd b = beta0_.matrix().row(0).transpose();
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
        const Eigen::VectorXd xi = chol_ * standard_normal(cfg_.p, rng, nd);
        const double w = b.dot(xi);
        out.x.row(i) = xi.transpose();
        out.y(i) = w * w + cfg_.eps_sd * nd(rng);
    }
    return out;
}

double Model1::truth(const Eigen::VectorXd& x) const {
    const double w = beta0_.matrix().row(0).dot(x);
    return w * w;
}

Eigen::MatrixXd model2_generate_s(std::size_t p, std::uint64_t seed) {
    CounterRng rng(stream_key({seed, tag(Stage::model2_s)}));
    std::normal_distribution<double> nd;
    const auto pi = static_cast<Eigen::Index>(p);
    Eigen::MatrixXd s(pi, pi);
    for (Eigen::Index i = 0; i < pi; ++i)
        for (Eigen::Index j = 0; j < pi; ++j) s(i, j) = nd(rng);
    return s;
}

Model2Config Model2Config::defaults() {
    Model2Config cfg;
    cfg.a = Eigen::VectorXd::Zero(20);
    cfg.a.head(4) << 0.5, 0.5, -0.5, -0.5;
    cfg.s = model2_generate_s(20, cfg.s_seed);
    return cfg;
}

namespace {

ReductionBasis model2_beta0(const Model2Config& cfg, Eigen::MatrixXd& delta, Eigen::MatrixXd& chol,
                            double& condition) {
    const Eigen::Index p = cfg.a.size();
    if (p < 2) throw ArgumentError("Model 2 needs p >= 2");
    if (cfg.s.rows() != p || cfg.s.cols() != p) throw ArgumentError("Model 2 matrix S must be p x p");
    if (!(cfg.delta_scale > 0.0) || !(cfg.y_sd > 0.0)) throw ArgumentError("Model 2 scales must be positive");
    delta = cfg.delta_scale * cfg.s * cfg.s.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(delta);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    if (!(condition <= 1e12)) {
        std::ostringstream msg;
        msg << "Model 2 Delta is ill-conditioned (condition number " << condition << " > 1e12)";
        throw ArgumentError(msg.str());
    }
    Eigen::LLT<Eigen::MatrixXd> llt(delta);
    if (llt.info() != Eigen::Success) throw ArgumentError("Model 2 Delta is not positive definite");
    chol = llt.matrixL();
    const Eigen::VectorXd dir = llt.solve(cfg.a);
    return ReductionBasis::orthonormalized(dir.transpose(), ReductionMethod::oracle);
}

}  // namespace

Model2::Model2(Model2Config cfg)
    : cfg_(std::move(cfg)), beta0_(model2_beta0(cfg_, delta_, chol_, condition_)) {
    mean_abs_y_ = cfg_.y_sd * std::sqrt(2.0 / std::numbers::pi);
}

SimData Model2::generate(std::size_t n, CounterRng& rng) const {
    const std::size_t p = this->p();
    std::normal_distribution<double> nd;
    SimData out;
    out.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    out.y.resize(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
        const double y = cfg_.y_sd * nd(rng);
        const Eigen::VectorXd xi = cfg_.a * inverse_mean_scale(y) + chol_ * standard_normal(p, rng, nd);
        out.x.row(i) = xi.transpose();
        out.y(i) = y;
    }
    return out;
}

double Model2::truth(const Eigen::VectorXd& x) const {
    // Posterior of Y given X = x. With g(y) = y + |y| - c the log density is
    //   -y^2/(2 s^2) + g t - g^2 a / 2,  t = a' Delta^-1 x,  a = a' Delta^-1 a,
    // flat in g for y < 0 and a truncated Gaussian for y >= 0.
    Eigen::LLT<Eigen::MatrixXd> llt(delta_);
    const Eigen::VectorXd dinv_a = llt.solve(cfg_.a);
    const double t = dinv_a.dot(x);
    const double aa = dinv_a.dot(cfg_.a);
    const double c = mean_abs_y_;
    const double s = cfg_.y_sd;
    const double root2pi = std::sqrt(2.0 * std::numbers::pi);

    const double alpha = 1.0 / (2.0 * s * s) + 2.0 * aa;
    const double beta = 2.0 * t + 2.0 * c * aa;
    const double mu = beta / (2.0 * alpha);
    const double tau = std::sqrt(1.0 / (2.0 * alpha));
    const double lift = alpha * mu * mu;  // positive part carries exp(lift)
    const double damp = std::exp(-lift);
    const double phi_cdf = 0.5 * std::erfc(-mu / (tau * std::numbers::sqrt2));

    const double w_neg = damp * s * root2pi / 2.0;
    const double m_neg = -damp * s * s;
    const double w_pos = tau * root2pi * phi_cdf;
    const double m_pos = mu * tau * root2pi * phi_cdf + tau * tau * damp;
    return (m_neg + m_pos) / (w_neg + w_pos);
}

}  // namespace sdrnw
