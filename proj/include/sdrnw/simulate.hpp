#pragma once

#include <Eigen/Dense>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdrnw/kernels.hpp"
#include "sdrnw/npregress.hpp"
#include "sdrnw/reduction.hpp"
#include "sdrnw/rng.hpp"

namespace sdrnw {

struct SimData {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
};

/// Data-generating design for the Monte Carlo harness.
class SimModel {
public:
    virtual ~SimModel() = default;

    virtual std::string name() const = 0;
    virtual std::size_t p() const = 0;
    virtual std::size_t d() const { return 1; }
    virtual SimData generate(std::size_t n, CounterRng& rng) const = 0;
    /// E(Y | X = x).
    virtual double truth(const Eigen::VectorXd& x) const = 0;
    /// Population reduction, orthonormalized.
    virtual const ReductionBasis& beta0() const = 0;
    /// c in h = c n^(-1/(4+p)).
    virtual double bandwidth_constant() const = 0;
    virtual ReductionMethod default_reduction() const = 0;

    SimData generate_stream(std::size_t n, std::uint64_t key) const {
        CounterRng rng(key);
        return generate(n, rng);
    }
};

/// Forward model: X ~ N(0, Sigma), Sigma = s1 b b^T + s0 (I - b b^T),
/// b = 1_p / sqrt(p), Y = (b^T X)^2 + eps, eps ~ N(0, eps_sd^2).
struct Model1Config {
    std::size_t p = 6;
    double sigma_signal = 5.0;
    double sigma_noise_cov = 0.1;
    double eps_sd = 0.5;
};

class Model1 final : public SimModel {
public:
    explicit Model1(Model1Config cfg = {});

    std::string name() const override { return "model1"; }
    std::size_t p() const override { return cfg_.p; }
    SimData generate(std::size_t n, CounterRng& rng) const override;
    double truth(const Eigen::VectorXd& x) const override;
    const ReductionBasis& beta0() const override { return beta0_; }
    double bandwidth_constant() const override { return 5.0; }
    ReductionMethod default_reduction() const override { return ReductionMethod::pls; }

    const Model1Config& config() const { return cfg_; }
    const Eigen::MatrixXd& sigma() const { return sigma_; }

private:
    Model1Config cfg_;
    ReductionBasis beta0_;
    Eigen::MatrixXd sigma_;
    Eigen::MatrixXd chol_;
};

/// Named seed of the stored 20 x 20 matrix S (data/model2_S.csv).
inline constexpr std::uint64_t kModel2SSeed = 2008;

/// Standard normal p x p matrix drawn from the stream (kModel2SSeed-style seed).
Eigen::MatrixXd model2_generate_s(std::size_t p, std::uint64_t seed);

/// Inverse regression model: Y ~ N(0, y_sd^2),
/// X | Y=y ~ N(a (f1 + f2), Delta) with f = (y - EY, |y| - E|Y|) and
/// Delta = delta_scale S S^T. The reduction is span(Delta^-1 a).
struct Model2Config {
    double y_sd = 5.0;
    Eigen::VectorXd a;
    double delta_scale = 0.1;
    Eigen::MatrixXd s;
    std::uint64_t s_seed = kModel2SSeed;

    /// p = 20, a = (1, 1, -1, -1, 0, ..., 0)/2, S regenerated from s_seed.
    static Model2Config defaults();
};

class Model2 final : public SimModel {
public:
    /// Throws ArgumentError when Delta is not positive definite or its
    /// condition number exceeds 1e12.
    explicit Model2(Model2Config cfg = Model2Config::defaults());

    std::string name() const override { return "model2"; }
    std::size_t p() const override { return static_cast<std::size_t>(cfg_.a.size()); }
    SimData generate(std::size_t n, CounterRng& rng) const override;
    /// Posterior mean by quadrature over y.
    double truth(const Eigen::VectorXd& x) const override;
    const ReductionBasis& beta0() const override { return beta0_; }
    double bandwidth_constant() const override { return 10.0; }
    ReductionMethod default_reduction() const override { return ReductionMethod::pfc; }

    const Model2Config& config() const { return cfg_; }
    const Eigen::MatrixXd& delta() const { return delta_; }
    double mean_abs_y() const { return mean_abs_y_; }
    double condition_number() const { return condition_; }
    /// f_{y,1} + f_{y,2}.
    double inverse_mean_scale(double y) const { return y + std::abs(y) - mean_abs_y_; }

private:
    Model2Config cfg_;
    Eigen::MatrixXd delta_;
    Eigen::MatrixXd chol_;
    double condition_ = 0.0;
    ReductionBasis beta0_;  // initialized after delta_, chol_ and condition_
    double mean_abs_y_ = 0.0;
};

using BasisEstimator = std::function<ReductionBasis(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, CounterRng& rng)>;

/// pls, pfc (f_y = (y, |y|)), sir (default slices).
BasisEstimator estimator_for(ReductionMethod method, std::size_t d);
BasisEstimator fixed_estimator(ReductionBasis basis);
/// P_hat = reproject(P0 + scale n^(-1/2) E), E symmetric Gaussian; then projection_to_basis.
BasisEstimator perturbed_projection_estimator(ReductionBasis beta0, double scale = 1.0);

enum class Method { NP, NPR, NPRT };
std::string to_string(Method m);
Method method_from_string(std::string_view s);

struct MethodSpec {
    Method method = Method::NPRT;
    ReductionMethod reduction = ReductionMethod::pls;
};

struct ReplicationConfig {
    std::vector<MethodSpec> methods;
    std::vector<std::size_t> ns;
    Eigen::MatrixXd test_points;
    std::size_t n_rep = 200;
    std::uint64_t base_seed = 1;
    std::size_t threads = 1;
    ProfileName kernel = ProfileName::triweight_poly3;
    /// Defaults to model.bandwidth_constant() * n^(-1/(4+p)).
    std::optional<BandwidthRule> bandwidth;
};

struct CellKey {
    std::size_t point = 0;
    std::size_t n = 0;
    Method method = Method::NP;
    auto operator<=>(const CellKey&) const = default;
};

struct ReplicationCell {
    CellKey key;
    double emse = 0.0;           // (1/N) sum (est - mean)^2
    double variance = 0.0;       // unbiased, 1/(N-1)
    double mean_estimate = 0.0;
    double true_mse = 0.0;       // (1/N) sum (est - truth)^2
    double h = 0.0;
    std::size_t n_rep = 0;       // valid replications
    std::size_t n_missing = 0;
};

struct ReplicationTable {
    std::vector<ReplicationCell> cells;
    /// Per-cell estimates in replication order; NaN marks a failed fit.
    std::map<CellKey, std::vector<double>> estimates;
    Eigen::VectorXd truth;  // per test point

    const ReplicationCell& at(const CellKey& key) const;
    double missing_rate() const;
};

Eigen::MatrixXd draw_test_points(const SimModel& model, std::size_t m, std::uint64_t base_seed);

/// Every (n, rep) draws from stream_key(base_seed, n, rep, data); cells are
/// aggregated in (point, method, n) order with replications in index order,
/// so the table is bit-identical for any thread count.
ReplicationTable run_replications(const SimModel& model, const ReplicationConfig& cfg);

/// Recomputes one cell serially from its key.
ReplicationCell recompute_cell(const SimModel& model, const ReplicationConfig& cfg, const CellKey& key);

/// (1/N) sum (v_i - mean(v))^2 over the finite entries.
double emse(std::span<const double> estimates);

struct EquivalenceRow {
    std::size_t n = 0;
    double h = 0.0;
    double median_stat = 0.0;  // median sqrt(n h^d) |eta_hat - xi_hat|
    std::size_t n_valid = 0;
};

/// Compares eta_hat (estimated basis) with xi_hat (true beta0) at x0.
std::vector<EquivalenceRow> equivalence_experiment(const SimModel& model, const std::vector<std::size_t>& ns,
                                                   std::size_t n_rep, const Eigen::VectorXd& x0,
                                                   const BasisEstimator& estimator, const BandwidthRule& rule,
                                                   std::uint64_t seed, std::size_t threads = 1);

struct CoverageResult {
    double coverage = 0.0;
    double level = 0.0;
    double truth = 0.0;
    double h = 0.0;
    double median_half_width = 0.0;
    std::size_t n_valid = 0;
    std::size_t n_excluded = 0;
};

/// Undersmoothing default: h = 5 n^(-1/3), inside (1/(4+d), 1/d) for d = 1.
BandwidthRule coverage_bandwidth_default();

/// Fraction of replications whose CI covers model.truth(x0). An empty
/// estimator means the true beta0.
CoverageResult coverage_experiment(const SimModel& model, std::size_t n, std::size_t n_rep,
                                   const Eigen::VectorXd& x0, double level, const BandwidthRule& rule,
                                   std::uint64_t seed, std::size_t threads = 1,
                                   const BasisEstimator& estimator = {});

struct SupNormResult {
    std::size_t wins = 0;  // replications with sup error(large n) < sup error(small n)
    std::size_t n_rep = 0;
    std::vector<double> sup_small;
    std::vector<double> sup_large;
};

/// Paired comparison of uniform_sup_error at two sample sizes over a fixed grid.
SupNormResult sup_norm_experiment(const SimModel& model, const Eigen::MatrixXd& grid,
                                  const Eigen::VectorXd& truth, std::size_t n_small, std::size_t n_large,
                                  std::size_t n_rep, const BandwidthRule& rule, std::uint64_t seed,
                                  const std::function<double(double)>& y_transform = {},
                                  std::size_t threads = 1, const BasisEstimator& estimator = {});

struct DensityPoint {
    double x = 0.0;
    double density = 0.0;
};

/// Triweight KDE of replication estimates on `grid`; Silverman's rule scaled
/// to the triweight kernel. Needs at least 10 finite estimates.
std::vector<DensityPoint> estimate_density_data(std::span<const double> estimates, std::span<const double> grid);

/// Synthetic stand-in for the horse-mussel data: positive shell height,
/// width, length, mass and muscle mass, driven by one linear combination
/// of the log predictors.
struct NamedTable {
    std::vector<std::string> columns;
    Eigen::MatrixXd values;
};
inline constexpr std::uint64_t kMusselsSeed = 79;
NamedTable mussels_lookalike(std::uint64_t seed = kMusselsSeed, std::size_t n = 79);

}  // namespace sdrnw
