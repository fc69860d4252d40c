#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdrnw/kernels.hpp"
#include "sdrnw/reduction.hpp"

namespace sdrnw {

enum class BandwidthKind { power_rule, fixed, loocv };
enum class ExponentDim { ambient_p, reduced_d };

std::string to_string(BandwidthKind k);
std::string to_string(ExponentDim e);
ExponentDim exponent_dim_from_string(std::string_view s);

/// power_rule: h = constant * n^(-rate), rate = 1/(4+m) with m = p or d
/// unless `rate` overrides it. fixed: h = h_fixed. loocv: the grid value
/// minimizing leave-one-out squared error on the reduced data.
struct BandwidthRule {
    BandwidthKind kind = BandwidthKind::power_rule;
    double constant = 1.0;
    ExponentDim exponent_dim = ExponentDim::ambient_p;
    std::optional<double> rate;
    double h_fixed = 0.0;
    std::vector<double> cv_grid;

    static BandwidthRule power(double constant, ExponentDim dim = ExponentDim::ambient_p);
    static BandwidthRule power_with_rate(double constant, double rate);
    static BandwidthRule fixed(double h);
    static BandwidthRule loocv(std::vector<double> grid);
};

/// Throws ArgumentError for loocv rules (they need data; see loocv_bandwidth)
/// and for non-positive results.
double bandwidth(const BandwidthRule& rule, std::size_t n, std::size_t p, std::size_t d);

double loocv_bandwidth(const RadialKernel& kernel, const Eigen::MatrixXd& w,
                       const Eigen::VectorXd& y, std::span<const double> grid);

struct NWConfig {
    explicit NWConfig(RadialKernel k, BandwidthRule rule = {}) : kernel(std::move(k)), bandwidth(std::move(rule)) {}

    RadialKernel kernel;
    BandwidthRule bandwidth;
    double min_effective_mass = 1e-12;
    double ci_level = 0.95;
    bool allow_nonsmooth_kernel = false;

    std::size_t d() const { return kernel.dim(); }
};

struct NWFit {
    double eta_hat = 0.0;
    double f_hat = 0.0;
    double sigma2_hat = 0.0;
    double h_used = 0.0;
    std::size_t n = 0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double effective_mass = 0.0;
    Eigen::VectorXd w0;
};

/// Nadaraya-Watson fit at w0 on already reduced data W (n x d) with a
/// resolved bandwidth h. Plug-in variance and CI follow the Gaussian limit
/// sqrt(n h^d)(eta_hat - eta) -> N(0, sigma^2 R(K) / f_W).
NWFit nw_reduced(const NWConfig& config, const Eigen::MatrixXd& w, const Eigen::VectorXd& y,
                 std::span<const double> w0, double h);

/// Resolves the bandwidth for a reduced sample of size n.
double resolve_bandwidth(const NWConfig& config, const Eigen::MatrixXd& w, const Eigen::VectorXd& y,
                         std::size_t p);

/// eta_hat(x0) with the basis estimate plugged in.
NWFit nw_estimate(const NWConfig& config, const ReductionBasis& basis, const Eigen::MatrixXd& x,
                  const Eigen::VectorXd& y, const Eigen::VectorXd& x0);

/// Infeasible estimator built on the true beta0; same computation as nw_estimate.
NWFit nw_oracle_estimate(const NWConfig& config, const ReductionBasis& beta0,
                         const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         const Eigen::VectorXd& x0);

struct NWBatchEntry {
    std::optional<NWFit> fit;
    std::string error;  // set when fit is empty
};

/// One fit per row of x0s; per-point numeric failures are recorded, not thrown.
std::vector<NWBatchEntry> nw_batch(const NWConfig& config, const ReductionBasis& basis,
                                   const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                   const Eigen::MatrixXd& x0s);

/// max_j |eta_hat(grid_j) - truth_j|. Propagates EmptyWindowError.
double uniform_sup_error(const NWConfig& config, const ReductionBasis& basis,
                         const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         const Eigen::MatrixXd& grid, const Eigen::VectorXd& truth);

}  // namespace sdrnw
