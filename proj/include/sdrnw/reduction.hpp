#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace sdrnw {

enum class ReductionMethod { pls, pfc, sir, oracle, from_projection, identity, given };

std::string to_string(ReductionMethod m);
ReductionMethod reduction_method_from_string(std::string_view s);

/// d x p matrix with orthonormal rows whose row span estimates span(beta0^T).
class ReductionBasis {
public:
    /// Takes `rows` as is. Throws ArgumentError unless |rows rows^T - I|_max <= 1e-10.
    static ReductionBasis from_rows(Eigen::MatrixXd rows, ReductionMethod method);
    /// Orthonormalizes the row span (Householder QR) and makes the first
    /// nonzero entry of every row positive. Throws DegenerateFitError on rank loss.
    static ReductionBasis orthonormalized(const Eigen::MatrixXd& rows, ReductionMethod method);
    static ReductionBasis identity(std::size_t p);

    const Eigen::MatrixXd& matrix() const { return rows_; }
    std::size_t d() const { return static_cast<std::size_t>(rows_.rows()); }
    std::size_t p() const { return static_cast<std::size_t>(rows_.cols()); }
    ReductionMethod method() const { return method_; }

    /// A * basis for an orthogonal d x d matrix A; same span.
    ReductionBasis rotated(const Eigen::MatrixXd& a) const;

    std::map<std::string, double> diagnostics;

private:
    ReductionBasis(Eigen::MatrixXd rows, ReductionMethod method)
        : rows_(std::move(rows)), method_(method) {}

    Eigen::MatrixXd rows_;
    ReductionMethod method_;
};

/// Symmetric idempotent p x p matrix of rank d.
class ProjectionMatrix {
public:
    /// Validates symmetry (1e-10), idempotence (1e-8) and |trace - rank| <= 1e-6;
    /// throws ArgumentError otherwise.
    ProjectionMatrix(Eigen::MatrixXd matrix, std::size_t rank);

    /// beta^T beta for a basis with orthonormal rows.
    static ProjectionMatrix from_basis(const ReductionBasis& basis);
    /// Nearest rank-d orthogonal projection to sym(m): span of the top-d eigenvectors.
    static ProjectionMatrix reproject(const Eigen::MatrixXd& m, std::size_t rank);

    const Eigen::MatrixXd& matrix() const { return matrix_; }
    std::size_t rank() const { return rank_; }

private:
    Eigen::MatrixXd matrix_;
    std::size_t rank_;
};

/// Response basis y -> f_y in R^r used by principal fitted components.
using FyBasis = std::function<Eigen::VectorXd(double)>;

/// f_y = (y, |y|); centering happens inside pfc_fit.
FyBasis fy_linear_abs();
/// f_y = (y, y^2, ..., y^degree).
FyBasis fy_polynomial(int degree);

/// First d PLS weight vectors (NIPALS, X deflation only), orthonormalized.
/// X and Y are centered internally.
ReductionBasis pls_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::size_t d);

/// Principal fitted components: top-d generalized eigenvectors of
/// (Sigma_fit, Sigma_res + ridge I). `ridge` defaults to 1e-8 trace(Sigma_res)/p.
ReductionBasis pfc_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const FyBasis& fy,
                       std::size_t d, std::optional<double> ridge = std::nullopt);

std::size_t default_sir_slices(std::size_t n);

/// Sliced inverse regression with `slices` quantile bins of Y (0 picks the default).
ReductionBasis sir_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::size_t slices,
                       std::size_t d, double ridge = 0.0);

/// Orthonormal basis of the range of P: top-d eigenvectors of the symmetrized
/// matrix. Throws AmbiguousRankError when the d-th/(d+1)-th eigengap < 1e-6.
/// A d that differs from the rank of P always lands on such a gap.
ReductionBasis projection_to_basis(const ProjectionMatrix& proj, std::size_t d);

/// Rows beta x_i, i.e. X beta^T (n x d).
Eigen::MatrixXd reduce(const ReductionBasis& basis, const Eigen::MatrixXd& x);

/// Principal angles (radians, ascending) between the row spans of two bases.
Eigen::VectorXd principal_angles(const ReductionBasis& a, const ReductionBasis& b);

}  // namespace sdrnw
