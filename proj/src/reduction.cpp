#include "sdrnw/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "sdrnw/errors.hpp"

namespace sdrnw {

namespace {

void require_finite(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    if (!x.allFinite() || !y.allFinite()) throw DataError("non-finite values in X or Y");
}

void require_shapes(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::size_t d) {
    if (x.rows() != y.size()) {
        std::ostringstream msg;
        msg << "X has " << x.rows() << " rows but Y has " << y.size() << " entries";
        throw ArgumentError(msg.str());
    }
    if (d < 1 || d > static_cast<std::size_t>(x.cols()))
        throw ArgumentError("reduction dimension d must satisfy 1 <= d <= p");
    if (static_cast<std::size_t>(x.rows()) <= d)
        throw ArgumentError("need n > d observations");
    require_finite(x, y);
}

Eigen::MatrixXd centered(const Eigen::MatrixXd& x) {
    return x.rowwise() - x.colwise().mean();
}

void fix_signs(Eigen::MatrixXd& rows) {
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        for (Eigen::Index j = 0; j < rows.cols(); ++j) {
            if (std::abs(rows(i, j)) > 1e-12) {
                if (rows(i, j) < 0.0) rows.row(i) *= -1.0;
                break;
            }
        }
    }
}

// Top-k eigenvectors (as columns, largest first) of a symmetric matrix.
struct TopEigen {
    Eigen::MatrixXd vectors;
    Eigen::VectorXd values;
};

TopEigen top_eigen(const Eigen::MatrixXd& sym, std::size_t k) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.info() != Eigen::Success) throw NumericError("symmetric eigendecomposition failed");
    const Eigen::Index p = sym.rows();
    TopEigen out;
    out.vectors.resize(p, static_cast<Eigen::Index>(k));
    out.values.resize(static_cast<Eigen::Index>(k));
    for (std::size_t j = 0; j < k; ++j) {
        const Eigen::Index src = p - 1 - static_cast<Eigen::Index>(j);
        out.vectors.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(src);
        out.values(static_cast<Eigen::Index>(j)) = es.eigenvalues()(src);
    }
    return out;
}

}  // namespace

std::string to_string(ReductionMethod m) {
    switch (m) {
        case ReductionMethod::pls: return "pls";
        case ReductionMethod::pfc: return "pfc";
        case ReductionMethod::sir: return "sir";
        case ReductionMethod::oracle: return "oracle";
        case ReductionMethod::from_projection: return "from_projection";
        case ReductionMethod::identity: return "identity";
        case ReductionMethod::given: return "given";
    }
    return "given";
}

ReductionMethod reduction_method_from_string(std::string_view s) {
    if (s == "pls") return ReductionMethod::pls;
    if (s == "pfc") return ReductionMethod::pfc;
    if (s == "sir") return ReductionMethod::sir;
    if (s == "oracle") return ReductionMethod::oracle;
    if (s == "from_projection") return ReductionMethod::from_projection;
    if (s == "identity" || s == "np") return ReductionMethod::identity;
    if (s == "given") return ReductionMethod::given;
    throw ArgumentError("unknown reduction method '" + std::string(s) + "'");
}

ReductionBasis ReductionBasis::from_rows(Eigen::MatrixXd rows, ReductionMethod method) {
    if (rows.rows() < 1 || rows.cols() < rows.rows())
        throw ArgumentError("basis must be d x p with 1 <= d <= p");
    if (!rows.allFinite()) throw ArgumentError("basis has non-finite entries");
    const Eigen::MatrixXd gram = rows * rows.transpose();
    const double err =
        (gram - Eigen::MatrixXd::Identity(rows.rows(), rows.rows())).cwiseAbs().maxCoeff();
    if (err > 1e-10) {
        std::ostringstream msg;
        msg << "basis rows are not orthonormal (max |B B^T - I| = " << err << ")";
        throw ArgumentError(msg.str());
    }
    return ReductionBasis(std::move(rows), method);
}

ReductionBasis ReductionBasis::orthonormalized(const Eigen::MatrixXd& rows, ReductionMethod method) {
    const Eigen::Index d = rows.rows();
    const Eigen::Index p = rows.cols();
    if (d < 1 || p < d) throw ArgumentError("basis must be d x p with 1 <= d <= p");
    if (!rows.allFinite()) throw NumericError("basis estimate has non-finite entries");
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(rows.transpose());
    const Eigen::MatrixXd r = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
    const double scale = r.diagonal().cwiseAbs().maxCoeff();
    if (!(scale > 0.0) || r.diagonal().cwiseAbs().minCoeff() <= 1e-12 * scale)
        throw DegenerateFitError("basis estimate is rank deficient");
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(p, d);
    Eigen::MatrixXd out = q.transpose();
    fix_signs(out);
    return ReductionBasis(std::move(out), method);
}

ReductionBasis ReductionBasis::identity(std::size_t p) {
    const auto n = static_cast<Eigen::Index>(p);
    return ReductionBasis(Eigen::MatrixXd::Identity(n, n), ReductionMethod::identity);
}

ReductionBasis ReductionBasis::rotated(const Eigen::MatrixXd& a) const {
    if (a.rows() != rows_.rows() || a.cols() != rows_.rows())
        throw ArgumentError("rotation must be d x d");
    auto out = from_rows(a * rows_, method_);
    out.diagnostics = diagnostics;
    return out;
}

ProjectionMatrix::ProjectionMatrix(Eigen::MatrixXd matrix, std::size_t rank)
    : matrix_(std::move(matrix)), rank_(rank) {
    if (matrix_.rows() != matrix_.cols() || matrix_.rows() == 0)
        throw ArgumentError("projection must be a non-empty square matrix");
    if (!matrix_.allFinite()) throw ArgumentError("projection has non-finite entries");
    const double asym = (matrix_ - matrix_.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10) throw ArgumentError("projection is not symmetric");
    const double idem = (matrix_ * matrix_ - matrix_).cwiseAbs().maxCoeff();
    if (idem > 1e-8) throw ArgumentError("projection is not idempotent");
    if (std::abs(matrix_.trace() - static_cast<double>(rank_)) > 1e-6)
        throw ArgumentError("projection trace does not match its rank");
}

ProjectionMatrix ProjectionMatrix::from_basis(const ReductionBasis& basis) {
    Eigen::MatrixXd p = basis.matrix().transpose() * basis.matrix();
    p = 0.5 * (p + p.transpose()).eval();
    return ProjectionMatrix(std::move(p), basis.d());
}

ProjectionMatrix ProjectionMatrix::reproject(const Eigen::MatrixXd& m, std::size_t rank) {
    if (m.rows() != m.cols()) throw ArgumentError("reproject needs a square matrix");
    if (rank < 1 || rank > static_cast<std::size_t>(m.rows()))
        throw ArgumentError("reproject rank out of range");
    const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    const auto top = top_eigen(sym, rank);
    Eigen::MatrixXd p = top.vectors * top.vectors.transpose();
    p = 0.5 * (p + p.transpose()).eval();
    return ProjectionMatrix(std::move(p), rank);
}

FyBasis fy_linear_abs() {
    return [](double y) {
        Eigen::VectorXd f(2);
        f << y, std::abs(y);
        return f;
    };
}

FyBasis fy_polynomial(int degree) {
    if (degree < 1) throw ArgumentError("polynomial basis degree must be >= 1");
    return [degree](double y) {
        Eigen::VectorXd f(degree);
        double v = 1.0;
        for (int k = 0; k < degree; ++k) f(k) = (v *= y);
        return f;
    };
}

ReductionBasis pls_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::size_t d) {
    require_shapes(x, y, d);
    const auto n = static_cast<double>(x.rows());
    Eigen::MatrixXd xk = centered(x);
    const Eigen::VectorXd yc = y.array() - y.mean();
    const double scale = std::max(1.0, xk.norm() * yc.norm() / n);

    Eigen::MatrixXd weights(x.cols(), static_cast<Eigen::Index>(d));
    for (std::size_t k = 0; k < d; ++k) {
        Eigen::VectorXd w = xk.transpose() * yc / n;
        const double norm = w.norm();
        if (norm < 1e-12 * scale) {
            std::ostringstream msg;
            msg << "PLS component " << k + 1 << " has zero covariance with Y (|X^T y|/n = "
                << norm << ")";
            throw DegenerateFitError(msg.str());
        }
        w /= norm;
        const Eigen::VectorXd t = xk * w;
        const Eigen::VectorXd load = xk.transpose() * t / t.squaredNorm();
        xk -= t * load.transpose();
        weights.col(static_cast<Eigen::Index>(k)) = w;
    }
    auto basis = ReductionBasis::orthonormalized(weights.transpose(), ReductionMethod::pls);
    basis.diagnostics["n"] = n;
    return basis;
}

ReductionBasis pfc_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const FyBasis& fy,
                       std::size_t d, std::optional<double> ridge) {
    require_shapes(x, y, d);
    if (!fy) throw ArgumentError("pfc_fit needs a response basis f_y");
    if (ridge && !(*ridge >= 0.0)) throw ArgumentError("ridge must be >= 0");
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();

    const Eigen::VectorXd f0 = fy(y(0));
    const Eigen::Index r = f0.size();
    if (r < 1) throw ArgumentError("f_y must have at least one component");
    if (r >= n) throw ArgumentError("f_y dimension r must be smaller than n");
    if (n <= p + r) {
        std::ostringstream msg;
        msg << "pfc_fit needs n > p + r (n=" << n << ", p=" << p << ", r=" << r << ")";
        throw ArgumentError(msg.str());
    }
    Eigen::MatrixXd f(n, r);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd fi = fy(y(i));
        if (fi.size() != r) throw ArgumentError("f_y changed dimension across observations");
        f.row(i) = fi.transpose();
    }
    if (!f.allFinite()) throw DataError("f_y produced non-finite values");
    f = centered(f);
    const Eigen::MatrixXd xc = centered(x);

    const Eigen::MatrixXd coef = f.colPivHouseholderQr().solve(xc);
    const Eigen::MatrixXd fitted = f * coef;
    const Eigen::MatrixXd resid = xc - fitted;
    const double nd = static_cast<double>(n);
    const Eigen::MatrixXd sigma_fit = fitted.transpose() * fitted / nd;
    Eigen::MatrixXd sigma_res = resid.transpose() * resid / nd;
    const double lambda = ridge ? *ridge : 1e-8 * sigma_res.trace() / static_cast<double>(p);
    sigma_res.diagonal().array() += lambda;

    Eigen::LLT<Eigen::MatrixXd> llt(sigma_res);
    if (llt.info() != Eigen::Success)
        throw NumericError("residual covariance is singular; rerun pfc_fit with a positive ridge");
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(sigma_fit, sigma_res);
    if (ges.info() != Eigen::Success)
        throw NumericError("generalized eigenproblem failed; rerun pfc_fit with a larger ridge");

    Eigen::MatrixXd dirs(p, static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < d; ++j)
        dirs.col(static_cast<Eigen::Index>(j)) = ges.eigenvectors().col(p - 1 - static_cast<Eigen::Index>(j));
    auto basis = ReductionBasis::orthonormalized(dirs.transpose(), ReductionMethod::pfc);
    for (std::size_t j = 0; j < d; ++j)
        basis.diagnostics["eigenvalue_" + std::to_string(j + 1)] =
            ges.eigenvalues()(p - 1 - static_cast<Eigen::Index>(j));
    basis.diagnostics["ridge"] = lambda;
    basis.diagnostics["r"] = static_cast<double>(r);
    return basis;
}

std::size_t default_sir_slices(std::size_t n) {
    return std::max<std::size_t>(2, std::min<std::size_t>(10, n / 20));
}

ReductionBasis sir_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::size_t slices,
                       std::size_t d, double ridge) {
    const auto n = static_cast<std::size_t>(x.rows());
    if (slices == 0) slices = default_sir_slices(n);
    if (slices < 2) throw ArgumentError("sir_fit needs at least 2 slices");
    if (slices > n) throw ArgumentError("more slices than observations: a slice would be empty");
    require_shapes(x, y, d);
    if (!(ridge >= 0.0)) throw ArgumentError("ridge must be >= 0");
    const Eigen::Index p = x.cols();
    const double nd = static_cast<double>(n);

    const Eigen::MatrixXd xc = centered(x);
    Eigen::MatrixXd cov = xc.transpose() * xc / nd;
    cov.diagonal().array() += ridge;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    const double top = es.eigenvalues().maxCoeff();
    if (!(es.eigenvalues().minCoeff() > 1e-12 * top))
        throw NumericError("sample covariance of X is singular; rerun sir_fit with a positive ridge");
    const Eigen::MatrixXd inv_sqrt = es.eigenvectors() *
                                     es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                                     es.eigenvectors().transpose();
    const Eigen::MatrixXd z = xc * inv_sqrt;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return y(static_cast<Eigen::Index>(a)) < y(static_cast<Eigen::Index>(b)); });

    Eigen::MatrixXd between = Eigen::MatrixXd::Zero(p, p);
    for (std::size_t h = 0; h < slices; ++h) {
        const std::size_t lo = h * n / slices;
        const std::size_t hi = (h + 1) * n / slices;
        Eigen::VectorXd m = Eigen::VectorXd::Zero(p);
        for (std::size_t k = lo; k < hi; ++k) m += z.row(static_cast<Eigen::Index>(order[k])).transpose();
        const double cnt = static_cast<double>(hi - lo);
        m /= cnt;
        between += (cnt / nd) * m * m.transpose();
    }
    const auto eig = top_eigen(between, d);
    const Eigen::MatrixXd dirs = inv_sqrt * eig.vectors;
    auto basis = ReductionBasis::orthonormalized(dirs.transpose(), ReductionMethod::sir);
    for (std::size_t j = 0; j < d; ++j)
        basis.diagnostics["eigenvalue_" + std::to_string(j + 1)] = eig.values(static_cast<Eigen::Index>(j));
    basis.diagnostics["slices"] = static_cast<double>(slices);
    return basis;
}

ReductionBasis projection_to_basis(const ProjectionMatrix& proj, std::size_t d) {
    const auto p = static_cast<std::size_t>(proj.matrix().rows());
    if (d < 1 || d > p) throw ArgumentError("projection_to_basis needs 1 <= d <= p");
    const Eigen::MatrixXd sym = 0.5 * (proj.matrix() + proj.matrix().transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.info() != Eigen::Success) throw NumericError("eigendecomposition of projection failed");
    const auto& vals = es.eigenvalues();  // ascending
    const auto pi = static_cast<Eigen::Index>(p);
    const auto di = static_cast<Eigen::Index>(d);
    if (d < p) {
        const double gap = vals(pi - di) - vals(pi - di - 1);
        if (gap < 1e-6) {
            std::ostringstream msg;
            msg << "eigengap between eigenvalues " << d << " and " << d + 1 << " is " << gap
                << " (< 1e-6); rank is ambiguous";
            throw AmbiguousRankError(msg.str());
        }
    }
    Eigen::MatrixXd rows(di, pi);
    for (Eigen::Index j = 0; j < di; ++j) rows.row(j) = es.eigenvectors().col(pi - 1 - j).transpose();
    fix_signs(rows);
    return ReductionBasis::from_rows(std::move(rows), ReductionMethod::from_projection);
}

Eigen::MatrixXd reduce(const ReductionBasis& basis, const Eigen::MatrixXd& x) {
    if (static_cast<std::size_t>(x.cols()) != basis.p()) {
        std::ostringstream msg;
        msg << "X has " << x.cols() << " columns but the basis expects p = " << basis.p();
        throw ArgumentError(msg.str());
    }
    return x * basis.matrix().transpose();
}

Eigen::VectorXd principal_angles(const ReductionBasis& a, const ReductionBasis& b) {
    if (a.p() != b.p()) throw ArgumentError("bases live in different ambient dimensions");
    if (a.d() != b.d()) throw ArgumentError("principal angles need subspaces of equal dimension");
    // cosines from A B^T, sines from the part of B orthogonal to span(A); atan2
    // keeps small angles accurate.
    const Eigen::MatrixXd& am = a.matrix();
    const Eigen::MatrixXd& bm = b.matrix();
    Eigen::JacobiSVD<Eigen::MatrixXd> cos_svd(am * bm.transpose());
    const Eigen::MatrixXd resid = bm - (bm * am.transpose()) * am;
    Eigen::JacobiSVD<Eigen::MatrixXd> sin_svd(resid);
    const Eigen::VectorXd c = cos_svd.singularValues();  // descending
    Eigen::VectorXd s = sin_svd.singularValues();        // descending
    const Eigen::Index d = c.size();
    Eigen::VectorXd out(d);
    for (Eigen::Index i = 0; i < d; ++i) out(i) = std::atan2(s(d - 1 - i), c(i));
    return out;
}

}  // namespace sdrnw
