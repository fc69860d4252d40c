#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "sdrnw/errors.hpp"
#include "sdrnw/io.hpp"
#include "sdrnw/kernels.hpp"
#include "sdrnw/npregress.hpp"
#include "sdrnw/reduction.hpp"
#include "sdrnw/rng.hpp"
#include "sdrnw/simulate.hpp"

namespace py = pybind11;
using namespace sdrnw;

namespace {

RadialKernel kernel_of(const std::string& profile, std::size_t dim) {
    return make_kernel(KernelProfile::builtin(profile_from_string(profile)), dim);
}

py::dict fit_dict(const NWFit& f) {
    py::dict d;
    d["eta_hat"] = f.eta_hat;
    d["f_hat"] = f.f_hat;
    d["sigma2_hat"] = f.sigma2_hat;
    d["ci_lo"] = f.ci_lo;
    d["ci_hi"] = f.ci_hi;
    d["h"] = f.h_used;
    d["effective_mass"] = f.effective_mass;
    return d;
}

std::unique_ptr<SimModel> model_of(int which) { return io::make_model(which); }

}  // namespace

PYBIND11_MODULE(_sdrnw, m) {
    m.doc() = "Nadaraya-Watson regression after sufficient dimension reduction (C++ core)";
    m.attr("__version__") = std::string(io::kToolVersion);

    // Later registrations are tried first, so bases go before derived classes.
    auto& base = py::register_exception<Error>(m, "SdrnwError", PyExc_RuntimeError);
    py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", base.ptr());
    auto& num = py::register_exception<NumericError>(m, "NumericError", base.ptr());
    py::register_exception<EmptyWindowError>(m, "EmptyWindowError", num.ptr());
    py::register_exception<DegenerateFitError>(m, "DegenerateFitError", num.ptr());
    py::register_exception<AmbiguousRankError>(m, "AmbiguousRankError", num.ptr());

    py::class_<RadialKernel>(m, "Kernel")
        .def_property_readonly("dim", &RadialKernel::dim)
        .def_property_readonly("norm_const", &RadialKernel::norm_const)
        .def_property_readonly("l2_const", &RadialKernel::l2_const)
        .def_property_readonly("second_moment", &RadialKernel::second_moment)
        .def_property_readonly("moment_order", &RadialKernel::moment_order)
        .def_property_readonly("support_radius", &RadialKernel::support_radius)
        .def_property_readonly("smooth", &RadialKernel::smooth)
        .def("__call__", [](const RadialKernel& k, const Eigen::VectorXd& u) {
            return k.eval({u.data(), static_cast<std::size_t>(u.size())});
        })
        .def("conditions", [](const RadialKernel& k) {
            py::dict out;
            for (const auto& c : validate_conditions(k).checks)
                out[py::str(c.name)] = py::make_tuple(c.value, c.pass);
            return out;
        }, "name -> (value, pass) for every kernel condition check");

    m.def("make_kernel", &kernel_of, py::arg("profile") = "triweight", py::arg("dim") = 1);

    m.def("pls", [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::size_t d) {
        return pls_fit(x, y, d).matrix();
    }, py::arg("x"), py::arg("y"), py::arg("d") = 1, "PLS (NIPALS) basis, d x p with orthonormal rows");
    m.def("pfc", [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::size_t d, std::optional<double> ridge) {
        return pfc_fit(x, y, fy_linear_abs(), d, ridge).matrix();
    }, py::arg("x"), py::arg("y"), py::arg("d") = 1, py::arg("ridge") = py::none(),
       "principal fitted components with f_y = (y, |y|)");
    m.def("sir", [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::size_t d, std::size_t slices) {
        return sir_fit(x, y, slices, d).matrix();
    }, py::arg("x"), py::arg("y"), py::arg("d") = 1, py::arg("slices") = 0);
    m.def("projection_to_basis", [](const Eigen::MatrixXd& p, std::size_t d) {
        // the rank of a projection is its trace
        const auto rank = static_cast<std::size_t>(std::max(0.0, std::round(p.trace())));
        return projection_to_basis(ProjectionMatrix(p, rank), d).matrix();
    }, py::arg("projection"), py::arg("d"));
    m.def("principal_angles", [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
        return principal_angles(ReductionBasis::orthonormalized(a, ReductionMethod::given),
                                ReductionBasis::orthonormalized(b, ReductionMethod::given));
    });

    m.def("nw_fit", [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& x0,
                       std::optional<Eigen::MatrixXd> basis, double h, const std::string& kernel, double level) {
        const auto b = basis ? ReductionBasis::from_rows(*basis, ReductionMethod::given)
                             : ReductionBasis::identity(static_cast<std::size_t>(x.cols()));
        NWConfig cfg(kernel_of(kernel, b.d()), BandwidthRule::fixed(h));
        cfg.ci_level = level;
        return fit_dict(nw_estimate(cfg, b, x, y, x0));
    }, py::arg("x"), py::arg("y"), py::arg("x0"), py::arg("basis") = py::none(), py::arg("h"),
       py::arg("kernel") = "triweight", py::arg("level") = 0.95,
       "Nadaraya-Watson fit at x0 on X basis^T (identity basis when omitted)");

    m.def("sample", [](int which, std::size_t n, std::uint64_t seed) {
        const auto d = model_of(which)->generate_stream(n, stream_key({seed}));
        return py::make_tuple(d.x, d.y);
    }, py::arg("model"), py::arg("n"), py::arg("seed") = 1, "draw (X, Y) from simulation model 1 or 2");
    m.def("truth", [](int which, const Eigen::MatrixXd& x) {
        const auto model = model_of(which);
        Eigen::VectorXd out(x.rows());
        for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = model->truth(x.row(i).transpose());
        return out;
    }, py::arg("model"), py::arg("x"), "E(Y | X = x) row by row");
    m.def("beta0", [](int which) { return model_of(which)->beta0().matrix(); }, py::arg("model"));

    m.def("_run_command", [](const std::string& command, const std::string& config, std::optional<std::string> out_dir) {
        std::optional<std::filesystem::path> dir;
        if (out_dir) dir = *out_dir;
        const auto res = io::run_command(command, nlohmann::json::parse(config), dir);
        return py::make_tuple(res.stdout_text, res.manifest ? py::object(py::str(res.manifest->to_json().dump()))
                                                            : py::object(py::none()));
    });
}
