#include <algorithm>
#include <cmath>
#include <sstream>

#include "sdrnw/errors.hpp"
#include "sdrnw/io.hpp"

namespace sdrnw::io {

using nlohmann::json;

namespace {

json matrix_json(const Eigen::MatrixXd& m) {
    json a = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        a.push_back(std::move(r));
    }
    return a;
}

Eigen::MatrixXd matrix_from_json(const json& a) {
    const auto rows = static_cast<Eigen::Index>(a.size());
    const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(a.at(0).size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (static_cast<Eigen::Index>(a.at(i).size()) != cols) throw DataError("ragged matrix in config");
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = a.at(i).at(j).get<double>();
    }
    return m;
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    return it->get<T>();
}

}  // namespace

json SimulateSpec::to_json() const {
    json ms = json::array();
    for (auto m : methods) ms.push_back(sdrnw::to_string(m));
    json j = {{"model", model},
              {"methods", ms},
              {"reduction", reduction ? json(sdrnw::to_string(*reduction)) : json(nullptr)},
              {"ns", ns},
              {"n_rep", n_rep},
              {"seed", seed},
              {"threads", threads},
              {"n_test_points", n_test_points},
              {"test_points", test_points ? matrix_json(*test_points) : json(nullptr)},
              {"bandwidth_constant", bandwidth_constant ? json(*bandwidth_constant) : json(nullptr)},
              {"density_grid", density_grid},
              {"equivalence", equivalence},
              {"equivalence_ns", equivalence_ns},
              {"equivalence_nrep", equivalence_nrep},
              {"coverage", coverage},
              {"coverage_n", coverage_n},
              {"coverage_nrep", coverage_nrep},
              {"coverage_level", coverage_level}};
    return j;
}

SimulateSpec SimulateSpec::from_json(const json& j) {
    SimulateSpec s;
    try {
        s.model = get_or(j, "model", s.model);
        if (j.contains("methods")) {
            s.methods.clear();
            for (const auto& m : j.at("methods")) s.methods.push_back(method_from_string(m.get<std::string>()));
        }
        if (j.contains("reduction") && !j.at("reduction").is_null())
            s.reduction = reduction_method_from_string(j.at("reduction").get<std::string>());
        s.ns = get_or(j, "ns", s.ns);
        s.n_rep = get_or(j, "n_rep", s.n_rep);
        s.seed = get_or(j, "seed", s.seed);
        s.threads = get_or(j, "threads", s.threads);
        s.n_test_points = get_or(j, "n_test_points", s.n_test_points);
        if (j.contains("test_points") && !j.at("test_points").is_null())
            s.test_points = matrix_from_json(j.at("test_points"));
        if (j.contains("bandwidth_constant") && !j.at("bandwidth_constant").is_null())
            s.bandwidth_constant = j.at("bandwidth_constant").get<double>();
        s.density_grid = get_or(j, "density_grid", s.density_grid);
        s.equivalence = get_or(j, "equivalence", s.equivalence);
        s.equivalence_ns = get_or(j, "equivalence_ns", s.equivalence_ns);
        s.equivalence_nrep = get_or(j, "equivalence_nrep", s.equivalence_nrep);
        s.coverage = get_or(j, "coverage", s.coverage);
        s.coverage_n = get_or(j, "coverage_n", s.coverage_n);
        s.coverage_nrep = get_or(j, "coverage_nrep", s.coverage_nrep);
        s.coverage_level = get_or(j, "coverage_level", s.coverage_level);
    } catch (const json::exception& e) {
        throw ArgumentError(std::string("bad simulate config: ") + e.what());
    }
    return s;
}

std::unique_ptr<SimModel> make_model(int model) {
    if (model == 1) return std::make_unique<Model1>();
    if (model == 2) return std::make_unique<Model2>();
    throw ArgumentError("unknown model " + std::to_string(model) + " (expected 1 or 2)");
}

ReplicationConfig replication_config(const SimulateSpec& spec, const SimModel& model) {
    ReplicationConfig cfg;
    const ReductionMethod red = spec.reduction ? *spec.reduction : model.default_reduction();
    for (auto m : spec.methods) cfg.methods.push_back({m, red});
    cfg.ns = spec.ns;
    cfg.n_rep = spec.n_rep;
    cfg.base_seed = spec.seed;
    cfg.threads = spec.threads;
    cfg.test_points = spec.test_points ? *spec.test_points : draw_test_points(model, spec.n_test_points, spec.seed);
    if (spec.bandwidth_constant)
        cfg.bandwidth = BandwidthRule::power(*spec.bandwidth_constant, ExponentDim::ambient_p);
    return cfg;
}

namespace {

std::string emse_csv(const ReplicationTable& t) {
    std::ostringstream os;
    os << "point,method,n,emse,variance,true_mse,mean_estimate,truth,h,n_valid,n_missing\n";
    for (const auto& c : t.cells) {
        os << c.key.point + 1 << ',' << to_string(c.key.method) << ',' << c.key.n << ',' << format_double(c.emse)
           << ',' << format_double(c.variance) << ',' << format_double(c.true_mse) << ','
           << format_double(c.mean_estimate) << ',' << format_double(t.truth(static_cast<Eigen::Index>(c.key.point)))
           << ',' << format_double(c.h) << ',' << c.n_rep << ',' << c.n_missing << '\n';
    }
    return os.str();
}

std::string density_csv(const ReplicationTable& t, std::size_t point, std::size_t grid_size) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& [key, est] : t.estimates) {
        if (key.point != point) continue;
        for (double v : est)
            if (std::isfinite(v)) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
    }
    std::ostringstream os;
    os << "method,n,x,density\n";
    if (!(hi >= lo)) return os.str();
    const double pad = hi > lo ? 0.1 * (hi - lo) : 1.0;
    lo -= pad;
    hi += pad;
    std::vector<double> grid(std::max<std::size_t>(grid_size, 2));
    for (std::size_t i = 0; i < grid.size(); ++i)
        grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid.size() - 1);
    for (const auto& [key, est] : t.estimates) {
        if (key.point != point) continue;
        const auto finite = std::count_if(est.begin(), est.end(), [](double v) { return std::isfinite(v); });
        if (finite < 10) continue;
        for (const auto& dp : estimate_density_data(est, grid))
            os << to_string(key.method) << ',' << key.n << ',' << format_double(dp.x) << ','
               << format_double(dp.density) << '\n';
    }
    return os.str();
}

ReductionBasis wrong_direction(const SimModel& model) {
    Eigen::MatrixXd b = model.beta0().matrix();
    b(0, b.cols() - 1) = -b(0, b.cols() - 1);
    return ReductionBasis::orthonormalized(b, ReductionMethod::given);
}

}  // namespace

RunManifest run_simulate(SimulateSpec& spec, const std::filesystem::path& out_dir) {
    if (spec.ns.empty()) throw ArgumentError("simulate needs at least one n");
    if (spec.n_rep < 1) throw ArgumentError("simulate needs n_rep >= 1");
    const auto model = make_model(spec.model);
    const ReplicationConfig cfg = replication_config(spec, *model);
    spec.test_points = cfg.test_points;

    RunManifest man;
    man.command = "simulate";
    auto out = [&](const std::string& name, const std::string& text) {
        write_text(out_dir / name, text);
        man.outputs.push_back(name);
    };

    const ReplicationTable table = run_replications(*model, cfg);
    out("emse.csv", emse_csv(table));
    for (Eigen::Index j = 0; j < cfg.test_points.rows(); ++j)
        out("density_" + std::to_string(j + 1) + ".csv",
            density_csv(table, static_cast<std::size_t>(j), spec.density_grid));

    const Eigen::VectorXd x_equiv = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(model->p()), 0.5);
    if (spec.equivalence) {
        const ReductionMethod red = spec.reduction ? *spec.reduction : model->default_reduction();
        const BandwidthRule rule = BandwidthRule::power(
            spec.bandwidth_constant ? *spec.bandwidth_constant : model->bandwidth_constant(), ExponentDim::ambient_p);
        std::ostringstream os;
        os << "estimator,n,h,median_stat,n_valid\n";
        const std::pair<std::string, BasisEstimator> arms[] = {
            {to_string(red), estimator_for(red, model->d())},
            {"wrong_direction", fixed_estimator(wrong_direction(*model))}};
        for (const auto& [label, est] : arms)
            for (const auto& row : equivalence_experiment(*model, spec.equivalence_ns, spec.equivalence_nrep, x_equiv,
                                                          est, rule, spec.seed, spec.threads))
                os << label << ',' << row.n << ',' << format_double(row.h) << ',' << format_double(row.median_stat)
                   << ',' << row.n_valid << '\n';
        out("equivalence.csv", os.str());
    }
    if (spec.coverage) {
        const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model->p()));
        const auto res = coverage_experiment(*model, spec.coverage_n, spec.coverage_nrep, x0, spec.coverage_level,
                                             coverage_bandwidth_default(), spec.seed, spec.threads);
        std::ostringstream os;
        os << "n,level,coverage,truth,h,median_half_width,n_valid,n_excluded\n"
           << spec.coverage_n << ',' << format_double(res.level) << ',' << format_double(res.coverage) << ','
           << format_double(res.truth) << ',' << format_double(res.h) << ',' << format_double(res.median_half_width)
           << ',' << res.n_valid << ',' << res.n_excluded << '\n';
        out("coverage.csv", os.str());
    }

    man.config = spec.to_json();
    man.seeds = {{"base_seed", spec.seed}, {"test_point_stream", stream_key({spec.seed, tag(Stage::test_points)})}};
    if (spec.model == 2) man.seeds["model2_s_seed"] = kModel2SSeed;
    man.outputs.push_back("manifest.json");
    man.write(out_dir / "manifest.json");
    return man;
}

namespace {

std::vector<ColumnTransform> transforms_of(const json& cfg) {
    std::vector<ColumnTransform> out;
    for (const auto& t : get_or(cfg, "transforms", std::vector<std::string>{})) out.push_back(parse_transform(t));
    return out;
}

Dataset dataset_of(const json& cfg, RunManifest& man) {
    const auto input = get_or<std::string>(cfg, "input", "");
    if (input.empty()) throw ArgumentError("--input is required");
    const auto response = get_or<std::string>(cfg, "response", "");
    if (response.empty()) throw ArgumentError("--response is required");
    auto ds = load_csv(input, response, transforms_of(cfg), get_or(cfg, "skip_bad_rows", false));
    man.inputs.emplace_back(input, fnv1a_digest(input));
    return ds;
}

BandwidthRule bandwidth_of(const json& cfg) {
    const json b = get_or(cfg, "bandwidth", json::object());
    const auto kind = get_or<std::string>(b, "kind", "loocv");
    if (kind == "fixed") return BandwidthRule::fixed(b.at("h").get<double>());
    if (kind == "loocv") return BandwidthRule::loocv(get_or(b, "grid", std::vector<double>{}));
    if (kind != "power_rule") throw ArgumentError("unknown bandwidth kind '" + kind + "'");
    const double c = get_or(b, "constant", 1.0);
    if (b.contains("rate") && !b.at("rate").is_null()) return BandwidthRule::power_with_rate(c, b.at("rate").get<double>());
    return BandwidthRule::power(c, exponent_dim_from_string(get_or<std::string>(b, "exponent_dim", "ambient_p")));
}

CommandResult kernel_check(const json& cfg, const std::optional<std::filesystem::path>& out_dir) {
    const auto profile = profile_from_string(get_or<std::string>(cfg, "profile", "triweight"));
    const auto dim = get_or<std::size_t>(cfg, "dim", 1);
    const auto rep = validate_conditions(make_kernel(KernelProfile::builtin(profile), dim));
    json checks = json::array();
    for (const auto& c : rep.checks) {
        json e = {{"name", c.name}, {"value", c.value}, {"pass", c.pass}};
        if (!c.note.empty()) e["note"] = c.note;
        checks.push_back(std::move(e));
    }
    const json j = {{"profile", rep.profile}, {"dim", rep.dim},
                    {"norm_const", rep.norm_const},      {"l2_const", rep.l2_const},
                    {"moment_order", rep.moment_order},  {"all_pass", rep.all_pass()},
                    {"checks", checks}};
    CommandResult res{j.dump(2) + "\n", std::nullopt};
    if (out_dir) {
        RunManifest man;
        man.command = "kernel-check";
        man.config = cfg;
        write_text(*out_dir / "kernel_check.json", res.stdout_text);
        man.outputs = {"kernel_check.json", "manifest.json"};
        man.write(*out_dir / "manifest.json");
        res.manifest = man;
    }
    return res;
}

CommandResult reduce_cmd(const json& cfg, const std::optional<std::filesystem::path>& out_dir) {
    RunManifest man;
    man.command = "reduce";
    man.config = cfg;
    const Dataset ds = dataset_of(cfg, man);
    const auto method = reduction_method_from_string(get_or<std::string>(cfg, "method", "pls"));
    const auto d = get_or<std::size_t>(cfg, "d", 1);
    if (d < 1 || d >= ds.p())
        throw ArgumentError("reduce needs 1 <= d < p (d = " + std::to_string(d) + ", p = " + std::to_string(ds.p()) + ")");
    ReductionBasis basis = [&] {
        switch (method) {
            case ReductionMethod::pls: return pls_fit(ds.x, ds.y, d);
            case ReductionMethod::pfc: {
                std::optional<double> ridge;
                if (cfg.contains("ridge") && !cfg.at("ridge").is_null()) ridge = cfg.at("ridge").get<double>();
                return pfc_fit(ds.x, ds.y, fy_linear_abs(), d, ridge);
            }
            case ReductionMethod::sir: return sir_fit(ds.x, ds.y, get_or<std::size_t>(cfg, "slices", 0), d);
            default: throw ArgumentError("reduce supports pls, pfc and sir");
        }
    }();
    const auto dir = out_dir ? *out_dir : std::filesystem::path(".");
    write_csv(dir / "basis.csv", ds.column_names, basis.matrix());
    json meta = basis_metadata(basis);
    meta["columns"] = ds.column_names;
    meta["n"] = ds.n();
    meta["dropped_rows"] = ds.dropped_rows;
    write_text(dir / "basis.json", meta.dump(2) + "\n");
    man.outputs = {"basis.csv", "basis.json", "manifest.json"};
    man.write(dir / "manifest.json");
    return {meta.dump(2) + "\n", man};
}

CommandResult predict_cmd(const std::string& command, const json& cfg,
                          const std::optional<std::filesystem::path>& out_dir) {
    RunManifest man;
    man.command = command;
    man.config = cfg;
    const Dataset ds = dataset_of(cfg, man);
    PredictOptions o;
    const auto basis_path = get_or<std::string>(cfg, "basis", "");
    if (!basis_path.empty()) {
        o.method = ReductionMethod::given;
        o.basis = read_basis_csv(basis_path);
        man.inputs.emplace_back(basis_path, fnv1a_digest(basis_path));
    } else {
        o.method = reduction_method_from_string(get_or<std::string>(cfg, "method", "pls"));
    }
    o.d = get_or<std::size_t>(cfg, "d", 1);
    o.kernel = profile_from_string(get_or<std::string>(cfg, "kernel", "triweight"));
    o.bandwidth = bandwidth_of(cfg);
    o.ci_level = get_or(cfg, "level", 0.95);
    o.sir_slices = get_or<std::size_t>(cfg, "slices", 0);
    o.standardize = get_or(cfg, "standardize", false);
    const auto test_path = get_or<std::string>(cfg, "test", "");
    if (command == "predict") {
        if (test_path.empty()) throw ArgumentError("predict needs --test (use fit for in-sample values)");
        const auto t = read_numeric_csv(test_path);
        man.inputs.emplace_back(test_path, fnv1a_digest(test_path));
        if (t.columns != ds.column_names && t.values.rows() > 0) {
            // Reorder by name when the test file carries the predictor names.
            Eigen::MatrixXd m(t.values.rows(), static_cast<Eigen::Index>(ds.column_names.size()));
            for (std::size_t k = 0; k < ds.column_names.size(); ++k) {
                const auto it = std::find(t.columns.begin(), t.columns.end(), ds.column_names[k]);
                if (it == t.columns.end())
                    throw DataError(test_path + ": missing predictor column '" + ds.column_names[k] + "'");
                m.col(static_cast<Eigen::Index>(k)) = t.values.col(it - t.columns.begin());
            }
            o.test_rows = m;
        } else {
            o.test_rows = t.values.rows() > 0 ? t.values : Eigen::MatrixXd(0, static_cast<Eigen::Index>(ds.p()));
        }
    }
    const PredictReport rep = run_predict_workflow(ds, o);
    const std::string text = rep.to_json().dump(2) + "\n";
    const auto plot = get_or<std::string>(cfg, "plot_data", "");
    if (!plot.empty()) {
        const std::filesystem::path pp = out_dir && std::filesystem::path(plot).is_relative() ? *out_dir / plot : std::filesystem::path(plot);
        rep.write_plot_data(pp);
        man.outputs.push_back(plot);
    }
    CommandResult res{text, std::nullopt};
    if (out_dir) {
        write_text(*out_dir / (command + ".json"), text);
        man.outputs.push_back(command + ".json");
        man.outputs.push_back("manifest.json");
        man.write(*out_dir / "manifest.json");
        res.manifest = man;
    }
    return res;
}

}  // namespace

CommandResult run_command(const std::string& command, const json& config,
                          const std::optional<std::filesystem::path>& out_dir) {
    try {
        if (command == "kernel-check") return kernel_check(config, out_dir);
        if (command == "reduce") return reduce_cmd(config, out_dir);
        if (command == "fit" || command == "predict") return predict_cmd(command, config, out_dir);
        if (command == "simulate") {
            SimulateSpec spec = SimulateSpec::from_json(config);
            const auto dir = out_dir ? *out_dir : std::filesystem::path(".");
            auto man = run_simulate(spec, dir);
            return {"wrote " + std::to_string(man.outputs.size()) + " files to " + dir.string() + "\n", man};
        }
    } catch (const json::exception& e) {
        throw ArgumentError("bad " + command + " config: " + e.what());
    }
    throw ArgumentError("unknown command '" + command + "'");
}

CommandResult rerun_manifest(const std::filesystem::path& manifest_path,
                             const std::optional<std::filesystem::path>& out_dir, std::optional<std::size_t> threads) {
    const RunManifest man = RunManifest::read(manifest_path);
    man.verify_inputs();
    json cfg = man.config;
    if (threads && man.command == "simulate") cfg["threads"] = *threads;
    const auto dir = out_dir ? *out_dir : manifest_path.parent_path().empty() ? std::filesystem::path(".")
                                                                             : manifest_path.parent_path();
    return run_command(man.command, cfg, dir);
}

}  // namespace sdrnw::io
