#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sdrnw/errors.hpp"
#include "sdrnw/io.hpp"

namespace {

using nlohmann::json;
using namespace sdrnw;

enum Exit { ok = 0, argument = 2, data = 3, numeric = 4 };

struct DataOpts {
    std::string input;
    std::string response;
    std::vector<std::string> transforms;
    bool skip_bad_rows = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--input", input, "CSV with a header row")->required();
        cmd->add_option("--response", response, "response column name")->required();
        cmd->add_option("--transform", transforms, "column:op with op in {log, center, none}; repeatable, applied in order");
        cmd->add_flag("--skip-bad-rows", skip_bad_rows, "drop unparseable rows instead of failing");
    }
    void into(json& j) const {
        j["input"] = input;
        j["response"] = response;
        j["transforms"] = transforms;
        j["skip_bad_rows"] = skip_bad_rows;
    }
};

struct FitOpts {
    DataOpts data;
    std::string basis;
    std::string method = "pls";
    std::size_t d = 1;
    std::string kernel = "triweight";
    std::optional<double> constant;
    std::optional<double> rate;
    std::optional<double> h;
    std::vector<double> cv_grid;
    std::string exponent_dim = "ambient_p";
    double level = 0.95;
    std::size_t slices = 0;
    std::string test;
    std::string plot_data;
    bool standardize = false;

    void attach(CLI::App* cmd, bool needs_test) {
        data.attach(cmd);
        cmd->add_option("--basis", basis, "basis CSV written by `reduce`");
        cmd->add_option("--method", method, "pls, pfc, sir or np (identity) when no --basis is given")
            ->check(CLI::IsMember({"pls", "pfc", "sir", "np", "identity"}));
        cmd->add_option("--d", d, "reduced dimension");
        cmd->add_option("--kernel", kernel, "radial kernel profile");
        cmd->add_option("--bandwidth-constant", constant,
                        "power rule h = c s n^-rate, s the RMS sd of the reduced data (default: leave-one-out CV)");
        cmd->add_option("--bandwidth-rate", rate, "rate override (default 1/(4+p))");
        cmd->add_option("--exponent-dim", exponent_dim, "ambient_p or reduced_d for the default rate");
        cmd->add_option("--fixed-h", h, "fixed bandwidth");
        cmd->add_option("--cv-grid", cv_grid, "leave-one-out bandwidth grid (default: automatic)")->delimiter(',');
        cmd->add_option("--level", level, "confidence level");
        cmd->add_option("--slices", slices, "SIR slices (0 = automatic)");
        cmd->add_flag("--standardize", standardize, "scale predictors to unit sd first (ignored with --basis)");
        auto* t = cmd->add_option("--test", test, "CSV of test rows (predictor columns)");
        if (needs_test) t->required();
        cmd->add_option("--plot-data", plot_data, "write observed, fitted, ci_lo, ci_hi rows here");
    }
    json to_json() const {
        json j;
        data.into(j);
        j["basis"] = basis;
        j["method"] = method;
        j["d"] = d;
        j["kernel"] = kernel;
        if (h)
            j["bandwidth"] = {{"kind", "fixed"}, {"h", *h}};
        else if (constant || rate)
            j["bandwidth"] = {{"kind", "power_rule"}, {"constant", constant.value_or(1.0)},
                              {"rate", rate ? json(*rate) : json(nullptr)}, {"exponent_dim", exponent_dim}};
        else
            j["bandwidth"] = {{"kind", "loocv"}, {"grid", cv_grid}};
        j["level"] = level;
        j["slices"] = slices;
        j["standardize"] = standardize;
        j["test"] = test;
        j["plot_data"] = plot_data;
        return j;
    }
};

int run(int argc, char** argv) {
    CLI::App app{"Nonparametric regression after sufficient dimension reduction"};
    app.set_version_flag("--version", std::string(io::kToolVersion));
    app.set_config("--config", "", "flat key = value file mirroring the flags; flags win");
    app.require_subcommand(0, 1);
    app.fallthrough();

    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    std::optional<std::string> out;
    std::optional<std::string> from_manifest;
    app.add_option("--seed", seed, "base seed for simulate");
    app.add_option("--threads", threads, "worker threads for simulate")->check(CLI::PositiveNumber);
    app.add_option("--out", out, "output directory");
    app.add_option("--from-manifest", from_manifest, "re-run a recorded manifest.json")->check(CLI::ExistingFile);

    auto* kc = app.add_subcommand("kernel-check", "validate a kernel profile and print its constants");
    std::string kc_profile = "triweight";
    std::size_t kc_dim = 1;
    kc->add_option("--profile", kc_profile, "triweight, epanechnikov, biweight or uniform");
    kc->add_option("--dim", kc_dim, "dimension d")->check(CLI::PositiveNumber);

    auto* rd = app.add_subcommand("reduce", "estimate a reduction basis");
    DataOpts rd_data;
    std::string rd_method = "pls";
    std::size_t rd_d = 1;
    std::size_t rd_slices = 0;
    std::optional<double> rd_ridge;
    rd_data.attach(rd);
    rd->add_option("--method", rd_method, "pls, pfc or sir")->check(CLI::IsMember({"pls", "pfc", "sir"}));
    rd->add_option("--d", rd_d, "reduced dimension");
    rd->add_option("--slices", rd_slices, "SIR slices (0 = automatic)");
    rd->add_option("--ridge", rd_ridge, "PFC residual-covariance ridge");

    auto* ft = app.add_subcommand("fit", "in-sample fitted values with confidence intervals");
    FitOpts fit_opts;
    fit_opts.attach(ft, false);
    auto* pr = app.add_subcommand("predict", "predictions with confidence intervals at test rows");
    FitOpts pred_opts;
    pred_opts.attach(pr, true);

    auto* sm = app.add_subcommand("simulate", "Monte Carlo replication tables");
    io::SimulateSpec spec;
    std::vector<std::string> sm_methods{"np", "npr", "nprt"};
    std::optional<std::string> sm_reduction;
    std::optional<std::size_t> equiv_nrep;
    std::optional<std::size_t> cov_nrep;
    bool no_equiv = false;
    bool no_cov = false;
    bool full = false;
    std::optional<std::string> cell;
    sm->add_option("--model", spec.model, "1 or 2")->check(CLI::IsMember({1, 2}));
    sm->add_option("--methods", sm_methods, "subset of np,npr,nprt")->delimiter(',');
    sm->add_option("--reduction", sm_reduction, "estimator behind NPRT (model default when omitted)");
    sm->add_option("--ns", spec.ns, "sample sizes")->delimiter(',');
    sm->add_option("--nrep", spec.n_rep, "replications per cell")->check(CLI::PositiveNumber);
    sm->add_option("--test-points", spec.n_test_points, "number of test points")->check(CLI::PositiveNumber);
    sm->add_option("--bandwidth-constant", spec.bandwidth_constant, "override the model's c in c n^(-1/(4+p))");
    sm->add_option("--density-grid", spec.density_grid, "grid size of density_<point>.csv");
    sm->add_flag("--no-equivalence", no_equiv, "skip equivalence.csv");
    sm->add_option("--equiv-ns", spec.equivalence_ns, "equivalence sample sizes")->delimiter(',');
    sm->add_option("--equiv-nrep", equiv_nrep, "equivalence replications (default: --nrep)");
    sm->add_flag("--no-coverage", no_cov, "skip coverage.csv");
    sm->add_option("--coverage-n", spec.coverage_n, "coverage sample size");
    sm->add_option("--coverage-nrep", cov_nrep, "coverage replications (default 500)");
    sm->add_option("--level", spec.coverage_level, "coverage confidence level");
    sm->add_flag("--full", full, "1000 replications over n in {80,100,200,300,500,1000}");
    sm->add_option("--cell", cell, "with --from-manifest: recompute one cell, given as point,method,n");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? Exit::ok : Exit::argument;
    }

    const std::optional<std::filesystem::path> out_dir =
        out ? std::optional<std::filesystem::path>(*out) : std::nullopt;

    if (from_manifest) {
        if (cell) {
            const auto man = io::RunManifest::read(*from_manifest);
            if (man.command != "simulate") throw ArgumentError("--cell needs a simulate manifest");
            io::SimulateSpec s = io::SimulateSpec::from_json(man.config);
            if (threads) s.threads = *threads;
            const auto model = io::make_model(s.model);
            const auto cfg = io::replication_config(s, *model);
            std::vector<std::string> parts;
            for (auto r : CLI::detail::split(*cell, ',')) parts.push_back(r);
            if (parts.size() != 3) throw ArgumentError("--cell expects point,method,n");
            if (std::stoul(parts[0]) == 0) throw ArgumentError("cell points are numbered from 1");
            const CellKey key{std::stoul(parts[0]) - 1, std::stoul(parts[2]), method_from_string(parts[1])};
            const auto c = recompute_cell(*model, cfg, key);
            const json j = {{"point", key.point + 1}, {"method", to_string(key.method)}, {"n", key.n},
                            {"emse", io::format_double(c.emse)}, {"variance", io::format_double(c.variance)},
                            {"true_mse", io::format_double(c.true_mse)},
                            {"mean_estimate", io::format_double(c.mean_estimate)}, {"n_valid", c.n_rep},
                            {"n_missing", c.n_missing}};
            std::cout << j.dump(2) << "\n";
            return Exit::ok;
        }
        std::cout << io::rerun_manifest(*from_manifest, out_dir, threads).stdout_text;
        return Exit::ok;
    }

    std::string command;
    json cfg;
    if (kc->parsed()) {
        command = "kernel-check";
        cfg = {{"profile", kc_profile}, {"dim", kc_dim}};
    } else if (rd->parsed()) {
        command = "reduce";
        rd_data.into(cfg);
        cfg["method"] = rd_method;
        cfg["d"] = rd_d;
        cfg["slices"] = rd_slices;
        cfg["ridge"] = rd_ridge ? json(*rd_ridge) : json(nullptr);
    } else if (ft->parsed()) {
        command = "fit";
        cfg = fit_opts.to_json();
    } else if (pr->parsed()) {
        command = "predict";
        cfg = pred_opts.to_json();
    } else if (sm->parsed()) {
        command = "simulate";
        if (cell) throw ArgumentError("--cell needs --from-manifest");
        spec.methods.clear();
        for (const auto& m : sm_methods) spec.methods.push_back(method_from_string(m));
        if (sm_reduction) spec.reduction = reduction_method_from_string(*sm_reduction);
        if (full) {
            spec.n_rep = 1000;
            spec.ns = {80, 100, 200, 300, 500, 1000};
        }
        if (seed) spec.seed = *seed;
        if (threads) spec.threads = *threads;
        spec.equivalence = !no_equiv;
        spec.coverage = !no_cov;
        spec.equivalence_nrep = equiv_nrep ? *equiv_nrep : spec.n_rep;
        spec.coverage_nrep = cov_nrep ? *cov_nrep : 500;
        cfg = spec.to_json();
    } else {
        std::cerr << app.help();
        return Exit::argument;
    }
    std::cout << io::run_command(command, cfg, out_dir).stdout_text;
    return Exit::ok;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const sdrnw::ArgumentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return Exit::argument;
    } catch (const sdrnw::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return Exit::data;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return Exit::data;
    } catch (const sdrnw::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return Exit::numeric;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return Exit::argument;
    } catch (const std::exception& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return Exit::numeric;
    }
}
