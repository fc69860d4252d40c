// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "sdrnw/errors.hpp"
#include "sdrnw/io.hpp"
#include "sdrnw/kernels.hpp"
#include "sdrnw/npregress.hpp"
#include "sdrnw/reduction.hpp"
#include "sdrnw/rng.hpp"
#include "sdrnw/simulate.hpp"
#include "sdrnw/stats.hpp"

using namespace sdrnw;
namespace fs = std::filesystem;

namespace {

std::size_t g_threads = 1;
int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail, double seconds) {
    std::printf("%s criterion %d (%s): %s [%.1fs]\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str(), seconds);
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

template <class F>
void run(int id, const std::string& name, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    bool pass = false;
    std::string detail;
    try {
        std::tie(pass, detail) = body();
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(id, name, pass, detail, s);
}

Eigen::MatrixXd normals(Eigen::Index r, Eigen::Index c, CounterRng& rng) {
    std::normal_distribution<double> nd;
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) m(i, j) = nd(rng);
    return m;
}

Eigen::MatrixXd orthonormal_rows(Eigen::Index d, Eigen::Index p, CounterRng& rng) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(normals(p, p, rng));
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(p, p);
    return q.leftCols(d).transpose();
}

using Result = std::pair<bool, std::string>;

std::vector<std::vector<std::string>> read_rows(const fs::path& path) {
    std::ifstream in(path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
        rows.push_back(std::move(cells));
    }
    return rows;
}

Result kernel_constants() {
    const auto tri1 = make_kernel(KernelProfile::builtin(ProfileName::triweight_poly3), 1);
    const double norm_err = std::abs(tri1.norm_const() - 35.0 / 32.0);
    double worst_mass = 0.0;
    for (auto p : {ProfileName::triweight_poly3, ProfileName::epanechnikov, ProfileName::biweight, ProfileName::uniform})
        for (std::size_t d = 1; d <= 3; ++d)
            worst_mass = std::max(worst_mass, validate_conditions(make_kernel(KernelProfile::builtin(p), d))
                                                  .find("integral_one")->value);
    double worst_odd = 0.0;
    for (std::size_t d = 1; d <= 3; ++d)
        worst_odd = std::max(worst_odd, validate_conditions(make_kernel(KernelProfile::builtin(ProfileName::triweight_poly3), d))
                                            .find("odd_gradient_integral")->value);
    const bool ok = norm_err <= 1e-10 && worst_mass <= 1e-8 && worst_odd <= 1e-10;
    return {ok, fmt("|c1 - 35/32| = %.2e, max |int K - 1| = %.2e, max odd-gradient integral = %.2e", norm_err,
                    worst_mass, worst_odd)};
}

Result brute_force() {
    CounterRng rng(stream_key({9001}));
    std::uniform_int_distribution<int> pick_n(2, 50);
    std::uniform_int_distribution<int> pick_d(1, 3);
    std::uniform_int_distribution<int> pick_extra(0, 3);
    std::uniform_real_distribution<double> pick_h(0.8, 3.0);
    double worst = 0.0;
    for (int inst = 0; inst < 100; ++inst) {
        const Eigen::Index n = pick_n(rng);
        const Eigen::Index d = pick_d(rng);
        const Eigen::Index p = d + pick_extra(rng);
        const auto basis = ReductionBasis::from_rows(orthonormal_rows(d, p, rng), ReductionMethod::given);
        const Eigen::MatrixXd x = normals(n, p, rng);
        const Eigen::VectorXd y = normals(n, 1, rng).col(0);
        const Eigen::VectorXd x0 = x.row(0).transpose() + 0.3 * normals(p, 1, rng).col(0);
        const double h = pick_h(rng);
        const RadialKernel k = make_kernel(KernelProfile::builtin(ProfileName::triweight_poly3), static_cast<std::size_t>(d));
        const NWConfig cfg(k, BandwidthRule::fixed(h));
        const auto fit = nw_estimate(cfg, basis, x, y, x0);

        // direct weighted sum over all observations
        const Eigen::VectorXd w0 = basis.matrix() * x0;
        double s0 = 0.0;
        double s1 = 0.0;
        double scale = 0.0;
        std::vector<double> u(static_cast<std::size_t>(d));
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::VectorXd wi = basis.matrix() * x.row(i).transpose();
            for (Eigen::Index j = 0; j < d; ++j) u[static_cast<std::size_t>(j)] = (w0(j) - wi(j)) / h;
            const double kv = k.eval(u);
            s0 += kv;
            s1 += kv * y(i);
            scale += kv * std::abs(y(i));
        }
        const double direct = s1 / s0;
        // relative to the weighted mean of |Y|, the conditioning scale of a weighted average
        worst = std::max(worst, std::abs(fit.eta_hat - direct) / (scale / s0));
        const double f_direct = s0 / (static_cast<double>(n) * std::pow(h, static_cast<double>(d)));
        worst = std::max(worst, std::abs(fit.f_hat - f_direct) / f_direct);
    }
    return {worst <= 1e-13, fmt("max relative deviation from the direct sum over 100 instances = %.2e", worst)};
}

Result rotation_invariance() {
    CounterRng rng(stream_key({9002}));
    const Model1 model;
    double worst = 0.0;
    for (int inst = 0; inst < 50; ++inst) {
        const Eigen::Index d = 2 + inst % 2;
        const auto data = model.generate_stream(300, stream_key({9002, static_cast<std::uint64_t>(inst)}));
        const auto beta = ReductionBasis::from_rows(orthonormal_rows(d, 6, rng), ReductionMethod::given);
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(normals(d, d, rng));
        const Eigen::MatrixXd a = qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
        const NWConfig cfg(make_kernel(KernelProfile::builtin(ProfileName::triweight_poly3), static_cast<std::size_t>(d)),
                           BandwidthRule::fixed(1.5));
        const Eigen::VectorXd x0 = data.x.row(0).transpose();
        const double e1 = nw_estimate(cfg, beta, data.x, data.y, x0).eta_hat;
        const double e2 = nw_estimate(cfg, beta.rotated(a), data.x, data.y, x0).eta_hat;
        worst = std::max(worst, std::abs(e1 - e2));
    }
    return {worst <= 1e-12, fmt("max |eta(A beta) - eta(beta)| over 50 rotations = %.2e", worst)};
}

Result projection_extraction() {
    CounterRng rng(stream_key({9003}));
    std::uniform_int_distribution<int> pick_p(2, 30);
    double orth = 0.0;
    double fixp = 0.0;
    for (int inst = 0; inst < 100; ++inst) {
        const Eigen::Index p = pick_p(rng);
        std::uniform_int_distribution<int> pick_d(1, static_cast<int>(p) - 1);
        const Eigen::Index d = pick_d(rng);
        const auto b0 = ReductionBasis::from_rows(orthonormal_rows(d, p, rng), ReductionMethod::oracle);
        const auto proj = ProjectionMatrix::from_basis(b0);
        const auto b = projection_to_basis(proj, static_cast<std::size_t>(d));
        orth = std::max(orth, (b.matrix() * b.matrix().transpose() - Eigen::MatrixXd::Identity(d, d)).norm());
        fixp = std::max(fixp, (proj.matrix() * b.matrix().transpose() - b.matrix().transpose()).norm());
    }

    const Model1 model;
    const auto est = perturbed_projection_estimator(model.beta0(), 1.0);
    std::vector<double> ln;
    std::vector<double> la;
    for (double n : {1e2, 1e3, 1e4, 1e5, 1e6}) {
        const Eigen::MatrixXd size_only = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), 1);
        std::vector<double> angles;
        for (std::uint64_t rep = 0; rep < 100; ++rep) {
            CounterRng r(stream_key({9004, static_cast<std::uint64_t>(n), rep}));
            angles.push_back(principal_angles(est(size_only, Eigen::VectorXd(), r), model.beta0())(0));
        }
        ln.push_back(std::log(n));
        la.push_back(std::log(median(angles)));
    }
    const double mx = mean(ln);
    const double my = mean(la);
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < ln.size(); ++i) {
        sxy += (ln[i] - mx) * (la[i] - my);
        sxx += (ln[i] - mx) * (ln[i] - mx);
    }
    const double slope = sxy / sxx;
    const bool ok = orth <= 1e-10 && fixp <= 1e-8 && slope >= -0.7 && slope <= -0.3;
    return {ok, fmt("max ||bb'-I|| = %.2e, max ||Pb'-b'|| = %.2e, perturbation rate slope = %.3f", orth, fixp, slope)};
}

Result coverage() {
    const Model1 model;
    const auto c = coverage_experiment(model, 4000, 500, Eigen::VectorXd::Zero(6), 0.95, coverage_bandwidth_default(),
                                       9005, g_threads);
    const bool ok = c.coverage >= 0.88 && c.coverage <= 0.99;
    return {ok, fmt("coverage %.3f at n=4000 over %zu replications (h = %.4f, %zu excluded)", c.coverage, c.n_valid, c.h,
                    c.n_excluded)};
}

std::string stats_of(const std::vector<EquivalenceRow>& rows) {
    std::string s;
    for (const auto& r : rows) s += fmt("%s%zu:%.4f", s.empty() ? "" : " ", r.n, r.median_stat);
    return s;
}

Result equivalence() {
    const Model1 model;
    const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(6, 0.5);
    const auto rule = BandwidthRule::power(model.bandwidth_constant(), ExponentDim::ambient_p);
    const std::vector<std::size_t> ns{250, 1000, 4000};
    const auto pls = equivalence_experiment(model, ns, 200, x0, estimator_for(ReductionMethod::pls, 1), rule, 9006, g_threads);
    Eigen::MatrixXd wrong = model.beta0().matrix();
    wrong(0, 5) = -wrong(0, 5);
    const auto ctrl = equivalence_experiment(model, ns, 200, x0,
                                             fixed_estimator(ReductionBasis::orthonormalized(wrong, ReductionMethod::given)),
                                             rule, 9006, g_threads);
    const auto root_n = equivalence_experiment(model, ns, 200, x0, perturbed_projection_estimator(model.beta0(), 1.0),
                                               rule, 9006, g_threads);
    std::printf("INFO criterion 6: same statistic with a root-n consistent basis (perturbed true projection): %s\n",
                stats_of(root_n).c_str());
    bool dec = true;
    bool nondec = true;
    for (std::size_t i = 1; i < ns.size(); ++i) {
        dec = dec && pls[i].median_stat < pls[i - 1].median_stat;
        nondec = nondec && ctrl[i].median_stat >= ctrl[i - 1].median_stat;
    }
    return {dec && nondec, fmt("PLS median stat %s (strictly decreasing: %s); wrong direction %s (non-decreasing: %s)",
                               stats_of(pls).c_str(), dec ? "yes" : "no", stats_of(ctrl).c_str(), nondec ? "yes" : "no")};
}

ReplicationTable table_for(const SimModel& model, ReductionMethod red, std::vector<std::size_t> ns, std::uint64_t seed) {
    ReplicationConfig cfg;
    cfg.methods = {{Method::NP, red}, {Method::NPR, red}, {Method::NPRT, red}};
    cfg.ns = std::move(ns);
    cfg.n_rep = 200;
    cfg.base_seed = seed;
    cfg.threads = g_threads;
    cfg.test_points = draw_test_points(model, 10, seed);
    return run_replications(model, cfg);
}

Result model1_trends() {
    const Model1 model;
    const auto t = table_for(model, ReductionMethod::pls, {200, 1000}, 9007);
    std::size_t decreasing = 0;
    std::size_t close = 0;
    std::vector<double> ratios;
    std::vector<double> oracle_ratios;
    for (std::size_t j = 0; j < 10; ++j) {
        bool all = true;
        for (auto m : {Method::NP, Method::NPR, Method::NPRT})
            all = all && t.at({j, 1000, m}).emse < t.at({j, 200, m}).emse;
        decreasing += all;
        const double nprt = t.at({j, 1000, Method::NPRT}).emse;
        const double npr = t.at({j, 1000, Method::NPR}).emse;
        ratios.push_back(t.at({j, 1000, Method::NP}).emse / nprt);
        oracle_ratios.push_back(t.at({j, 1000, Method::NP}).emse / npr);
        close += nprt <= 2.0 * npr && npr <= 2.0 * nprt;
    }
    const double med = median(ratios);
    std::printf("INFO criterion 7: median EMSE(NP)/EMSE(NPR) at n=1000 = %.2f (true basis)\n", median(oracle_ratios));
    const bool ok = decreasing >= 9 && med >= 3.0 && close >= 8;
    return {ok, fmt("(a) EMSE decreasing for all methods at %zu/10 points; (b) median EMSE(NP)/EMSE(NPRT) at n=1000 = %.2f; "
                    "(c) NPRT within 2x of NPR at %zu/10 points",
                    decreasing, med, close)};
}

Result model2_trends() {
    const Model2 model;
    const std::vector<std::size_t> ns{80, 100, 200, 300, 500, 1000};
    const auto t = table_for(model, ReductionMethod::pfc, ns, 9008);
    std::size_t good = 0;
    for (std::size_t j = 0; j < 10; ++j) {
        bool all = true;
        for (auto n : ns) all = all && t.at({j, n, Method::NPRT}).variance < t.at({j, n, Method::NP}).variance;
        good += all;
    }
    return {good >= 8, fmt("variance(NPRT) < variance(NP) at every n for %zu/10 points (missing rate %.4f)", good,
                           t.missing_rate())};
}

Result sup_norm() {
    const Model1 model;
    Eigen::MatrixXd grid(50, 6);
    Eigen::VectorXd truth(50);
    for (Eigen::Index j = 0; j < 50; ++j) {
        const double w = -2.0 + 4.0 * static_cast<double>(j) / 49.0;
        grid.row(j) = w * model.beta0().matrix().row(0);
        truth(j) = w * w;
    }
    const auto rule = BandwidthRule::power_with_rate(1.5, 0.2);
    const auto clipped = sup_norm_experiment(model, grid, truth, 250, 4000, 100, rule, 9009,
                                             [](double y) { return std::clamp(y, -12.0, 12.0); }, g_threads);
    const auto plain = sup_norm_experiment(model, grid, truth, 250, 4000, 100, rule, 9010, {}, g_threads);
    const bool ok = clipped.wins >= 90 && plain.wins >= 90;
    return {ok, fmt("wins at n=4000 vs n=250: clipped Y %zu/100, unclipped %zu/100", clipped.wins, plain.wins)};
}

Result determinism() {
    const fs::path dir = fs::temp_directory_path() / "sdrnw_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    io::SimulateSpec spec;
    spec.model = 1;
    spec.ns = {200, 500};
    spec.n_rep = 40;
    spec.n_test_points = 4;
    spec.equivalence = false;
    spec.coverage = false;
    std::size_t checked = 0;
    std::size_t mismatched = 0;
    for (std::size_t threads : {std::size_t{1}, std::size_t{8}}) {
        spec.threads = threads;
        spec.test_points.reset();
        const auto run_dir = dir / ("t" + std::to_string(threads));
        fs::create_directories(run_dir);
        io::run_command("simulate", spec.to_json(), run_dir);
        const auto rows = read_rows(run_dir / "emse.csv");
        const auto man = io::RunManifest::read(run_dir / "manifest.json");
        const auto replay = io::SimulateSpec::from_json(man.config);
        const auto model = io::make_model(replay.model);
        const auto cfg = io::replication_config(replay, *model);
        // columns: point, method, n, emse, variance, true_mse, mean_estimate, ...
        for (const auto& r : rows) {
            const CellKey key{std::stoul(r.at(0)) - 1, std::stoul(r.at(2)), method_from_string(r.at(1))};
            const auto cell = recompute_cell(*model, cfg, key);
            ++checked;
            mismatched += !(cell.emse == std::strtod(r.at(3).c_str(), nullptr) &&
                            cell.variance == std::strtod(r.at(4).c_str(), nullptr) &&
                            cell.mean_estimate == std::strtod(r.at(6).c_str(), nullptr));
        }
    }
    fs::remove_all(dir);
    return {checked > 0 && mismatched == 0,
            fmt("%zu cells recomputed from manifest + key at 1 and 8 threads, %zu bit mismatches", checked, mismatched)};
}

}  // namespace

int main(int argc, char** argv) {
    g_threads = std::max(1u, std::thread::hardware_concurrency());
    if (argc > 1) g_threads = std::max(1, std::atoi(argv[1]));
    run(1, "kernel constants", kernel_constants);
    run(2, "brute-force oracle", brute_force);
    run(3, "rotation invariance", rotation_invariance);
    run(4, "basis extraction from projections", projection_extraction);
    run(5, "CI coverage", coverage);
    run(6, "estimated vs true basis equivalence", equivalence);
    run(7, "Model 1 EMSE trends", model1_trends);
    run(8, "Model 2 variance trend", model2_trends);
    run(9, "sup-norm decay", sup_norm);
    run(10, "determinism", determinism);
    std::printf("%d of 10 criteria failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
