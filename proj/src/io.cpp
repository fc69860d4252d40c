#include "sdrnw/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "sdrnw/errors.hpp"
#include "sdrnw/stats.hpp"

namespace sdrnw::io {

using nlohmann::json;

std::string to_string(TransformOp op) {
    switch (op) {
        case TransformOp::none: return "none";
        case TransformOp::log: return "log";
        case TransformOp::center: return "center";
    }
    return "none";
}

TransformOp transform_op_from_string(std::string_view s) {
    if (s == "none") return TransformOp::none;
    if (s == "log") return TransformOp::log;
    if (s == "center") return TransformOp::center;
    throw ArgumentError("unknown transform '" + std::string(s) + "' (expected log, center, none)");
}

ColumnTransform parse_transform(std::string_view spec) {
    const auto colon = spec.rfind(':');
    if (colon == std::string_view::npos || colon == 0)
        throw ArgumentError("transform '" + std::string(spec) + "' is not of the form column:op");
    return {std::string(spec.substr(0, colon)), transform_op_from_string(spec.substr(colon + 1))};
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    std::string out(s.substr(b, e - b + 1));
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
    return out;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

std::optional<double> parse_number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    const char* first = s.data();
    if (*first == '+') ++first;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

}  // namespace

Dataset parse_csv(std::istream& in, const std::string& response, const std::vector<ColumnTransform>& transforms,
                  bool skip_bad_rows, const std::string& source) {
    std::string line;
    if (!std::getline(in, line) || blank(line)) throw DataError(source + ": missing header row");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const auto header = split_fields(line);
    const auto ncol = header.size();

    std::size_t resp = ncol;
    for (std::size_t j = 0; j < ncol; ++j) {
        if (header[j].empty()) throw DataError(source + ": header column " + std::to_string(j + 1) + " is empty");
        for (std::size_t k = 0; k < j; ++k)
            if (header[k] == header[j]) throw DataError(source + ": duplicate column '" + header[j] + "'");
        if (header[j] == response) resp = j;
    }
    if (resp == ncol) throw DataError(source + ": response column '" + response + "' not in header");
    if (ncol < 2) throw DataError(source + ": need at least one predictor column");

    std::vector<std::size_t> tcols;
    for (const auto& t : transforms) {
        const auto it = std::find(header.begin(), header.end(), t.column);
        if (it == header.end()) throw DataError(source + ": transform column '" + t.column + "' not in header");
        tcols.push_back(static_cast<std::size_t>(it - header.begin()));
    }

    Dataset ds;
    ds.response_name = response;
    ds.transforms = transforms;
    for (std::size_t j = 0; j < ncol; ++j)
        if (j != resp) ds.column_names.push_back(header[j]);

    std::vector<std::vector<double>> rows;
    std::vector<std::size_t> row_ids;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (blank(line)) continue;
        ++row;
        const auto fields = split_fields(line);
        std::string problem;
        std::vector<double> vals(ncol);
        if (fields.size() != ncol) {
            problem = "row " + std::to_string(row) + ": expected " + std::to_string(ncol) + " fields, found " +
                      std::to_string(fields.size());
        } else {
            for (std::size_t j = 0; j < ncol && problem.empty(); ++j) {
                const auto v = parse_number(fields[j]);
                if (!v)
                    problem = "row " + std::to_string(row) + ", column '" + header[j] + "': non-numeric value '" +
                              fields[j] + "'";
                else
                    vals[j] = *v;
            }
        }
        if (!problem.empty()) {
            if (!skip_bad_rows) throw DataError(source + ": " + problem);
            ds.dropped_rows.push_back(row);
            continue;
        }
        rows.push_back(std::move(vals));
        row_ids.push_back(row);
    }

    std::vector<bool> keep(rows.size(), true);
    for (std::size_t t = 0; t < transforms.size(); ++t) {
        const std::size_t c = tcols[t];
        switch (transforms[t].op) {
            case TransformOp::none: break;
            case TransformOp::log:
                for (std::size_t i = 0; i < rows.size(); ++i) {
                    if (!keep[i]) continue;
                    if (!(rows[i][c] > 0.0)) {
                        if (!skip_bad_rows)
                            throw DataError(source + ": row " + std::to_string(row_ids[i]) + ", column '" + header[c] +
                                            "': log of non-positive value " + format_double(rows[i][c]));
                        keep[i] = false;
                        ds.dropped_rows.push_back(row_ids[i]);
                        continue;
                    }
                    rows[i][c] = std::log(rows[i][c]);
                }
                break;
            case TransformOp::center: {
                double sum = 0.0;
                std::size_t cnt = 0;
                for (std::size_t i = 0; i < rows.size(); ++i)
                    if (keep[i]) {
                        sum += rows[i][c];
                        ++cnt;
                    }
                if (cnt == 0) break;
                const double m = sum / static_cast<double>(cnt);
                for (std::size_t i = 0; i < rows.size(); ++i)
                    if (keep[i]) rows[i][c] -= m;
                break;
            }
        }
    }
    std::sort(ds.dropped_rows.begin(), ds.dropped_rows.end());

    const auto n = static_cast<Eigen::Index>(std::count(keep.begin(), keep.end(), true));
    if (n < 2) throw DataError(source + ": need at least 2 usable rows, found " + std::to_string(n));
    ds.x.resize(n, static_cast<Eigen::Index>(ncol - 1));
    ds.y.resize(n);
    Eigen::Index r = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!keep[i]) continue;
        Eigen::Index k = 0;
        for (std::size_t j = 0; j < ncol; ++j) {
            if (j == resp)
                ds.y(r) = rows[i][j];
            else
                ds.x(r, k++) = rows[i][j];
        }
        ++r;
    }
    return ds;
}

Dataset load_csv(const std::filesystem::path& path, const std::string& response,
                 const std::vector<ColumnTransform>& transforms, bool skip_bad_rows) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    return parse_csv(in, response, transforms, skip_bad_rows, path.string());
}

NumericTable read_numeric_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || blank(line)) throw DataError(path.string() + ": missing header row");
    NumericTable t;
    t.columns = split_fields(line);
    std::vector<std::vector<double>> rows;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (blank(line)) continue;
        ++row;
        const auto fields = split_fields(line);
        if (fields.size() != t.columns.size())
            throw DataError(path.string() + ": row " + std::to_string(row) + ": expected " +
                            std::to_string(t.columns.size()) + " fields");
        std::vector<double> vals;
        for (std::size_t j = 0; j < fields.size(); ++j) {
            const auto v = parse_number(fields[j]);
            if (!v)
                throw DataError(path.string() + ": row " + std::to_string(row) + ", column '" + t.columns[j] +
                                "': non-numeric value '" + fields[j] + "'");
            vals.push_back(*v);
        }
        rows.push_back(std::move(vals));
    }
    t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.columns.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return t;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_csv(std::ostream& out, const std::vector<std::string>& header, const Eigen::MatrixXd& values) {
    if (static_cast<Eigen::Index>(header.size()) != values.cols())
        throw ArgumentError("CSV header and matrix widths differ");
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    out << '\n';
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) out << (j ? "," : "") << format_double(values(i, j));
        out << '\n';
    }
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values) {
    std::ostringstream os;
    write_csv(os, header, values);
    write_text(path, os.str());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw DataError("write to '" + path.string() + "' failed");
}

std::string fnv1a_digest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (in) {
        in.read(buf, sizeof buf);
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

json RunManifest::to_json() const {
    json inp = json::array();
    for (const auto& [p, dg] : inputs) inp.push_back({{"path", p}, {"fnv1a64", dg}});
    return {{"tool_version", tool_version}, {"command", command}, {"config", config},
            {"seeds", seeds},               {"inputs", inp},      {"outputs", outputs}};
}

RunManifest RunManifest::from_json(const json& j) {
    try {
        RunManifest m;
        m.tool_version = j.at("tool_version").get<std::string>();
        m.command = j.at("command").get<std::string>();
        m.config = j.at("config");
        m.seeds = j.value("seeds", json::object());
        for (const auto& e : j.value("inputs", json::array()))
            m.inputs.emplace_back(e.at("path").get<std::string>(), e.at("fnv1a64").get<std::string>());
        m.outputs = j.value("outputs", std::vector<std::string>{});
        return m;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed manifest: ") + e.what());
    }
}

void RunManifest::write(const std::filesystem::path& path) const { write_text(path, to_json().dump(2) + "\n"); }

RunManifest RunManifest::read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest '" + path.string() + "'");
    try {
        return from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw DataError("manifest '" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void RunManifest::verify_inputs() const {
    for (const auto& [p, dg] : inputs) {
        const auto now = fnv1a_digest(p);
        if (now != dg) throw DataError("input '" + p + "' changed since the manifest was written (digest " + now + ", recorded " + dg + ")");
    }
}

json basis_metadata(const ReductionBasis& basis) {
    json diag = json::object();
    for (const auto& [k, v] : basis.diagnostics) diag[k] = v;
    return {{"method", to_string(basis.method())}, {"d", basis.d()}, {"p", basis.p()}, {"diagnostics", diag}};
}

ReductionBasis read_basis_csv(const std::filesystem::path& path) {
    const auto t = read_numeric_csv(path);
    if (t.values.rows() < 1) throw DataError(path.string() + ": basis file has no rows");
    try {
        return ReductionBasis::from_rows(t.values, ReductionMethod::given);
    } catch (const ArgumentError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

namespace {

json vec_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

ReductionBasis workflow_basis(const Dataset& data, const PredictOptions& o) {
    const std::size_t p = data.p();
    switch (o.method) {
        case ReductionMethod::identity: return ReductionBasis::identity(p);
        case ReductionMethod::given:
            if (!o.basis) throw ArgumentError("method 'given' needs a basis");
            if (o.basis->p() != p)
                throw ArgumentError("basis has " + std::to_string(o.basis->p()) + " columns but the data has " +
                                    std::to_string(p) + " predictors");
            return *o.basis;
        case ReductionMethod::pls:
        case ReductionMethod::pfc:
        case ReductionMethod::sir:
            if (o.d < 1 || o.d >= p)
                throw ArgumentError("reduction needs 1 <= d < p (d = " + std::to_string(o.d) +
                                    ", p = " + std::to_string(p) + ")");
            if (o.method == ReductionMethod::pls) return pls_fit(data.x, data.y, o.d);
            if (o.method == ReductionMethod::pfc) return pfc_fit(data.x, data.y, fy_linear_abs(), o.d);
            return sir_fit(data.x, data.y, o.sir_slices, o.d);
        default:
            throw ArgumentError("reduction method '" + to_string(o.method) + "' is not available for data");
    }
}

}  // namespace

static double workflow_bandwidth(const PredictOptions& o, const RadialKernel& kernel, const Eigen::MatrixXd& w,
                                 const Eigen::VectorXd& y, std::size_t p) {
    // Scale-aware rules are in units of the reduced predictors' RMS standard deviation.
    const Eigen::RowVectorXd mu = w.colwise().mean();
    const double var = (w.rowwise() - mu).array().square().sum() /
                       (static_cast<double>(w.rows() - 1) * static_cast<double>(w.cols()));
    const double scale = var > 0.0 ? std::sqrt(var) : 1.0;
    switch (o.bandwidth.kind) {
        case BandwidthKind::fixed: return bandwidth(o.bandwidth, static_cast<std::size_t>(w.rows()), p, kernel.dim());
        case BandwidthKind::loocv: {
            if (!o.bandwidth.cv_grid.empty()) return loocv_bandwidth(kernel, w, y, o.bandwidth.cv_grid);
            std::vector<double> grid(kAutoGridSize);
            for (std::size_t k = 0; k < grid.size(); ++k)
                grid[k] = scale * 0.05 * std::pow(60.0, static_cast<double>(k) / static_cast<double>(grid.size() - 1));
            return loocv_bandwidth(kernel, w, y, grid);
        }
        case BandwidthKind::power_rule: break;
    }
    return scale * bandwidth(o.bandwidth, static_cast<std::size_t>(w.rows()), p, kernel.dim());
}

PredictReport run_predict_workflow(const Dataset& data, const PredictOptions& options) {
    if (data.n() < 2) throw DataError("dataset needs n >= 2");
    const Eigen::MatrixXd x0_raw = options.test_rows ? *options.test_rows : data.x;
    if (x0_raw.rows() > 0 && static_cast<std::size_t>(x0_raw.cols()) != data.p())
        throw ArgumentError("test rows have " + std::to_string(x0_raw.cols()) + " columns, expected " +
                            std::to_string(data.p()));

    Dataset work = data;
    Eigen::MatrixXd x0s = x0_raw;
    std::optional<Eigen::VectorXd> center;
    std::optional<Eigen::VectorXd> scale;
    if (options.standardize && options.method != ReductionMethod::given) {
        const Eigen::RowVectorXd mu = data.x.colwise().mean();
        const Eigen::MatrixXd c = data.x.rowwise() - mu;
        Eigen::RowVectorXd sd = (c.colwise().squaredNorm() / static_cast<double>(data.n() - 1)).cwiseSqrt();
        for (Eigen::Index j = 0; j < sd.size(); ++j)
            if (!(sd(j) > 0.0))
                throw DataError("predictor '" + data.column_names[static_cast<std::size_t>(j)] +
                                "' is constant and cannot be standardized");
        work.x = c.array().rowwise() / sd.array();
        if (x0s.rows() > 0) x0s = (x0s.rowwise() - mu).array().rowwise() / sd.array();
        center = mu.transpose();
        scale = sd.transpose();
    }

    PredictReport rep{workflow_basis(work, options), {}, center, scale};
    if (x0s.rows() == 0) return rep;

    const RadialKernel kernel = make_kernel(KernelProfile::builtin(options.kernel), rep.basis.d());
    const Eigen::MatrixXd w = reduce(rep.basis, work.x);
    const double h = workflow_bandwidth(options, kernel, w, work.y, work.p());
    NWConfig cfg(kernel, BandwidthRule::fixed(h));
    cfg.ci_level = options.ci_level;
    const auto fits = nw_batch(cfg, rep.basis, work.x, work.y, x0s);
    for (Eigen::Index i = 0; i < x0s.rows(); ++i) {
        PredictRecord r;
        r.x0 = x0_raw.row(i).transpose();
        r.fit = fits[static_cast<std::size_t>(i)].fit;
        r.error = fits[static_cast<std::size_t>(i)].error;
        if (!options.test_rows) r.observed = data.y(i);
        rep.records.push_back(std::move(r));
    }
    return rep;
}

json PredictReport::to_json() const {
    json recs = json::array();
    for (const auto& r : records) {
        json j = {{"x0", vec_json(r.x0)}};
        if (r.fit) {
            j["eta_hat"] = r.fit->eta_hat;
            j["ci_lo"] = r.fit->ci_lo;
            j["ci_hi"] = r.fit->ci_hi;
            j["f_hat"] = r.fit->f_hat;
            j["sigma2_hat"] = r.fit->sigma2_hat;
            j["h"] = r.fit->h_used;
        } else {
            for (const char* k : {"eta_hat", "ci_lo", "ci_hi", "f_hat", "sigma2_hat", "h"}) j[k] = nullptr;
            j["error"] = r.error;
        }
        if (r.observed) j["observed"] = *r.observed;
        recs.push_back(std::move(j));
    }
    json out = {{"basis", basis_metadata(basis)}, {"records", recs}};
    // h and f_hat are then in standardized units
    if (center && scale) out["standardization"] = {{"center", vec_json(*center)}, {"scale", vec_json(*scale)}};
    return out;
}

void PredictReport::write_plot_data(const std::filesystem::path& path) const {
    std::vector<Eigen::RowVector4d> rows;
    for (const auto& r : records) {
        if (!r.fit) continue;
        rows.emplace_back(r.observed ? *r.observed : std::numeric_limits<double>::quiet_NaN(), r.fit->eta_hat,
                          r.fit->ci_lo, r.fit->ci_hi);
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), 4);
    for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i];
    write_csv(path, {"observed", "fitted", "ci_lo", "ci_hi"}, m);
}

}  // namespace sdrnw::io
