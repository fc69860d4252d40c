#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdrnw/kernels.hpp"
#include "sdrnw/npregress.hpp"
#include "sdrnw/reduction.hpp"
#include "sdrnw/simulate.hpp"

namespace sdrnw::io {

inline constexpr const char* kToolVersion = "0.3.0";

enum class TransformOp { none, log, center };
std::string to_string(TransformOp op);
TransformOp transform_op_from_string(std::string_view s);

struct ColumnTransform {
    std::string column;
    TransformOp op = TransformOp::none;
};

/// Parses "column:op".
ColumnTransform parse_transform(std::string_view spec);

struct Dataset {
    std::vector<std::string> column_names;  // predictors, file order
    std::string response_name;
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    std::vector<ColumnTransform> transforms;
    std::vector<std::size_t> dropped_rows;  // 1-based data row numbers

    std::size_t n() const { return static_cast<std::size_t>(y.size()); }
    std::size_t p() const { return static_cast<std::size_t>(x.cols()); }
};

/// Header row required; every other column is a numeric predictor.
/// Errors name the offending row (1-based, header excluded) and column.
Dataset parse_csv(std::istream& in, const std::string& response, const std::vector<ColumnTransform>& transforms = {},
                  bool skip_bad_rows = false, const std::string& source = "<stream>");
Dataset load_csv(const std::filesystem::path& path, const std::string& response,
                 const std::vector<ColumnTransform>& transforms = {}, bool skip_bad_rows = false);

/// Header plus a numeric matrix, no response.
struct NumericTable {
    std::vector<std::string> columns;
    Eigen::MatrixXd values;
};
NumericTable read_numeric_csv(const std::filesystem::path& path);

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

void write_csv(std::ostream& out, const std::vector<std::string>& header, const Eigen::MatrixXd& values);
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header, const Eigen::MatrixXd& values);
void write_text(const std::filesystem::path& path, const std::string& text);

/// 64-bit FNV-1a of the file bytes, as 16 hex digits.
std::string fnv1a_digest(const std::filesystem::path& path);

struct RunManifest {
    std::string tool_version = kToolVersion;
    std::string command;
    nlohmann::json config = nlohmann::json::object();
    nlohmann::json seeds = nlohmann::json::object();
    std::vector<std::pair<std::string, std::string>> inputs;  // path, digest
    std::vector<std::string> outputs;

    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
    void write(const std::filesystem::path& path) const;
    static RunManifest read(const std::filesystem::path& path);
    /// Throws DataError when an input file changed since the manifest was written.
    void verify_inputs() const;
};

nlohmann::json basis_metadata(const ReductionBasis& basis);
ReductionBasis read_basis_csv(const std::filesystem::path& path);

inline constexpr std::size_t kAutoGridSize = 25;

struct PredictOptions {
    ReductionMethod method = ReductionMethod::pls;
    std::size_t d = 1;
    std::optional<ReductionBasis> basis;  // used when method == given
    ProfileName kernel = ProfileName::triweight_poly3;
    /// loocv with an empty grid searches kAutoGridSize geometric steps from
    /// 0.05 to 3 times the RMS sd of the reduced predictors.
    BandwidthRule bandwidth = BandwidthRule::loocv({});
    double ci_level = 0.95;
    std::size_t sir_slices = 0;
    /// Center and scale predictors to unit sd before reducing and smoothing.
    /// Ignored for method == given, whose basis lives in the raw coordinates.
    bool standardize = false;
    /// Rows in the dataset's predictor space; empty means in-sample fitted values.
    std::optional<Eigen::MatrixXd> test_rows;
};

struct PredictRecord {
    Eigen::VectorXd x0;
    std::optional<NWFit> fit;
    std::string error;
    std::optional<double> observed;  // in-sample only
};

struct PredictReport {
    ReductionBasis basis;  // in standardized coordinates when center/scale are set
    std::vector<PredictRecord> records;
    std::optional<Eigen::VectorXd> center;
    std::optional<Eigen::VectorXd> scale;

    nlohmann::json to_json() const;
    /// observed, fitted, ci_lo, ci_hi; rows without a fit are skipped.
    void write_plot_data(const std::filesystem::path& path) const;
};

PredictReport run_predict_workflow(const Dataset& data, const PredictOptions& options);

/// Everything `simulate` needs; serialized verbatim into the manifest.
struct SimulateSpec {
    int model = 1;
    std::vector<Method> methods{Method::NP, Method::NPR, Method::NPRT};
    std::optional<ReductionMethod> reduction;  // model default when empty
    std::vector<std::size_t> ns{200, 1000};
    std::size_t n_rep = 200;
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    std::size_t n_test_points = 10;
    std::optional<Eigen::MatrixXd> test_points;  // frozen once drawn
    std::optional<double> bandwidth_constant;
    std::size_t density_grid = 128;

    bool equivalence = true;
    std::vector<std::size_t> equivalence_ns{250, 1000, 4000};
    std::size_t equivalence_nrep = 200;

    bool coverage = true;
    std::size_t coverage_n = 4000;
    std::size_t coverage_nrep = 500;
    double coverage_level = 0.95;

    nlohmann::json to_json() const;
    static SimulateSpec from_json(const nlohmann::json& j);
};

std::unique_ptr<SimModel> make_model(int model);
ReplicationConfig replication_config(const SimulateSpec& spec, const SimModel& model);

/// Writes emse.csv, density_<point>.csv, equivalence.csv, coverage.csv and
/// manifest.json into out_dir. Fills spec.test_points when unset.
RunManifest run_simulate(SimulateSpec& spec, const std::filesystem::path& out_dir);

struct CommandResult {
    std::string stdout_text;
    std::optional<RunManifest> manifest;
};

/// Runs one subcommand from its JSON config. `kernel-check`, `fit` and
/// `predict` write files only when out_dir is set; `reduce` and `simulate`
/// always write (default ".").
CommandResult run_command(const std::string& command, const nlohmann::json& config,
                          const std::optional<std::filesystem::path>& out_dir);

/// Re-runs a manifest after checking its input digests. out_dir defaults to
/// the manifest's directory.
CommandResult rerun_manifest(const std::filesystem::path& manifest_path,
                             const std::optional<std::filesystem::path>& out_dir,
                             std::optional<std::size_t> threads = std::nullopt);

}  // namespace sdrnw::io
