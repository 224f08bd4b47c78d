#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace countreg {

/// One organization: DNS visit counts by TLD, security posture, cyber footprint
/// and the observed number of successful intrusions.
struct OrgRecord {
    std::string org_id;
    std::int64_t domestic_com = 0;
    std::int64_t domestic_edu = 0;
    std::int64_t domestic_gov = 0;
    std::int64_t domestic_net = 0;
    std::int64_t domestic_org = 0;
    std::int64_t foreign_com = 0;
    std::int64_t foreign_net = 0;
    std::int64_t foreign_org = 0;
    std::int64_t violations = 0;
    std::int64_t hosts = 1;
    std::int64_t rosg = 1;
    int seib = 1;
    std::int64_t intrusions = 0;

    bool operator==(const OrgRecord&) const = default;
};

/// Canonical CSV header, in order.
inline constexpr std::array<std::string_view, 14> kCsvHeader = {
    "org_id",      "domestic_com", "domestic_edu", "domestic_gov", "domestic_net",
    "domestic_org", "foreign_com", "foreign_net",  "foreign_org",  "violations",
    "hosts",       "rosg",         "seib",         "intrusions"};

/// Design-matrix column order for the full model.
inline constexpr std::array<std::string_view, 14> kFullDesignColumns = {
    "intercept",   "domestic_com", "domestic_edu", "domestic_gov", "domestic_net",
    "domestic_org", "foreign_com", "foreign_net",  "foreign_org",  "hosts",
    "violations",  "seib3",        "seib10",       "rosg"};

enum class CaseLabel { Full, Case1, Case2, Case3, Case4, Case5 };

inline constexpr std::array<CaseLabel, 6> kAllCases = {CaseLabel::Full,  CaseLabel::Case1,
                                                       CaseLabel::Case2, CaseLabel::Case3,
                                                       CaseLabel::Case4, CaseLabel::Case5};

std::string_view to_string(CaseLabel label);
CaseLabel parse_case_label(std::string_view text);

/// Which design columns a model uses. The intercept is always included.
struct PredictorSchema {
    std::vector<std::string> included_columns;
    CaseLabel case_label = CaseLabel::Full;

    /// case1: no violations; case2: no SEIB dummies; case3: no hosts;
    /// case4: no rosg; case5: no hosts, rosg or SEIB dummies.
    static PredictorSchema for_case(CaseLabel label);
    std::vector<std::string> excluded_columns() const;
};

struct DesignMatrix {
    Eigen::MatrixXd values;
    std::vector<std::string> column_names;
    std::vector<std::string> row_ids;

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
    /// -1 when absent.
    Eigen::Index column_index(std::string_view name) const;
    bool has_intercept() const { return !column_names.empty() && column_names.front() == "intercept"; }

    DesignMatrix without_row(Eigen::Index row) const;
    DesignMatrix select_columns(std::span<const std::string> names) const;
};

struct EncodedData {
    DesignMatrix X;
    Eigen::VectorXd y;
};

std::vector<OrgRecord> load_csv(const std::filesystem::path& path);
std::vector<OrgRecord> parse_csv(std::istream& in);
void write_csv(std::ostream& out, std::span<const OrgRecord> records);
void write_csv(const std::filesystem::path& path, std::span<const OrgRecord> records);

/// Encodes records into a design matrix: intercept first, SEIB as dummies
/// seib3/seib10 against reference level 1, columns outside the schema dropped.
EncodedData encode(std::span<const OrgRecord> records, const PredictorSchema& schema);

struct Standardization {
    /// Indices (into the input matrix) of the transformed columns; the intercept is skipped.
    std::vector<Eigen::Index> columns;
    Eigen::VectorXd center;
    Eigen::VectorXd scale;
    std::vector<bool> zero_variance;

    DesignMatrix invert(const DesignMatrix& standardized) const;
};

/// Mean-centers every non-intercept column and scales it to unit sample variance.
/// Zero-variance columns are centered only and flagged.
std::pair<DesignMatrix, Standardization> standardize(const DesignMatrix& X);

struct LogNormalMarginal {
    double mean = 1.0;
    double sd = 0.0;
};

struct PoissonMarginal {
    double mean = 1.0;
};

using Marginal = std::variant<LogNormalMarginal, PoissonMarginal>;

struct SynthConfig {
    std::size_t m = 41;
    /// Keyed by design-column name ("intercept", "violations", "seib3", ...). Missing keys are 0.
    std::map<std::string, double> true_beta;
    /// 0 draws Poisson responses, > 0 draws NB2 responses.
    double gamma = 0.0;
    /// Keyed by raw CSV column (domestic_com ... rosg).
    std::map<std::string, Marginal> predictor_marginals;
    /// Shares of seib = 1, 3, 10. Levels are allocated in these proportions
    /// (largest-remainder rounding of m * p) and shuffled, not drawn independently.
    std::array<double, 3> seib_probabilities = {0.780, 0.171, 0.049};
    std::uint64_t seed = 1;

    /// Marginals calibrated to the descriptive statistics of the 41-organization study.
    static SynthConfig calibrated_defaults();
    void validate() const;
};

/// Deterministic given the seed. Predictors, gamma mixing and count draws use
/// independent streams so that gamma -> 0 perturbs the counts continuously.
std::vector<OrgRecord> simulate(const SynthConfig& config);

}  // namespace countreg
