#include "countreg/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "countreg/errors.hpp"

namespace countreg {

namespace {

constexpr std::array<std::string_view, 11> kNumericPredictors = {
    "domestic_com", "domestic_edu", "domestic_gov", "domestic_net", "domestic_org", "foreign_com",
    "foreign_net",  "foreign_org",  "hosts",        "violations",   "rosg"};

std::int64_t numeric_field(const OrgRecord& r, std::string_view name) {
    if (name == "domestic_com") return r.domestic_com;
    if (name == "domestic_edu") return r.domestic_edu;
    if (name == "domestic_gov") return r.domestic_gov;
    if (name == "domestic_net") return r.domestic_net;
    if (name == "domestic_org") return r.domestic_org;
    if (name == "foreign_com") return r.foreign_com;
    if (name == "foreign_net") return r.foreign_net;
    if (name == "foreign_org") return r.foreign_org;
    if (name == "violations") return r.violations;
    if (name == "hosts") return r.hosts;
    if (name == "rosg") return r.rosg;
    throw SchemaError("unknown predictor column '" + std::string(name) + "'");
}

std::int64_t& numeric_field(OrgRecord& r, std::string_view name) {
    if (name == "domestic_com") return r.domestic_com;
    if (name == "domestic_edu") return r.domestic_edu;
    if (name == "domestic_gov") return r.domestic_gov;
    if (name == "domestic_net") return r.domestic_net;
    if (name == "domestic_org") return r.domestic_org;
    if (name == "foreign_com") return r.foreign_com;
    if (name == "foreign_net") return r.foreign_net;
    if (name == "foreign_org") return r.foreign_org;
    if (name == "violations") return r.violations;
    if (name == "hosts") return r.hosts;
    if (name == "rosg") return r.rosg;
    if (name == "intrusions") return r.intrusions;
    throw SchemaError("unknown column '" + std::string(name) + "'");
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::int64_t parse_count(std::string_view text, std::size_t row, std::string_view column) {
    std::int64_t value = 0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (text.empty() || ec != std::errc() || ptr != last) {
        throw ParseError(row, "column '" + std::string(column) + "' is not an integer: '" +
                                  std::string(text) + "'");
    }
    if (value < 0) {
        throw ParseError(row, "column '" + std::string(column) + "' is negative: " +
                                  std::string(text));
    }
    return value;
}

void check_header(const std::vector<std::string_view>& fields) {
    for (const auto& expected : kCsvHeader) {
        if (std::find(fields.begin(), fields.end(), expected) == fields.end()) {
            throw SchemaError("missing column '" + std::string(expected) + "'");
        }
    }
    for (const auto& got : fields) {
        if (std::find(kCsvHeader.begin(), kCsvHeader.end(), got) == kCsvHeader.end()) {
            throw SchemaError("unexpected column '" + std::string(got) + "'");
        }
    }
    if (fields.size() != kCsvHeader.size()) {
        throw SchemaError("duplicate columns in header");
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (fields[i] != kCsvHeader[i]) {
            throw SchemaError("column '" + std::string(fields[i]) + "' out of order, expected '" +
                              std::string(kCsvHeader[i]) + "' at position " +
                              std::to_string(i + 1));
        }
    }
}

}  // namespace

std::string_view to_string(CaseLabel label) {
    switch (label) {
        case CaseLabel::Full: return "full";
        case CaseLabel::Case1: return "case1";
        case CaseLabel::Case2: return "case2";
        case CaseLabel::Case3: return "case3";
        case CaseLabel::Case4: return "case4";
        case CaseLabel::Case5: return "case5";
    }
    return "full";
}

CaseLabel parse_case_label(std::string_view text) {
    for (auto label : kAllCases) {
        if (to_string(label) == text) return label;
    }
    throw SchemaError("unknown case label '" + std::string(text) + "'");
}

PredictorSchema PredictorSchema::for_case(CaseLabel label) {
    std::vector<std::string_view> drop;
    switch (label) {
        case CaseLabel::Full: break;
        case CaseLabel::Case1: drop = {"violations"}; break;
        case CaseLabel::Case2: drop = {"seib3", "seib10"}; break;
        case CaseLabel::Case3: drop = {"hosts"}; break;
        case CaseLabel::Case4: drop = {"rosg"}; break;
        case CaseLabel::Case5: drop = {"hosts", "rosg", "seib3", "seib10"}; break;
    }
    PredictorSchema schema;
    schema.case_label = label;
    for (auto name : kFullDesignColumns) {
        if (std::find(drop.begin(), drop.end(), name) == drop.end()) {
            schema.included_columns.emplace_back(name);
        }
    }
    return schema;
}

std::vector<std::string> PredictorSchema::excluded_columns() const {
    std::vector<std::string> out;
    for (auto name : kFullDesignColumns) {
        if (std::find(included_columns.begin(), included_columns.end(), name) ==
            included_columns.end()) {
            out.emplace_back(name);
        }
    }
    return out;
}

Eigen::Index DesignMatrix::column_index(std::string_view name) const {
    for (std::size_t j = 0; j < column_names.size(); ++j) {
        if (column_names[j] == name) return static_cast<Eigen::Index>(j);
    }
    return -1;
}

DesignMatrix DesignMatrix::without_row(Eigen::Index row) const {
    DesignMatrix out;
    const Eigen::Index m = rows();
    out.values.resize(m - 1, cols());
    if (row > 0) out.values.topRows(row) = values.topRows(row);
    if (row < m - 1) out.values.bottomRows(m - 1 - row) = values.bottomRows(m - 1 - row);
    out.column_names = column_names;
    out.row_ids = row_ids;
    if (static_cast<std::size_t>(row) < out.row_ids.size()) {
        out.row_ids.erase(out.row_ids.begin() + row);
    }
    return out;
}

DesignMatrix DesignMatrix::select_columns(std::span<const std::string> names) const {
    DesignMatrix out;
    out.values.resize(rows(), static_cast<Eigen::Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) {
        const auto idx = column_index(names[j]);
        if (idx < 0) throw SchemaError("design matrix has no column '" + names[j] + "'");
        out.values.col(static_cast<Eigen::Index>(j)) = values.col(idx);
    }
    out.column_names.assign(names.begin(), names.end());
    out.row_ids = row_ids;
    return out;
}

std::vector<OrgRecord> parse_csv(std::istream& in) {
    std::string line;
    std::size_t row = 0;
    bool have_header = false;
    std::vector<OrgRecord> records;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!have_header) {
            check_header(split_commas(line));
            have_header = true;
            continue;
        }
        if (line.empty()) continue;
        const auto fields = split_commas(line);
        if (fields.size() != kCsvHeader.size()) {
            throw ParseError(row, "expected " + std::to_string(kCsvHeader.size()) +
                                      " fields, found " + std::to_string(fields.size()));
        }
        OrgRecord rec;
        rec.org_id = std::string(fields[0]);
        for (std::size_t j = 1; j < fields.size(); ++j) {
            const auto column = kCsvHeader[j];
            const auto value = parse_count(fields[j], row, column);
            if (column == "seib") {
                if (value != 1 && value != 3 && value != 10) {
                    throw DomainError("row " + std::to_string(row) + ": seib must be 1, 3 or 10, got " +
                                      std::to_string(value));
                }
                rec.seib = static_cast<int>(value);
            } else {
                numeric_field(rec, column) = value;
            }
        }
        if (rec.hosts < 1) throw DomainError("row " + std::to_string(row) + ": hosts must be >= 1");
        if (rec.rosg < 1) throw DomainError("row " + std::to_string(row) + ": rosg must be >= 1");
        records.push_back(std::move(rec));
    }
    if (!have_header) throw SchemaError("empty input: missing header row");
    return records;
}

std::vector<OrgRecord> load_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return parse_csv(in);
}

void write_csv(std::ostream& out, std::span<const OrgRecord> records) {
    for (std::size_t j = 0; j < kCsvHeader.size(); ++j) {
        out << (j ? "," : "") << kCsvHeader[j];
    }
    out << '\n';
    for (const auto& r : records) {
        out << r.org_id << ',' << r.domestic_com << ',' << r.domestic_edu << ',' << r.domestic_gov
            << ',' << r.domestic_net << ',' << r.domestic_org << ',' << r.foreign_com << ','
            << r.foreign_net << ',' << r.foreign_org << ',' << r.violations << ',' << r.hosts << ','
            << r.rosg << ',' << r.seib << ',' << r.intrusions << '\n';
    }
}

void write_csv(const std::filesystem::path& path, std::span<const OrgRecord> records) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    write_csv(out, records);
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

EncodedData encode(std::span<const OrgRecord> records, const PredictorSchema& schema) {
    if (records.empty()) throw DomainError("encode: no records");
    for (const auto& name : schema.included_columns) {
        if (std::find(kFullDesignColumns.begin(), kFullDesignColumns.end(), name) ==
            kFullDesignColumns.end()) {
            throw SchemaError("schema names unknown column '" + name + "'");
        }
    }
    // Column order always follows the full-model order, whatever order the schema lists.
    std::vector<std::string> columns{"intercept"};
    for (auto name : kFullDesignColumns) {
        if (name == "intercept") continue;
        if (std::find(schema.included_columns.begin(), schema.included_columns.end(), name) !=
            schema.included_columns.end()) {
            columns.emplace_back(name);
        }
    }

    const auto m = static_cast<Eigen::Index>(records.size());
    const auto n = static_cast<Eigen::Index>(columns.size());
    EncodedData out;
    out.X.values.resize(m, n);
    out.X.column_names = columns;
    out.X.row_ids.reserve(records.size());
    out.y.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto& r = records[static_cast<std::size_t>(i)];
        if (r.seib != 1 && r.seib != 3 && r.seib != 10) {
            throw DomainError("record '" + r.org_id + "': seib must be 1, 3 or 10");
        }
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto& name = columns[static_cast<std::size_t>(j)];
            double v;
            if (name == "intercept") {
                v = 1.0;
            } else if (name == "seib3") {
                v = r.seib == 3 ? 1.0 : 0.0;
            } else if (name == "seib10") {
                v = r.seib == 10 ? 1.0 : 0.0;
            } else {
                v = static_cast<double>(numeric_field(r, name));
            }
            out.X.values(i, j) = v;
        }
        out.X.row_ids.push_back(r.org_id);
        out.y(i) = static_cast<double>(r.intrusions);
    }
    return out;
}

std::pair<DesignMatrix, Standardization> standardize(const DesignMatrix& X) {
    Standardization params;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        if (X.column_names.size() == static_cast<std::size_t>(X.cols()) &&
            X.column_names[static_cast<std::size_t>(j)] == "intercept") {
            continue;
        }
        params.columns.push_back(j);
    }
    const auto k = static_cast<Eigen::Index>(params.columns.size());
    params.center.resize(k);
    params.scale.resize(k);
    params.zero_variance.assign(static_cast<std::size_t>(k), false);

    DesignMatrix Z = X;
    const double m = static_cast<double>(X.rows());
    for (Eigen::Index c = 0; c < k; ++c) {
        const auto j = params.columns[static_cast<std::size_t>(c)];
        const double mean = X.values.col(j).mean();
        Z.values.col(j).array() -= mean;
        const double ss = Z.values.col(j).squaredNorm();
        const double sd = m > 1 ? std::sqrt(ss / (m - 1.0)) : 0.0;
        const double magnitude = X.values.col(j).cwiseAbs().maxCoeff();
        params.center(c) = mean;
        if (!(sd > 1e-12 * std::max(magnitude, 1e-300))) {
            params.scale(c) = 1.0;
            params.zero_variance[static_cast<std::size_t>(c)] = true;
            Z.values.col(j).setZero();
        } else {
            params.scale(c) = sd;
            Z.values.col(j) /= sd;
        }
    }
    return {std::move(Z), std::move(params)};
}

DesignMatrix Standardization::invert(const DesignMatrix& standardized) const {
    DesignMatrix X = standardized;
    for (std::size_t c = 0; c < columns.size(); ++c) {
        const auto j = columns[c];
        const auto ci = static_cast<Eigen::Index>(c);
        X.values.col(j) = (standardized.values.col(j).array() * scale(ci) + center(ci)).matrix();
    }
    return X;
}

SynthConfig SynthConfig::calibrated_defaults() {
    SynthConfig cfg;
    cfg.predictor_marginals = {
        {"domestic_com", LogNormalMarginal{3.7e5, 3.6e5}},
        {"domestic_edu", LogNormalMarginal{2017.2, 3203.4}},
        {"domestic_gov", LogNormalMarginal{1273.7, 1770.6}},
        {"domestic_net", LogNormalMarginal{1.6e5, 2.3e5}},
        {"domestic_org", LogNormalMarginal{1.1e4, 1.5e4}},
        {"foreign_com", LogNormalMarginal{4.5e4, 5.7e4}},
        {"foreign_net", LogNormalMarginal{1.7e4, 2.9e4}},
        {"foreign_org", LogNormalMarginal{4.2e5, 6.8e5}},
        {"violations", PoissonMarginal{5.1}},
        {"hosts", LogNormalMarginal{2145.9, 5555.0}},
        {"rosg", LogNormalMarginal{2753.8, 4873.8}},
    };
    cfg.seib_probabilities = {0.780, 0.171, 0.049};
    return cfg;
}

void SynthConfig::validate() const {
    if (m < 2) throw DomainError("simulate: m must be >= 2");
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw DomainError("simulate: gamma must be >= 0");
    double total = 0.0;
    for (double p : seib_probabilities) {
        if (!(p >= 0.0)) throw DomainError("simulate: SEIB probabilities must be nonnegative");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw DomainError("simulate: SEIB probabilities must sum to 1");
    for (const auto& [name, marginal] : predictor_marginals) {
        if (std::find(kNumericPredictors.begin(), kNumericPredictors.end(), name) ==
            kNumericPredictors.end()) {
            throw DomainError("simulate: no predictor named '" + name + "'");
        }
        if (const auto* ln = std::get_if<LogNormalMarginal>(&marginal)) {
            if (!(ln->sd >= 0.0)) throw DomainError("simulate: '" + name + "' sd must be >= 0");
            if (!(ln->mean > 0.0)) throw DomainError("simulate: '" + name + "' mean must be > 0");
        } else if (const auto* po = std::get_if<PoissonMarginal>(&marginal)) {
            if (!(po->mean >= 0.0)) throw DomainError("simulate: '" + name + "' mean must be >= 0");
        }
    }
    for (const auto& [name, value] : true_beta) {
        if (std::find(kFullDesignColumns.begin(), kFullDesignColumns.end(), name) ==
            kFullDesignColumns.end()) {
            throw DomainError("simulate: no design column named '" + name + "'");
        }
        if (!std::isfinite(value)) throw DomainError("simulate: coefficient '" + name + "' not finite");
    }
}

namespace {

// SEIB levels in exact proportion (largest-remainder rounding of m * p), shuffled.
// Independent draws would leave a rare level empty in small samples and make
// its dummy column all zero.
std::vector<int> seib_allocation(std::size_t m, const std::array<double, 3>& p, std::mt19937_64& rng) {
    constexpr std::array<int, 3> levels = {1, 3, 10};
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> remainder{};
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < 3; ++k) {
        const double exact = static_cast<double>(m) * p[k];
        counts[k] = static_cast<std::size_t>(std::floor(exact));
        remainder[k] = exact - static_cast<double>(counts[k]);
        assigned += counts[k];
    }
    while (assigned < m) {
        const auto k = static_cast<std::size_t>(std::max_element(remainder.begin(), remainder.end()) -
                                                remainder.begin());
        ++counts[k];
        remainder[k] = -1.0;
        ++assigned;
    }
    std::vector<int> out;
    out.reserve(m);
    for (std::size_t k = 0; k < 3; ++k) out.insert(out.end(), counts[k], levels[k]);
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

}  // namespace

std::vector<OrgRecord> simulate(const SynthConfig& config) {
    config.validate();

    std::seed_seq predictor_seq{config.seed, std::uint64_t{0x5052}};
    std::seed_seq mixing_seq{config.seed, std::uint64_t{0x4d49}};
    std::seed_seq count_seq{config.seed, std::uint64_t{0x434e}};
    std::mt19937_64 predictor_rng(predictor_seq);
    std::mt19937_64 mixing_rng(mixing_seq);
    std::mt19937_64 count_rng(count_seq);

    const int width = std::max<int>(4, static_cast<int>(std::to_string(config.m).size()));
    std::vector<OrgRecord> records(config.m);
    const auto seib = seib_allocation(config.m, config.seib_probabilities, predictor_rng);

    for (std::size_t i = 0; i < config.m; ++i) {
        auto& rec = records[i];
        std::ostringstream id;
        id << "org" << std::setw(width) << std::setfill('0') << (i + 1);
        rec.org_id = id.str();
        for (auto name : kNumericPredictors) {
            const std::int64_t floor_value = (name == "hosts" || name == "rosg") ? 1 : 0;
            std::int64_t value = floor_value;
            const auto it = config.predictor_marginals.find(std::string(name));
            if (it != config.predictor_marginals.end()) {
                if (const auto* ln = std::get_if<LogNormalMarginal>(&it->second)) {
                    // Moment matching: E = exp(mu + s^2/2), Var = (exp(s^2) - 1) E^2.
                    const double cv = ln->sd / ln->mean;
                    const double s2 = std::log1p(cv * cv);
                    const double mu = std::log(ln->mean) - 0.5 * s2;
                    if (s2 > 0.0) {
                        std::lognormal_distribution<double> dist(mu, std::sqrt(s2));
                        value = std::llround(dist(predictor_rng));
                    } else {
                        value = std::llround(ln->mean);
                    }
                } else {
                    const auto& po = std::get<PoissonMarginal>(it->second);
                    if (po.mean > 0.0) {
                        std::poisson_distribution<std::int64_t> dist(po.mean);
                        value = dist(predictor_rng);
                    } else {
                        value = 0;
                    }
                }
            }
            numeric_field(rec, name) = std::max(value, floor_value);
        }
        rec.seib = seib[i];
    }

    const auto encoded = encode(records, PredictorSchema::for_case(CaseLabel::Full));
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(encoded.X.cols());
    for (const auto& [name, value] : config.true_beta) {
        beta(encoded.X.column_index(name)) = value;
    }
    const Eigen::VectorXd eta = encoded.X.values * beta;

    for (std::size_t i = 0; i < config.m; ++i) {
        const double e = eta(static_cast<Eigen::Index>(i));
        if (e > 700.0) {
            throw GenerationError("simulate: linear predictor " + std::to_string(e) + " at row " +
                                  std::to_string(i + 1) +
                                  " exceeds 700 and would overflow exp(); use smaller coefficients");
        }
        double rate = std::exp(e);
        if (config.gamma > 0.0) {
            std::gamma_distribution<double> mix(1.0 / config.gamma, config.gamma * rate);
            rate = mix(mixing_rng);
        }
        std::int64_t count = 0;
        if (rate > 0.0) {
            std::poisson_distribution<std::int64_t> dist(rate);
            count = dist(count_rng);
        }
        records[i].intrusions = count;
    }
    return records;
}

}  // namespace countreg
