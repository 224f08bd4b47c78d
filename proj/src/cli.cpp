#include "countreg/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "countreg/countglm.hpp"
#include "countreg/dataset.hpp"
#include "countreg/diagnostics.hpp"
#include "countreg/errors.hpp"
#include "countreg/linmodel.hpp"
#include "countreg/study.hpp"
#include "countreg/validation.hpp"

namespace countreg::cli {

using json = nlohmann::ordered_json;

namespace {

constexpr const char* kArtifactName = "run_artifact.json";

class UsageError : public Error {
public:
    using Error::Error;
};

std::string format_double(double v) {
    if (!std::isfinite(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json number(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
        out << content;
        out.flush();
        if (!out) throw IoError("write to '" + tmp.string() + "' failed");
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

std::string scalar_text(const json& v) {
    if (v.is_null()) return "";
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
    if (v.is_number_float()) return format_double(v.get<double>());
    return v.get<std::string>();
}

// key,value rows with dotted paths; array elements carrying a "name" are keyed by it.
void flatten(const json& node, const std::string& path, std::vector<std::pair<std::string, std::string>>& rows) {
    if (node.is_object()) {
        for (const auto& [key, value] : node.items()) {
            flatten(value, path.empty() ? key : path + "." + key, rows);
        }
    } else if (node.is_array()) {
        for (std::size_t i = 0; i < node.size(); ++i) {
            const auto& el = node[i];
            std::string key = std::to_string(i);
            if (el.is_object() && el.contains("name") && el["name"].is_string()) {
                key = el["name"].get<std::string>();
            }
            flatten(el, path + "." + key, rows);
        }
    } else {
        rows.emplace_back(path, scalar_text(node));
    }
}

std::string to_csv(const json& report) {
    std::vector<std::pair<std::string, std::string>> rows;
    flatten(report, "", rows);
    std::ostringstream os;
    os << "key,value\n";
    for (const auto& [k, v] : rows) os << k << ',' << v << '\n';
    return os.str();
}

void write_report(const RunConfig& cfg, const std::string& stem, const json& report, std::ostream& out) {
    const auto path = cfg.out_dir / (stem + "." + cfg.format);
    if (cfg.format == "json") {
        write_atomic(path, report.dump(2) + "\n");
    } else {
        write_atomic(path, to_csv(report));
    }
    out << "wrote " << path.string() << '\n';
}

Family family_from(const RunConfig& cfg) {
    if (cfg.family == "poisson") return Family::poisson();
    if (cfg.family == "nb2") {
        if (!cfg.gamma) throw UsageError("--gamma is required for the nb2 family");
        if (!(*cfg.gamma > 0.0)) throw UsageError("--gamma must be > 0");
        return Family::nb2(*cfg.gamma);
    }
    throw UsageError("family '" + cfg.family + "' is not a count model (use poisson or nb2)");
}

json family_json(const Family& f) {
    json j;
    j["family"] = f.kind == FamilyKind::Poisson ? "poisson" : "nb2";
    j["gamma"] = f.kind == FamilyKind::Poisson ? json(nullptr) : json(f.gamma);
    return j;
}

json coefficient_rows(const std::vector<CoefRow>& rows) {
    json arr = json::array();
    for (const auto& r : rows) {
        arr.push_back({{"name", r.name},
                       {"coef", number(r.coef)},
                       {"std_err", number(r.std_err)},
                       {"z", number(r.z)},
                       {"p", number(r.p)},
                       {"degenerate", r.degenerate}});
    }
    return arr;
}

json jackknife_summary(const JackknifeResult& jk) {
    json j;
    j["bic_mean"] = number(jk.bic_mean);
    j["bic_std"] = number(jk.bic_std);
    j["usable_folds"] = jk.usable_folds;
    j["converged_fraction"] = jk.converged_fraction;
    json coefs = json::array();
    for (std::size_t c = 0; c < jk.full_fit.column_names.size(); ++c) {
        const auto ci = static_cast<Eigen::Index>(c);
        const auto w = wald(jk.full_fit.column_names[c], jk.coef_mean(ci), jk.coef_jackknife_se(ci));
        coefs.push_back({{"name", w.name},
                         {"coef", number(w.coef)},
                         {"std_err", number(w.std_err)},
                         {"z", number(w.z)},
                         {"p", number(w.p)},
                         {"degenerate", w.degenerate},
                         {"fold_std", number(jk.coef_std(ci))}});
    }
    j["coefficients"] = coefs;
    return j;
}

json glm_report(const std::string& command, const RunConfig& cfg, const JackknifeResult& jk) {
    const auto& fit = jk.full_fit;
    const auto diag = diagnose(fit);
    json j;
    j["command"] = command;
    j.update(family_json(fit.family));
    j["case"] = cfg.case_label;
    j["m"] = fit.m;
    j["log_likelihood"] = number(fit.log_likelihood);
    j["deviance"] = number(fit.deviance);
    j["pearson_chi2"] = number(diag.pearson_chi2);
    j["model_df"] = fit.model_df;
    j["residual_df"] = fit.residual_df;
    j["n_params"] = fit.n_params;
    j["dispersion"] = number(diag.dispersion);
    j["bic"] = number(diag.bic);
    j["converged"] = fit.converged;
    j["iterations"] = fit.iterations;
    j["outlier_count"] = diag.outlier_indices.size();
    j["coefficients"] = coefficient_rows(coef_inference(fit));
    j["jackknife"] = jackknife_summary(jk);
    json warnings = json::array();
    for (const auto& w : fit.warnings) warnings.push_back(w);
    for (const auto& w : jk.warnings) warnings.push_back(w);
    j["warnings"] = warnings;
    return j;
}

void write_artifact(const RunConfig& cfg, const DesignMatrix& X, const JackknifeResult& jk) {
    const auto& fit = jk.full_fit;
    json j;
    j.update(family_json(fit.family));
    j["deviance"] = number(fit.deviance);
    j["residual_df"] = fit.residual_df;
    json ids = json::array(), observed = json::array(), fitted = json::array(), loo = json::array();
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        ids.push_back(static_cast<std::size_t>(i) < X.row_ids.size() ? X.row_ids[static_cast<std::size_t>(i)]
                                                                      : std::to_string(i));
        observed.push_back(fit.response(i));
        fitted.push_back(number(fit.fitted_means(i)));
        loo.push_back(number(jk.per_fold[static_cast<std::size_t>(i)].prediction));
    }
    j["row_ids"] = ids;
    j["observed"] = observed;
    j["fitted"] = fitted;
    j["jackknife_predicted"] = loo;
    write_atomic(cfg.out_dir / kArtifactName, j.dump() + "\n");
}

EncodedData load_encoded(const RunConfig& cfg) {
    if (cfg.input.empty()) throw UsageError("--input is required");
    const auto records = load_csv(cfg.input);
    return encode(records, PredictorSchema::for_case(parse_case_label(cfg.case_label)));
}

JackknifeOptions jk_options(const RunConfig& cfg) {
    JackknifeOptions o;
    o.threads = cfg.threads;
    return o;
}

int linear_fit(const RunConfig& cfg, std::ostream& out) {
    const auto data = load_encoded(cfg);
    const auto cond = condition_number(data.X);
    const bool pc = cfg.family == "pc";
    const auto fit = pc ? pc_regression(data.X, data.y, cfg.variance_target) : ols_fit(data.X, data.y);
    json j;
    j["command"] = "fit";
    j["family"] = cfg.family;
    j["case"] = cfg.case_label;
    j["m"] = fit.m;
    j["rss"] = number(fit.rss);
    j["condition_number"] = number(cond.value);
    j["collinear"] = cond.collinear;
    j["negative_fitted_values"] = (fit.fitted_values.array() < 0.0).count();
    if (pc) {
        j["variance_target"] = cfg.variance_target;
        j["components"] = fit.components;
        json pcs = json::array();
        for (Eigen::Index c = 0; c < fit.pc_coefficients.size(); ++c) pcs.push_back(number(fit.pc_coefficients(c)));
        j["pc_coefficients"] = pcs;
    }
    json coefs = json::array();
    for (std::size_t c = 0; c < fit.column_names.size(); ++c) {
        coefs.push_back({{"name", fit.column_names[c]}, {"coef", number(fit.coefficients(static_cast<Eigen::Index>(c)))}});
    }
    j["coefficients"] = coefs;
    write_report(cfg, "fit_report", j, out);
    return kExitOk;
}

std::vector<double> sweep_grid(const RunConfig& cfg) {
    if (cfg.grid) return *cfg.grid;
    return kDefaultGammaGrid;
}

json case_json(const CaseReport& r) {
    json j;
    j["name"] = std::string(to_string(r.case_label)) +
                (r.family.kind == FamilyKind::NB2 ? "@" + format_double(r.family.gamma) : "");
    j["case"] = to_string(r.case_label);
    j.update(family_json(r.family));
    json excluded = json::array();
    for (const auto& c : r.excluded_columns) excluded.push_back(c);
    j["excluded_columns"] = excluded;
    j["log_likelihood"] = number(r.log_likelihood);
    j["deviance"] = number(r.deviance);
    j["pearson_chi2"] = number(r.pearson_chi2);
    j["residual_df"] = r.residual_df;
    j["dispersion"] = number(r.dispersion);
    j["converged"] = r.converged;
    j["bic_mean"] = number(r.bic_mean);
    j["bic_std"] = number(r.bic_std);
    j["converged_fraction"] = r.converged_fraction;
    j["outlier_count"] = r.outlier_count;
    j["near_zero_fraction"] = r.near_zero_fraction;
    json coefs = json::array();
    for (const auto& c : r.coefficients) {
        coefs.push_back({{"name", c.name}, {"coef", number(c.coef)}, {"std_err", number(c.std_err)},
                         {"p", number(c.p)}, {"stars", c.stars}});
    }
    j["coefficients"] = coefs;
    if (r.lr_vs_full) {
        j["lr_test"] = {{"statistic", number(r.lr_vs_full->statistic)},
                        {"df", r.lr_vs_full->df},
                        {"p", number(r.lr_vs_full->p)},
                        {"non_nested_warning", r.lr_vs_full->non_nested_warning}};
    } else {
        j["lr_test"] = nullptr;
    }
    return j;
}

json ranking_json(const std::vector<RankedModel>& ranked) {
    json arr = json::array();
    for (const auto& r : ranked) {
        json flags = json::array();
        for (const auto& f : r.flags) flags.push_back(f);
        arr.push_back({{"name", r.summary.label},
                       {"rank", r.rank},
                       {"bic_mean", number(r.summary.bic_mean)},
                       {"dispersion", number(r.summary.dispersion)},
                       {"overdispersed", r.overdispersed},
                       {"flags", flags}});
    }
    return arr;
}

// A range below rounding noise (a perfect fit) gets a unit-wide window centred
// on the values so that they all land in one bin.
std::vector<double> histogram_edges(double lo, double hi, int bins) {
    if (!(hi - lo > 1e-8)) {
        const double centre = 0.5 * (lo + hi);
        lo = centre - 0.5;
        hi = centre + 0.5;
    }
    std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
    for (int b = 0; b <= bins; ++b) edges[static_cast<std::size_t>(b)] = lo + (hi - lo) * b / bins;
    return edges;
}

}  // namespace

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) throw UsageError("empty entry in gamma grid '" + text + "'");
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw UsageError("cannot parse gamma value '" + item + "'");
        }
        if (used != item.size()) throw UsageError("cannot parse gamma value '" + item + "'");
        values.push_back(v);
    }
    if (values.empty()) throw UsageError("gamma grid is empty");
    return values;
}

int cmd_fit(const RunConfig& cfg, std::ostream& out) {
    if (cfg.family == "linear" || cfg.family == "pc") return linear_fit(cfg, out);
    const auto family = family_from(cfg);
    const auto data = load_encoded(cfg);
    const auto jk = jackknife(data.X, data.y, family, jk_options(cfg));
    write_report(cfg, "fit_report", glm_report("fit", cfg, jk), out);
    write_artifact(cfg, data.X, jk);
    return jk.full_fit.converged ? kExitOk : kExitConvergence;
}

int cmd_jackknife(const RunConfig& cfg, std::ostream& out) {
    const auto family = family_from(cfg);
    const auto data = load_encoded(cfg);
    const auto jk = jackknife(data.X, data.y, family, jk_options(cfg));
    json j = glm_report("jackknife", cfg, jk);
    json folds = json::array();
    for (const auto& f : jk.per_fold) {
        folds.push_back({{"name", data.X.row_ids[f.left_out]},
                         {"index", f.left_out},
                         {"status", to_string(f.status)},
                         {"observed", f.observed},
                         {"predicted", number(f.prediction)},
                         {"deviance", number(f.deviance)},
                         {"residual_df", f.residual_df},
                         {"bic", number(f.bic)}});
    }
    j["folds"] = folds;
    write_report(cfg, "jackknife_report", j, out);
    write_artifact(cfg, data.X, jk);
    return jk.full_fit.converged ? kExitOk : kExitConvergence;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
    const auto grid = sweep_grid(cfg);
    const auto data = load_encoded(cfg);
    const auto options = jk_options(cfg);
    const auto rows = gamma_sweep(data.X, data.y, grid, options);
    const auto poisson = jackknife(data.X, data.y, Family::poisson(), options);

    json j;
    j["command"] = "sweep";
    j["case"] = cfg.case_label;
    j["m"] = static_cast<int>(data.X.rows());
    json arr = json::array();
    std::vector<ModelSummary> summaries;
    bool all_converged = true;
    for (const auto& r : rows) {
        arr.push_back({{"gamma", r.gamma},
                       {"dispersion", number(r.dispersion)},
                       {"bic_mean", number(r.bic_mean)},
                       {"bic_std", number(r.bic_std)},
                       {"converged_fraction", r.converged_fraction},
                       {"deviance", number(r.deviance)},
                       {"log_likelihood", number(r.log_likelihood)}});
        summaries.push_back({"nb2(" + format_double(r.gamma) + ")", r.bic_mean, r.dispersion, 0, 0.0});
        all_converged = all_converged && r.converged_fraction > 0.0;
    }
    j["rows"] = arr;
    const double poisson_phi =
        poisson.full_fit.residual_df >= 1 ? dispersion(poisson.full_fit.deviance, poisson.full_fit.residual_df).value
                                          : std::numeric_limits<double>::quiet_NaN();
    j["poisson_reference"] = {{"dispersion", number(poisson_phi)},
                              {"bic_mean", number(poisson.bic_mean)},
                              {"bic_std", number(poisson.bic_std)},
                              {"converged_fraction", poisson.converged_fraction}};
    summaries.push_back({"poisson", poisson.bic_mean, poisson_phi, 0, 0.0});
    if (summaries.size() >= 2) j["ranking"] = ranking_json(compare_models(summaries));
    write_report(cfg, "sweep_report", j, out);
    for (const auto& r : rows) {
        out << std::fixed << std::setprecision(2) << "gamma " << r.gamma << "  phi " << r.dispersion
            << "  avg BIC " << r.bic_mean << "  sd BIC " << r.bic_std << '\n';
    }
    out.unsetf(std::ios::floatfield);
    return all_converged ? kExitOk : kExitConvergence;
}

int cmd_cases(const RunConfig& cfg, std::ostream& out) {
    FamilyKind kind;
    std::vector<double> gammas;
    if (cfg.family == "poisson") {
        kind = FamilyKind::Poisson;
    } else if (cfg.family == "nb2") {
        kind = FamilyKind::NB2;
        if (cfg.grid) gammas = *cfg.grid;
        else if (cfg.gamma) gammas = {*cfg.gamma};
        else throw UsageError("--gamma or --grid is required for nb2 cases");
    } else {
        throw UsageError("cases supports the poisson and nb2 families");
    }
    if (cfg.input.empty()) throw UsageError("--input is required");
    const auto records = load_csv(cfg.input);
    const auto reports = run_cases(records, kind, gammas, jk_options(cfg));

    json j;
    j["command"] = "cases";
    j["m"] = records.size();
    j["note"] = kCaseNumberingNote;
    json arr = json::array();
    std::vector<ModelSummary> summaries;
    bool converged = true;
    for (const auto& r : reports) {
        arr.push_back(case_json(r));
        summaries.push_back(summarize(r));
        converged = converged && r.converged;
    }
    j["cases"] = arr;
    j["ranking"] = ranking_json(compare_models(summaries));
    write_report(cfg, "cases_report", j, out);
    return converged ? kExitOk : kExitConvergence;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
    auto sc = SynthConfig::calibrated_defaults();
    sc.m = cfg.m;
    sc.seed = cfg.seed;
    sc.gamma = cfg.gamma.value_or(0.0);
    sc.true_beta = {{"intercept", -0.25}, {"violations", 0.21}, {"seib3", 1.87}, {"seib10", 2.62}};
    for (const auto& [k, v] : cfg.beta) sc.true_beta[k] = v;
    const auto records = simulate(sc);

    std::ostringstream csv;
    write_csv(csv, records);
    const auto path = cfg.out_dir / "simulated.csv";
    write_atomic(path, csv.str());
    out << "wrote " << path.string() << " (" << records.size() << " rows)\n";

    const auto data = encode(records, PredictorSchema::for_case(CaseLabel::Full));
    out << std::left << std::setw(14) << "column" << std::right << std::setw(16) << "sample mean"
        << std::setw(16) << "target mean" << std::setw(12) << "rel err" << '\n';
    for (const auto& [name, marginal] : sc.predictor_marginals) {
        const double target = std::holds_alternative<LogNormalMarginal>(marginal)
                                  ? std::get<LogNormalMarginal>(marginal).mean
                                  : std::get<PoissonMarginal>(marginal).mean;
        const double mean = data.X.values.col(data.X.column_index(name)).mean();
        out << std::left << std::setw(14) << name << std::right << std::setw(16) << std::setprecision(6)
            << mean << std::setw(16) << target << std::setw(12) << std::setprecision(3)
            << (mean - target) / target << '\n';
    }
    out << std::left << std::setw(14) << "intrusions" << std::right << std::setw(16) << std::setprecision(6)
        << data.y.mean() << '\n';
    return kExitOk;
}

int cmd_plotdata(const RunConfig& cfg, std::ostream& out) {
    const auto artifact_path = cfg.input.empty() ? cfg.out_dir / kArtifactName : cfg.input;
    if (!std::filesystem::exists(artifact_path)) {
        throw UsageError("no run artifact at '" + artifact_path.string() + "'; run fit or jackknife first");
    }
    json a;
    {
        std::ifstream in(artifact_path);
        if (!in) throw IoError("cannot open '" + artifact_path.string() + "'");
        try {
            a = json::parse(in);
        } catch (const json::exception& e) {
            throw SchemaError("malformed run artifact: " + std::string(e.what()));
        }
    }
    const Family family = a["family"] == "nb2" ? Family::nb2(a["gamma"].get<double>()) : Family::poisson();
    const auto m = static_cast<Eigen::Index>(a["observed"].size());
    Eigen::VectorXd y(m), mu(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        y(i) = a["observed"][static_cast<std::size_t>(i)].get<double>();
        mu(i) = a["fitted"][static_cast<std::size_t>(i)].get<double>();
    }
    const int residual_df = a["residual_df"].get<int>();
    const double dev = a["deviance"].get<double>();
    const auto ids = a["row_ids"];

    std::ostringstream pred;
    pred << "row_id\tobserved\tpredicted\n";
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto& p = a["jackknife_predicted"][static_cast<std::size_t>(i)];
        pred << ids[static_cast<std::size_t>(i)].get<std::string>() << '\t' << format_double(y(i)) << '\t'
             << (p.is_null() ? std::string("nan") : format_double(p.get<double>())) << '\n';
    }
    write_atomic(cfg.out_dir / "plot_predictions.tsv", pred.str());

    const auto pearson = pearson_residuals(y, mu, family);
    std::ostringstream pr;
    pr << "row_id\tfitted_mean\tpearson_residual\toutlier\n";
    for (Eigen::Index i = 0; i < m; ++i) {
        pr << ids[static_cast<std::size_t>(i)].get<std::string>() << '\t' << format_double(mu(i)) << '\t'
           << format_double(pearson(i)) << '\t' << (std::abs(pearson(i)) > 2.0 ? 1 : 0) << '\n';
    }
    write_atomic(cfg.out_dir / "plot_pearson.tsv", pr.str());

    const double phi = residual_df >= 1 ? dev / residual_df : std::numeric_limits<double>::quiet_NaN();
    Eigen::VectorXd sdr = deviance_residuals(family, y, mu);
    if (phi > 0.0) sdr /= std::sqrt(phi);
    const auto edges = histogram_edges(sdr.minCoeff(), sdr.maxCoeff(), cfg.bins);
    std::vector<int> counts(static_cast<std::size_t>(cfg.bins), 0);
    const double lo = edges.front();
    const double width = (edges.back() - edges.front()) / cfg.bins;
    for (Eigen::Index i = 0; i < m; ++i) {
        auto b = static_cast<int>(std::floor((sdr(i) - lo) / width));
        b = std::clamp(b, 0, cfg.bins - 1);
        ++counts[static_cast<std::size_t>(b)];
    }
    std::ostringstream hist;
    hist << "bin_lower\tbin_upper\tcount\n";
    for (int b = 0; b < cfg.bins; ++b) {
        hist << format_double(edges[static_cast<std::size_t>(b)]) << '\t'
             << format_double(edges[static_cast<std::size_t>(b) + 1]) << '\t' << counts[static_cast<std::size_t>(b)]
             << '\n';
    }
    write_atomic(cfg.out_dir / "plot_deviance_hist.tsv", hist.str());

    json meta;
    meta.update(family_json(family));
    meta["rows"] = m;
    meta["pearson_reference_lines"] = {-2.0, 2.0};
    meta["histogram_bins"] = cfg.bins;
    meta["dispersion"] = number(phi);
    meta["files"] = {"plot_predictions.tsv", "plot_pearson.tsv", "plot_deviance_hist.tsv"};
    write_atomic(cfg.out_dir / "plot_metadata.json", meta.dump(2) + "\n");
    out << "wrote plot data for " << m << " rows to " << cfg.out_dir.string() << '\n';
    return kExitOk;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Poisson and NB2 count regression for per-organization intrusion counts", "countreg"};
    app.require_subcommand(1);
    app.fallthrough();

    RunConfig cfg;
    std::string input, out_dir = ".", grid_text, beta_text;
    std::optional<double> gamma;
    app.add_option("--input", input, "input CSV (or run artifact for plotdata)");
    app.add_option("--family", cfg.family, "linear | pc | poisson | nb2")
        ->check(CLI::IsMember({"linear", "pc", "poisson", "nb2"}));
    app.add_option("--gamma", gamma, "NB2 heterogeneity (simulate: response gamma, 0 = Poisson)");
    app.add_option("--grid", grid_text, "comma-separated gamma grid");
    app.add_option("--case", cfg.case_label, "full | case1 .. case5")
        ->check(CLI::IsMember({"full", "case1", "case2", "case3", "case4", "case5"}));
    app.add_option("--variance-target", cfg.variance_target, "PCA retained variance fraction")
        ->check(CLI::Range(0.0, 1.0));
    app.add_option("--seed", cfg.seed, "random seed");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--format", cfg.format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--m", cfg.m, "simulate: number of organizations");
    app.add_option("--bins", cfg.bins, "plotdata: histogram bins")->check(CLI::PositiveNumber);
    app.add_option("--beta", beta_text, "simulate: coefficient overrides name=value,...");
    app.add_option("--threads", cfg.threads, "jackknife worker threads (0 = auto)");

    app.add_subcommand("fit", "fit one model and write fit_report");
    app.add_subcommand("jackknife", "leave-one-out refits and write jackknife_report");
    app.add_subcommand("sweep", "NB2 gamma sweep and write sweep_report");
    app.add_subcommand("cases", "full model plus restricted cases and write cases_report");
    app.add_subcommand("simulate", "write a calibrated synthetic dataset");
    app.add_subcommand("plotdata", "write plot data files from the last fit or jackknife run");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        cfg.command = app.get_subcommands().front()->get_name();
        cfg.input = input;
        cfg.out_dir = out_dir;
        cfg.gamma = gamma;
        if (app.count("--grid")) cfg.grid = parse_grid(grid_text);
        if (!beta_text.empty()) {
            std::stringstream ss(beta_text);
            std::string item;
            while (std::getline(ss, item, ',')) {
                const auto eq = item.find('=');
                if (eq == std::string::npos) throw UsageError("--beta entries must look like name=value");
                cfg.beta[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
            }
        }
        if (cfg.command == "fit") return cmd_fit(cfg, out);
        if (cfg.command == "jackknife") return cmd_jackknife(cfg, out);
        if (cfg.command == "sweep") return cmd_sweep(cfg, out);
        if (cfg.command == "cases") return cmd_cases(cfg, out);
        if (cfg.command == "simulate") return cmd_simulate(cfg, out);
        if (cfg.command == "plotdata") return cmd_plotdata(cfg, out);
        throw UsageError("unknown command");
    } catch (const SingularityError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConvergence;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    }
}

}  // namespace countreg::cli
