#include "countreg/study.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "countreg/errors.hpp"

namespace countreg {

std::vector<SweepRow> gamma_sweep(const DesignMatrix& X, const Eigen::VectorXd& y,
                                  std::span<const double> grid, const JackknifeOptions& options) {
    if (grid.empty()) throw DomainError("gamma_sweep: empty gamma grid");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0) || !std::isfinite(grid[i])) {
            throw DomainError("gamma_sweep: gamma values must be positive");
        }
        if (i > 0 && !(grid[i] > grid[i - 1])) {
            throw DomainError("gamma_sweep: gamma grid must be strictly increasing");
        }
    }
    std::vector<SweepRow> rows;
    rows.reserve(grid.size());
    for (double g : grid) {
        const auto jk = jackknife(X, y, Family::nb2(g), options);
        SweepRow row;
        row.gamma = g;
        row.deviance = jk.full_fit.deviance;
        row.log_likelihood = jk.full_fit.log_likelihood;
        row.dispersion = dispersion(jk.full_fit.deviance, jk.full_fit.residual_df).value;
        row.bic_mean = jk.bic_mean;
        row.bic_std = jk.bic_std;
        row.converged_fraction = jk.full_fit.converged ? jk.converged_fraction : 0.0;
        rows.push_back(row);
    }
    return rows;
}

std::string significance_stars(double p) {
    if (p < 0.001) return "***";
    if (p < 0.01) return "**";
    if (p < 0.05) return "*";
    return "";
}

CaseReport evaluate_case(std::span<const OrgRecord> records, CaseLabel label, const Family& family,
                         const FitResult* full_fit, const JackknifeOptions& options) {
    const auto schema = PredictorSchema::for_case(label);
    const auto data = encode(records, schema);
    const auto jk = jackknife(data.X, data.y, family, options);
    const auto& fit = jk.full_fit;
    const auto diag = diagnose(fit);

    CaseReport report;
    report.case_label = label;
    report.family = family;
    report.excluded_columns = schema.excluded_columns();
    report.log_likelihood = fit.log_likelihood;
    report.deviance = fit.deviance;
    report.pearson_chi2 = diag.pearson_chi2;
    report.dispersion = diag.dispersion;
    report.residual_df = fit.residual_df;
    report.converged = fit.converged;
    for (const auto& row : coef_inference(fit)) {
        report.coefficients.push_back({row.name, row.coef, row.std_err, row.p, significance_stars(row.p)});
    }
    if (full_fit != nullptr && label != CaseLabel::Full) {
        report.lr_vs_full = lr_test(*full_fit, fit);
    }
    report.bic_mean = jk.bic_mean;
    report.bic_std = jk.bic_std;
    report.converged_fraction = jk.converged_fraction;
    report.outlier_count = diag.outlier_indices.size();
    const auto& sd = diag.standardized_deviance_residuals;
    const auto near = std::count_if(sd.data(), sd.data() + sd.size(), [](double r) { return std::abs(r) < 1.0; });
    report.near_zero_fraction = sd.size() ? static_cast<double>(near) / static_cast<double>(sd.size()) : 0.0;
    return report;
}

std::vector<CaseReport> run_cases(std::span<const OrgRecord> records, FamilyKind kind,
                                  std::span<const double> gamma_values,
                                  const JackknifeOptions& options) {
    if (records.empty()) throw DomainError("run_cases: no records");
    std::vector<Family> families;
    if (kind == FamilyKind::Poisson) {
        families.push_back(Family::poisson());
    } else {
        if (gamma_values.empty()) throw DomainError("run_cases: NB2 needs at least one gamma");
        for (double g : gamma_values) {
            if (!(g > 0.0)) throw DomainError("run_cases: gamma values must be positive");
            families.push_back(Family::nb2(g));
        }
    }

    std::vector<CaseReport> reports;
    for (const auto& family : families) {
        const auto full_data = encode(records, PredictorSchema::for_case(CaseLabel::Full));
        const FitResult full_fit = irls_fit(full_data.X, full_data.y, family, options.irls);
        for (auto label : kAllCases) {
            reports.push_back(evaluate_case(records, label, family, &full_fit, options));
        }
    }
    return reports;
}

double badness_score(std::int64_t n_bad, std::int64_t n_total) {
    if (n_total < 1) throw DomainError("badness_score: total domain count must be >= 1");
    if (n_bad < 0) throw DomainError("badness_score: bad domain count must be >= 0");
    if (n_bad > n_total) throw DomainError("badness_score: more bad domains than domains");
    if (n_bad == 0) return 0.0;
    return static_cast<double>(n_bad) / static_cast<double>(n_total) *
           std::log(static_cast<double>(n_bad));
}

ModelSummary summarize(const CaseReport& report) {
    ModelSummary s;
    std::ostringstream label;
    label << to_string(report.case_label) << '/';
    if (report.family.kind == FamilyKind::Poisson) {
        label << "poisson";
    } else {
        label << "nb2(" << report.family.gamma << ')';
    }
    s.label = label.str();
    s.bic_mean = report.bic_mean;
    s.dispersion = report.dispersion;
    s.outlier_count = report.outlier_count;
    s.near_zero_fraction = report.near_zero_fraction;
    return s;
}

std::vector<RankedModel> compare_models(std::vector<ModelSummary> reports) {
    if (reports.size() < 2) throw DomainError("compare_models: need at least two models");
    std::sort(reports.begin(), reports.end(), [](const ModelSummary& a, const ModelSummary& b) {
        if (a.bic_mean != b.bic_mean) return a.bic_mean < b.bic_mean;
        const double da = std::abs(a.dispersion - 1.0);
        const double db = std::abs(b.dispersion - 1.0);
        if (da != db) return da < db;
        return a.label < b.label;
    });
    std::vector<RankedModel> ranked;
    ranked.reserve(reports.size());
    for (std::size_t i = 0; i < reports.size(); ++i) {
        RankedModel r;
        r.rank = i + 1;
        r.summary = std::move(reports[i]);
        r.overdispersed = r.summary.dispersion > 1.0;
        std::ostringstream phi;
        phi << std::fixed << std::setprecision(2) << r.summary.dispersion;
        if (r.overdispersed) r.flags.push_back("overdispersed (phi=" + phi.str() + ")");
        if (r.summary.outlier_count > 0) {
            r.flags.push_back(std::to_string(r.summary.outlier_count) + " Pearson residuals beyond +/-2");
        }
        std::ostringstream share;
        share << std::fixed << std::setprecision(1) << 100.0 * r.summary.near_zero_fraction;
        r.flags.push_back(share.str() + "% of standardized deviance residuals within +/-1");
        ranked.push_back(std::move(r));
    }
    return ranked;
}

}  // namespace countreg
