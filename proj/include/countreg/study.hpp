#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "countreg/countglm.hpp"
#include "countreg/dataset.hpp"
#include "countreg/diagnostics.hpp"
#include "countreg/validation.hpp"

namespace countreg {

/// Heterogeneity grid of the absolute-model sweep.
inline const std::vector<double> kDefaultGammaGrid = {0.01, 0.20, 0.38, 0.57, 0.76,
                                                      0.94, 1.13, 1.31, 1.50};

struct SweepRow {
    double gamma = 0.0;
    double dispersion = 0.0;  ///< full-sample deviance / residual DF
    double deviance = 0.0;
    double log_likelihood = 0.0;
    double bic_mean = 0.0;
    double bic_std = 0.0;
    double converged_fraction = 0.0;
};

/// One jackknifed NB2 evaluation per gamma. The grid must be strictly increasing and positive.
std::vector<SweepRow> gamma_sweep(const DesignMatrix& X, const Eigen::VectorXd& y,
                                  std::span<const double> grid, const JackknifeOptions& options = {});

/// "***" for p < 0.001, "**" for p < 0.01, "*" for p < 0.05, otherwise empty.
std::string significance_stars(double p);

struct CaseCoefficient {
    std::string name;
    double coef = 0.0;
    double std_err = 0.0;
    double p = 1.0;
    std::string stars;
};

struct CaseReport {
    CaseLabel case_label = CaseLabel::Full;
    Family family;
    std::vector<std::string> excluded_columns;
    double log_likelihood = 0.0;
    double deviance = 0.0;
    double pearson_chi2 = 0.0;
    double dispersion = 0.0;
    int residual_df = 0;
    bool converged = false;
    std::vector<CaseCoefficient> coefficients;
    /// Against the full model; absent for the full model itself.
    std::optional<LrTestResult> lr_vs_full;
    double bic_mean = 0.0;
    double bic_std = 0.0;
    double converged_fraction = 0.0;
    std::size_t outlier_count = 0;
    /// Share of standardized deviance residuals with |r| < 1.
    double near_zero_fraction = 0.0;
};

inline constexpr const char* kCaseNumberingNote =
    "case1 omits violations, case2 omits SEIB dummies, case3 omits hosts, case4 omits rosg, "
    "case5 omits hosts, rosg and SEIB dummies";

/// Full model plus the five restricted cases for every gamma (gamma_values is
/// ignored for Poisson, which yields a single block of six reports).
std::vector<CaseReport> run_cases(std::span<const OrgRecord> records, FamilyKind kind,
                                  std::span<const double> gamma_values,
                                  const JackknifeOptions& options = {});

/// Single case on an already-fitted full model.
CaseReport evaluate_case(std::span<const OrgRecord> records, CaseLabel label, const Family& family,
                         const FitResult* full_fit, const JackknifeOptions& options = {});

/// (n_bad / n_total) * ln(n_bad); 0 when n_bad is 0.
double badness_score(std::int64_t n_bad, std::int64_t n_total);

struct ModelSummary {
    std::string label;
    double bic_mean = 0.0;
    double dispersion = 0.0;
    std::size_t outlier_count = 0;
    double near_zero_fraction = 0.0;
};

ModelSummary summarize(const CaseReport& report);

struct RankedModel {
    std::size_t rank = 0;  ///< 1 is best
    ModelSummary summary;
    bool overdispersed = false;
    std::vector<std::string> flags;
};

/// Orders by jackknifed mean BIC, then |dispersion - 1|, then label.
std::vector<RankedModel> compare_models(std::vector<ModelSummary> reports);

}  // namespace countreg
