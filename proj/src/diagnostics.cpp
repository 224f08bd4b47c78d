#include "countreg/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "countreg/errors.hpp"

namespace countreg {

namespace {

void check_lengths(const Eigen::VectorXd& y, const Eigen::VectorXd& mu, const char* where) {
    if (y.size() != mu.size()) {
        throw DomainError(std::string(where) + ": y has " + std::to_string(y.size()) +
                          " entries, mu has " + std::to_string(mu.size()));
    }
}

std::int64_t count_of(double v) { return static_cast<std::int64_t>(std::llround(v)); }

}  // namespace

Eigen::VectorXd pearson_residuals(const Eigen::VectorXd& y, const Eigen::VectorXd& mu,
                                  const Family& family) {
    check_lengths(y, mu, "pearson_residuals");
    Eigen::VectorXd r(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (!(mu(i) > 0.0)) throw DomainError("pearson_residuals: fitted means must be > 0");
        r(i) = (y(i) - mu(i)) / std::sqrt(family.variance(mu(i)));
    }
    return r;
}

DevianceResult deviance(const Family& family, const Eigen::VectorXd& y, const Eigen::VectorXd& mu) {
    check_lengths(y, mu, "deviance");
    DevianceResult out;
    out.contributions.resize(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (!(mu(i) > 0.0)) throw DomainError("deviance: fitted means must be > 0");
        if (!(y(i) >= 0.0)) throw DomainError("deviance: responses must be >= 0");
        const auto yi = count_of(y(i));
        out.contributions(i) = 2.0 * (log_pmf(family, yi, y(i)) - log_pmf(family, yi, mu(i)));
    }
    out.total = out.contributions.sum();
    return out;
}

Eigen::VectorXd deviance_residuals(const Family& family, const Eigen::VectorXd& y,
                                   const Eigen::VectorXd& mu) {
    const auto dev = deviance(family, y, mu);
    Eigen::VectorXd d(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double sign = y(i) > mu(i) ? 1.0 : (y(i) < mu(i) ? -1.0 : 0.0);
        d(i) = sign * std::sqrt(std::max(dev.contributions(i), 0.0));
    }
    return d;
}

Eigen::VectorXd standardized_deviance_residuals(const Family& family, const Eigen::VectorXd& y,
                                                const Eigen::VectorXd& mu, double dispersion) {
    if (!(dispersion > 0.0)) throw DomainError("standardized_deviance_residuals: dispersion must be > 0");
    return deviance_residuals(family, y, mu) / std::sqrt(dispersion);
}

Dispersion dispersion(double deviance, int residual_df) {
    if (residual_df < 1) throw DomainError("dispersion: residual degrees of freedom must be >= 1");
    Dispersion out;
    out.value = deviance / residual_df;
    out.overdispersed = out.value > 1.0;
    return out;
}

double bic(double deviance, int residual_df, int m) {
    if (m < 1) throw DomainError("bic: m must be >= 1");
    return deviance - residual_df * std::log(static_cast<double>(m));
}

LrTestResult lr_test(const FitResult& full, const FitResult& restricted) {
    if (full.m != restricted.m || full.response != restricted.response) {
        throw NestingError("lr_test: fits were computed on different observations");
    }
    const bool same_family = full.family == restricted.family;
    const bool poisson_in_nb2 =
        full.family.kind == FamilyKind::NB2 && restricted.family.kind == FamilyKind::Poisson;
    if (!same_family && !poisson_in_nb2) {
        throw NestingError("lr_test: " + restricted.family.name() + " is not nested in " +
                           full.family.name());
    }
    for (const auto& c : restricted.column_names) {
        if (std::find(full.column_names.begin(), full.column_names.end(), c) ==
            full.column_names.end()) {
            throw NestingError("lr_test: restricted column '" + c + "' is absent from the full model");
        }
    }
    LrTestResult out;
    out.df = full.n_params - restricted.n_params;
    if (out.df < 0) throw NestingError("lr_test: restricted model has more parameters than the full model");
    out.statistic = 2.0 * (full.log_likelihood - restricted.log_likelihood);
    if (out.df == 0 || out.statistic <= 0.0) {
        out.p = 1.0;
        out.non_nested_warning = out.statistic < -1e-8;
        return out;
    }
    out.p = chi2_sf(out.statistic, out.df);
    return out;
}

DiagnosticsReport diagnose(const FitResult& fit, double outlier_threshold) {
    DiagnosticsReport r;
    const auto& y = fit.response;
    const auto& mu = fit.fitted_means;
    r.pearson_residuals = pearson_residuals(y, mu, fit.family);
    r.pearson_chi2 = r.pearson_residuals.squaredNorm();
    r.deviance_residuals = deviance_residuals(fit.family, y, mu);
    r.deviance = fit.deviance;
    if (fit.residual_df >= 1) {
        r.dispersion = dispersion(fit.deviance, fit.residual_df).value;
        r.bic = bic(fit.deviance, fit.residual_df, fit.m);
    } else {
        r.dispersion = std::numeric_limits<double>::quiet_NaN();
        r.bic = fit.deviance;
    }
    if (r.dispersion > 0.0) {
        r.standardized_deviance_residuals = r.deviance_residuals / std::sqrt(r.dispersion);
    } else {
        r.standardized_deviance_residuals = r.deviance_residuals;
    }
    for (Eigen::Index i = 0; i < r.pearson_residuals.size(); ++i) {
        if (std::abs(r.pearson_residuals(i)) > outlier_threshold) {
            r.outlier_indices.push_back(static_cast<std::size_t>(i));
        }
    }
    return r;
}

}  // namespace countreg
