#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "countreg/countglm.hpp"

namespace countreg {

/// Upper tail of the chi-square distribution with k degrees of freedom.
double chi2_sf(double x, int k);
/// P(|Z| >= |z|) for a standard normal Z.
double normal_two_sided_p(double z);
/// Q(a, x) = Gamma(a, x) / Gamma(a).
double regularized_gamma_q(double a, double x);

/// (y - mu) / sqrt(V(mu)), V = mu (Poisson) or mu (1 + gamma mu) (NB2).
Eigen::VectorXd pearson_residuals(const Eigen::VectorXd& y, const Eigen::VectorXd& mu,
                                  const Family& family);

struct DevianceResult {
    double total = 0.0;
    /// 2 (l_i(y_i) - l_i(mu_i)); sums to total.
    Eigen::VectorXd contributions;
};

/// -2 (L(mu) - L(y)) built from the log-likelihood itself.
DevianceResult deviance(const Family& family, const Eigen::VectorXd& y, const Eigen::VectorXd& mu);

Eigen::VectorXd deviance_residuals(const Family& family, const Eigen::VectorXd& y,
                                   const Eigen::VectorXd& mu);
Eigen::VectorXd standardized_deviance_residuals(const Family& family, const Eigen::VectorXd& y,
                                                const Eigen::VectorXd& mu, double dispersion);

struct Dispersion {
    double value = 0.0;
    bool overdispersed = false;  ///< value > 1
};

Dispersion dispersion(double deviance, int residual_df);

/// Deviance-based BIC: D - residual_df * ln(m).
double bic(double deviance, int residual_df, int m);

struct LrTestResult {
    double statistic = 0.0;
    int df = 0;
    double p = 1.0;
    /// The restricted fit has a higher likelihood than the full one.
    bool non_nested_warning = false;
};

/// 2 (L_full - L_restricted) against chi-square with the n_params difference.
/// The restricted columns must be a subset of the full ones, on the same
/// observations. Family kinds must match, except that a Poisson fit may be the
/// restricted model of an NB2 fit (gamma fixed at 0).
LrTestResult lr_test(const FitResult& full, const FitResult& restricted);

struct DiagnosticsReport {
    Eigen::VectorXd pearson_residuals;
    Eigen::VectorXd deviance_residuals;
    Eigen::VectorXd standardized_deviance_residuals;
    double pearson_chi2 = 0.0;
    double deviance = 0.0;
    double dispersion = 0.0;
    double bic = 0.0;
    std::vector<std::size_t> outlier_indices;
};

DiagnosticsReport diagnose(const FitResult& fit, double outlier_threshold = 2.0);

}  // namespace countreg
