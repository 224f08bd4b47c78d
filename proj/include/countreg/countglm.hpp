#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "countreg/dataset.hpp"

namespace countreg {

enum class FamilyKind { Poisson, NB2 };

/// Response distribution with log link. For NB2 the heterogeneity gamma is a
/// fixed hyperparameter (variance mu (1 + gamma mu)); it is never estimated.
struct Family {
    FamilyKind kind = FamilyKind::Poisson;
    double gamma = 0.0;

    static Family poisson() { return {FamilyKind::Poisson, 0.0}; }
    static Family nb2(double gamma);

    double variance(double mu) const;
    /// IRLS weight for the log link: mu for Poisson, mu / (1 + gamma mu) for NB2.
    double working_weight(double mu) const;
    /// Parameters beyond the regression coefficients (1 for NB2's gamma).
    int extra_params() const { return kind == FamilyKind::NB2 ? 1 : 0; }
    std::string name() const;

    bool operator==(const Family&) const = default;
};

/// ln Gamma(x) for x > 0.
double log_gamma(double x);

double poisson_log_pmf(std::int64_t y, double lambda);
double nb2_log_pmf(std::int64_t y, double lambda, double gamma);

/// Per-observation log pmf for a family. mu == 0 is allowed only with y == 0
/// (the saturated limit, which contributes 0).
double log_pmf(const Family& family, std::int64_t y, double mu);

double log_likelihood(const Family& family, const Eigen::VectorXd& y, const Eigen::VectorXd& mu);
/// L(y): the log-likelihood with mu_i = y_i.
double saturated_log_likelihood(const Family& family, const Eigen::VectorXd& y);

struct IrlsOptions {
    double tolerance = 1e-8;  ///< relative deviance change
    int max_iterations = 100;
    int max_halvings = 20;
};

struct FitResult {
    Family family;
    std::vector<std::string> column_names;
    Eigen::VectorXd coefficients;
    Eigen::MatrixXd covariance;
    Eigen::VectorXd std_errors;
    double log_likelihood = 0.0;
    double deviance = 0.0;
    Eigen::VectorXd fitted_means;
    Eigen::VectorXd response;
    int m = 0;
    int model_df = 0;     ///< coefficients minus intercept
    int n_params = 0;     ///< coefficients plus one for NB2
    int residual_df = 0;  ///< m - n_params - 1
    int iterations = 0;
    bool converged = false;
    std::vector<std::string> warnings;
};

/// Residual degrees of freedom: m - (coefficients + family extras) - 1.
int residual_df_for(int m, int n_coefficients, const Family& family);

/// Maximum-likelihood fit with log link by iteratively reweighted least squares.
/// Starts from mu = y + 0.5, halves steps that increase the deviance and
/// stops when the relative deviance change drops below options.tolerance.
/// Throws SingularityError naming dependent columns and DomainError for
/// negative or non-integer responses or fewer rows than coefficients. Non-convergence is reported through
/// FitResult::converged rather than thrown.
FitResult irls_fit(const DesignMatrix& X, const Eigen::VectorXd& y, const Family& family,
                   const IrlsOptions& options = {});

/// exp(X_new beta). Column names must match the fit exactly.
Eigen::VectorXd predict(const FitResult& fit, const DesignMatrix& X_new);

/// Score vector X^T diag(w) (y - mu) / mu with w the working weights.
Eigen::VectorXd score(const Family& family, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& beta);

struct CoefRow {
    std::string name;
    double coef = 0.0;
    double std_err = 0.0;
    double z = 0.0;
    double p = 1.0;
    bool degenerate = false;  ///< std_err == 0
};

/// Wald z and two-sided standard-normal p for a single coefficient.
CoefRow wald(std::string name, double coef, double std_err);
std::vector<CoefRow> coef_inference(const FitResult& fit);

}  // namespace countreg
