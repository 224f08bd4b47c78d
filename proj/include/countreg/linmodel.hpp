#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "countreg/dataset.hpp"

namespace countreg {

/// Result of a least-squares baseline. Fitted values are unconstrained and
/// may be negative or fractional.
struct LinearFitResult {
    std::vector<std::string> column_names;
    Eigen::VectorXd coefficients;  ///< in the original predictor space
    Eigen::VectorXd fitted_values;
    Eigen::VectorXd residuals;
    double rss = 0.0;
    int m = 0;

    // Principal-component regression only.
    int components = 0;
    Eigen::VectorXd pc_coefficients;  ///< intercept followed by one per retained component
};

LinearFitResult ols_fit(const DesignMatrix& X, const Eigen::VectorXd& y);

struct ConditionNumber {
    double value = 0.0;
    bool collinear = false;
};

inline constexpr double kCollinearityThreshold = 20.0;

inline bool collinearity_flag(double condition) { return condition > kCollinearityThreshold; }

/// Largest over smallest singular value of a matrix (infinity when rank deficient).
double singular_value_ratio(const Eigen::MatrixXd& A);

/// Condition number of the standardized non-intercept block.
ConditionNumber condition_number(const DesignMatrix& X);

struct PCABasis {
    std::vector<std::string> column_names;  ///< the standardized non-intercept columns
    Eigen::MatrixXd loadings;               ///< one orthonormal column per component, all components
    Eigen::VectorXd eigenvalues;            ///< sample covariance eigenvalues, nonincreasing
    Eigen::VectorXd explained_variance_ratio;
    int k = 0;
    Standardization standardization;

    Eigen::MatrixXd retained_loadings() const { return loadings.leftCols(k); }
    /// Scores of rows of X (same columns as the basis was built from) on the first k components.
    Eigen::MatrixXd scores(const DesignMatrix& X) const;
};

inline constexpr double kDefaultVarianceTarget = 0.99;

/// PCA of the standardized non-intercept columns; k is the smallest count
/// whose cumulative explained-variance ratio reaches variance_target. Each
/// loading vector is signed so its largest-magnitude entry is positive.
PCABasis pca(const DesignMatrix& X, double variance_target = kDefaultVarianceTarget);

/// OLS on an intercept plus the first k principal-component scores, with the
/// coefficients mapped back to the original predictors.
LinearFitResult pc_regression(const DesignMatrix& X, const Eigen::VectorXd& y,
                              double variance_target = kDefaultVarianceTarget);

}  // namespace countreg
