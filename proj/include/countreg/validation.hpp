#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "countreg/countglm.hpp"
#include "countreg/dataset.hpp"

namespace countreg {

struct JackknifeOptions {
    IrlsOptions irls;
    /// Worker threads for the folds; 0 picks the hardware concurrency.
    unsigned threads = 0;
};

enum class FoldStatus { Ok, NotConverged, Failed };

std::string_view to_string(FoldStatus status);

struct FoldResult {
    std::size_t left_out = 0;
    FoldStatus status = FoldStatus::Ok;
    std::string message;
    double observed = 0.0;
    /// exp(x_i beta_{-i}); NaN for failed folds.
    double prediction = 0.0;
    Eigen::VectorXd coefficients;
    double log_likelihood = 0.0;
    double deviance = 0.0;
    int residual_df = 0;
    /// Fold deviance - fold residual DF * ln(m - 1).
    double bic = 0.0;
};

struct JackknifeResult {
    std::vector<FoldResult> per_fold;
    FitResult full_fit;
    /// Over usable folds (failed folds excluded).
    double bic_mean = 0.0;
    double bic_std = 0.0;  ///< sample standard deviation
    Eigen::VectorXd coef_mean;
    Eigen::VectorXd coef_std;  ///< sample standard deviation over folds
    /// Jackknife standard error sqrt((k-1)/k * sum (b_i - mean)^2).
    Eigen::VectorXd coef_jackknife_se;
    std::size_t usable_folds = 0;
    /// Folds that fitted and converged, over all folds.
    double converged_fraction = 0.0;
    std::vector<std::string> warnings;
};

/// Leave-one-out refits: fold i fits on every row but i and predicts row i.
/// Rank-deficient folds are flagged and left out of the aggregates; the call
/// fails only when every fold fails. The full-sample fit must succeed.
/// Requires more rows than coefficients.
JackknifeResult jackknife(const DesignMatrix& X, const Eigen::VectorXd& y, const Family& family,
                          const JackknifeOptions& options = {});

struct PredictionRow {
    std::size_t index = 0;
    double observed = 0.0;
    double predicted = 0.0;
    double pearson_residual = 0.0;
};

/// One row per usable fold: observed count, left-out prediction and the
/// Pearson residual of that pair under the fitted family.
std::vector<PredictionRow> jackknife_predictions_table(const JackknifeResult& result);

}  // namespace countreg
