#include "countreg/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "countreg/diagnostics.hpp"
#include "countreg/errors.hpp"

namespace countreg {

std::string_view to_string(FoldStatus status) {
    switch (status) {
        case FoldStatus::Ok: return "ok";
        case FoldStatus::NotConverged: return "not_converged";
        case FoldStatus::Failed: return "failed";
    }
    return "failed";
}

namespace {

FoldResult run_fold(const DesignMatrix& X, const Eigen::VectorXd& y, const Family& family,
                    const IrlsOptions& irls, Eigen::Index i) {
    const Eigen::Index m = X.rows();
    FoldResult fold;
    fold.left_out = static_cast<std::size_t>(i);
    fold.observed = y(i);
    Eigen::VectorXd y_train(m - 1);
    if (i > 0) y_train.head(i) = y.head(i);
    if (i < m - 1) y_train.tail(m - 1 - i) = y.tail(m - 1 - i);
    try {
        const FitResult fit = irls_fit(X.without_row(i), y_train, family, irls);
        fold.coefficients = fit.coefficients;
        fold.log_likelihood = fit.log_likelihood;
        fold.deviance = fit.deviance;
        fold.residual_df = fit.residual_df;
        fold.bic = bic(fit.deviance, fit.residual_df, fit.m);
        fold.prediction = std::exp(X.values.row(i).dot(fit.coefficients));
        fold.status = fit.converged ? FoldStatus::Ok : FoldStatus::NotConverged;
        if (!fit.converged) fold.message = "fold did not converge";
    } catch (const Error& e) {
        fold.status = FoldStatus::Failed;
        fold.message = e.what();
        fold.prediction = std::numeric_limits<double>::quiet_NaN();
        fold.bic = std::numeric_limits<double>::quiet_NaN();
    }
    return fold;
}

}  // namespace

JackknifeResult jackknife(const DesignMatrix& X, const Eigen::VectorXd& y, const Family& family,
                          const JackknifeOptions& options) {
    const Eigen::Index m = X.rows();
    if (y.size() != m) throw DomainError("jackknife: row count and response length differ");
    if (m < X.cols() + 1 || m < 2) {
        throw DomainError("jackknife: need at least " + std::to_string(std::max<Eigen::Index>(2, X.cols() + 1)) +
                          " observations so every fold can identify the coefficients");
    }

    JackknifeResult result;
    result.full_fit = irls_fit(X, y, family, options.irls);
    result.per_fold.resize(static_cast<std::size_t>(m));

    unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
    threads = std::clamp<unsigned>(threads, 1u, static_cast<unsigned>(m));
    if (threads == 1) {
        for (Eigen::Index i = 0; i < m; ++i) {
            result.per_fold[static_cast<std::size_t>(i)] = run_fold(X, y, family, options.irls, i);
        }
    } else {
        // Strided assignment; each slot is written by exactly one worker.
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                for (Eigen::Index i = t; i < m; i += threads) {
                    result.per_fold[static_cast<std::size_t>(i)] =
                        run_fold(X, y, family, options.irls, i);
                }
            });
        }
    }

    const Eigen::Index n = X.cols();
    std::vector<const FoldResult*> usable;
    std::size_t converged = 0;
    for (const auto& fold : result.per_fold) {
        if (fold.status == FoldStatus::Failed) {
            result.warnings.push_back("fold " + std::to_string(fold.left_out) +
                                      " excluded: " + fold.message);
            continue;
        }
        if (fold.status == FoldStatus::Ok) ++converged;
        else result.warnings.push_back("fold " + std::to_string(fold.left_out) + " did not converge");
        usable.push_back(&fold);
    }
    if (usable.empty()) throw Error("jackknife: every fold failed");
    result.usable_folds = usable.size();
    result.converged_fraction = static_cast<double>(converged) / static_cast<double>(m);

    const double k = static_cast<double>(usable.size());
    double bic_sum = 0.0;
    result.coef_mean = Eigen::VectorXd::Zero(n);
    for (const auto* fold : usable) {
        bic_sum += fold->bic;
        result.coef_mean += fold->coefficients;
    }
    result.bic_mean = bic_sum / k;
    result.coef_mean /= k;

    double bic_ss = 0.0;
    Eigen::VectorXd coef_ss = Eigen::VectorXd::Zero(n);
    for (const auto* fold : usable) {
        bic_ss += (fold->bic - result.bic_mean) * (fold->bic - result.bic_mean);
        coef_ss += (fold->coefficients - result.coef_mean).cwiseAbs2();
    }
    if (usable.size() > 1) {
        result.bic_std = std::sqrt(bic_ss / (k - 1.0));
        result.coef_std = (coef_ss / (k - 1.0)).cwiseSqrt();
        result.coef_jackknife_se = (coef_ss * ((k - 1.0) / k)).cwiseSqrt();
    } else {
        result.bic_std = 0.0;
        result.coef_std = Eigen::VectorXd::Zero(n);
        result.coef_jackknife_se = Eigen::VectorXd::Zero(n);
    }
    return result;
}

std::vector<PredictionRow> jackknife_predictions_table(const JackknifeResult& result) {
    const Family& family = result.full_fit.family;
    std::vector<PredictionRow> rows;
    rows.reserve(result.per_fold.size());
    for (const auto& fold : result.per_fold) {
        if (fold.status == FoldStatus::Failed) continue;
        PredictionRow row;
        row.index = fold.left_out;
        row.observed = fold.observed;
        row.predicted = fold.prediction;
        row.pearson_residual = (fold.observed - fold.prediction) / std::sqrt(family.variance(fold.prediction));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace countreg
