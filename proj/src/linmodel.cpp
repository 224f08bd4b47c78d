#include "countreg/linmodel.hpp"

#include <cmath>
#include <limits>

#include "countreg/errors.hpp"
#include "linalg_util.hpp"

namespace countreg {

namespace {

Eigen::VectorXd least_squares(const Eigen::MatrixXd& A, const Eigen::VectorXd& y) {
    Eigen::MatrixXd scaled = A;
    Eigen::VectorXd scale(A.cols());
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
        const double norm = A.col(j).norm();
        scale(j) = norm > 0.0 ? norm : 1.0;
        scaled.col(j) /= scale(j);
    }
    return scaled.colPivHouseholderQr().solve(y).cwiseQuotient(scale);
}

Eigen::MatrixXd non_intercept_block(const DesignMatrix& Z, const Standardization& params) {
    Eigen::MatrixXd block(Z.rows(), static_cast<Eigen::Index>(params.columns.size()));
    for (std::size_t c = 0; c < params.columns.size(); ++c) {
        block.col(static_cast<Eigen::Index>(c)) = Z.values.col(params.columns[c]);
    }
    return block;
}

}  // namespace

LinearFitResult ols_fit(const DesignMatrix& X, const Eigen::VectorXd& y) {
    if (y.size() != X.rows()) throw DomainError("ols_fit: row count and response length differ");
    if (X.rows() <= X.cols()) {
        throw DomainError("ols_fit: need more observations than coefficients");
    }
    const auto rank = detail::check_rank(X.values);
    if (rank.rank < X.cols()) {
        std::vector<std::string> names;
        for (auto j : rank.dependent) {
            names.push_back(static_cast<std::size_t>(j) < X.column_names.size()
                                ? X.column_names[static_cast<std::size_t>(j)]
                                : "column " + std::to_string(j));
        }
        const std::string message =
            "ols_fit: design matrix is rank deficient; linearly dependent columns: " + detail::join_names(names);
        throw SingularityError(message, std::move(names));
    }
    LinearFitResult fit;
    fit.column_names = X.column_names;
    fit.coefficients = least_squares(X.values, y);
    fit.fitted_values = X.values * fit.coefficients;
    fit.residuals = y - fit.fitted_values;
    fit.rss = fit.residuals.squaredNorm();
    fit.m = static_cast<int>(X.rows());
    return fit;
}

double singular_value_ratio(const Eigen::MatrixXd& A) {
    if (A.size() == 0) return 1.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    const auto& s = svd.singularValues();
    const double largest = s(0);
    // Columns beyond the row count contribute zero singular values.
    const double smallest = A.cols() > A.rows() ? 0.0 : s(s.size() - 1);
    if (largest == 0.0) return std::numeric_limits<double>::infinity();
    const double cutoff =
        largest * static_cast<double>(std::max(A.rows(), A.cols())) * std::numeric_limits<double>::epsilon();
    if (smallest <= cutoff) return std::numeric_limits<double>::infinity();
    return largest / smallest;
}

ConditionNumber condition_number(const DesignMatrix& X) {
    if (X.rows() == 0 || X.cols() == 0) throw DomainError("condition_number: empty design matrix");
    const auto [Z, params] = standardize(X);
    ConditionNumber out;
    out.value = singular_value_ratio(non_intercept_block(Z, params));
    out.collinear = collinearity_flag(out.value);
    return out;
}

Eigen::MatrixXd PCABasis::scores(const DesignMatrix& X) const {
    Eigen::MatrixXd block(X.rows(), static_cast<Eigen::Index>(standardization.columns.size()));
    for (std::size_t c = 0; c < standardization.columns.size(); ++c) {
        const auto ci = static_cast<Eigen::Index>(c);
        const auto j = standardization.columns[c];
        if (standardization.zero_variance[c]) {
            block.col(ci).setZero();
        } else {
            block.col(ci) =
                (X.values.col(j).array() - standardization.center(ci)) / standardization.scale(ci);
        }
    }
    return block * retained_loadings();
}

PCABasis pca(const DesignMatrix& X, double variance_target) {
    if (X.rows() < 2) throw DomainError("pca: need at least two observations");
    if (!(variance_target > 0.0 && variance_target <= 1.0)) {
        throw DomainError("pca: variance target must lie in (0, 1]");
    }
    auto [Z, params] = standardize(X);
    const Eigen::MatrixXd block = non_intercept_block(Z, params);
    const Eigen::Index p = block.cols();
    const Eigen::MatrixXd cov = block.transpose() * block / static_cast<double>(X.rows() - 1);

    PCABasis basis;
    for (auto j : params.columns) basis.column_names.push_back(X.column_names[static_cast<std::size_t>(j)]);
    basis.standardization = std::move(params);
    if (p == 0) {
        basis.loadings.resize(0, 0);
        basis.eigenvalues.resize(0);
        basis.explained_variance_ratio.resize(0);
        return basis;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    // Eigen returns ascending order.
    basis.eigenvalues = eig.eigenvalues().reverse().cwiseMax(0.0);
    basis.loadings = eig.eigenvectors().rowwise().reverse();
    for (Eigen::Index c = 0; c < p; ++c) {
        Eigen::Index arg = 0;
        basis.loadings.col(c).cwiseAbs().maxCoeff(&arg);
        if (basis.loadings(arg, c) < 0.0) basis.loadings.col(c) *= -1.0;
    }

    const double total = basis.eigenvalues.sum();
    basis.explained_variance_ratio =
        total > 0.0 ? Eigen::VectorXd(basis.eigenvalues / total) : Eigen::VectorXd::Zero(p);
    if (total > 0.0) {
        double cumulative = 0.0;
        basis.k = static_cast<int>(p);
        for (Eigen::Index c = 0; c < p; ++c) {
            cumulative += basis.explained_variance_ratio(c);
            if (cumulative >= variance_target - 1e-10) {
                basis.k = static_cast<int>(c + 1);
                break;
            }
        }
    }
    return basis;
}

LinearFitResult pc_regression(const DesignMatrix& X, const Eigen::VectorXd& y, double variance_target) {
    if (y.size() != X.rows()) throw DomainError("pc_regression: row count and response length differ");
    const PCABasis basis = pca(X, variance_target);
    const Eigen::MatrixXd S = basis.scores(X);
    const Eigen::Index k = S.cols();
    if (X.rows() <= k + 1) throw DomainError("pc_regression: need more observations than coefficients");

    Eigen::MatrixXd A(X.rows(), k + 1);
    A.col(0).setOnes();
    A.rightCols(k) = S;

    LinearFitResult fit;
    fit.components = static_cast<int>(k);
    fit.pc_coefficients = least_squares(A, y);
    fit.fitted_values = A * fit.pc_coefficients;
    fit.residuals = y - fit.fitted_values;
    fit.rss = fit.residuals.squaredNorm();
    fit.m = static_cast<int>(X.rows());

    const auto& st = basis.standardization;
    const auto p = static_cast<Eigen::Index>(st.columns.size());
    fit.column_names.push_back("intercept");
    fit.column_names.insert(fit.column_names.end(), basis.column_names.begin(), basis.column_names.end());
    fit.coefficients = Eigen::VectorXd::Zero(p + 1);
    double intercept = fit.pc_coefficients(0);
    for (Eigen::Index c = 0; c < p; ++c) {
        if (st.zero_variance[static_cast<std::size_t>(c)]) continue;
        const double slope =
            basis.retained_loadings().row(c).dot(fit.pc_coefficients.tail(k)) / st.scale(c);
        fit.coefficients(c + 1) = slope;
        intercept -= slope * st.center(c);
    }
    fit.coefficients(0) = intercept;
    return fit;
}

}  // namespace countreg
