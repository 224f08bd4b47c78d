#include "countreg/countglm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "countreg/diagnostics.hpp"
#include "countreg/errors.hpp"
#include "linalg_util.hpp"

namespace countreg {

namespace {

// Above this count the rising factorial in the NB2 pmf is taken from log_gamma
// differences instead of an explicit sum of log1p terms.
constexpr std::int64_t kRisingSumLimit = 10000;

constexpr double kEtaClamp = 700.0;

std::int64_t as_count(double value, const char* where) {
    if (!(value >= 0.0) || !std::isfinite(value)) {
        throw DomainError(std::string(where) + ": response values must be nonnegative integers");
    }
    const double rounded = std::round(value);
    if (rounded != value) {
        throw DomainError(std::string(where) + ": response values must be integers");
    }
    return static_cast<std::int64_t>(rounded);
}

Eigen::VectorXd mean_from_eta(const Eigen::VectorXd& eta) {
    return eta.array().max(-kEtaClamp).min(kEtaClamp).exp().matrix();
}

// Weighted least squares via QR of the column-equilibrated sqrt(W) X.
struct WlsSolution {
    Eigen::VectorXd beta;
    Eigen::MatrixXd covariance;  // (X^T W X)^{-1}
};

WlsSolution solve_wls(const Eigen::MatrixXd& X, const Eigen::VectorXd& w, const Eigen::VectorXd& z,
                      bool want_covariance) {
    const Eigen::VectorXd sw = w.array().sqrt().matrix();
    Eigen::MatrixXd A = sw.asDiagonal() * X;
    Eigen::VectorXd scale(A.cols());
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
        const double norm = A.col(j).norm();
        scale(j) = norm > 0.0 ? norm : 1.0;
        A.col(j) /= scale(j);
    }
    const Eigen::VectorXd b = sw.cwiseProduct(z);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
    const Eigen::Index n = A.cols();
    const Eigen::MatrixXd R = qr.matrixQR().topLeftCorner(n, n).triangularView<Eigen::Upper>();
    const Eigen::VectorXd qtb = (qr.householderQ().transpose() * b).head(n);

    WlsSolution out;
    out.beta = R.triangularView<Eigen::Upper>().solve(qtb).cwiseQuotient(scale);
    if (want_covariance) {
        const Eigen::MatrixXd Rinv =
            R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(n, n));
        Eigen::MatrixXd cov = Rinv * Rinv.transpose();
        const Eigen::VectorXd inv_scale = scale.cwiseInverse();
        cov = inv_scale.asDiagonal() * cov * inv_scale.asDiagonal();
        out.covariance = 0.5 * (cov + cov.transpose());
    }
    return out;
}

}  // namespace

Family Family::nb2(double gamma) {
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
        throw DomainError("NB2 heterogeneity gamma must be finite and >= 0");
    }
    return {FamilyKind::NB2, gamma};
}

double Family::variance(double mu) const {
    return kind == FamilyKind::NB2 ? mu * (1.0 + gamma * mu) : mu;
}

double Family::working_weight(double mu) const {
    return kind == FamilyKind::NB2 ? mu / (1.0 + gamma * mu) : mu;
}

std::string Family::name() const {
    if (kind == FamilyKind::Poisson) return "poisson";
    std::ostringstream os;
    os << "nb2(gamma=" << gamma << ")";
    return os.str();
}

double poisson_log_pmf(std::int64_t y, double lambda) {
    if (!(lambda > 0.0)) throw DomainError("poisson_log_pmf: lambda must be > 0");
    if (y < 0) throw DomainError("poisson_log_pmf: y must be >= 0");
    const double yd = static_cast<double>(y);
    const double y_log_lambda = y == 0 ? 0.0 : yd * std::log(lambda);
    return y_log_lambda - lambda - log_gamma(yd + 1.0);
}

double nb2_log_pmf(std::int64_t y, double lambda, double gamma) {
    if (!(lambda > 0.0)) throw DomainError("nb2_log_pmf: lambda must be > 0");
    if (!(gamma > 0.0)) throw DomainError("nb2_log_pmf: gamma must be > 0");
    if (y < 0) throw DomainError("nb2_log_pmf: y must be >= 0");
    const double yd = static_cast<double>(y);
    // ln Gamma(y + 1/g) - ln Gamma(1/g) + y ln g = sum_{k<y} ln(1 + k g).
    double rising = 0.0;
    if (y <= kRisingSumLimit) {
        for (std::int64_t k = 1; k < y; ++k) rising += std::log1p(static_cast<double>(k) * gamma);
    } else {
        const double alpha = 1.0 / gamma;
        rising = log_gamma(yd + alpha) - log_gamma(alpha) + yd * std::log(gamma);
    }
    const double y_log_lambda = y == 0 ? 0.0 : yd * std::log(lambda);
    return rising - log_gamma(yd + 1.0) + y_log_lambda -
           (yd + 1.0 / gamma) * std::log1p(gamma * lambda);
}

double log_pmf(const Family& family, std::int64_t y, double mu) {
    if (mu == 0.0 && y == 0) return 0.0;
    if (family.kind == FamilyKind::NB2 && family.gamma > 0.0) return nb2_log_pmf(y, mu, family.gamma);
    return poisson_log_pmf(y, mu);
}

double log_likelihood(const Family& family, const Eigen::VectorXd& y, const Eigen::VectorXd& mu) {
    if (y.size() != mu.size()) {
        throw DomainError("log_likelihood: y has " + std::to_string(y.size()) + " entries, mu has " +
                          std::to_string(mu.size()));
    }
    double total = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        total += log_pmf(family, as_count(y(i), "log_likelihood"), mu(i));
    }
    return total;
}

double saturated_log_likelihood(const Family& family, const Eigen::VectorXd& y) {
    return log_likelihood(family, y, y);
}

int residual_df_for(int m, int n_coefficients, const Family& family) {
    return m - (n_coefficients + family.extra_params()) - 1;
}

Eigen::VectorXd score(const Family& family, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& beta) {
    const Eigen::VectorXd mu = mean_from_eta(X * beta);
    Eigen::VectorXd r(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        r(i) = family.working_weight(mu(i)) * (y(i) - mu(i)) / mu(i);
    }
    return X.transpose() * r;
}

FitResult irls_fit(const DesignMatrix& X, const Eigen::VectorXd& y, const Family& family,
                   const IrlsOptions& options) {
    const Eigen::Index m = X.rows();
    const Eigen::Index n = X.cols();
    if (y.size() != m) {
        throw DomainError("irls_fit: " + std::to_string(m) + " design rows but " +
                          std::to_string(y.size()) + " responses");
    }
    if (n == 0) throw DomainError("irls_fit: design matrix has no columns");
    for (Eigen::Index i = 0; i < m; ++i) as_count(y(i), "irls_fit");
    if (family.kind == FamilyKind::NB2 && !(family.gamma >= 0.0)) {
        throw DomainError("irls_fit: NB2 gamma must be >= 0");
    }
    const int n_params = static_cast<int>(n) + family.extra_params();
    if (m < n) {
        throw DomainError("irls_fit: " + std::to_string(m) + " observations cannot identify " +
                          std::to_string(n) + " coefficients");
    }

    const auto rank = detail::check_rank(X.values);
    if (rank.rank < n) {
        std::vector<std::string> names;
        for (auto j : rank.dependent) {
            names.push_back(static_cast<std::size_t>(j) < X.column_names.size()
                                ? X.column_names[static_cast<std::size_t>(j)]
                                : "column " + std::to_string(j));
        }
        const std::string message =
            "irls_fit: information matrix is singular; linearly dependent columns: " + detail::join_names(names);
        throw SingularityError(message, std::move(names));
    }

    const double saturated = saturated_log_likelihood(family, y);
    auto deviance_at = [&](const Eigen::VectorXd& mu) {
        return -2.0 * (log_likelihood(family, y, mu) - saturated);
    };
    auto working = [&](const Eigen::VectorXd& mu, Eigen::VectorXd& w, Eigen::VectorXd& z) {
        w.resize(m);
        z.resize(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            w(i) = family.working_weight(mu(i));
            z(i) = std::log(mu(i)) + (y(i) - mu(i)) / mu(i);
        }
    };

    Eigen::VectorXd w, z;
    Eigen::VectorXd mu = (y.array() + 0.5).matrix();
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(n);
    double dev_old = std::numeric_limits<double>::infinity();
    bool converged = false;
    int iter = 0;
    std::vector<std::string> warnings;

    for (iter = 1; iter <= options.max_iterations; ++iter) {
        working(mu, w, z);
        Eigen::VectorXd beta_new = solve_wls(X.values, w, z, false).beta;
        Eigen::VectorXd mu_new = mean_from_eta(X.values * beta_new);
        double dev_new = deviance_at(mu_new);
        // Step-halving toward the previous iterate (beta = 0 on the first pass).
        int halvings = 0;
        while ((!std::isfinite(dev_new) || (iter > 1 && dev_new > dev_old)) &&
               halvings < options.max_halvings) {
            beta_new = 0.5 * (beta_new + beta);
            mu_new = mean_from_eta(X.values * beta_new);
            dev_new = deviance_at(mu_new);
            ++halvings;
        }
        if (!std::isfinite(dev_new)) {
            warnings.push_back("deviance not finite after step-halving at iteration " +
                               std::to_string(iter));
            break;
        }
        const double change = std::abs(dev_new - dev_old) / (std::abs(dev_new) + 0.1);
        beta = std::move(beta_new);
        mu = std::move(mu_new);
        dev_old = dev_new;
        if (change < options.tolerance) {
            converged = true;
            break;
        }
    }
    if (converged) {
        // The deviance criterion stops while the score can still be ~1e-4;
        // two more full steps are quadratically convergent from here.
        for (int polish = 0; polish < 2; ++polish) {
            working(mu, w, z);
            Eigen::VectorXd beta_new = solve_wls(X.values, w, z, false).beta;
            Eigen::VectorXd mu_new = mean_from_eta(X.values * beta_new);
            const double dev_new = deviance_at(mu_new);
            if (!std::isfinite(dev_new) || dev_new > dev_old + 1e-12 * (std::abs(dev_old) + 1.0)) break;
            beta = std::move(beta_new);
            mu = std::move(mu_new);
            dev_old = dev_new;
        }
    } else {
        iter = std::min(iter, options.max_iterations);
        warnings.push_back("IRLS did not converge within " + std::to_string(options.max_iterations) +
                           " iterations");
    }

    FitResult fit;
    fit.family = family;
    fit.column_names = X.column_names;
    fit.coefficients = beta;
    fit.fitted_means = mu;
    fit.response = y;
    working(mu, w, z);
    fit.covariance = solve_wls(X.values, w, z, true).covariance;
    fit.std_errors = fit.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
    fit.log_likelihood = log_likelihood(family, y, mu);
    fit.deviance = -2.0 * (fit.log_likelihood - saturated);
    fit.m = static_cast<int>(m);
    fit.model_df = static_cast<int>(n) - (X.has_intercept() ? 1 : 0);
    fit.n_params = n_params;
    fit.residual_df = residual_df_for(fit.m, static_cast<int>(n), family);
    fit.iterations = iter;
    fit.converged = converged;
    fit.warnings = std::move(warnings);
    return fit;
}

Eigen::VectorXd predict(const FitResult& fit, const DesignMatrix& X_new) {
    if (X_new.column_names != fit.column_names) {
        std::string got, want;
        for (const auto& c : X_new.column_names) got += (got.empty() ? "" : ",") + c;
        for (const auto& c : fit.column_names) want += (want.empty() ? "" : ",") + c;
        throw SchemaError("predict: columns [" + got + "] do not match fitted columns [" + want + "]");
    }
    return (X_new.values * fit.coefficients).array().exp().matrix();
}

CoefRow wald(std::string name, double coef, double std_err) {
    CoefRow row;
    row.name = std::move(name);
    row.coef = coef;
    row.std_err = std_err;
    if (!(std_err > 0.0)) {
        row.degenerate = true;
        row.z = coef == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), coef);
        row.p = 0.0;
        return row;
    }
    row.z = coef / std_err;
    row.p = normal_two_sided_p(row.z);
    return row;
}

std::vector<CoefRow> coef_inference(const FitResult& fit) {
    std::vector<CoefRow> rows;
    rows.reserve(static_cast<std::size_t>(fit.coefficients.size()));
    for (Eigen::Index j = 0; j < fit.coefficients.size(); ++j) {
        const auto idx = static_cast<std::size_t>(j);
        rows.push_back(wald(idx < fit.column_names.size() ? fit.column_names[idx] : "x" + std::to_string(j),
                            fit.coefficients(j), fit.std_errors(j)));
    }
    return rows;
}

}  // namespace countreg
