#include <doctest.h>

#include <cmath>
#include <limits>

#include "countreg/countglm.hpp"
#include "countreg/diagnostics.hpp"
#include "countreg/errors.hpp"
#include "test_support.hpp"

using namespace countreg;
using testsupport::make_design;

TEST_CASE("poisson_log_pmf") {
    CHECK(poisson_log_pmf(0, 1.0) == -1.0);
    CHECK(std::abs(poisson_log_pmf(1, 1.0) + 1.0) < 1e-15);
    CHECK(std::abs(poisson_log_pmf(5, 2.5) - (-2.706038083411270668330065)) < 1e-14);
    // Large counts stay finite and match Stirling-level accuracy from std::lgamma.
    CHECK(poisson_log_pmf(1000000, 1000000.0) ==
          doctest::Approx(testsupport::ref_poisson_lpmf(1e6, 1e6)).epsilon(1e-12));
    CHECK_THROWS_AS(poisson_log_pmf(1, 0.0), DomainError);
    CHECK_THROWS_AS(poisson_log_pmf(1, -2.0), DomainError);
    CHECK_THROWS_AS(poisson_log_pmf(-1, 2.0), DomainError);
}

TEST_CASE("nb2_log_pmf closed forms") {
    CHECK(std::abs(nb2_log_pmf(0, 1.0, 1.0) - std::log(0.5)) < 1e-15);
    CHECK(std::abs(nb2_log_pmf(1, 1.0, 1.0) - std::log(0.25)) < 1e-15);
    // geometric: P(y) = 2^-(y+1) at gamma = 1, lambda = 1
    for (int y = 0; y < 40; ++y) {
        CHECK(nb2_log_pmf(y, 1.0, 1.0) == doctest::Approx(-(y + 1) * std::log(2.0)).epsilon(1e-14));
    }
    CHECK_THROWS_AS(nb2_log_pmf(1, 0.0, 1.0), DomainError);
    CHECK_THROWS_AS(nb2_log_pmf(1, 1.0, 0.0), DomainError);
    CHECK_THROWS_AS(nb2_log_pmf(1, 1.0, -0.5), DomainError);
}

TEST_CASE("nb2_log_pmf agrees with the textbook form") {
    for (double g : {0.01, 0.3, 1.0, 2.5}) {
        for (double lambda : {0.2, 1.0, 7.5, 40.0}) {
            for (int y : {0, 1, 2, 7, 30, 200}) {
                INFO("g=" << g << " lambda=" << lambda << " y=" << y);
                CHECK(nb2_log_pmf(y, lambda, g) ==
                      doctest::Approx(testsupport::ref_nb2_lpmf(y, lambda, g)).epsilon(1e-11));
            }
        }
    }
}

TEST_CASE("nb2_log_pmf tends to Poisson as gamma -> 0") {
    for (int y = 0; y <= 50; ++y) {
        for (double lambda : {0.5, 1.0, 3.0, 10.0, 20.0}) {
            CHECK(std::abs(nb2_log_pmf(y, lambda, 1e-10) - poisson_log_pmf(y, lambda)) < 1e-6);
        }
    }
}

TEST_CASE("nb2 pmf normalizes") {
    for (double lambda : {0.5, 1.0, 5.0, 10.0, 20.0}) {
        for (double g : {0.1, 0.5, 1.0, 1.5, 2.0}) {
            double total = 0.0;
            for (int y = 0; y < 20000; ++y) {
                const double p = std::exp(nb2_log_pmf(y, lambda, g));
                total += p;
                if (y > 10 * lambda && p < 1e-18) break;
            }
            CHECK(std::abs(total - 1.0) < 1e-9);
        }
    }
}

TEST_CASE("log_likelihood and saturated value") {
    const auto P = Family::poisson();
    CHECK(log_likelihood(P, Eigen::VectorXd::Constant(1, 0.0), Eigen::VectorXd::Constant(1, 1.0)) == -1.0);
    const Eigen::VectorXd two = Eigen::VectorXd::Constant(1, 2.0);
    CHECK(std::abs(log_likelihood(P, two, two) - (std::log(2.0) - 2.0)) < 1e-15);
    CHECK(saturated_log_likelihood(P, Eigen::VectorXd::Zero(3)) == 0.0);
    CHECK(saturated_log_likelihood(Family::nb2(0.7), Eigen::VectorXd::Zero(3)) == 0.0);
    CHECK_THROWS_AS(log_likelihood(P, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(3)), DomainError);
    Eigen::VectorXd neg(1);
    neg << -1.0;
    CHECK_THROWS_AS(log_likelihood(P, neg, Eigen::VectorXd::Ones(1)), DomainError);
}

TEST_CASE("Family basics") {
    const auto nb = Family::nb2(0.5);
    CHECK(nb.variance(2.0) == doctest::Approx(2.0 * (1.0 + 1.0)));
    CHECK(nb.working_weight(2.0) == doctest::Approx(1.0));
    CHECK(Family::poisson().working_weight(3.0) == 3.0);
    CHECK(nb.extra_params() == 1);
    CHECK(Family::poisson().extra_params() == 0);
    CHECK_THROWS_AS(Family::nb2(-1.0), DomainError);
    CHECK(residual_df_for(41, 14, Family::poisson()) == 26);
    CHECK(residual_df_for(41, 14, Family::nb2(1.0)) == 25);
}

TEST_CASE("intercept-only MLE is the log sample mean") {
    const auto X = testsupport::intercept_only(3);
    Eigen::VectorXd y(3);
    y << 1, 2, 3;
    const auto pf = irls_fit(X, y, Family::poisson());
    CHECK(pf.converged);
    CHECK(std::abs(pf.coefficients(0) - std::log(2.0)) < 1e-10);
    for (double g : {0.01, 0.5, 1.5, 5.0}) {
        const auto nf = irls_fit(X, y, Family::nb2(g));
        CHECK(nf.converged);
        CHECK(std::abs(nf.coefficients(0) - std::log(2.0)) < 1e-8);
    }
}

TEST_CASE("FitResult bookkeeping") {
    const auto prob = testsupport::random_problem(3, 41, Eigen::Vector3d(0.5, 0.3, -0.2), 0.0);
    const auto f = irls_fit(prob.X, prob.y, Family::poisson());
    CHECK(f.m == 41);
    CHECK(f.model_df == 2);
    CHECK(f.n_params == 3);
    CHECK(f.residual_df == 41 - 3 - 1);
    const auto g = irls_fit(prob.X, prob.y, Family::nb2(0.3));
    CHECK(g.n_params == 4);
    CHECK(g.residual_df == f.residual_df - 1);
    CHECK((f.fitted_means.array() > 0.0).all());
    CHECK((f.covariance - f.covariance.transpose()).norm() < 1e-12 * f.covariance.norm());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f.covariance);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
    for (Eigen::Index j = 0; j < 3; ++j) CHECK(f.std_errors(j) == doctest::Approx(std::sqrt(f.covariance(j, j))));
}

TEST_CASE("deviance in FitResult equals -2 (L(beta) - L(y)) from an independent pmf") {
    for (double g : {0.0, 0.4, 1.3}) {
        const auto fam = g == 0.0 ? Family::poisson() : Family::nb2(g);
        const auto prob = testsupport::random_problem(11, 50, Eigen::Vector3d(1.0, 0.4, -0.3), g);
        const auto f = irls_fit(prob.X, prob.y, fam);
        double lfit = 0.0, lsat = 0.0;
        for (Eigen::Index i = 0; i < prob.y.size(); ++i) {
            lfit += testsupport::ref_lpmf(fam, prob.y(i), f.fitted_means(i));
            lsat += testsupport::ref_lpmf(fam, prob.y(i), prob.y(i));
        }
        CHECK(std::abs(f.deviance + 2.0 * (lfit - lsat)) < 1e-8);
        CHECK(std::abs(f.log_likelihood - lfit) < 1e-8);
    }
}

TEST_CASE("score vanishes at the fit and matches finite differences") {
    for (double g : {0.0, 0.5}) {
        const auto fam = g == 0.0 ? Family::poisson() : Family::nb2(g);
        const auto prob = testsupport::random_problem(21, 60, Eigen::Vector4d(0.8, 0.5, -0.4, 0.2), g);
        const auto f = irls_fit(prob.X, prob.y, fam);
        const Eigen::VectorXd s = score(fam, prob.X.values, prob.y, f.coefficients);
        CHECK(s.cwiseAbs().maxCoeff() < 1e-6 * 60);

        // Away from the optimum the analytic score equals the numerical gradient.
        Eigen::VectorXd beta = f.coefficients;
        beta(1) += 0.1;
        const Eigen::VectorXd analytic = score(fam, prob.X.values, prob.y, beta);
        for (Eigen::Index j = 0; j < beta.size(); ++j) {
            Eigen::VectorXd up = beta, dn = beta;
            up(j) += 1e-6;
            dn(j) -= 1e-6;
            const double fd = (testsupport::ref_loglik(fam, prob.X.values, prob.y, up) -
                               testsupport::ref_loglik(fam, prob.X.values, prob.y, dn)) /
                              2e-6;
            CHECK(std::abs(fd - analytic(j)) < 1e-4 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST_CASE("two-coefficient fit matches a grid-search argmax") {
    Eigen::MatrixXd v(4, 2);
    v << 1, 0.0, 1, 1.0, 1, 2.0, 1, 3.0;
    Eigen::VectorXd y(4);
    y << 1, 2, 2, 6;
    const auto X = make_design(v, {"intercept", "x"});
    const auto f = irls_fit(X, y, Family::poisson());
    const Eigen::Vector2d oracle =
        testsupport::grid_search_mle(Family::poisson(), v, y, Eigen::Vector2d(0, 0), 2.0, 1e-2, 1e-5);
    CHECK(std::abs(f.coefficients(0) - oracle(0)) < 2e-5);
    CHECK(std::abs(f.coefficients(1) - oracle(1)) < 2e-5);
}

TEST_CASE("NB2 with tiny gamma reproduces Poisson") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto prob = testsupport::random_problem(seed, 60, Eigen::Vector3d(0.7, 0.3, -0.5), 0.0);
        const auto p = irls_fit(prob.X, prob.y, Family::poisson());
        const auto n = irls_fit(prob.X, prob.y, Family::nb2(1e-10));
        CHECK((p.coefficients - n.coefficients).cwiseAbs().maxCoeff() < 1e-5);
        CHECK(std::abs(p.log_likelihood - n.log_likelihood) < 1e-4);
    }
}

TEST_CASE("singular design names the dependent columns") {
    Eigen::MatrixXd v(5, 3);
    v << 1, 1, 2, 1, 2, 4, 1, 3, 6, 1, 4, 8, 1, 5, 10;
    const auto X = make_design(v, {"intercept", "a", "b"});
    Eigen::VectorXd y(5);
    y << 1, 0, 3, 2, 4;
    try {
        irls_fit(X, y, Family::poisson());
        FAIL("expected SingularityError");
    } catch (const SingularityError& e) {
        REQUIRE(e.dependent_columns().size() == 1);
        const auto& c = e.dependent_columns().front();
        CHECK((c == "a" || c == "b"));
    }
}

TEST_CASE("invalid responses and shapes") {
    const auto X = testsupport::intercept_only(3);
    Eigen::VectorXd y(3);
    y << 1, -1, 2;
    CHECK_THROWS_AS(irls_fit(X, y, Family::poisson()), DomainError);
    y << 1, 1.5, 2;
    CHECK_THROWS_AS(irls_fit(X, y, Family::poisson()), DomainError);
    CHECK_THROWS_AS(irls_fit(X, Eigen::VectorXd::Ones(2), Family::poisson()), DomainError);
}

TEST_CASE("non-convergence is reported, not thrown") {
    const auto prob = testsupport::random_problem(8, 40, Eigen::Vector3d(0.5, 0.3, 0.1), 0.0);
    IrlsOptions opt;
    opt.max_iterations = 1;
    const auto f = irls_fit(prob.X, prob.y, Family::poisson(), opt);
    CHECK_FALSE(f.converged);
    CHECK_FALSE(f.warnings.empty());
}

TEST_CASE("all-zero response still converges to tiny means") {
    const auto X = testsupport::intercept_only(5);
    const auto f = irls_fit(X, Eigen::VectorXd::Zero(5), Family::poisson());
    CHECK((f.fitted_means.array() > 0.0).all());
    CHECK(f.deviance < 1e-6);
}

TEST_CASE("predict") {
    const auto X = testsupport::intercept_only(3);
    Eigen::VectorXd y(3);
    y << 1, 2, 3;
    const auto f = irls_fit(X, y, Family::poisson());
    CHECK(predict(f, testsupport::intercept_only(1))(0) == doctest::Approx(2.0).epsilon(1e-10));

    const auto prob = testsupport::random_problem(5, 30, Eigen::Vector3d(0.2, 0.3, 0.4), 0.0);
    const auto g = irls_fit(prob.X, prob.y, Family::poisson());
    CHECK((predict(g, prob.X) - g.fitted_means).cwiseAbs().maxCoeff() < 1e-12 * g.fitted_means.maxCoeff());

    // Raising the linear predictor by 0.2113 scales the mean by e^0.2113.
    auto shifted = prob.X;
    const double b1 = g.coefficients(1);
    shifted.values.col(1).array() += 0.2113 / b1;
    const Eigen::VectorXd ratio = predict(g, shifted).array() / g.fitted_means.array();
    CHECK(ratio.minCoeff() == doctest::Approx(std::exp(0.2113)).epsilon(1e-10));
    CHECK(std::exp(0.2113) == doctest::Approx(1.235).epsilon(1e-3));

    auto wrong = prob.X;
    wrong.column_names[1] = "other";
    CHECK_THROWS_AS(predict(g, wrong), SchemaError);
}

TEST_CASE("Wald inference") {
    CHECK(wald("a", 2.97e-6, 1.10e-6).p == doctest::Approx(0.007).epsilon(0.15));
    CHECK(std::abs(wald("a", 2.97e-6, 1.10e-6).p - 0.007) < 0.001);
    CHECK(std::abs(wald("a", 3.01e-6, 2.06e-6).p - 0.143) < 0.002);
    CHECK(std::abs(wald("a", 6.97e-5, 3.10e-5).p - 0.024) < 0.002);
    const auto zero = wald("a", 0.0, 0.3);
    CHECK(zero.z == 0.0);
    CHECK(zero.p == 1.0);
    const auto deg = wald("a", 1.0, 0.0);
    CHECK(deg.degenerate);
    CHECK(deg.p == 0.0);

    const auto prob = testsupport::random_problem(9, 50, Eigen::Vector3d(0.4, 0.6, 0.0), 0.0);
    const auto f = irls_fit(prob.X, prob.y, Family::poisson());
    const auto rows = coef_inference(f);
    REQUIRE(rows.size() == 3);
    for (std::size_t j = 0; j < rows.size(); ++j) {
        CHECK(rows[j].name == f.column_names[j]);
        CHECK(rows[j].z == doctest::Approx(f.coefficients(j) / f.std_errors(j)));
        CHECK(rows[j].p == doctest::Approx(normal_two_sided_p(rows[j].z)));
    }
}
