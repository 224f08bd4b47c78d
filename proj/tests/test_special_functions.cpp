#include <doctest.h>

#include <cmath>
#include <utility>
#include <vector>

#include "countreg/countglm.hpp"
#include "countreg/diagnostics.hpp"
#include "countreg/errors.hpp"
#include "test_support.hpp"

using namespace countreg;

// ln Gamma at 40 significant digits, computed once with an arbitrary-precision library.
static const std::vector<std::pair<double, double>> kLogGammaOracle = {
    {0.001, 6.907178885383853682512345},     {0.01, 4.599479878042021722513945},
    {0.1, 2.252712651734205959869702},       {0.3, 1.095797994818075521677168},
    {0.5, 0.5723649429247000870717137},      {0.9, 0.06637623973474297118871674},
    {1.5, -0.1207822376352452223455184},     {2.5, 0.2846828704729191596324947},
    {3.7, 1.428072326665387921872381},       {7.25, 7.052185450738539444925749},
    {10.3, 13.48203678613835697061507},      {25.5, 56.38916764371994674445244},
    {100.1, 359.594271788856811614236},      {1234.5, 7550.550901077894895729836},
    {99999.5, 1051281.952514674422286695},   {1000000.0, 12815504.56914761165997697},
};

TEST_CASE("log_gamma exact points") {
    CHECK(std::abs(log_gamma(1.0)) < 1e-15);
    CHECK(std::abs(log_gamma(2.0)) < 1e-15);
    CHECK(std::abs(log_gamma(0.5) - 0.5 * std::log(M_PI)) < 1e-15);
    CHECK(std::abs(log_gamma(6.0) - std::log(120.0)) < 1e-14);
}

TEST_CASE("log_gamma matches high-precision values") {
    for (const auto& [x, ref] : kLogGammaOracle) {
        const double got = log_gamma(x);
        INFO("x = " << x);
        // Near the zeros of ln Gamma (x = 1, 2) relative error is ill-posed; use absolute there.
        CHECK(std::abs(got - ref) <= 1e-12 * std::max(std::abs(ref), 1.0));
    }
}

TEST_CASE("log_gamma satisfies the recurrence on a dense grid") {
    for (double x = 1e-3; x < 1e6; x *= 1.37) {
        const double lhs = log_gamma(x + 1.0);
        const double rhs = log_gamma(x) + std::log(x);
        INFO("x = " << x);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
    }
}

TEST_CASE("log_gamma agrees with std::lgamma") {
    for (double x = 1e-3; x < 1e6; x *= 1.9) {
        CHECK(log_gamma(x) == doctest::Approx(std::lgamma(x)).epsilon(1e-12));
    }
}

TEST_CASE("log_gamma rejects non-positive arguments") {
    CHECK_THROWS_AS(log_gamma(0.0), DomainError);
    CHECK_THROWS_AS(log_gamma(-1.5), DomainError);
    CHECK_THROWS_AS(log_gamma(std::nan("")), DomainError);
}

TEST_CASE("chi2_sf reference values") {
    CHECK(chi2_sf(0.0, 1) == 1.0);
    CHECK(chi2_sf(0.0, 7) == 1.0);
    CHECK(std::abs(chi2_sf(1.0, 1) - 0.31731050786291410283) < 1e-12);
    CHECK(std::abs(chi2_sf(3.8415, 1) - 0.049998772071222272398) < 1e-12);
    CHECK(std::abs(chi2_sf(1.657, 1) - 0.198008865092300804) < 1e-12);
    CHECK(std::abs(chi2_sf(10.0, 3) - 0.018566135463043233303) < 1e-12);
    CHECK(std::abs(chi2_sf(2.5, 4) - 0.64463579293542772573) < 1e-12);
    CHECK(std::abs(chi2_sf(30.0, 20) - 0.069853660699409767692) < 1e-12);
    CHECK(std::abs(chi2_sf(0.1, 2) - 0.95122942450071400645) < 1e-12);
}

TEST_CASE("chi2_sf against Simpson quadrature of the density") {
    CHECK(chi2_sf(3.8415, 1) == doctest::Approx(testsupport::simpson_chi2_sf_1(3.8415)).epsilon(1e-9));
    CHECK(chi2_sf(1.657, 1) == doctest::Approx(testsupport::simpson_chi2_sf_1(1.657)).epsilon(1e-9));
    for (int k : {2, 3, 5, 8, 13}) {
        for (double x : {0.5, 2.0, 6.0, 15.0}) {
            INFO("k = " << k << " x = " << x);
            CHECK(std::abs(chi2_sf(x, k) - testsupport::simpson_chi2_sf(x, k, 200000)) < 1e-7);
        }
    }
}

TEST_CASE("chi2_sf with one dof equals the two-sided normal tail") {
    for (int i = 0; i < 100; ++i) {
        const double x = 0.05 + 0.4 * i;
        CHECK(std::abs(chi2_sf(x, 1) - normal_two_sided_p(std::sqrt(x))) < 1e-10);
    }
}

TEST_CASE("chi2_sf monotone in x") {
    for (int k : {1, 4, 30}) {
        double prev = 1.0;
        for (double x = 0.0; x < 100.0; x += 0.7) {
            const double p = chi2_sf(x, k);
            CHECK(p <= prev + 1e-15);
            CHECK(p >= 0.0);
            prev = p;
        }
    }
}

TEST_CASE("chi2_sf domain") {
    CHECK_THROWS_AS(chi2_sf(-1.0, 1), DomainError);
    CHECK_THROWS_AS(chi2_sf(1.0, 0), DomainError);
}

TEST_CASE("normal_two_sided_p against erf series") {
    CHECK(normal_two_sided_p(0.0) == 1.0);
    CHECK(normal_two_sided_p(1.959964) == doctest::Approx(0.05).epsilon(0.002));
    for (double z = 0.0; z <= 3.0; z += 0.125) {
        const double ref = 1.0 - testsupport::erf_series(z / std::sqrt(2.0));
        CHECK(std::abs(normal_two_sided_p(z) - ref) < 1e-13);
        CHECK(normal_two_sided_p(-z) == normal_two_sided_p(z));
    }
}

TEST_CASE("regularized_gamma_q limits") {
    CHECK(regularized_gamma_q(1.0, 0.0) == 1.0);
    // Q(1, x) = exp(-x)
    for (double x : {0.1, 1.0, 3.0, 20.0}) {
        CHECK(regularized_gamma_q(1.0, x) == doctest::Approx(std::exp(-x)).epsilon(1e-13));
    }
    CHECK(regularized_gamma_q(50.0, 1000.0) < 1e-100);
}
