#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "countreg/dataset.hpp"
#include "countreg/errors.hpp"
#include "test_support.hpp"

using namespace countreg;

namespace {

const std::string kHeader =
    "org_id,domestic_com,domestic_edu,domestic_gov,domestic_net,domestic_org,foreign_com,foreign_net,"
    "foreign_org,violations,hosts,rosg,seib,intrusions\n";

std::vector<OrgRecord> parse(const std::string& text) {
    std::istringstream in(text);
    return parse_csv(in);
}

OrgRecord record(int seib) {
    OrgRecord r;
    r.org_id = "x";
    r.seib = seib;
    return r;
}

}  // namespace

TEST_CASE("parse a single row") {
    const auto recs = parse(kHeader + "A,100,0,0,50,0,0,0,0,2,15,1,1,0\n");
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].org_id == "A");
    CHECK(recs[0].domestic_com == 100);
    CHECK(recs[0].domestic_net == 50);
    CHECK(recs[0].violations == 2);
    CHECK(recs[0].hosts == 15);
    CHECK(recs[0].intrusions == 0);
}

TEST_CASE("CRLF line endings and blank lines") {
    std::string text = kHeader + "A,1,2,3,4,5,6,7,8,9,10,11,3,12\n\nB,1,1,1,1,1,1,1,1,1,1,1,10,0\n";
    std::string crlf;
    for (char c : text) {
        if (c == '\n') crlf += '\r';
        crlf += c;
    }
    const auto recs = parse(crlf);
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].seib == 3);
    CHECK(recs[1].org_id == "B");
    CHECK(recs[1].seib == 10);
}

TEST_CASE("schema errors name the column") {
    auto missing = kHeader;
    missing.replace(missing.find(",rosg"), 5, "");
    try {
        parse(missing + "A,1,2,3,4,5,6,7,8,9,10,3,12\n");
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("rosg") != std::string::npos);
    }
    auto extra = kHeader;
    extra.insert(extra.size() - 1, ",bonus");
    try {
        parse(extra);
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("bonus") != std::string::npos);
    }
    CHECK_THROWS_AS(parse(""), SchemaError);
}

TEST_CASE("row-level parse errors carry the row number") {
    for (const std::string bad : {"A,1,2,3,4,5,6,7,8,9,10,11,1,-1", "A,1,2,3,4,5,6,7,8,9,10,11,1,2.5",
                                  "A,1,2,3,4,5,6,7,8,abc,10,11,1,2", "A,1,2,3,4,5,6,7,8,9,10,11,1"}) {
        try {
            parse(kHeader + "B,1,1,1,1,1,1,1,1,1,1,1,1,1\n" + bad + "\n");
            FAIL("expected ParseError for " << bad);
        } catch (const ParseError& e) {
            CHECK(e.row() == 3);  // file line, header is line 1
        }
    }
}

TEST_CASE("domain errors") {
    CHECK_THROWS_AS(parse(kHeader + "A,1,2,3,4,5,6,7,8,9,10,11,5,0\n"), DomainError);
    CHECK_THROWS_AS(parse(kHeader + "A,1,2,3,4,5,6,7,8,9,0,11,1,0\n"), DomainError);
    CHECK_THROWS_AS(load_csv("/nonexistent/dir/file.csv"), IoError);
}

TEST_CASE("write then read round trip") {
    const auto recs = testsupport::calibrated_records(41, 9, 0.5);
    const auto path = std::filesystem::temp_directory_path() / "countreg_dataset_roundtrip.csv";
    write_csv(path, recs);
    const auto back = load_csv(path);
    CHECK(back == recs);
    std::filesystem::remove(path);
}

TEST_CASE("encode: dummies and column sets") {
    std::vector<OrgRecord> recs{record(1), record(3), record(10)};
    const auto full = encode(recs, PredictorSchema::for_case(CaseLabel::Full));
    CHECK(full.X.cols() == 14);
    CHECK(full.X.column_names.front() == "intercept");
    CHECK(full.X.values.col(0).isOnes());
    const auto s3 = full.X.column_index("seib3"), s10 = full.X.column_index("seib10");
    CHECK(full.X.values(0, s3) == 0.0);
    CHECK(full.X.values(0, s10) == 0.0);
    CHECK(full.X.values(1, s3) == 1.0);
    CHECK(full.X.values(1, s10) == 0.0);
    CHECK(full.X.values(2, s3) == 0.0);
    CHECK(full.X.values(2, s10) == 1.0);

    const auto c5 = encode(recs, PredictorSchema::for_case(CaseLabel::Case5));
    CHECK(c5.X.cols() == 10);
    for (const char* gone : {"hosts", "rosg", "seib3", "seib10"}) CHECK(c5.X.column_index(gone) == -1);

    CHECK_THROWS_AS(encode(std::vector<OrgRecord>{}, PredictorSchema::for_case(CaseLabel::Full)), DomainError);
}

TEST_CASE("case schemas") {
    using V = std::vector<std::string>;
    CHECK(PredictorSchema::for_case(CaseLabel::Full).excluded_columns().empty());
    CHECK(PredictorSchema::for_case(CaseLabel::Case1).excluded_columns() == V{"violations"});
    CHECK(PredictorSchema::for_case(CaseLabel::Case2).excluded_columns() == V{"seib3", "seib10"});
    CHECK(PredictorSchema::for_case(CaseLabel::Case3).excluded_columns() == V{"hosts"});
    CHECK(PredictorSchema::for_case(CaseLabel::Case4).excluded_columns() == V{"rosg"});
    auto c5 = PredictorSchema::for_case(CaseLabel::Case5).excluded_columns();
    std::sort(c5.begin(), c5.end());
    CHECK(c5 == V{"hosts", "rosg", "seib10", "seib3"});
    for (auto label : kAllCases) CHECK(parse_case_label(to_string(label)) == label);
    CHECK_THROWS(parse_case_label("case9"));
}

TEST_CASE("encode is deterministic and keeps invariants") {
    const auto recs = testsupport::calibrated_records(200, 3, 0.0);
    const auto a = encode(recs, PredictorSchema::for_case(CaseLabel::Full));
    const auto b = encode(recs, PredictorSchema::for_case(CaseLabel::Full));
    CHECK(a.X.values == b.X.values);
    CHECK(a.y == b.y);
    const auto s3 = a.X.column_index("seib3"), s10 = a.X.column_index("seib10");
    CHECK((a.X.values.col(s3) + a.X.values.col(s10)).maxCoeff() <= 1.0);
}

TEST_CASE("standardize") {
    Eigen::MatrixXd v(3, 3);
    v << 1, 1, 5, 1, 2, 5, 1, 3, 5;
    const auto X = testsupport::make_design(v, {"intercept", "a", "c"});
    const auto [Z, params] = standardize(X);
    CHECK(Z.values.col(0).isOnes());
    CHECK(Z.values(0, 1) == doctest::Approx(-1.0));
    CHECK(Z.values(1, 1) == doctest::Approx(0.0));
    CHECK(Z.values(2, 1) == doctest::Approx(1.0));  // sd of [1,2,3] is 1
    CHECK(Z.values.col(2).isZero());
    REQUIRE(params.zero_variance.size() == 2);
    CHECK_FALSE(params.zero_variance[0]);
    CHECK(params.zero_variance[1]);

    const auto prob = testsupport::random_problem(2, 30, Eigen::Vector4d(0, 0, 0, 0), 0.0);
    auto scaled = prob.X;
    scaled.values.col(2) *= 1e4;
    scaled.values.col(3).array() += 50.0;
    const auto [S, p] = standardize(scaled);
    for (Eigen::Index j = 1; j < S.cols(); ++j) {
        CHECK(std::abs(S.values.col(j).mean()) < 1e-12);
        const double var = (S.values.col(j).array() - S.values.col(j).mean()).square().sum() / (S.rows() - 1);
        CHECK(var == doctest::Approx(1.0));
    }
    const auto back = p.invert(S);
    CHECK((back.values - scaled.values).cwiseAbs().maxCoeff() <= 1e-12 * scaled.values.cwiseAbs().maxCoeff());
}

TEST_CASE("simulate: determinism and validation") {
    const auto a = testsupport::calibrated_records(41, 7, 0.5);
    const auto b = testsupport::calibrated_records(41, 7, 0.5);
    CHECK(a == b);
    std::ostringstream sa, sb;
    write_csv(sa, a);
    write_csv(sb, b);
    CHECK(sa.str() == sb.str());
    CHECK(a != testsupport::calibrated_records(41, 8, 0.5));

    auto cfg = SynthConfig::calibrated_defaults();
    cfg.m = 1;
    CHECK_THROWS(simulate(cfg));
    cfg = SynthConfig::calibrated_defaults();
    cfg.seib_probabilities = {0.5, 0.5, 0.5};
    CHECK_THROWS(simulate(cfg));
    cfg = SynthConfig::calibrated_defaults();
    cfg.true_beta = {{"intercept", 800.0}};
    CHECK_THROWS_AS(simulate(cfg), GenerationError);
}

TEST_CASE("simulate: Poisson(1) responses when all coefficients are zero") {
    auto cfg = SynthConfig::calibrated_defaults();
    cfg.m = 10000;
    cfg.seed = 42;
    cfg.true_beta.clear();
    const auto recs = simulate(cfg);
    double mean = 0.0;
    for (const auto& r : recs) mean += static_cast<double>(r.intrusions);
    mean /= static_cast<double>(recs.size());
    CHECK(std::abs(mean - 1.0) < 0.05);
}

TEST_CASE("simulate: NB2 variance and marginals") {
    auto cfg = SynthConfig::calibrated_defaults();
    cfg.m = 10000;
    cfg.seed = 5;
    cfg.gamma = 0.5;
    cfg.true_beta = {{"intercept", std::log(5.0)}};
    const auto recs = simulate(cfg);
    std::vector<double> y;
    for (const auto& r : recs) y.push_back(static_cast<double>(r.intrusions));
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
    double var = 0.0;
    for (double v : y) var += (v - mean) * (v - mean);
    var /= static_cast<double>(y.size() - 1);
    CHECK(std::abs(mean - 5.0) < 0.25);
    CHECK(std::abs(var - 17.5) < 1.75);

    const auto enc = encode(recs, PredictorSchema::for_case(CaseLabel::Full));
    for (const auto& [name, marginal] : cfg.predictor_marginals) {
        const double target = std::holds_alternative<LogNormalMarginal>(marginal)
                                  ? std::get<LogNormalMarginal>(marginal).mean
                                  : std::get<PoissonMarginal>(marginal).mean;
        const double got = enc.X.values.col(enc.X.column_index(name)).mean();
        INFO(name);
        CHECK(std::abs(got - target) / target < 0.10);
    }
}

TEST_CASE("simulate: gamma -> 0 matches Poisson moments") {
    auto cfg = SynthConfig::calibrated_defaults();
    cfg.m = 100000;
    cfg.seed = 77;
    cfg.true_beta = {{"intercept", 0.5}, {"violations", 0.05}};
    auto moments = [](const std::vector<OrgRecord>& recs) {
        double s = 0.0, s2 = 0.0;
        for (const auto& r : recs) {
            s += static_cast<double>(r.intrusions);
            s2 += static_cast<double>(r.intrusions * r.intrusions);
        }
        const double n = static_cast<double>(recs.size());
        return std::pair{s / n, s2 / n};
    };
    const auto p = moments(simulate(cfg));
    cfg.gamma = 1e-12;
    const auto q = moments(simulate(cfg));
    CHECK(std::abs(p.first - q.first) / p.first < 0.01);
    CHECK(std::abs(p.second - q.second) / p.second < 0.01);
}
