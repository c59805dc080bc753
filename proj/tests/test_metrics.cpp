#include <doctest.h>

#include <random>

#include "ragfaith/error.hpp"
#include "ragfaith/metrics.hpp"

using namespace ragfaith;

TEST_CASE("claim support") {
    CHECK(claim_support(std::vector<int>{1, 1, 1, 0}) == 75.0);
    CHECK(claim_support(std::vector<int>{0, 0, 0}) == 0.0);
    std::vector<int> six_of_twenty(20, 0);
    for (int i = 0; i < 6; ++i) six_of_twenty[i] = 1;
    CHECK(claim_support(six_of_twenty) == doctest::Approx(30.0).epsilon(1e-12));
    CHECK_THROWS_AS(claim_support(std::vector<int>{}), ValidationError);
    CHECK_THROWS_AS(claim_support(std::vector<int>{2}), ValidationError);
}

TEST_CASE("binary faithfulness is strict") {
    CHECK_FALSE(binary_faithful(50.0));
    CHECK(binary_faithful(50.1));
    CHECK_FALSE(binary_faithful(0.0));
    CHECK(binary_faithful(100.0));
    CHECK_FALSE(binary_faithful(70.0, 70.0));
    CHECK_THROWS_AS(binary_faithful(100.5), ValidationError);
    CHECK_THROWS_AS(binary_faithful(-1.0), ValidationError);
}

TEST_CASE("property: binary faithfulness is monotone in support and threshold") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> pct(0.0, 100.0);
    for (int i = 0; i < 2000; ++i) {
        const double a = pct(rng);
        const double b = pct(rng);
        const double t = pct(rng);
        const double lo = std::min(a, b);
        const double hi = std::max(a, b);
        if (binary_faithful(lo, t)) REQUIRE(binary_faithful(hi, t));
        const double t2 = t + pct(rng) / 10.0;
        if (!binary_faithful(a, t)) REQUIRE_FALSE(binary_faithful(a, t2));
    }
}

TEST_CASE("agreement with human labels") {
    using H = HumanLabel;
    SUBCASE("perfect") {
        const auto r = agreement({true, false, true, false},
                                 {H::faithful, H::not_faithful, H::faithful, H::not_faithful});
        CHECK(r.overall_acc == 100.0);
        CHECK(*r.acc_faithful == 100.0);
        CHECK(*r.acc_not_faithful == 100.0);
    }
    SUBCASE("hand counted") {
        const auto r = agreement({true, true, true, false},
                                 {H::not_faithful, H::faithful, H::faithful, H::faithful});
        CHECK(r.overall_acc == doctest::Approx(50.0).epsilon(1e-12));
        CHECK(*r.acc_faithful == doctest::Approx(200.0 / 3.0).epsilon(1e-12));
        CHECK(*r.acc_not_faithful == 0.0);
        CHECK(r.n_faithful == 3);
        CHECK(r.n_not_faithful == 1);
    }
    SUBCASE("absent class") {
        const auto r = agreement({true}, {H::faithful});
        CHECK_FALSE(r.acc_not_faithful.has_value());
    }
    CHECK_THROWS_AS(agreement({true}, {}), ValidationError);
    CHECK_THROWS_AS(agreement({}, {}), ValidationError);
    CHECK(human_label_from_string("faithful") == H::faithful);
    CHECK(human_label_from_string("not_faithful") == H::not_faithful);
    CHECK_FALSE(human_label_from_string("not_applicable").has_value());
}

TEST_CASE("hallucination-free rate") {
    std::vector<SpanAnnotation> all_clean(5);
    CHECK(hallucination_free_rate(all_clean) == 100.0);
    std::vector<SpanAnnotation> mixed(100);
    for (std::size_t i = 34; i < 100; ++i) mixed[i].spans = {{0, 3}};
    mixed[50].spans = {{0, 5}, {2, 7}, {4, 6}};
    CHECK(hallucination_free_rate(mixed) == doctest::Approx(34.0).epsilon(1e-12));
    CHECK_THROWS_AS(hallucination_free_rate({}), ValidationError);
}

TEST_CASE("span validation") {
    CHECK_NOTHROW(validate_spans({"a", {{0, 10}}}, 10));
    CHECK_THROWS_AS(validate_spans({"a", {{0, 11}}}, 10), ValidationError);
    CHECK_THROWS_AS(validate_spans({"a", {{4, 4}}}, 10), ValidationError);
    CHECK_THROWS_AS(validate_spans({"a", {{5, 3}}}, 10), ValidationError);
}
