#include <doctest.h>

#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "opasis/error.hpp"
#include "opasis/estimators.hpp"
#include "opasis/oracle.hpp"

using namespace opasis;

namespace {

SampleSet make_set(const std::vector<double>& sheds, const std::vector<double>& weights = {}, double eta = 1.0) {
    SampleSet s;
    s.eta = eta;
    for (std::size_t i = 0; i < sheds.size(); ++i) {
        CascadePath p;
        p.shed_mw = sheds[i];
        p.weight = weights.empty() ? 1.0 : weights[i];
        p.log_p_c = std::log(p.weight);
        p.stages = 1;
        s.paths.push_back(p);
    }
    return s;
}

}  // namespace

TEST_CASE("plain Monte Carlo probability") {
    Estimate none = prob_mcs(make_set({0, 0, 0}), 100.0);
    CHECK(none.value == 0.0);
    CHECK(none.variance == 0.0);
    CHECK(none.no_tail_mass);

    Estimate e = prob_mcs(make_set({0, 50, 150, 200}), 100.0);
    CHECK(e.value == 0.5);
    CHECK(e.variance == 0.0625);
    CHECK(e.std_error == 0.25);
    CHECK(e.n_samples == 4);
    CHECK(e.kind == EstimatorKind::McsProb);
    CHECK(to_string(e.kind) == "mcs_prob");
    CHECK(prob_mcs(make_set({0, 50, 150, 200}), 150.0).value == 0.5);  // threshold is inclusive

    CHECK_THROWS_AS(prob_mcs(make_set({0, 1}, {}, 2.0), 1.0), UsageError);
}

TEST_CASE("weighted probability") {
    SampleSet unit = make_set({0, 50, 150, 200});
    Estimate a = prob_is(unit, 100.0);
    CHECK(a.value == prob_mcs(unit, 100.0).value);
    CHECK(to_string(a.kind) == "is_prob");

    SampleSet w = make_set({0, 120, 150, 10}, {2.0, 0.5, 0.25, 1.0}, 2.0);
    Estimate b = prob_is(w, 100.0);
    CHECK(b.value == doctest::Approx(0.1875));
    // ((0.25 + 0.0625) / 4 - 0.1875^2) / 4
    CHECK(b.variance == doctest::Approx((0.3125 / 4 - 0.1875 * 0.1875) / 4));
    CHECK(b.std_error == doctest::Approx(std::sqrt(b.variance)));

    Estimate none = prob_is(w, 500.0);
    CHECK(none.value == 0.0);
    CHECK(none.variance == 0.0);
    CHECK(none.no_tail_mass);
}

TEST_CASE("risk") {
    SampleSet unit = make_set({0, 50, 150, 200});
    Estimate r = risk(unit, 100.0);
    CHECK(r.value == 87.5);
    CHECK(r.kind == EstimatorKind::McsRisk);

    SampleSet ones = make_set({0, 50, 150, 200}, {1, 1, 1, 1}, 1.5);
    Estimate w = risk(ones, 100.0);
    CHECK(w.kind == EstimatorKind::IsRisk);
    CHECK(w.value == r.value);
    CHECK(w.variance == r.variance);

    SampleSet weighted = make_set({0, 120, 150}, {2.0, 0.5, 0.25}, 2.0);
    CHECK(risk(weighted, 100.0).value == doctest::Approx((60.0 + 37.5) / 3));
}

TEST_CASE("prefixes and truncated paths") {
    SampleSet s = make_set({200, 0, 0, 200});
    CHECK(prob_mcs(s, 100.0, 2).value == 0.5);
    CHECK(prob_mcs(s, 100.0, 2).n_samples == 2);
    CHECK(prob_mcs(s, 100.0, 99).n_samples == 4);
    s.paths[1].truncated = true;
    Estimate e = prob_mcs(s, 100.0);
    CHECK(e.n_samples == 3);
    CHECK(e.value == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("compensated sums keep tiny weights") {
    std::vector<double> sheds(1001, 100.0), weights(1001, 1e-17);
    weights[0] = 1.0;
    Estimate e = prob_is(make_set(sheds, weights, 2.0), 50.0);
    CHECK(e.value * 1001 == doctest::Approx(1.0 + 1e-14).epsilon(1e-15));
}

TEST_CASE("VaR and CVaR") {
    SampleSet s = make_set({0, 50, 150, 200});
    VarCvar v = var_cvar(s, 0.75);
    CHECK(v.var == 200.0);
    CHECK(v.cvar == 200.0);
    CHECK(v.tail_mass == 0.25);
    CHECK(v.exact);
    CHECK_FALSE(v.flagged);
    CHECK(risk(s, v.var).value == (1 - 0.75) * v.cvar);

    VarCvar mid = var_cvar(s, 0.6);
    CHECK(mid.var == 150.0);
    CHECK(mid.cvar == 175.0);
    CHECK_FALSE(mid.exact);

    for (double alpha : {0.01, 0.5, 0.99}) {
        VarCvar c = var_cvar(make_set({42, 42, 42}), alpha);
        CHECK(c.var == 42.0);
        CHECK(c.cvar == 42.0);
    }

    VarCvar deep = var_cvar(s, 0.9);
    CHECK(deep.var == 200.0);
    CHECK(deep.flagged);

    SampleSet empty;
    CHECK(var_cvar(empty, 0.9).flagged);
    CHECK_THROWS_AS(var_cvar(s, 1.0), UsageError);
}

TEST_CASE("weighted tail measures in exact arithmetic") {
    std::vector<Atom<Rational>> atoms{{Rational(0), Rational(1, 2)},
                                      {Rational(40), Rational(1, 4)},
                                      {Rational(100), Rational(1, 8)},
                                      {Rational(40), Rational(1, 16)},
                                      {Rational(160), Rational(1, 16)}};
    auto t = tail_measures(atoms, Rational(13, 16));
    CHECK(t.var == 100);
    CHECK(t.exact);
    CHECK(t.tail_mass == Rational(3, 16));
    CHECK(t.cvar == (Rational(100, 8) + Rational(160, 16)) / Rational(3, 16));
    CHECK(tail_risk(atoms, t.var) == (1 - Rational(13, 16)) * t.cvar);

    auto inside = tail_measures(atoms, Rational(1, 2));
    CHECK(inside.var == 40);
    CHECK(inside.exact);
    auto straddle = tail_measures(atoms, Rational(3, 5));
    CHECK(straddle.var == 40);
    CHECK_FALSE(straddle.exact);
}

TEST_CASE("replicate variance") {
    std::vector<double> same{0.2, 0.2, 0.2};
    CHECK(replicate_variance(same) == 0.0);
    std::vector<double> two{0.1, 0.3};
    CHECK(replicate_variance(two) == doctest::Approx(0.02).epsilon(1e-14));
    std::vector<double> one{0.1};
    CHECK_THROWS_AS(replicate_variance(one), UsageError);
}
