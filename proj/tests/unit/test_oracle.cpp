#include <doctest.h>

#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fixtures.hpp"
#include "opasis/dc_power.hpp"
#include "opasis/error.hpp"
#include "opasis/oracle.hpp"

using namespace opasis;
using opasis::testing::fixture_dir;
using opasis::testing::load_fixture;
using opasis::testing::make_network;
using opasis::testing::registry;

namespace {

const char* kParallel = R"({"buses": [{"id": 1}, {"id": 2, "load_mw": 10}],
    "branches": [{"id": 1, "from_bus": 1, "to_bus": 2, "reactance": 0.1},
                 {"id": 2, "from_bus": 1, "to_bus": 2, "reactance": 0.1}],
    "generators": [{"id": "G", "bus": 1, "capacity_mw": 100}]})";

const EnumeratedPath& find(const PathEnumeration& e, const std::string& key) {
    for (const auto& p : e.paths) {
        if (p.key == key) return p;
    }
    FAIL("missing path " << key);
    return e.paths.front();
}

}  // namespace

TEST_CASE("simplest rationals") {
    CHECK(to_rational(0.1) == Rational(1, 10));
    CHECK(to_rational(0.999) == Rational(999, 1000));
    CHECK(to_rational(1.0 / 3.0) == Rational(1, 3));
    CHECK(to_rational(-2.5) == Rational(-5, 2));
    CHECK(to_rational(0.0) == 0);
    CHECK(to_rational(1e-4) == Rational(1, 10000));
    Rational tiny = to_rational(std::ldexp(1.0, -60));
    CHECK(tiny == Rational(1) / Rational(boost::multiprecision::cpp_int(1) << 60));
    CHECK(static_cast<double>(to_rational(0.7071067811865476)) == 0.7071067811865476);
    CHECK_THROWS_AS(to_rational(std::numeric_limits<double>::infinity()), UsageError);
    CHECK(to_string(Rational(3, 4)) == "3/4");
    CHECK(to_string(Rational(7)) == "7");
}

TEST_CASE("no disturbance gives a single path") {
    Network net = load_fixture("single_line");
    PathEnumeration e = enumerate(net, {0.0, 0.2, 0.0, 1.0}, {2.0, 0.999, 200});
    REQUIRE(e.paths.size() == 1);
    CHECK(e.paths[0].key == "{}");
    CHECK(e.total_p == 1);
    TailSummary s = summarize(e, 10.0);
    CHECK(s.mu == 0);
    CHECK_FALSE(s.w0_defined);
    CHECK_FALSE(w0_diagnostic(e, 10.0).defined);
    CHECK_FALSE(verify_propositions(e, 10.0).defined);
}

TEST_CASE("two branches with even odds") {
    Network net = make_network(kParallel);
    PathEnumeration e = enumerate(net, {0.5, 0.5, 0.0, 1.0}, {1.0, 0.999, 200});
    REQUIRE(e.paths.size() == 4);
    for (const char* key : {"{}", "{0}{}", "{1}{}", "{0,1}{}"}) CHECK(find(e, key).p_c == Rational(1, 4));
    CHECK(e.total_p == 1);
    CHECK(e.total_q == 1);
    CHECK(find(e, "{0,1}{}").shed_mw == 10);
    CHECK(find(e, "{0}{}").shed_mw == 0);
}

TEST_CASE("two parallel lines by hand") {
    const auto& reg = registry();
    Network net = load_fixture("two_lines");
    PathEnumeration e = enumerate(net, reg.model, reg.proposal(2.0));
    CHECK(e.paths.size() == 6);
    CHECK(e.total_p == 1);
    CHECK(e.total_q == 1);
    CHECK(summarize(e, 100.0).mu == Rational(103, 12500));
    CHECK(summarize(e, 40.0).mu - summarize(e, 100.0).mu == Rational(392, 12500));
    // trip one line (p0, then the survivor is overloaded at p1)
    const EnumeratedPath& one = find(e, "{0}{}");
    CHECK(one.p_c == Rational(2, 100) * Rational(98, 100) * Rational(8, 10));
    CHECK(one.q_c == Rational(4, 100) * Rational(96, 100) * Rational(6, 10));
    CHECK(one.weight == Rational(49, 72));
    CHECK(one.shed_mw == 40);
    CHECK(one.length == 2);
}

TEST_CASE("single qualifying path") {
    const auto& reg = registry();
    Network net = load_fixture("single_line");
    PathEnumeration e = enumerate(net, reg.model, reg.proposal(2.0));
    W0Diagnostic d = w0_diagnostic(e, 50.0);
    REQUIRE(d.defined);
    CHECK(d.w0 == Rational(1, 2));
    CHECK(d.w0 == find(e, "{0}{}").weight);
    CHECK(d.condition_met);
    CHECK(d.within_bounds);
    CHECK(d.mu == Rational(1, 50));
    CHECK(d.w0_mu == Rational(1, 100));
}

TEST_CASE("identity proposal") {
    const auto& reg = registry();
    for (const auto& f : reg.fixtures) {
        CAPTURE(f.name);
        PathEnumeration e = enumerate(load_fixture(f.name), reg.model, reg.proposal(1.0));
        for (const auto& p : e.paths) CHECK(p.weight == 1);
        TailSummary s = summarize(e, f.target_y0, 2000);
        CHECK(s.w0 == 1);
        CHECK(s.d_is_moment == s.d_mcs);
        PropositionReport r = verify_propositions(e, f.target_y0);
        CHECK(r.sign_variance_gap == 0);
        CHECK(r.sign_w0_gap == 0);
        CHECK(r.biconditional_holds);
        CHECK_FALSE(w0_diagnostic(e, f.target_y0).condition_met);
    }
}

TEST_CASE("amplified proposal on the tail") {
    const auto& reg = registry();
    for (const auto& f : reg.fixtures) {
        CAPTURE(f.name);
        PathEnumeration e = enumerate(load_fixture(f.name), reg.model, reg.proposal(2.0));
        CHECK(e.total_p == 1);
        CHECK(e.total_q == 1);
        for (const auto& p : e.paths) CHECK(p.weight * p.q_c == p.p_c);
        W0Diagnostic d = w0_diagnostic(e, f.target_y0);
        CHECK(d.condition_met);
        CHECK(d.within_bounds);
        PropositionReport r = verify_propositions(e, f.target_y0);
        CHECK(r.bounds_hold);
        CHECK(r.sign_variance_gap == -1);
        CHECK(r.biconditional_holds);
        TailSummary s = summarize(e, f.target_y0, 100);
        CHECK(s.d_is_moment == s.d_is_w0);
        CHECK(s.d_is_moment < s.d_mcs);

        // every outcome shows up at zero threshold, where amplification hurts
        TailSummary all = summarize(e, 0.0);
        CHECK(all.mu == 1);
        CHECK(all.w0 > 1);
    }
}

TEST_CASE("heavier proposal is sufficient, not necessary") {
    const auto& reg = registry();
    PathEnumeration e = enumerate(load_fixture("mesh6"), reg.model, reg.proposal(2.0));
    PropositionReport r = verify_propositions(e, 10.0);
    W0Diagnostic d = w0_diagnostic(e, 10.0);
    CHECK(r.proposal_heavier < r.qualifying);
    CHECK(r.proposal_heavier_fraction < 1.0);
    CHECK(d.condition_met);
    CHECK(summarize(e, 10.0).max_w > 1);
}

TEST_CASE("enumerated shed is the dispatch of the final state") {
    const auto& reg = registry();
    Network net = load_fixture("bridge5");
    PathEnumeration e = enumerate(net, reg.model, reg.proposal(2.0));
    std::size_t two_trips = 0;
    for (const auto& p : e.paths) {
        SystemState s = SystemState::intact(net);
        std::size_t tripped = 0;
        for (std::size_t i = 0; i < p.key.size(); ++i) {
            if (!std::isdigit(static_cast<unsigned char>(p.key[i]))) continue;
            std::size_t end = i;
            while (end < p.key.size() && std::isdigit(static_cast<unsigned char>(p.key[end]))) ++end;
            s.status[std::stoul(p.key.substr(i, end - i))] = ComponentStatus::Tripped;
            ++tripped;
            i = end - 1;
        }
        if (tripped == 2) ++two_trips;
        CHECK(p.shed_value == dispatch(net, s).shed.total_shed_mw);
        CHECK(p.shed_mw == to_rational(p.shed_value));
    }
    CHECK(two_trips > 0);
}

TEST_CASE("budget guards") {
    const auto& reg = registry();
    Network net = load_fixture("mesh6");
    CHECK_THROWS_AS(enumerate(net, reg.model, reg.proposal(2.0), 100), BudgetExceeded);
    CHECK_THROWS_AS(enumerate(net, reg.model, {2.0, 0.999, 2}), BudgetExceeded);
}

TEST_CASE("golden enumeration of diamond4") {
    std::ifstream in(fixture_dir() / "golden" / "diamond4_eta2.json");
    REQUIRE(in);
    auto golden = nlohmann::json::parse(in);

    const auto& reg = registry();
    PathEnumeration e = enumerate(load_fixture("diamond4"), reg.model, reg.proposal(2.0));
    REQUIRE(e.paths.size() == golden["paths"].size());
    for (std::size_t i = 0; i < e.paths.size(); ++i) {
        const auto& g = golden["paths"][i];
        CAPTURE(i);
        CHECK(e.paths[i].key == g["key"].get<std::string>());
        CHECK(to_string(e.paths[i].p_c) == g["p_c"].get<std::string>());
        CHECK(to_string(e.paths[i].q_c) == g["q_c"].get<std::string>());
        CHECK(to_string(e.paths[i].weight) == g["w"].get<std::string>());
        CHECK(to_string(e.paths[i].shed_mw) == g["shed_mw"].get<std::string>());
    }
    CHECK(golden["summary"]["sum_p_c"] == "1");

    std::vector<double> y0s;
    for (const auto& t : golden["summary"]["tails"]) y0s.push_back(t["y0"].get<double>());
    std::ostringstream out;
    write_golden(out, e, y0s, golden["summary"]["n_ref"].get<std::size_t>());
    CHECK(nlohmann::json::parse(out.str()) == golden);
}
