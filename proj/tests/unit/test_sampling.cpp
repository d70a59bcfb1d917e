#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <vector>

#include "fixtures.hpp"
#include "opasis/dc_power.hpp"
#include "opasis/error.hpp"
#include "opasis/oracle.hpp"
#include "opasis/sample_io.hpp"
#include "opasis/sampling.hpp"

using namespace opasis;
using opasis::testing::load_fixture;
using opasis::testing::registry;

namespace {

void check_same(const CascadePath& a, const CascadePath& b) {
    CHECK(a.outcome_key() == b.outcome_key());
    CHECK(a.log_p_c == b.log_p_c);
    CHECK(a.log_q_c == b.log_q_c);
    CHECK(a.weight == b.weight);
    CHECK(a.shed_mw == b.shed_mw);
    CHECK(a.truncated == b.truncated);
    CHECK(a.stages == b.stages);
}

// Same outcome; log sums may differ in the last bits from summation order.
void check_close(const CascadePath& a, const CascadePath& b) {
    CHECK(a.outcome_key() == b.outcome_key());
    CHECK(a.log_p_c == doctest::Approx(b.log_p_c).epsilon(1e-13));
    CHECK(a.log_q_c == doctest::Approx(b.log_q_c).epsilon(1e-13));
    CHECK(a.weight == doctest::Approx(b.weight).epsilon(1e-12));
    CHECK(a.shed_mw == b.shed_mw);
    CHECK(a.truncated == b.truncated);
    CHECK(a.stages == b.stages);
}

// The sampler's path rebuilt from step() and fresh dispatches.
CascadePath reference_path(const Network& net, const OutageModel& model, const SisConfig& cfg, Philox4x32 rng) {
    CascadePath path;
    SystemState s = SystemState::intact(net);
    for (;;) {
        DispatchResult d = dispatch(net, s);
        if (path.records.size() == cfg.max_stages) {
            path.truncated = true;
            path.shed_mw = d.shed.total_shed_mw;
            break;
        }
        StepResult r = step(s, net, d.flow.branch_flows, model, cfg, rng);
        bool done = r.record.tripped.empty();
        path.log_p_c += r.record.p_hat.log;
        path.log_q_c += r.record.q_hat.log;
        path.records.push_back(std::move(r.record));
        if (done) {
            path.shed_mw = d.shed.total_shed_mw;
            break;
        }
        s = std::move(r.next);
    }
    path.stages = path.records.size();
    path.weight = std::exp(path.log_p_c - path.log_q_c);
    return path;
}

}  // namespace

TEST_CASE("amplify") {
    CHECK(amplify(0.01, {1.5, 1.0, 200}) == doctest::Approx(0.015));
    CHECK(amplify(0.0, {3.0, 1.0, 200}) == 0.0);
    CHECK(amplify(0.8, {2.0, 0.99, 200}) == 0.99);
    CHECK(amplify(0.3, {1.0, 0.2, 200}) == 0.3);  // never below p
    CHECK(amplify(0.4, {1.0, 0.999, 200}) == 0.4);
}

TEST_CASE("proposal step arithmetic") {
    const SisConfig cfg{2.0, 0.99, 200};
    std::vector<double> p{0.1, 0.2, 0.5};
    std::vector<double> q;
    for (double v : p) q.push_back(amplify(v, cfg));
    CHECK(q[2] == 0.99);
    std::vector<ComponentIndex> tripped{0}, survived{1, 2};
    LogProb ph = transition_probability(p, tripped, survived);
    LogProb qh = transition_probability(q, tripped, survived);
    CHECK(ph.value == doctest::Approx(0.04).epsilon(1e-14));
    CHECK(qh.value == doctest::Approx(0.0012).epsilon(1e-12));
    double w = std::exp(ph.log - qh.log);
    CHECK(w == doctest::Approx(100.0 / 3.0).epsilon(1e-12));

    Rational exact = (to_rational(0.1) * (1 - to_rational(0.2)) * (1 - to_rational(0.5))) /
                     (to_rational(0.2) * (1 - to_rational(0.4)) * (1 - to_rational(0.99)));
    CHECK(exact == Rational(100, 3));
}

TEST_CASE("step draws one uniform per candidate") {
    Network net = load_fixture("mesh6");
    const OutageModel model{0.3, 0.6, 0.1, 1.0};
    const SisConfig cfg{2.0, 0.999, 200};
    SystemState s = SystemState::intact(net);
    s.status[4] = ComponentStatus::Tripped;
    s.stage = 2;
    DispatchResult d = dispatch(net, s);
    auto p = outage_probabilities(net, s, d.flow.branch_flows, model);

    for (std::uint64_t stream = 0; stream < 50; ++stream) {
        Philox4x32 rng(5, stream), mirror(5, stream);
        StepResult r = step(s, net, d.flow.branch_flows, model, cfg, rng);
        std::vector<ComponentIndex> expect;
        for (ComponentIndex k = 0; k < s.size(); ++k) {
            if (s.in_service(k) && amplify(p[k], cfg) > 0.0 && mirror.uniform() < amplify(p[k], cfg)) expect.push_back(k);
        }
        CHECK(r.record.tripped == expect);
        CHECK(r.record.tripped.size() + r.record.survived.size() == s.size() - 1);
        CHECK(r.next.stage == 3);
        CHECK(r.next.tripped(4));
        for (ComponentIndex k : expect) CHECK(r.next.tripped(k));
        CHECK(r.next.tripped_count() == expect.size() + 1);
        CHECK(rng() == mirror());
    }
}

TEST_CASE("identity proposal gives equal step probabilities") {
    Network net = load_fixture("ring3");
    const OutageModel model{0.2, 0.5, 0.05, 1.0};
    DispatchResult d = dispatch(net, SystemState::intact(net));
    for (std::uint64_t stream = 0; stream < 20; ++stream) {
        Philox4x32 rng(3, stream);
        StepResult r = step(SystemState::intact(net), net, d.flow.branch_flows, model, {1.0, 0.999, 200}, rng);
        CHECK(r.record.p_hat.log == r.record.q_hat.log);
    }
}

TEST_CASE("sampler matches the step-by-step reference") {
    const auto& reg = registry();
    for (const char* name : {"ring3", "bridge5", "mesh6"}) {
        Network net = load_fixture(name);
        for (double eta : {1.0, 2.0}) {
            SisConfig cfg = reg.proposal(eta);
            CascadeSampler sampler(net, reg.model, cfg);
            for (std::uint64_t i = 0; i < 300; ++i) {
                Philox4x32 rng = path_stream(11, i);
                CascadePath got = sampler.sample(rng);
                CascadePath want = reference_path(net, reg.model, cfg, path_stream(11, i));
                check_close(got, want);
                REQUIRE(got.records.size() == want.records.size());
                for (std::size_t j = 0; j < got.records.size(); ++j) {
                    CHECK(got.records[j].p_hat.log == doctest::Approx(want.records[j].p_hat.log).epsilon(1e-13));
                    CHECK(got.records[j].q_hat.log == doctest::Approx(want.records[j].q_hat.log).epsilon(1e-13));
                    CHECK(got.records[j].survived == want.records[j].survived);
                }
            }
            CHECK(sampler.hits() > 0);
        }
    }
}

TEST_CASE("path detail levels agree") {
    const auto& reg = registry();
    Network net = load_fixture("mesh6");
    SisConfig cfg = reg.proposal(2.0);
    CascadeSampler full(net, reg.model, cfg), compact(net, reg.model, cfg), summary(net, reg.model, cfg, 1);
    for (std::uint64_t i = 0; i < 500; ++i) {
        Philox4x32 a = path_stream(3, i), b = path_stream(3, i), c = path_stream(3, i);
        CascadePath pf = full.sample(a, PathDetail::Full);
        CascadePath pc = compact.sample(b, PathDetail::Compact);
        CascadePath ps = summary.sample(c, PathDetail::Summary);
        check_same(pf, pc);
        CHECK(pf.log_p_c == ps.log_p_c);
        CHECK(pf.log_q_c == ps.log_q_c);
        CHECK(pf.shed_mw == ps.shed_mw);
        CHECK(pf.stages == ps.stages);
        CHECK(ps.records.empty());
        for (const auto& r : pc.records) CHECK(r.survived.empty());
    }
}

TEST_CASE("path invariants") {
    const auto& reg = registry();
    Network net = load_fixture("bridge5");
    CascadeSampler sampler(net, reg.model, reg.proposal(2.0));
    for (std::uint64_t i = 0; i < 2000; ++i) {
        Philox4x32 rng = path_stream(9, i);
        CascadePath p = sampler.sample(rng);
        REQUIRE_FALSE(p.records.empty());
        CHECK(p.records.back().tripped.empty());
        CHECK(p.stages == p.records.size());
        CHECK(p.weight > 0.0);
        CHECK(std::abs(p.weight - std::exp(p.log_p_c - p.log_q_c)) <= 1e-12 * p.weight);
        double lp = 0.0, lq = 0.0;
        for (const auto& r : p.records) {
            lp += r.p_hat.log;
            lq += r.q_hat.log;
            CHECK(r.q_hat.value > 0.0);
        }
        CHECK(lp == doctest::Approx(p.log_p_c).epsilon(1e-14));
        CHECK(lq == doctest::Approx(p.log_q_c).epsilon(1e-14));
        auto states = p.states(net.branch_count());
        CHECK(states.size() == p.stages);
        for (std::size_t j = 1; j < states.size(); ++j) {
            for (ComponentIndex k = 0; k < net.branch_count(); ++k) {
                if (states[j - 1].tripped(k)) CHECK(states[j].tripped(k));
            }
        }
        CHECK(p.shed_mw == dispatch(net, states.back()).shed.total_shed_mw);
    }
}

TEST_CASE("nothing trips without a disturbance") {
    Network net = load_fixture("diamond4");
    CascadeSampler sampler(net, {0.0, 0.2, 0.0, 1.0}, {2.0, 0.999, 200});
    Philox4x32 rng = path_stream(1, 0);
    CascadePath p = sampler.sample(rng);
    CHECK(p.stages == 1);
    CHECK(p.shed_mw == 0.0);
    CHECK(p.weight == 1.0);
    CHECK(p.outcome_key() == "{}");
}

TEST_CASE("truncation is flagged") {
    Network net = load_fixture("mesh6");
    SampleSet set = run_campaign(net, {0.02, 0.2, 0.01, 1.0}, {2.0, 0.999, 1}, 500, 4);
    CHECK(set.truncated_count() > 0);
    for (const auto& p : set.paths) {
        if (p.truncated) CHECK(p.stages == 1);
    }
}

TEST_CASE("identity proposal weights are exactly one") {
    const auto& reg = registry();
    Network net = load_fixture("mesh6");
    SampleSet set = run_campaign(net, reg.model, reg.proposal(1.0), 5000, 21);
    for (const auto& p : set.paths) {
        CHECK(p.weight == 1.0);
        CHECK(p.log_p_c == p.log_q_c);
    }
}

TEST_CASE("campaigns are independent of the worker count") {
    const auto& reg = registry();
    Network net = load_fixture("bridge5");
    SampleSet one = run_campaign(net, reg.model, reg.proposal(1.5), 3000, 77, 1, PathDetail::Full);
    SampleSet three = run_campaign(net, reg.model, reg.proposal(1.5), 3000, 77, 3, PathDetail::Full);
    SampleSet eight = run_campaign(net, reg.model, reg.proposal(1.5), 3000, 77, 8, PathDetail::Full);
    REQUIRE(one.size() == 3000);
    CHECK(one.eta == 1.5);
    CHECK(one.seed == 77);
    CHECK(one.model == reg.model);
    for (std::size_t i = 0; i < one.size(); ++i) {
        check_same(one.paths[i], three.paths[i]);
        check_same(one.paths[i], eight.paths[i]);
    }
    std::ostringstream a, b;
    write_samples(a, one);
    write_samples(b, eight);
    CHECK(a.str() == b.str());
}

TEST_CASE("sample files round trip") {
    const auto& reg = registry();
    Network net = load_fixture("mesh6");
    for (PathDetail detail : {PathDetail::Full, PathDetail::Compact, PathDetail::Summary}) {
        SampleSet set = run_campaign(net, reg.model, reg.proposal(2.0), 400, 5, 2, detail);
        std::stringstream buf;
        write_samples(buf, set);
        SampleSet back = read_samples(buf);
        CHECK(back.size() == set.size());
        CHECK(back.eta == set.eta);
        CHECK(back.seed == set.seed);
        CHECK(back.model == set.model);
        CHECK(back.config == set.config);
        for (std::size_t i = 0; i < set.size(); ++i) {
            check_same(back.paths[i], set.paths[i]);
            REQUIRE(back.paths[i].records.size() == set.paths[i].records.size());
            for (std::size_t j = 0; j < set.paths[i].records.size(); ++j) {
                CHECK(back.paths[i].records[j].p_hat.log == set.paths[i].records[j].p_hat.log);
                CHECK(back.paths[i].records[j].q_hat.log == set.paths[i].records[j].q_hat.log);
            }
        }
        std::ostringstream again;
        write_samples(again, back);
        CHECK(again.str() == buf.str());
    }
    std::istringstream bad("{\"format\": \"something-else\"}\n");
    CHECK_THROWS(read_samples(bad));
}

TEST_CASE("shortest doubles round trip") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456.789, -0.0, 5e-324}) {
        CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
    }
    CHECK(format_double(0.1) == "0.1");
}
