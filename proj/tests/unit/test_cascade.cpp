#include <doctest.h>

#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "opasis/cascade.hpp"
#include "opasis/dc_power.hpp"
#include "opasis/error.hpp"
#include "opasis/oracle.hpp"
#include "opasis/sampling.hpp"

using namespace opasis;
using opasis::testing::load_fixture;

namespace {

TransitionRecord record(double p_hat, double q_hat) {
    TransitionRecord r;
    r.p_hat = LogProb::from_log(std::log(p_hat));
    r.q_hat = LogProb::from_log(std::log(q_hat));
    return r;
}

}  // namespace

TEST_CASE("outage probabilities follow the two-level rule") {
    Network net = load_fixture("ring3");
    const OutageModel model{0.01, 0.6, 0.0, 1.0};
    std::vector<double> flows{10.0, 5.0, 20.0};

    SystemState intact = SystemState::intact(net);
    for (double p : outage_probabilities(net, intact, flows, model)) CHECK(p == 0.01);

    SystemState dead = intact;
    for (auto& s : dead.status) s = ComponentStatus::Tripped;
    dead.stage = 3;
    for (double p : outage_probabilities(net, dead, flows, model)) CHECK(p == 0.0);

    SystemState later = intact;
    later.stage = 2;
    flows[1] = -1.05 * net.branches()[1].flow_limit_mw;
    auto probs = outage_probabilities(net, later, flows, model);
    CHECK(probs == std::vector<double>{0.0, 0.6, 0.0});

    // a flow exactly at the limit counts as overloaded
    flows[1] = net.branches()[1].flow_limit_mw;
    CHECK(outage_probabilities(net, later, flows, model)[1] == 0.6);
    CHECK(is_overloaded(40.0, 40.0));
    CHECK_FALSE(is_overloaded(39.99, 40.0));

    // overloads win over p0 at stage 1, and the cap applies
    const OutageModel capped{0.01, 0.6, 0.0, 0.5};
    CHECK(outage_probabilities(net, intact, flows, capped)[1] == 0.5);
}

TEST_CASE("model ordering is validated") {
    CHECK_NOTHROW(OutageModel({0.02, 0.2, 0.01, 1.0}).validate());
    CHECK_THROWS_AS(OutageModel({0.3, 0.2, 0.01, 1.0}).validate(), UsageError);
    CHECK_THROWS_AS(OutageModel({0.02, 0.2, 0.05, 1.0}).validate(), UsageError);
    CHECK_THROWS_AS(OutageModel({0.02, 0.2, 0.01, 1.5}).validate(), UsageError);
}

TEST_CASE("transition probability") {
    std::vector<double> zeros(4, 0.0);
    std::vector<ComponentIndex> all{0, 1, 2, 3};
    LogProb none = transition_probability(zeros, {}, all);
    CHECK(none.value == 1.0);
    CHECK(none.log == 0.0);

    std::vector<double> probs{0.1, 0.2, 0.5};
    std::vector<ComponentIndex> tripped{0}, survived{1, 2};
    CHECK(transition_probability(probs, tripped, survived).value == doctest::Approx(0.04).epsilon(1e-14));

    std::vector<double> sure{1.0, 0.2};
    std::vector<ComponentIndex> first{0}, second{1};
    CHECK_THROWS_AS(transition_probability(sure, second, first), IntegrityError);
    CHECK(transition_probability(sure, first, second).value == doctest::Approx(0.8));
}

TEST_CASE("twenty halves in log space match the exact value") {
    std::vector<double> probs(20, 0.5);
    std::vector<ComponentIndex> tripped(20);
    for (std::size_t k = 0; k < 20; ++k) tripped[k] = k;
    LogProb p = transition_probability(probs, tripped, {});
    Rational exact = 1;
    for (int i = 0; i < 20; ++i) exact *= Rational(1, 2);
    Rational got = to_rational(p.value);
    Rational rel = abs(got - exact) / exact;
    CHECK(rel <= Rational(1, 1'000'000'000'000'000LL));
    CHECK(p.value == doctest::Approx(9.5367431640625e-7).epsilon(1e-15));
}

TEST_CASE("path probability multiplies stage probabilities") {
    std::vector<TransitionRecord> one{record(1.0, 1.0)};
    CHECK(path_probability(one).value == 1.0);
    std::vector<TransitionRecord> two{record(0.04, 0.0012), record(0.5, 0.25)};
    CHECK(path_probability(two).value == doctest::Approx(0.02).epsilon(1e-14));
    CHECK(proposal_path_probability(two).value == doctest::Approx(0.0003).epsilon(1e-14));
}

TEST_CASE("probabilities depend only on the current state") {
    Network net = load_fixture("diamond4");
    const OutageModel model{0.02, 0.2, 0.01, 1.0};
    DispatchCache cache(net);

    // {0} then {2}, against {2} then {0}
    SystemState a = SystemState::intact(net);
    a.status[0] = ComponentStatus::Tripped;
    a.stage = 2;
    a.status[2] = ComponentStatus::Tripped;
    a.stage = 3;
    SystemState b = SystemState::intact(net);
    b.status[2] = ComponentStatus::Tripped;
    b.stage = 2;
    b.status[0] = ComponentStatus::Tripped;
    b.stage = 3;
    auto pa = outage_probabilities(net, a, cache.get(a)->flow.branch_flows, model);
    auto pb = outage_probabilities(net, b, cache.get(b)->flow.branch_flows, model);
    CHECK(pa == pb);
}

TEST_CASE("quiet later stage is absorbing") {
    Network net = load_fixture("ring3");
    const OutageModel model{0.1, 0.5, 0.0, 1.0};
    SystemState s = SystemState::intact(net);
    s.status[1] = ComponentStatus::Tripped;
    s.stage = 2;
    DispatchResult d = dispatch(net, s);
    auto probs = outage_probabilities(net, s, d.flow.branch_flows, model);
    for (double p : probs) CHECK(p == 0.0);
    Philox4x32 rng(1, 0);
    StepResult r = step(s, net, d.flow.branch_flows, model, SisConfig{2.0, 0.999, 200}, rng);
    CHECK(r.next.status == s.status);
    CHECK(r.record.tripped.empty());
    CHECK(r.record.p_hat.value == 1.0);
    CHECK(r.record.q_hat.value == 1.0);
}
