#include "opasis/cascade.hpp"

#include <cmath>
#include <string>

#include "opasis/dc_power.hpp"
#include "opasis/error.hpp"

namespace opasis {

void OutageModel::validate() const {
    if (!(0.0 <= p_e && p_e <= p0 && p0 <= p1 && p1 <= p_max && p_max <= 1.0)) {
        throw UsageError("outage model requires 0 <= p_e <= p0 <= p1 <= p_max <= 1 (got p_e=" + std::to_string(p_e) +
                         ", p0=" + std::to_string(p0) + ", p1=" + std::to_string(p1) +
                         ", p_max=" + std::to_string(p_max) + ")");
    }
}

bool is_overloaded(double flow_mw, double limit_mw) { return std::abs(flow_mw) >= limit_mw - kPowerTolMw; }

std::vector<double> outage_probabilities(const Network& net, const SystemState& state,
                                         std::span<const double> flows, const OutageModel& model) {
    if (state.size() != component_count(net) || flows.size() != component_count(net)) {
        throw IntegrityError("state and flows must cover every component");
    }
    std::vector<double> probs(state.size(), 0.0);
    const double quiet = state.stage <= 1 ? model.p0 : model.p_e;
    for (ComponentIndex k = 0; k < state.size(); ++k) {
        if (!state.in_service(k)) continue;
        double p = is_overloaded(flows[k], net.branches()[k].flow_limit_mw) ? model.p1 : quiet;
        probs[k] = std::min(p, model.p_max);
    }
    return probs;
}

LogProb LogProb::from_log(double log) { return {log, std::exp(log)}; }

LogProb transition_probability(std::span<const double> probs, std::span<const ComponentIndex> tripped,
                               std::span<const ComponentIndex> survived) {
    double log = 0.0;
    for (ComponentIndex k : tripped) log += std::log(probs[k]);
    for (ComponentIndex k : survived) {
        if (probs[k] >= 1.0) {
            throw IntegrityError("component " + std::to_string(k) + " survived a stage it fails with certainty");
        }
        log += std::log1p(-probs[k]);
    }
    return LogProb::from_log(log);
}

namespace {

LogProb product(std::span<const TransitionRecord> records, LogProb TransitionRecord::*field) {
    double log = 0.0;
    for (const TransitionRecord& r : records) log += (r.*field).log;
    return LogProb::from_log(log);
}

}  // namespace

LogProb path_probability(std::span<const TransitionRecord> records) {
    return product(records, &TransitionRecord::p_hat);
}

LogProb proposal_path_probability(std::span<const TransitionRecord> records) {
    return product(records, &TransitionRecord::q_hat);
}

}  // namespace opasis
