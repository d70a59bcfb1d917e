#pragma once

#include <span>
#include <vector>

#include "opasis/grid.hpp"
#include "opasis/state.hpp"

namespace opasis {

/// Two-level OPA fast-dynamics outage rule:
///   stage 1 (intact grid):   p0 for every in-service branch
///   any stage, overloaded:   p1
///   later stages otherwise:  p_e
/// with 0 <= p_e <= p0 <= p1 <= p_max <= 1.
struct OutageModel {
    double p0 = 0.0;
    double p1 = 0.0;
    double p_e = 0.0;
    double p_max = 1.0;

    /// Throws UsageError if the ordering invariant fails.
    void validate() const;

    bool operator==(const OutageModel&) const = default;
};

/// Branch flow at or above its limit, less kPowerTolMw, counts as overloaded.
bool is_overloaded(double flow_mw, double limit_mw);

/// Outage probability of every component given the state and its
/// dispatched flows. Tripped components get 0.
std::vector<double> outage_probabilities(const Network& net, const SystemState& state,
                                         std::span<const double> flows, const OutageModel& model);

/// A probability carried with its natural log. `log` is authoritative;
/// `value` may underflow to 0 while `log` stays finite.
struct LogProb {
    double log = 0.0;
    double value = 1.0;

    static LogProb from_log(double log);
};

/// prod_{k in tripped} probs[k] * prod_{k in survived} (1 - probs[k]),
/// accumulated in log space. Throws IntegrityError when a survivor has
/// probability exactly 1.
LogProb transition_probability(std::span<const double> probs, std::span<const ComponentIndex> tripped,
                               std::span<const ComponentIndex> survived);

/// One stage of a cascade path: the true and proposal probabilities of the
/// observed outcome and the partition of in-service components.
struct TransitionRecord {
    LogProb p_hat;
    LogProb q_hat;
    std::vector<ComponentIndex> tripped;
    std::vector<ComponentIndex> survived;
};

/// Product of per-stage probabilities: `p_hat` gives p_c, `q_hat` gives q_c.
LogProb path_probability(std::span<const TransitionRecord> records);
LogProb proposal_path_probability(std::span<const TransitionRecord> records);

}  // namespace opasis
