#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "opasis/cascade.hpp"
#include "opasis/dc_power.hpp"
#include "opasis/grid.hpp"
#include "opasis/rng.hpp"
#include "opasis/state.hpp"

namespace opasis {

/// Proposal chain settings. eta = 1 reproduces the true chain.
struct SisConfig {
    double eta = 1.0;
    double p_max = 0.999;
    std::size_t max_stages = 200;

    void validate() const;

    bool operator==(const SisConfig&) const = default;
};

/// Proposal outage probability min(eta * p, cap) where the cap is p_max,
/// raised to p itself if p already exceeds it, so q >= p always and q = p
/// when eta = 1.
double amplify(double p, const SisConfig& cfg);

struct StepResult {
    SystemState next;
    TransitionRecord record;
};

/// Samples one stage: every in-service component with positive proposal
/// probability draws one uniform and trips when it falls below q_k.
/// `flows` must be the dispatched flows of `state`.
StepResult step(const SystemState& state, const Network& net, std::span<const double> flows,
                const OutageModel& model, const SisConfig& cfg, Philox4x32& rng);

/// One sampled cascade Z = {X_1..X_n}. records[j] is the transition out of
/// X_{j+1}; the last record is the terminating no-trip transition, so
/// stages == n for a completed path.
struct CascadePath {
    std::vector<TransitionRecord> records;
    double log_p_c = 0.0;
    double log_q_c = 0.0;
    double weight = 1.0;
    double shed_mw = 0.0;
    bool truncated = false;
    std::size_t stages = 0;  // transitions taken, kept even when records are dropped

    std::size_t length() const noexcept { return stages; }

    /// Rebuilds X_1..X_n from the tripped sets.
    std::vector<SystemState> states(std::size_t components) const;

    /// Canonical text key of the outcome sequence, e.g. "{0,2}{1}{}".
    std::string outcome_key() const;
};

/// Full keeps every record; Compact drops survived sets, which the tripped
/// sets and the network imply; Summary keeps no records at all.
enum class PathDetail { Full, Compact, Summary };

/// Draws cascade paths for one (network, model, proposal). Outage
/// probabilities and dispatch are memoized per tripped set, which is exact
/// because only the intact state is ever visited at stage 1. Not
/// thread-safe: one per worker.
class CascadeSampler {
public:
    CascadeSampler(const Network& net, const OutageModel& model, const SisConfig& cfg,
                   std::size_t cache_capacity = 4096);

    /// Runs from the intact grid until a stage trips nothing or
    /// cfg.max_stages transitions have been taken (then `truncated` is set).
    /// Draws match step(): one uniform per in-service component with
    /// positive proposal probability, in component order.
    CascadePath sample(Philox4x32& rng, PathDetail detail = PathDetail::Full);

    std::size_t hits() const noexcept { return hits_; }
    std::size_t misses() const noexcept { return misses_; }

private:
    struct StageInfo {
        std::shared_ptr<const DispatchResult> dispatch;
        std::vector<ComponentIndex> candidates;  // in service with q > 0
        std::vector<double> q;
        std::vector<double> log_p, log1m_p, log_q, log1m_q;
        std::vector<ComponentIndex> idle;  // in service with q = 0
    };

    const StageInfo& info(const SystemState& state);

    const Network* net_;
    OutageModel model_;
    SisConfig cfg_;
    std::size_t capacity_;
    std::unordered_map<std::vector<std::uint64_t>, std::unique_ptr<StageInfo>, StateKeyHash> entries_;
    std::unique_ptr<StageInfo> scratch_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

struct SampleSet {
    std::vector<CascadePath> paths;
    double eta = 1.0;
    std::uint64_t seed = 0;
    OutageModel model;
    SisConfig config;

    std::size_t size() const noexcept { return paths.size(); }
    std::size_t truncated_count() const noexcept;
};

/// Stream id used for path `index` of a campaign seeded with `seed`.
inline Philox4x32 path_stream(std::uint64_t seed, std::uint64_t index) { return Philox4x32(seed, index); }

/// N_s independent paths. Path i draws from path_stream(seed, i), so the
/// result is bitwise identical for any worker count.
SampleSet run_campaign(const Network& net, const OutageModel& model, const SisConfig& cfg, std::size_t n_samples,
                       std::uint64_t seed, std::size_t workers = 1, PathDetail detail = PathDetail::Compact);

}  // namespace opasis
