#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "opasis/state.hpp"
#include "opasis/grid.hpp"

namespace opasis {

/// Tolerance on power balance and flow-limit feasibility, in MW.
inline constexpr double kPowerTolMw = 1e-6;

/// Connected components of the in-service branch graph. Islands are
/// numbered in order of their lowest-id bus, which is also the island's
/// angle reference.
struct Islands {
    std::vector<std::size_t> island_of_bus;
    std::vector<std::size_t> reference_bus;

    std::size_t count() const noexcept { return reference_bus.size(); }
};

Islands find_islands(const Network& net, const SystemState& state);

/// DC power flow for balanced per-island injections (MW, indexed by bus).
/// Returns signed branch flows in MW; tripped branches carry exactly zero.
/// Throws UsageError on an unbalanced island and StructuralError when an
/// island susceptance matrix cannot be factored.
std::vector<double> dc_flow(const Network& net, const SystemState& state, std::span<const double> injections_mw);

struct FlowSolution {
    std::vector<double> branch_flows;  // by component ordinal
    Islands islands;
    std::vector<double> served_load;   // by bus index
    std::vector<double> generation;    // by generator index
};

struct LoadShed {
    double total_shed_mw = 0.0;
    std::vector<double> per_bus_shed;  // by bus index
};

/// Dual prices of the load-shedding LP for one island. Rows not listed are
/// flow limits that were never active and carry a zero price.
struct IslandCertificate {
    std::size_t island = 0;
    double balance_dual = 0.0;
    std::vector<std::pair<ComponentIndex, double>> flow_duals;
    bool solved_by_lp = false;
};

struct DispatchResult {
    FlowSolution flow;
    LoadShed shed;
    std::vector<IslandCertificate> certificates;
};

/// Minimum-load-shedding redispatch. Per island, minimizes total shed
/// subject to DC flow, branch limits, generator capacity and served-load
/// bounds. Total shed is reported on a 1e-6 MW grid.
DispatchResult dispatch(const Network& net, const SystemState& state);

/// Memoizes dispatch by tripped set. Not thread-safe: one per worker.
class DispatchCache {
public:
    explicit DispatchCache(const Network& net, std::size_t capacity = 4096);

    std::shared_ptr<const DispatchResult> get(const SystemState& state);

    std::size_t hits() const noexcept { return hits_; }
    std::size_t misses() const noexcept { return misses_; }

private:
    const Network* net_;
    std::size_t capacity_;
    std::unordered_map<std::vector<std::uint64_t>, std::shared_ptr<const DispatchResult>, StateKeyHash> entries_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

/// Sets each branch limit to max(factor * |base-case flow|, floor_mw), with
/// base-case flows from dispatching the intact network with unlimited
/// branches. This is how cases shipped without meaningful ratings get OPA
/// limits.
Network with_derived_flow_limits(const Network& net, double factor, double floor_mw);

}  // namespace opasis
