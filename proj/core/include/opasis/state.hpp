#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "opasis/grid.hpp"

namespace opasis {

enum class ComponentStatus : std::uint8_t { InService, Tripped };

/// X_j: the status of every component at cascade stage j (1-based). Stage 1
/// is the intact pre-disturbance grid. Tripped is absorbing.
struct SystemState {
    std::vector<ComponentStatus> status;
    int stage = 1;

    static SystemState intact(std::size_t components) {
        return {std::vector<ComponentStatus>(components, ComponentStatus::InService), 1};
    }
    static SystemState intact(const Network& net) { return intact(component_count(net)); }

    std::size_t size() const noexcept { return status.size(); }
    bool in_service(ComponentIndex k) const { return status[k] == ComponentStatus::InService; }
    bool tripped(ComponentIndex k) const { return status[k] == ComponentStatus::Tripped; }

    std::size_t tripped_count() const noexcept {
        std::size_t n = 0;
        for (auto s : status) n += s == ComponentStatus::Tripped;
        return n;
    }

    /// Tripped set packed into 64-bit words; equal keys mean equal status.
    std::vector<std::uint64_t> key() const {
        std::vector<std::uint64_t> words((status.size() + 63) / 64, 0);
        for (std::size_t k = 0; k < status.size(); ++k) {
            if (status[k] == ComponentStatus::Tripped) words[k / 64] |= std::uint64_t{1} << (k % 64);
        }
        return words;
    }

    bool operator==(const SystemState&) const = default;
};

struct StateKeyHash {
    std::size_t operator()(const std::vector<std::uint64_t>& key) const noexcept {
        std::uint64_t h = 1469598103934665603ull;
        for (std::uint64_t w : key) {
            h ^= w + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
            h *= 1099511628211ull;
        }
        return static_cast<std::size_t>(h);
    }
};

}  // namespace opasis
