#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace opasis {

struct Bus {
    std::string id;
    double load_mw = 0.0;

    bool operator==(const Bus&) const = default;
};

/// A line or transformer. Reactance is per unit on the network MVA base.
/// An infinite flow limit means the branch is never overloaded.
struct Branch {
    std::string id;
    std::string from_bus;
    std::string to_bus;
    double reactance = 0.0;
    double flow_limit_mw = 0.0;

    bool operator==(const Branch&) const = default;
};

struct Generator {
    std::string id;
    std::string bus;
    double capacity_mw = 0.0;

    bool operator==(const Generator&) const = default;
};

/// Ordinal of an outage-able component. Only branches are components, and
/// the ordinal is the branch's position in id order.
using ComponentIndex = std::size_t;

/// Orders ids numerically when both are integers, lexicographically
/// otherwise. Used for every id-sorted sequence in the library.
bool id_less(std::string_view a, std::string_view b);

/// Static grid description. Immutable after construction; the constructor
/// validates every invariant and sorts buses, branches and generators by id.
class Network {
public:
    Network(std::vector<Bus> buses, std::vector<Branch> branches, std::vector<Generator> generators,
            double base_mva);

    const std::vector<Bus>& buses() const noexcept { return buses_; }
    const std::vector<Branch>& branches() const noexcept { return branches_; }
    const std::vector<Generator>& generators() const noexcept { return generators_; }
    double base_mva() const noexcept { return base_mva_; }

    std::size_t bus_count() const noexcept { return buses_.size(); }
    std::size_t branch_count() const noexcept { return branches_.size(); }

    std::optional<std::size_t> bus_index(std::string_view id) const;
    std::size_t from_index(ComponentIndex k) const { return from_[k]; }
    std::size_t to_index(ComponentIndex k) const { return to_[k]; }
    std::size_t generator_bus_index(std::size_t g) const { return gen_bus_[g]; }

    double total_load_mw() const noexcept { return total_load_; }
    double total_capacity_mw() const noexcept { return total_capacity_; }

    bool operator==(const Network& other) const;

private:
    std::vector<Bus> buses_;
    std::vector<Branch> branches_;
    std::vector<Generator> generators_;
    double base_mva_;

    std::unordered_map<std::string, std::size_t> bus_lookup_;
    std::vector<std::size_t> from_;
    std::vector<std::size_t> to_;
    std::vector<std::size_t> gen_bus_;
    double total_load_ = 0.0;
    double total_capacity_ = 0.0;
};

/// N_c: the number of outage-able components. Each component has two
/// states, so the state space holds 2^N_c configurations.
inline std::size_t component_count(const Network& net) noexcept { return net.branch_count(); }

enum class CaseFormat { Json, Matpower };

/// Picks the format from the file extension: `.m` is matpower, anything
/// else is JSON.
CaseFormat guess_case_format(const std::filesystem::path& path);

/// Non-fatal reader diagnostics (ignored columns, clamped values).
using Warnings = std::vector<std::string>;

Network parse_json_case(std::string_view text);
Network parse_matpower_case(std::string_view text, Warnings* warnings = nullptr);

Network load_case(const std::filesystem::path& path, CaseFormat format, Warnings* warnings = nullptr);
Network load_case(const std::filesystem::path& path, Warnings* warnings = nullptr);

/// Serializes to the JSON case schema. Parsing the result reproduces an
/// equal Network.
std::string to_json_case(const Network& net);

}  // namespace opasis
