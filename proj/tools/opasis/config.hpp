#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "opasis/cascade.hpp"
#include "opasis/error.hpp"
#include "opasis/grid.hpp"
#include "opasis/sampling.hpp"

namespace opasis::cli {

struct DerivedLimits {
    double factor = 1.5;
    double floor_mw = 20.0;

    bool operator==(const DerivedLimits&) const = default;
};

/// One experiment. Paths inside are resolved against the directory of the
/// config file when relative.
struct ExperimentConfig {
    std::filesystem::path case_path;
    std::optional<DerivedLimits> derive_limits;
    OutageModel model;
    double proposal_p_max = 0.999;
    std::size_t max_stages = 200;
    std::vector<double> eta_list{1.0};
    std::size_t n_samples = 2000;
    std::size_t replicates = 1;  // m_max
    std::vector<double> y0_list;
    std::vector<double> alpha_list{0.95};
    std::uint64_t seed = 1;
    std::size_t workers = 1;
    std::filesystem::path output_dir;
    std::size_t min_prefix = 100;
    std::size_t path_cap = 10'000'000;
    std::size_t n_ref = 1;

    SisConfig proposal(double eta) const { return {eta, proposal_p_max, max_stages}; }

    bool operator==(const ExperimentConfig&) const = default;
};

/// Raises ConfigError naming the offending field.
class ConfigError : public Error {
public:
    ConfigError(const std::string& field, const std::string& what)
        : Error("config field '" + field + "': " + what), field_(field) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Parses and validates JSON text. `base_dir` anchors relative paths.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Checks every invariant; parse_config already calls this.
void validate(const ExperimentConfig& cfg);

/// Canonical JSON: every field present, fixed key order, two-space indent.
std::string to_canonical_json(const ExperimentConfig& cfg);

/// The network the config describes, with derived limits applied.
Network load_network(const ExperimentConfig& cfg, Warnings* warnings = nullptr);

/// Campaign seed for replicate r; every eta reuses it.
std::uint64_t campaign_seed(std::uint64_t seed, std::size_t replicate) noexcept;

}  // namespace opasis::cli
