#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"

namespace opasis::cli {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kUsage = 2,
    kBudget = 3,
    kMismatch = 4,
};

/// Output directory: the config's, else $OPASIS_OUTPUT_ROOT/<config stem>,
/// else runs/<config stem>.
std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg, const std::filesystem::path& config_path);

/// "eta_1.5" style directory label.
std::string eta_label(double eta);

std::filesystem::path sample_file(const std::filesystem::path& out, double eta, std::size_t replicate);

/// Halving prefixes of n down to min_prefix, ascending; {n} when n < min_prefix.
std::vector<std::size_t> geometric_prefixes(std::size_t n, std::size_t min_prefix);

int cmd_run(const ExperimentConfig& cfg, const std::filesystem::path& out, std::ostream& log);
int cmd_convergence(const ExperimentConfig& cfg, const std::filesystem::path& out, std::ostream& log);
int cmd_enumerate(const ExperimentConfig& cfg, const std::filesystem::path& out, std::ostream& log);
int cmd_analyze(const ExperimentConfig& cfg, const std::filesystem::path& out, std::ostream& log);
int cmd_derive_limits(const std::filesystem::path& case_path, double factor, double floor_mw,
                      const std::filesystem::path& dest, std::ostream& log);
int cmd_verify(const std::filesystem::path& out, std::ostream& log);

}  // namespace opasis::cli
