#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "opasis/cascade.hpp"
#include "opasis/grid.hpp"
#include "opasis/sampling.hpp"

namespace opasis::testing {

struct FixtureSpec {
    std::string name;
    double target_y0 = 0.0;
    std::vector<double> y0_grid;
};

struct Registry {
    OutageModel model;
    double proposal_p_max = 0.999;
    std::size_t max_stages = 200;
    std::vector<FixtureSpec> fixtures;

    SisConfig proposal(double eta) const { return {eta, proposal_p_max, max_stages}; }
};

std::filesystem::path fixture_dir();
std::filesystem::path data_dir();

const Registry& registry();
Network load_fixture(const std::string& name);

/// Parses an inline JSON case.
Network make_network(const std::string& json);

}  // namespace opasis::testing
