#include "fixtures.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace opasis::testing {

std::filesystem::path fixture_dir() { return OPASIS_FIXTURE_DIR; }
std::filesystem::path data_dir() { return OPASIS_DATA_DIR; }

namespace {

Registry read_registry() {
    std::ifstream in(fixture_dir() / "fixtures.json");
    auto doc = nlohmann::json::parse(in);
    Registry r;
    const auto& m = doc.at("model");
    r.model = {m.at("p0").get<double>(), m.at("p1").get<double>(), m.at("p_e").get<double>(),
               m.at("p_max").get<double>()};
    r.proposal_p_max = doc.at("proposal_p_max").get<double>();
    r.max_stages = doc.at("max_stages").get<std::size_t>();
    for (const auto& f : doc.at("fixtures")) {
        r.fixtures.push_back({f.at("name").get<std::string>(), f.at("target_y0").get<double>(),
                              f.at("y0_grid").get<std::vector<double>>()});
    }
    return r;
}

}  // namespace

const Registry& registry() {
    static const Registry r = read_registry();
    return r;
}

Network load_fixture(const std::string& name) { return load_case(fixture_dir() / (name + ".json")); }

Network make_network(const std::string& json) { return parse_json_case(json); }

}  // namespace opasis::testing
