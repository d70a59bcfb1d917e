#include "opasis/grid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "opasis/error.hpp"

namespace opasis {

namespace {

std::optional<long long> as_integer(std::string_view s) {
    long long value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

template <typename T>
void sort_by_id(std::vector<T>& items) {
    std::stable_sort(items.begin(), items.end(), [](const T& a, const T& b) { return id_less(a.id, b.id); });
}

template <typename T>
void require_unique_ids(const std::vector<T>& items, const char* what) {
    for (std::size_t i = 1; i < items.size(); ++i) {
        if (items[i].id == items[i - 1].id) {
            throw IntegrityError(std::string("duplicate ") + what + " id '" + items[i].id + "'");
        }
    }
}

}  // namespace

bool id_less(std::string_view a, std::string_view b) {
    auto ia = as_integer(a);
    auto ib = as_integer(b);
    if (ia && ib) {
        if (*ia != *ib) return *ia < *ib;
        return a < b;
    }
    if (ia != ib && (ia || ib)) return ia.has_value();  // integers before names
    return a < b;
}

Network::Network(std::vector<Bus> buses, std::vector<Branch> branches, std::vector<Generator> generators,
                 double base_mva)
    : buses_(std::move(buses)),
      branches_(std::move(branches)),
      generators_(std::move(generators)),
      base_mva_(base_mva) {
    if (!(base_mva_ > 0.0) || !std::isfinite(base_mva_)) throw IntegrityError("base_mva must be positive");

    sort_by_id(buses_);
    sort_by_id(branches_);
    sort_by_id(generators_);
    require_unique_ids(buses_, "bus");
    require_unique_ids(branches_, "branch");
    require_unique_ids(generators_, "generator");

    for (std::size_t i = 0; i < buses_.size(); ++i) {
        const Bus& b = buses_[i];
        if (!(b.load_mw >= 0.0) || !std::isfinite(b.load_mw)) {
            throw IntegrityError("bus '" + b.id + "' has invalid load " + std::to_string(b.load_mw));
        }
        bus_lookup_.emplace(b.id, i);
        total_load_ += b.load_mw;
    }

    auto lookup = [this](const std::string& id, const std::string& owner) {
        auto it = bus_lookup_.find(id);
        if (it == bus_lookup_.end()) throw IntegrityError(owner + " references unknown bus '" + id + "'");
        return it->second;
    };

    from_.reserve(branches_.size());
    to_.reserve(branches_.size());
    for (const Branch& br : branches_) {
        const std::string owner = "branch '" + br.id + "'";
        from_.push_back(lookup(br.from_bus, owner));
        to_.push_back(lookup(br.to_bus, owner));
        if (from_.back() == to_.back()) throw IntegrityError(owner + " connects a bus to itself");
        if (!(br.reactance > 0.0) || !std::isfinite(br.reactance)) {
            throw IntegrityError(owner + " has nonpositive reactance");
        }
        if (!(br.flow_limit_mw > 0.0)) throw IntegrityError(owner + " has nonpositive flow limit");
    }

    gen_bus_.reserve(generators_.size());
    for (const Generator& g : generators_) {
        gen_bus_.push_back(lookup(g.bus, "generator '" + g.id + "'"));
        if (!(g.capacity_mw >= 0.0) || !std::isfinite(g.capacity_mw)) {
            throw IntegrityError("generator '" + g.id + "' has invalid capacity");
        }
        total_capacity_ += g.capacity_mw;
    }
}

std::optional<std::size_t> Network::bus_index(std::string_view id) const {
    auto it = bus_lookup_.find(std::string(id));
    if (it == bus_lookup_.end()) return std::nullopt;
    return it->second;
}

bool Network::operator==(const Network& other) const {
    return base_mva_ == other.base_mva_ && buses_ == other.buses_ && branches_ == other.branches_ &&
           generators_ == other.generators_;
}

CaseFormat guess_case_format(const std::filesystem::path& path) {
    return path.extension() == ".m" ? CaseFormat::Matpower : CaseFormat::Json;
}

namespace {

using nlohmann::json;

std::string id_of(const json& node, const std::string& field) {
    if (node.is_string()) return node.get<std::string>();
    if (node.is_number_integer()) return std::to_string(node.get<long long>());
    throw ParseError("id must be a string or an integer", 0, field);
}

double number_of(const json& obj, const std::string& key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError("missing field", 0, where + "." + key);
    if (!it->is_number()) throw ParseError("expected a number", 0, where + "." + key);
    return it->get<double>();
}

const json& array_of(const json& doc, const char* key) {
    auto it = doc.find(key);
    if (it == doc.end()) throw ParseError("missing top-level key", 0, key);
    if (!it->is_array()) throw ParseError("expected an array", 0, key);
    return *it;
}

}  // namespace

Network parse_json_case(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(e.what());
    }
    if (!doc.is_object()) throw ParseError("case must be a JSON object");

    std::vector<Bus> buses;
    const json& jb = array_of(doc, "buses");
    for (std::size_t i = 0; i < jb.size(); ++i) {
        const std::string where = "buses[" + std::to_string(i) + "]";
        if (!jb[i].contains("id")) throw ParseError("missing field", 0, where + ".id");
        buses.push_back({id_of(jb[i]["id"], where + ".id"),
                         jb[i].contains("load_mw") ? number_of(jb[i], "load_mw", where) : 0.0});
    }

    std::vector<Branch> branches;
    const json& jl = array_of(doc, "branches");
    for (std::size_t i = 0; i < jl.size(); ++i) {
        const std::string where = "branches[" + std::to_string(i) + "]";
        const json& e = jl[i];
        for (const char* key : {"id", "from_bus", "to_bus"}) {
            if (!e.contains(key)) throw ParseError("missing field", 0, where + "." + key);
        }
        double limit = std::numeric_limits<double>::infinity();
        if (e.contains("flow_limit_mw") && !e["flow_limit_mw"].is_null()) limit = number_of(e, "flow_limit_mw", where);
        branches.push_back({id_of(e["id"], where + ".id"), id_of(e["from_bus"], where + ".from_bus"),
                            id_of(e["to_bus"], where + ".to_bus"), number_of(e, "reactance", where), limit});
    }

    std::vector<Generator> generators;
    if (doc.contains("generators")) {
        const json& jg = array_of(doc, "generators");
        for (std::size_t i = 0; i < jg.size(); ++i) {
            const std::string where = "generators[" + std::to_string(i) + "]";
            for (const char* key : {"id", "bus"}) {
                if (!jg[i].contains(key)) throw ParseError("missing field", 0, where + "." + key);
            }
            generators.push_back({id_of(jg[i]["id"], where + ".id"), id_of(jg[i]["bus"], where + ".bus"),
                                  number_of(jg[i], "capacity_mw", where)});
        }
    }

    double base = doc.contains("base_mva") ? number_of(doc, "base_mva", "") : 100.0;
    return Network(std::move(buses), std::move(branches), std::move(generators), base);
}

std::string to_json_case(const Network& net) {
    json doc;
    doc["base_mva"] = net.base_mva();
    doc["buses"] = json::array();
    for (const Bus& b : net.buses()) doc["buses"].push_back({{"id", b.id}, {"load_mw", b.load_mw}});
    doc["branches"] = json::array();
    for (const Branch& br : net.branches()) {
        json e = {{"id", br.id}, {"from_bus", br.from_bus}, {"to_bus", br.to_bus}, {"reactance", br.reactance}};
        e["flow_limit_mw"] = std::isfinite(br.flow_limit_mw) ? json(br.flow_limit_mw) : json(nullptr);
        doc["branches"].push_back(std::move(e));
    }
    doc["generators"] = json::array();
    for (const Generator& g : net.generators()) {
        doc["generators"].push_back({{"id", g.id}, {"bus", g.bus}, {"capacity_mw", g.capacity_mw}});
    }
    return doc.dump(2) + "\n";
}

namespace {

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open case file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

Network load_case(const std::filesystem::path& path, CaseFormat format, Warnings* warnings) {
    const std::string text = slurp(path);
    try {
        return format == CaseFormat::Json ? parse_json_case(text) : parse_matpower_case(text, warnings);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

Network load_case(const std::filesystem::path& path, Warnings* warnings) {
    return load_case(path, guess_case_format(path), warnings);
}

}  // namespace opasis
