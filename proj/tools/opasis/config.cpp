#include "config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "opasis/dc_power.hpp"

namespace opasis::cli {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

namespace {

void reject_unknown(const json& obj, const std::string& prefix, const std::set<std::string>& known) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!known.count(it.key())) throw ConfigError(prefix + it.key(), "unknown field");
    }
}

template <typename T>
T get(const json& obj, const std::string& prefix, const char* name) {
    auto it = obj.find(name);
    if (it == obj.end()) throw ConfigError(prefix + name, "required field is missing");
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw ConfigError(prefix + name, "has the wrong type");
    }
}

template <typename T>
void get_opt(const json& obj, const std::string& prefix, const char* name, T& out) {
    if (obj.contains(name)) out = get<T>(obj, prefix, name);
}

json object_at(const json& obj, const char* name) {
    const json& v = obj.at(name);
    if (!v.is_object()) throw ConfigError(name, "must be an object");
    return v;
}

std::filesystem::path anchored(const std::string& p, const std::filesystem::path& base) {
    std::filesystem::path path(p);
    return path.is_relative() && !base.empty() ? (base / path).lexically_normal() : path;
}

void require_nonempty(const std::vector<double>& v, const char* field) {
    if (v.empty()) throw ConfigError(field, "must not be empty");
}

}  // namespace

void validate(const ExperimentConfig& cfg) {
    if (cfg.case_path.empty()) throw ConfigError("case", "must name a case file");
    try {
        cfg.model.validate();
    } catch (const UsageError& e) {
        throw ConfigError("model", e.what());
    }
    if (!(cfg.proposal_p_max > 0.0 && cfg.proposal_p_max <= 1.0)) throw ConfigError("proposal.p_max", "must lie in (0, 1]");
    if (cfg.max_stages == 0) throw ConfigError("proposal.max_stages", "must be positive");
    require_nonempty(cfg.eta_list, "eta_list");
    for (double eta : cfg.eta_list) {
        if (!(eta >= 1.0) || !std::isfinite(eta)) throw ConfigError("eta_list", "every eta must be >= 1");
    }
    if (cfg.n_samples == 0) throw ConfigError("n_samples", "must be at least 1");
    if (cfg.replicates == 0) throw ConfigError("replicates", "must be at least 1");
    require_nonempty(cfg.y0_list, "y0_list");
    for (double y : cfg.y0_list) {
        if (!(y >= 0.0) || !std::isfinite(y)) throw ConfigError("y0_list", "thresholds must be finite and >= 0");
    }
    require_nonempty(cfg.alpha_list, "alpha_list");
    for (double a : cfg.alpha_list) {
        if (!(a > 0.0 && a < 1.0)) throw ConfigError("alpha_list", "every alpha must lie in (0, 1)");
    }
    if (cfg.workers == 0) throw ConfigError("workers", "must be at least 1");
    if (cfg.min_prefix == 0) throw ConfigError("convergence.min_prefix", "must be at least 1");
    if (cfg.path_cap == 0) throw ConfigError("enumeration.path_cap", "must be at least 1");
    if (cfg.n_ref == 0) throw ConfigError("enumeration.n_ref", "must be at least 1");
    if (cfg.derive_limits && (!(cfg.derive_limits->factor > 0.0) || !(cfg.derive_limits->floor_mw > 0.0))) {
        throw ConfigError("derive_limits", "factor and floor_mw must be positive");
    }
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("<document>", e.what());
    }
    if (!doc.is_object()) throw ConfigError("<document>", "must be a JSON object");
    reject_unknown(doc, "",
                   {"case", "derive_limits", "model", "proposal", "eta_list", "n_samples", "replicates", "y0_list",
                    "alpha_list", "seed", "workers", "output_dir", "convergence", "enumeration"});

    ExperimentConfig cfg;
    cfg.case_path = anchored(get<std::string>(doc, "", "case"), base_dir);

    if (doc.contains("derive_limits") && !doc["derive_limits"].is_null()) {
        json d = object_at(doc, "derive_limits");
        reject_unknown(d, "derive_limits.", {"factor", "floor_mw"});
        DerivedLimits dl;
        get_opt(d, "derive_limits.", "factor", dl.factor);
        get_opt(d, "derive_limits.", "floor_mw", dl.floor_mw);
        cfg.derive_limits = dl;
    }

    if (!doc.contains("model")) throw ConfigError("model", "required field is missing");
    json m = object_at(doc, "model");
    reject_unknown(m, "model.", {"p0", "p1", "p_e", "p_max"});
    cfg.model.p0 = get<double>(m, "model.", "p0");
    cfg.model.p1 = get<double>(m, "model.", "p1");
    get_opt(m, "model.", "p_e", cfg.model.p_e);
    get_opt(m, "model.", "p_max", cfg.model.p_max);

    if (doc.contains("proposal")) {
        json p = object_at(doc, "proposal");
        reject_unknown(p, "proposal.", {"p_max", "max_stages"});
        get_opt(p, "proposal.", "p_max", cfg.proposal_p_max);
        get_opt(p, "proposal.", "max_stages", cfg.max_stages);
    }

    get_opt(doc, "", "eta_list", cfg.eta_list);
    get_opt(doc, "", "n_samples", cfg.n_samples);
    get_opt(doc, "", "replicates", cfg.replicates);
    cfg.y0_list = get<std::vector<double>>(doc, "", "y0_list");
    get_opt(doc, "", "alpha_list", cfg.alpha_list);
    get_opt(doc, "", "seed", cfg.seed);
    get_opt(doc, "", "workers", cfg.workers);
    if (doc.contains("output_dir") && !doc["output_dir"].is_null()) {
        cfg.output_dir = get<std::string>(doc, "", "output_dir");
    }

    if (doc.contains("convergence")) {
        json c = object_at(doc, "convergence");
        reject_unknown(c, "convergence.", {"min_prefix"});
        get_opt(c, "convergence.", "min_prefix", cfg.min_prefix);
    }
    if (doc.contains("enumeration")) {
        json e = object_at(doc, "enumeration");
        reject_unknown(e, "enumeration.", {"path_cap", "n_ref"});
        get_opt(e, "enumeration.", "path_cap", cfg.path_cap);
        get_opt(e, "enumeration.", "n_ref", cfg.n_ref);
    }
    validate(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open config " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), path.parent_path());
}

std::string to_canonical_json(const ExperimentConfig& cfg) {
    ordered doc;
    doc["case"] = cfg.case_path.generic_string();
    if (cfg.derive_limits) {
        doc["derive_limits"] = {{"factor", cfg.derive_limits->factor}, {"floor_mw", cfg.derive_limits->floor_mw}};
    } else {
        doc["derive_limits"] = nullptr;
    }
    doc["model"] = {{"p0", cfg.model.p0}, {"p1", cfg.model.p1}, {"p_e", cfg.model.p_e}, {"p_max", cfg.model.p_max}};
    doc["proposal"] = {{"p_max", cfg.proposal_p_max}, {"max_stages", cfg.max_stages}};
    doc["eta_list"] = cfg.eta_list;
    doc["n_samples"] = cfg.n_samples;
    doc["replicates"] = cfg.replicates;
    doc["y0_list"] = cfg.y0_list;
    doc["alpha_list"] = cfg.alpha_list;
    doc["seed"] = cfg.seed;
    doc["workers"] = cfg.workers;
    if (cfg.output_dir.empty()) {
        doc["output_dir"] = nullptr;
    } else {
        doc["output_dir"] = cfg.output_dir.generic_string();
    }
    doc["convergence"] = {{"min_prefix", cfg.min_prefix}};
    doc["enumeration"] = {{"path_cap", cfg.path_cap}, {"n_ref", cfg.n_ref}};
    return doc.dump(2) + "\n";
}

Network load_network(const ExperimentConfig& cfg, Warnings* warnings) {
    Network net = load_case(cfg.case_path, warnings);
    if (cfg.derive_limits) net = with_derived_flow_limits(net, cfg.derive_limits->factor, cfg.derive_limits->floor_mw);
    return net;
}

std::uint64_t campaign_seed(std::uint64_t seed, std::size_t replicate) noexcept {
    // splitmix64 finalizer over (seed, replicate)
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(replicate) + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace opasis::cli
