#include "commands.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "opasis/dc_power.hpp"
#include "opasis/estimators.hpp"
#include "opasis/hash.hpp"
#include "opasis/oracle.hpp"
#include "opasis/sample_io.hpp"
#include "opasis/summation.hpp"
#include "opasis/sampling.hpp"

namespace opasis::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using ordered = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

// The experiment without execution details: results must not depend on
// the worker count or where they are written.
std::string identity_json(ExperimentConfig cfg) {
    cfg.workers = 1;
    cfg.output_dir.clear();
    return to_canonical_json(cfg);
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot read " + p.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Every output file with its content hash. Rewriting a file under an
// unchanged config must reproduce the recorded hash.
class Manifest {
public:
    Manifest(fs::path dir, const ExperimentConfig& cfg)
        : dir_(std::move(dir)), config_hash_(hex64(fnv1a64(identity_json(cfg)))) {
        fs::path p = dir_ / "manifest.json";
        if (!fs::exists(p)) return;
        json doc = json::parse(slurp(p));
        same_config_ = doc.value("config_fnv1a64", "") == config_hash_;
        for (const json& f : doc.at("files")) files_[f.at("path")] = {f.at("fnv1a64"), f.at("bytes")};
    }

    void write(const std::string& rel, const std::string& content) {
        fs::path p = dir_ / rel;
        fs::create_directories(p.parent_path());
        std::ofstream out(p, std::ios::binary);
        out << content;
        if (!out) throw Error("failed writing " + p.string());
        record(rel, content);
    }

    void record(const std::string& rel, const std::string& content) {
        Entry e{hex64(fnv1a64(content)), content.size()};
        auto it = files_.find(rel);
        if (it != files_.end() && same_config_) {
            if (it->second.hash == e.hash) {
                ++reproduced_;
            } else {
                mismatched_.push_back(rel);
            }
        }
        files_[rel] = e;
    }

    void save() {
        ordered doc;
        doc["format"] = "opasis-manifest/1";
        doc["tool"] = "opasis";
        doc["version"] = kVersion;
        doc["config_fnv1a64"] = config_hash_;
        ordered files = ordered::array();
        for (const auto& [path, e] : files_) files.push_back({{"path", path}, {"fnv1a64", e.hash}, {"bytes", e.bytes}});
        doc["files"] = std::move(files);
        std::ofstream out(dir_ / "manifest.json", std::ios::binary);
        out << doc.dump(2) << '\n';
    }

    int report(std::ostream& log) const {
        if (reproduced_ > 0) log << "reproduced " << reproduced_ << " previously recorded file(s)\n";
        for (const std::string& m : mismatched_) log << "MISMATCH: " << m << " differs from the recorded hash\n";
        return mismatched_.empty() ? kOk : kMismatch;
    }

private:
    struct Entry {
        std::string hash;
        std::size_t bytes;
    };
    fs::path dir_;
    std::string config_hash_;
    bool same_config_ = false;
    std::map<std::string, Entry> files_;
    std::size_t reproduced_ = 0;
    std::vector<std::string> mismatched_;
};

std::string rel(const fs::path& out, const fs::path& p) { return fs::relative(p, out).generic_string(); }

struct Tables {
    std::vector<EstimateRow> estimates;
    std::ostringstream tail;
    // (kind, y0, eta) -> per-replicate values
    std::map<std::tuple<std::string, double, double>, std::vector<double>> replicate_values;

    Tables() { tail << "eta,seed,alpha,VaR,CVaR,tail_mass,exact,flagged\n"; }

    void add(const SampleSet& set, const std::vector<double>& y0_list, const std::vector<double>& alpha_list) {
        for (double y0 : y0_list) {
            Estimate p = set.eta == 1.0 ? prob_mcs(set, y0) : prob_is(set, y0);
            Estimate r = risk(set, y0);
            for (const Estimate& e : {p, r}) {
                estimates.push_back({e, y0, set.eta, set.seed});
                replicate_values[{std::string(to_string(e.kind)), y0, set.eta}].push_back(e.value);
            }
        }
        for (double a : alpha_list) {
            VarCvar v = var_cvar(set, a);
            tail << format_double(set.eta) << ',' << set.seed << ',' << format_double(a) << ',' << format_double(v.var)
                 << ',' << format_double(v.cvar) << ',' << format_double(v.tail_mass) << ',' << v.exact << ','
                 << v.flagged << '\n';
        }
    }

    std::string estimates_csv() const {
        std::ostringstream s;
        write_estimates_csv(s, estimates);
        return s.str();
    }

    std::string replicates_csv() const {
        std::ostringstream s;
        s << "estimator_kind,Y0,eta,m,mean,replicate_variance\n";
        for (const auto& [key, values] : replicate_values) {
            const auto& [kind, y0, eta] = key;
            double mean = 0.0;
            for (double v : values) mean += v;
            mean /= static_cast<double>(values.size());
            s << kind << ',' << format_double(y0) << ',' << format_double(eta) << ',' << values.size() << ','
              << format_double(mean) << ',';
            if (values.size() >= 2) s << format_double(replicate_variance(values));
            s << '\n';
        }
        return s.str();
    }
};

Network network_for(const ExperimentConfig& cfg, std::ostream& log) {
    Warnings warnings;
    Network net = load_network(cfg, &warnings);
    for (const std::string& w : warnings) log << "warning: " << w << '\n';
    return net;
}

}  // namespace

fs::path resolve_output_dir(const ExperimentConfig& cfg, const fs::path& config_path) {
    if (!cfg.output_dir.empty()) return cfg.output_dir;
    fs::path root = "runs";
    if (const char* env = std::getenv("OPASIS_OUTPUT_ROOT"); env && *env) root = env;
    return root / config_path.stem();
}

std::string eta_label(double eta) { return "eta_" + format_double(eta); }

fs::path sample_file(const fs::path& out, double eta, std::size_t replicate) {
    char name[32];
    std::snprintf(name, sizeof name, "rep_%04zu.jsonl", replicate);
    return out / "samples" / eta_label(eta) / name;
}

std::vector<std::size_t> geometric_prefixes(std::size_t n, std::size_t min_prefix) {
    std::vector<std::size_t> out{n};
    while (out.back() / 2 >= min_prefix) out.push_back(out.back() / 2);
    return {out.rbegin(), out.rend()};
}

int cmd_run(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
    Network net = network_for(cfg, log);
    fs::create_directories(out);
    Manifest manifest(out, cfg);
    manifest.write("config.json", identity_json(cfg));

    Tables tables;
    std::ostringstream campaigns;
    campaigns << "eta,replicate,seed,n_samples,truncated\n";
    for (double eta : cfg.eta_list) {
        for (std::size_t r = 0; r < cfg.replicates; ++r) {
            std::uint64_t seed = campaign_seed(cfg.seed, r);
            SampleSet set = run_campaign(net, cfg.model, cfg.proposal(eta), cfg.n_samples, seed, cfg.workers);
            std::ostringstream text;
            write_samples(text, set);
            manifest.write(rel(out, sample_file(out, eta, r)), text.str());
            tables.add(set, cfg.y0_list, cfg.alpha_list);
            campaigns << format_double(eta) << ',' << r << ',' << seed << ',' << set.size() << ','
                      << set.truncated_count() << '\n';
            if (set.truncated_count() > 0) {
                log << "warning: " << set.truncated_count() << " truncated path(s) at eta " << format_double(eta)
                    << ", replicate " << r << "; they are left out of every estimate\n";
            }
        }
        log << "eta " << format_double(eta) << ": " << cfg.replicates << " campaign(s) of " << cfg.n_samples
            << " paths\n";
    }
    manifest.write("campaigns.csv", campaigns.str());
    manifest.write("estimates.csv", tables.estimates_csv());
    manifest.write("tail.csv", tables.tail.str());
    manifest.write("replicates.csv", tables.replicates_csv());
    manifest.save();
    log << "wrote " << out.string() << '\n';
    return manifest.report(log);
}

namespace {

// Loads every replicate of one eta, or lists what is missing.
std::vector<SampleSet> load_replicates(const ExperimentConfig& cfg, const fs::path& out, double eta,
                                       std::vector<std::string>& missing) {
    std::vector<SampleSet> sets;
    for (std::size_t r = 0; r < cfg.replicates; ++r) {
        fs::path p = sample_file(out, eta, r);
        if (!fs::exists(p)) {
            missing.push_back(p.string());
            continue;
        }
        sets.push_back(load_samples(p.string()));
    }
    return sets;
}

bool report_missing(const std::vector<std::string>& missing, std::ostream& log) {
    if (missing.empty()) return false;
    log << "error: campaign data missing; run `opasis run` first. Absent files:\n";
    for (const std::string& m : missing) log << "  " << m << '\n';
    return true;
}

}  // namespace

int cmd_convergence(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
    std::vector<std::string> missing;
    std::map<double, std::vector<SampleSet>> by_eta;
    for (double eta : cfg.eta_list) by_eta[eta] = load_replicates(cfg, out, eta, missing);
    if (report_missing(missing, log)) return kFailure;

    Manifest manifest(out, cfg);
    const std::vector<std::size_t> prefixes = geometric_prefixes(cfg.n_samples, cfg.min_prefix);
    for (double y0 : cfg.y0_list) {
        std::ostringstream s;
        s << "eta,estimator_kind,n,m,mean,replicate_variance,mean_plugin_variance\n";
        for (double eta : cfg.eta_list) {
            const std::vector<SampleSet>& sets = by_eta[eta];
            for (int which = 0; which < 2; ++which) {
                for (std::size_t n : prefixes) {
                    std::vector<double> values;
                    double plugin = 0.0;
                    EstimatorKind kind{};
                    for (const SampleSet& set : sets) {
                        Estimate e = which == 0 ? (eta == 1.0 ? prob_mcs(set, y0, n) : prob_is(set, y0, n))
                                                : risk(set, y0, n);
                        kind = e.kind;
                        values.push_back(e.value);
                        plugin += e.variance;
                    }
                    const double mean = compensated_sum(values) / static_cast<double>(values.size());
                    s << format_double(eta) << ',' << to_string(kind) << ',' << n << ',' << values.size() << ','
                      << format_double(mean) << ',';
                    if (values.size() >= 2) s << format_double(replicate_variance(values));
                    s << ',' << format_double(plugin / static_cast<double>(values.size())) << '\n';
                }
            }
        }
        manifest.write("convergence/y0_" + format_double(y0) + ".csv", s.str());
    }
    manifest.save();
    log << "wrote " << cfg.y0_list.size() << " convergence curve file(s) with " << prefixes.size()
        << " prefix point(s) each\n";
    return manifest.report(log);
}

int cmd_enumerate(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
    Network net = network_for(cfg, log);
    fs::create_directories(out);
    Manifest manifest(out, cfg);
    std::ostringstream report;
    report << "eta,Y0,mu,w0,min_w,max_w,w0_bounds_hold,sign_d_is_minus_d,sign_w0_minus_1,sign_rule_holds,"
              "qualifying,proposal_heavier_fraction\n";
    for (double eta : cfg.eta_list) {
        PathEnumeration e;
        try {
            e = enumerate(net, cfg.model, cfg.proposal(eta), cfg.path_cap);
        } catch (const BudgetExceeded& b) {
            log << "error: " << b.what() << "\n"
                << "exact enumeration is only practical for systems with a few branches; "
                   "use `opasis run` to estimate by sampling instead\n";
            return kBudget;
        }
        std::ostringstream golden;
        write_golden(golden, e, cfg.y0_list, cfg.n_ref);
        manifest.write("golden/" + eta_label(eta) + ".json", golden.str());
        log << eta_label(eta) << ": " << e.paths.size() << " paths, sum p_c = " << to_string(e.total_p)
            << ", sum q_c = " << to_string(e.total_q) << '\n';
        for (double y0 : cfg.y0_list) {
            TailSummary s = summarize(e, y0, cfg.n_ref);
            PropositionReport r = verify_propositions(e, y0);
            report << format_double(eta) << ',' << format_double(y0) << ',' << format_double(s.mu.convert_to<double>())
                   << ',';
            if (r.defined) {
                report << format_double(s.w0.convert_to<double>()) << ',' << format_double(s.min_w.convert_to<double>())
                       << ',' << format_double(s.max_w.convert_to<double>()) << ',' << r.bounds_hold << ','
                       << r.sign_variance_gap << ',' << r.sign_w0_gap << ',' << r.biconditional_holds;
            } else {
                report << ",,,,,,";
            }
            report << ',' << r.qualifying << ',' << format_double(r.proposal_heavier_fraction) << '\n';
        }
    }
    manifest.write("propositions.csv", report.str());
    manifest.save();
    return manifest.report(log);
}

int cmd_analyze(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
    std::vector<std::string> missing;
    Tables tables;
    std::vector<std::vector<SampleSet>> loaded;
    for (double eta : cfg.eta_list) loaded.push_back(load_replicates(cfg, out, eta, missing));
    if (report_missing(missing, log)) return kFailure;
    for (const auto& sets : loaded) {
        for (const SampleSet& set : sets) tables.add(set, cfg.y0_list, cfg.alpha_list);
    }
    Manifest manifest(out, cfg);
    manifest.write("analysis/estimates.csv", tables.estimates_csv());
    manifest.write("analysis/tail.csv", tables.tail.str());
    manifest.write("analysis/replicates.csv", tables.replicates_csv());
    manifest.save();
    log << "wrote " << (out / "analysis").string() << '\n';
    return manifest.report(log);
}

int cmd_derive_limits(const fs::path& case_path, double factor, double floor_mw, const fs::path& dest,
                      std::ostream& log) {
    Warnings warnings;
    Network net = load_case(case_path, &warnings);
    for (const std::string& w : warnings) log << "warning: " << w << '\n';
    Network limited = with_derived_flow_limits(net, factor, floor_mw);
    if (dest.has_parent_path()) fs::create_directories(dest.parent_path());
    std::ofstream o(dest, std::ios::binary);
    o << to_json_case(limited);
    if (!o) throw Error("failed writing " + dest.string());
    log << "wrote " << dest.string() << " (" << limited.branch_count() << " branches)\n";
    return kOk;
}

int cmd_verify(const fs::path& out, std::ostream& log) {
    fs::path p = out / "manifest.json";
    if (!fs::exists(p)) {
        log << "error: no manifest at " << p.string() << '\n';
        return kFailure;
    }
    json doc = json::parse(slurp(p));
    std::size_t ok = 0;
    std::size_t bad = 0;
    for (const json& f : doc.at("files")) {
        fs::path file = out / f.at("path").get<std::string>();
        if (!fs::exists(file)) {
            log << "MISSING: " << f.at("path").get<std::string>() << '\n';
            ++bad;
            continue;
        }
        if (hex64(fnv1a64(slurp(file))) != f.at("fnv1a64").get<std::string>()) {
            log << "MISMATCH: " << f.at("path").get<std::string>() << '\n';
            ++bad;
        } else {
            ++ok;
        }
    }
    log << ok << " file(s) match, " << bad << " problem(s)\n";
    return bad == 0 ? kOk : kMismatch;
}

}  // namespace opasis::cli
