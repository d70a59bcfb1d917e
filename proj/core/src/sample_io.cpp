#include "opasis/sample_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "opasis/error.hpp"

namespace opasis {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "opasis-samples/1";

json path_json(std::size_t i, const CascadePath& p) {
    json tripped = json::array();
    json lp = json::array();
    json lq = json::array();
    for (const TransitionRecord& r : p.records) {
        tripped.push_back(r.tripped);
        lp.push_back(r.p_hat.log);
        lq.push_back(r.q_hat.log);
    }
    return {{"i", i},
            {"n", p.stages},
            {"shed_mw", p.shed_mw},
            {"log_p_c", p.log_p_c},
            {"log_q_c", p.log_q_c},
            {"weight", p.weight},
            {"tripped", std::move(tripped)},
            {"log_p_hat", std::move(lp)},
            {"log_q_hat", std::move(lq)},
            {"truncated", p.truncated}};
}

template <typename T>
T field(const json& j, const char* name, std::size_t line) {
    auto it = j.find(name);
    if (it == j.end()) throw ParseError("missing field", line, name);
    try {
        return it->get<T>();
    } catch (const json::exception& e) {
        throw ParseError(e.what(), line, name);
    }
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_samples(std::ostream& out, const SampleSet& set) {
    json header = {{"format", kFormat},
                   {"eta", set.eta},
                   {"seed", set.seed},
                   {"model",
                    {{"p0", set.model.p0}, {"p1", set.model.p1}, {"p_e", set.model.p_e}, {"p_max", set.model.p_max}}},
                   {"config",
                    {{"eta", set.config.eta}, {"p_max", set.config.p_max}, {"max_stages", set.config.max_stages}}},
                   {"n_samples", set.paths.size()}};
    out << header.dump() << '\n';
    for (std::size_t i = 0; i < set.paths.size(); ++i) out << path_json(i, set.paths[i]).dump() << '\n';
    if (!out) throw Error("failed writing sample set");
}

SampleSet read_samples(std::istream& in) {
    std::string text;
    std::size_t line = 0;
    auto next = [&]() -> json {
        if (!std::getline(in, text)) throw ParseError("unexpected end of sample file", line + 1);
        ++line;
        try {
            return json::parse(text);
        } catch (const json::parse_error& e) {
            throw ParseError(e.what(), line);
        }
    };

    json header = next();
    if (field<std::string>(header, "format", line) != kFormat) throw ParseError("unknown format", line, "format");
    SampleSet set;
    set.eta = field<double>(header, "eta", line);
    set.seed = field<std::uint64_t>(header, "seed", line);
    json model = field<json>(header, "model", line);
    set.model.p0 = field<double>(model, "p0", line);
    set.model.p1 = field<double>(model, "p1", line);
    set.model.p_e = field<double>(model, "p_e", line);
    set.model.p_max = field<double>(model, "p_max", line);
    json cfg = field<json>(header, "config", line);
    set.config.eta = field<double>(cfg, "eta", line);
    set.config.p_max = field<double>(cfg, "p_max", line);
    set.config.max_stages = field<std::size_t>(cfg, "max_stages", line);
    const auto n = field<std::size_t>(header, "n_samples", line);

    set.paths.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        json j = next();
        if (field<std::size_t>(j, "i", line) != i) throw ParseError("paths out of order", line, "i");
        CascadePath& p = set.paths[i];
        p.shed_mw = field<double>(j, "shed_mw", line);
        p.log_p_c = field<double>(j, "log_p_c", line);
        p.log_q_c = field<double>(j, "log_q_c", line);
        p.weight = field<double>(j, "weight", line);
        p.truncated = field<bool>(j, "truncated", line);
        auto tripped = field<std::vector<std::vector<ComponentIndex>>>(j, "tripped", line);
        auto lp = field<std::vector<double>>(j, "log_p_hat", line);
        auto lq = field<std::vector<double>>(j, "log_q_hat", line);
        const auto len = field<std::size_t>(j, "n", line);
        p.stages = len;
        if (tripped.size() != lp.size() || tripped.size() != lq.size() || (!tripped.empty() && tripped.size() != len)) {
            throw ParseError("stage lists disagree with n", line, "n");
        }
        p.records.resize(tripped.size());
        for (std::size_t s = 0; s < p.records.size(); ++s) {
            p.records[s].tripped = std::move(tripped[s]);
            p.records[s].p_hat = LogProb::from_log(lp[s]);
            p.records[s].q_hat = LogProb::from_log(lq[s]);
        }
    }
    return set;
}

void save_samples(const std::string& path, const SampleSet& set) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path + " for writing");
    write_samples(out, set);
}

SampleSet load_samples(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    try {
        return read_samples(in);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void write_estimates_csv(std::ostream& out, std::span<const EstimateRow> rows) {
    out << kEstimateCsvHeader << '\n';
    for (const EstimateRow& r : rows) {
        out << to_string(r.estimate.kind) << ',' << format_double(r.y0) << ',' << format_double(r.estimate.value) << ','
            << format_double(r.estimate.variance) << ',' << format_double(r.estimate.std_error) << ','
            << r.estimate.n_samples << ',' << format_double(r.eta) << ',' << r.seed << '\n';
    }
}

}  // namespace opasis
