// Reader for the subset of the MATPOWER case format needed for DC analysis:
// mpc.baseMVA plus the bus, gen and branch matrices.

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <sstream>

#include "opasis/error.hpp"
#include "opasis/grid.hpp"

namespace opasis {

namespace {

struct Row {
    std::size_t line;
    std::vector<double> values;
};

struct Matrix {
    std::size_t line = 0;
    std::vector<Row> rows;
};

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string_view strip_comment(std::string_view line) {
    auto pos = line.find('%');
    return pos == std::string_view::npos ? line : line.substr(0, pos);
}

void parse_numbers(std::string_view text, std::size_t line, const std::string& field, std::vector<double>& out) {
    std::string buf(text);
    for (char& c : buf) {
        if (c == ',') c = ' ';
    }
    std::istringstream ss(buf);
    std::string tok;
    while (ss >> tok) {
        char* end = nullptr;
        double v = std::strtod(tok.c_str(), &end);
        if (end == tok.c_str() || *end != '\0') throw ParseError("not a number: '" + tok + "'", line, field);
        out.push_back(v);
    }
}

class CaseText {
public:
    explicit CaseText(std::string_view text) { split(text); }

    std::map<std::string, Matrix> matrices;
    std::map<std::string, std::pair<std::size_t, std::string>> scalars;

private:
    void split(std::string_view text) {
        std::size_t line_no = 0;
        std::string open_name;
        Matrix current;
        std::vector<double> pending;
        std::size_t pending_line = 0;

        auto flush_row = [&]() {
            if (!pending.empty()) current.rows.push_back({pending_line, std::move(pending)});
            pending.clear();
        };

        while (!text.empty()) {
            auto nl = text.find('\n');
            std::string_view raw = text.substr(0, nl);
            text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
            ++line_no;
            std::string_view line = trim(strip_comment(raw));
            if (line.empty()) continue;

            if (open_name.empty()) {
                auto eq = line.find('=');
                if (eq == std::string_view::npos) continue;  // function header and similar
                std::string lhs(trim(line.substr(0, eq)));
                std::string_view rhs = trim(line.substr(eq + 1));
                if (lhs.rfind("mpc.", 0) != 0) continue;
                std::string name = lhs.substr(4);
                if (!rhs.empty() && rhs.front() == '[') {
                    open_name = name;
                    current = Matrix{line_no, {}};
                    line = trim(rhs.substr(1));
                } else {
                    if (!rhs.empty() && rhs.back() == ';') rhs.remove_suffix(1);
                    scalars[name] = {line_no, std::string(trim(rhs))};
                    continue;
                }
            }

            // Inside a matrix: rows end at ';' or at end of line.
            bool closes = false;
            auto close = line.find(']');
            if (close != std::string_view::npos) {
                closes = true;
                line = line.substr(0, close);
            }
            while (!line.empty()) {
                auto semi = line.find(';');
                std::string_view chunk = line.substr(0, semi);
                if (pending.empty()) pending_line = line_no;
                parse_numbers(chunk, line_no, open_name, pending);
                if (semi == std::string_view::npos) break;
                flush_row();
                line.remove_prefix(semi + 1);
            }
            flush_row();
            if (closes) {
                matrices[open_name] = std::move(current);
                open_name.clear();
            }
        }
        if (!open_name.empty()) throw ParseError("unterminated matrix", current.line, "mpc." + open_name);
    }
};

const Matrix& require_matrix(const CaseText& doc, const std::string& name) {
    auto it = doc.matrices.find(name);
    if (it == doc.matrices.end()) throw ParseError("missing matrix", 0, "mpc." + name);
    return it->second;
}

void require_columns(const Row& row, std::size_t n, const std::string& field) {
    if (row.values.size() < n) {
        throw ParseError("expected at least " + std::to_string(n) + " columns, found " +
                             std::to_string(row.values.size()),
                         row.line, field);
    }
}

std::string int_id(double v, std::size_t line, const std::string& field) {
    if (v != std::floor(v)) throw ParseError("bus number must be an integer", line, field);
    return std::to_string(static_cast<long long>(v));
}

// Columns read from each table; everything past these is ignored.
constexpr std::size_t kBusUsed = 3;     // bus_i type Pd
constexpr std::size_t kGenUsed = 9;     // bus Pg Qg Qmax Qmin Vg mBase status Pmax
constexpr std::size_t kBranchUsed = 11; // fbus tbus r x b rateA rateB rateC ratio angle status

void warn_ignored(const Matrix& m, std::size_t used, const char* table, Warnings* warnings) {
    if (!warnings || m.rows.empty()) return;
    std::size_t width = m.rows.front().values.size();
    if (width > used) {
        warnings->push_back(std::string(table) + ": ignoring " + std::to_string(width - used) +
                            " unsupported column(s)");
    }
}

}  // namespace

Network parse_matpower_case(std::string_view text, Warnings* warnings) {
    CaseText doc(text);
    auto note = [warnings](std::string msg) {
        if (warnings) warnings->push_back(std::move(msg));
    };

    double base_mva = 100.0;
    if (auto it = doc.scalars.find("baseMVA"); it != doc.scalars.end()) {
        std::vector<double> v;
        parse_numbers(it->second.second, it->second.first, "mpc.baseMVA", v);
        if (v.size() != 1) throw ParseError("expected a scalar", it->second.first, "mpc.baseMVA");
        base_mva = v.front();
    } else {
        note("mpc.baseMVA missing; assuming 100");
    }
    for (const auto& [name, m] : doc.matrices) {
        if (name != "bus" && name != "gen" && name != "branch") note("mpc." + name + ": table ignored");
    }

    std::vector<Bus> buses;
    std::vector<Generator> generators;
    const Matrix& bus = require_matrix(doc, "bus");
    warn_ignored(bus, kBusUsed, "mpc.bus", warnings);
    for (const Row& row : bus.rows) {
        require_columns(row, kBusUsed, "mpc.bus");
        std::string id = int_id(row.values[0], row.line, "mpc.bus");
        double pd = row.values[2];
        if (pd < 0.0) {
            // Negative demand is a fixed injection; model it as dispatchable supply.
            generators.push_back({"L" + id, id, -pd});
            note("bus " + id + ": negative load " + std::to_string(pd) + " MW modeled as generator L" + id);
            pd = 0.0;
        }
        buses.push_back({std::move(id), pd});
    }

    const Matrix& gen = require_matrix(doc, "gen");
    warn_ignored(gen, kGenUsed, "mpc.gen", warnings);
    for (std::size_t i = 0; i < gen.rows.size(); ++i) {
        const Row& row = gen.rows[i];
        require_columns(row, kGenUsed, "mpc.gen");
        std::string gid = "G" + std::to_string(i + 1);
        if (row.values[7] <= 0.0) {
            note("generator " + gid + " out of service; skipped");
            continue;
        }
        double pmax = row.values[8];
        if (pmax < 0.0) throw ParseError("negative Pmax", row.line, "mpc.gen.Pmax");
        generators.push_back({gid, int_id(row.values[0], row.line, "mpc.gen"), pmax});
    }

    std::vector<Branch> branches;
    const Matrix& br = require_matrix(doc, "branch");
    warn_ignored(br, kBranchUsed, "mpc.branch", warnings);
    for (std::size_t i = 0; i < br.rows.size(); ++i) {
        const Row& row = br.rows[i];
        require_columns(row, kBranchUsed, "mpc.branch");
        std::string bid = std::to_string(i + 1);
        if (row.values[10] <= 0.0) {
            note("branch " + bid + " out of service; skipped");
            continue;
        }
        double x = row.values[3];
        if (x == 0.0) throw ParseError("zero reactance", row.line, "mpc.branch.x");
        if (x < 0.0) {
            note("branch " + bid + ": negative reactance " + std::to_string(x) + " replaced by its magnitude");
            x = -x;
        }
        double rate = row.values[5];
        if (rate < 0.0) throw ParseError("negative rateA", row.line, "mpc.branch.rateA");
        if (rate == 0.0) rate = std::numeric_limits<double>::infinity();
        branches.push_back({bid, int_id(row.values[0], row.line, "mpc.branch"),
                            int_id(row.values[1], row.line, "mpc.branch"), x, rate});
    }

    return Network(std::move(buses), std::move(branches), std::move(generators), base_mva);
}

}  // namespace opasis
