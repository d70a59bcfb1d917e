#include "opasis/oracle.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

#include <json.hpp>

#include "opasis/dc_power.hpp"
#include "opasis/error.hpp"
#include "opasis/hash.hpp"

namespace opasis {

using boost::multiprecision::cpp_int;

Rational to_rational(double x) {
    if (!std::isfinite(x)) throw UsageError("cannot convert a non-finite value to a rational");
    if (x == 0.0) return Rational(0);

    int exp = 0;
    double frac = std::frexp(std::abs(x), &exp);
    cpp_int mant(static_cast<long long>(std::ldexp(frac, 53)));
    exp -= 53;
    Rational exact = exp >= 0 ? Rational(mant << exp) : Rational(mant, cpp_int(1) << -exp);
    if (x < 0) exact = -exact;

    // Walk the continued-fraction convergents of the exact value and keep
    // the first that rounds back to x.
    const cpp_int limit_den = cpp_int(1) << 32;
    const cpp_int limit_num = cpp_int(1) << 53;
    cpp_int h_prev = 1, h = 0, k_prev = 0, k = 1;
    Rational rest = abs(exact);
    for (int i = 0; i < 64; ++i) {
        cpp_int a = numerator(rest) / denominator(rest);
        cpp_int h_next = a * h_prev + h;
        cpp_int k_next = a * k_prev + k;
        h = h_prev;
        k = k_prev;
        h_prev = h_next;
        k_prev = k_next;
        if (k_prev >= limit_den || h_prev >= limit_num) break;
        double approx = static_cast<double>(h_prev) / static_cast<double>(k_prev);
        if (approx == std::abs(x)) return x < 0 ? Rational(-h_prev, k_prev) : Rational(h_prev, k_prev);
        Rational r = rest - Rational(a);
        if (r == 0) break;
        rest = 1 / r;
    }
    return exact;
}

std::string to_string(const Rational& r) {
    if (denominator(r) == 1) return numerator(r).str();
    return numerator(r).str() + "/" + denominator(r).str();
}

namespace {

class Enumerator {
public:
    Enumerator(const Network& net, const OutageModel& model, const SisConfig& cfg, std::size_t cap)
        : net_(net), model_(model), cfg_(cfg), cap_(cap), cache_(net),
          eta_(to_rational(cfg.eta)), p_max_(to_rational(cfg.p_max)) {}

    PathEnumeration run() {
        out_.model = model_;
        out_.config = cfg_;
        expand(SystemState::intact(net_), Rational(1), Rational(1), std::string{}, 0);
        for (const EnumeratedPath& p : out_.paths) {
            out_.total_p += p.p_c;
            out_.total_q += p.q_c;
        }
        return std::move(out_);
    }

private:
    const Rational& exact(double v) {
        auto it = memo_.find(v);
        if (it == memo_.end()) it = memo_.emplace(v, to_rational(v)).first;
        return it->second;
    }

    Rational amplify_exact(const Rational& p) const {
        if (p == 0) return Rational(0);
        Rational cap = p > p_max_ ? p : p_max_;
        Rational scaled = eta_ * p;
        return scaled < cap ? scaled : cap;
    }

    void expand(const SystemState& state, const Rational& p_acc, const Rational& q_acc, const std::string& key,
                std::size_t depth) {
        if (depth == cfg_.max_stages) {
            throw BudgetExceeded("enumeration: a path exceeds max_stages = " + std::to_string(cfg_.max_stages));
        }
        std::shared_ptr<const DispatchResult> d = cache_.get(state);
        std::vector<double> probs = outage_probabilities(net_, state, d->flow.branch_flows, model_);

        std::vector<ComponentIndex> cand;
        std::vector<Rational> p;
        std::vector<Rational> q;
        for (ComponentIndex k = 0; k < state.size(); ++k) {
            if (!state.in_service(k) || probs[k] <= 0.0) continue;
            cand.push_back(k);
            p.push_back(exact(probs[k]));
            q.push_back(amplify_exact(p.back()));
        }
        if (cand.size() > 30) throw BudgetExceeded("enumeration: too many candidate components in one stage");

        const std::size_t subsets = std::size_t{1} << cand.size();
        for (std::size_t mask = 0; mask < subsets; ++mask) {
            Rational ph(1);
            Rational qh(1);
            for (std::size_t i = 0; i < cand.size(); ++i) {
                bool trip = (mask >> i) & 1U;
                ph *= trip ? p[i] : 1 - p[i];
                qh *= trip ? q[i] : 1 - q[i];
            }
            if (ph == 0 && qh == 0) continue;
            if (qh == 0) {
                throw IntegrityError("proposal assigns zero probability to an outcome the true chain allows");
            }
            std::string step = "{";
            SystemState next = state;
            next.stage = state.stage + 1;
            bool first = true;
            for (std::size_t i = 0; i < cand.size(); ++i) {
                if (!((mask >> i) & 1U)) continue;
                if (!first) step += ',';
                first = false;
                step += std::to_string(cand[i]);
                next.status[cand[i]] = ComponentStatus::Tripped;
            }
            step += '}';

            Rational pc = p_acc * ph;
            Rational qc = q_acc * qh;
            if (mask == 0) {
                if (out_.paths.size() >= cap_) {
                    throw BudgetExceeded("enumeration: more than " + std::to_string(cap_) +
                                         " paths; the case is too large for exact enumeration");
                }
                EnumeratedPath path;
                path.key = key + step;
                path.hash = fnv1a64(path.key);
                path.weight = pc / qc;
                path.p_c = std::move(pc);
                path.q_c = std::move(qc);
                path.shed_value = d->shed.total_shed_mw;
                path.shed_mw = to_rational(path.shed_value);
                path.length = depth + 1;
                out_.paths.push_back(std::move(path));
            } else {
                expand(next, pc, qc, key + step, depth + 1);
            }
        }
    }

    const Network& net_;
    OutageModel model_;
    SisConfig cfg_;
    std::size_t cap_;
    DispatchCache cache_;
    Rational eta_;
    Rational p_max_;
    std::map<double, Rational> memo_;
    PathEnumeration out_;
};

}  // namespace

PathEnumeration enumerate(const Network& net, const OutageModel& model, const SisConfig& config,
                          std::size_t path_cap) {
    model.validate();
    config.validate();
    return Enumerator(net, model, config, path_cap).run();
}

TailSummary summarize(const PathEnumeration& e, double y0, std::size_t n_ref) {
    if (n_ref == 0) throw UsageError("reference sample size must be positive");
    TailSummary s;
    s.y0 = y0;
    s.n_ref = n_ref;
    bool have_w = false;
    Rational w0_den;
    for (const EnumeratedPath& p : e.paths) {
        if (p.shed_value < y0) continue;
        ++s.qualifying;
        const Rational w2q = p.weight * p.weight * p.q_c;
        s.mu += p.p_c;
        s.second_moment += w2q;
        w0_den += p.weight * p.q_c;
        Rational y2 = p.shed_mw * p.shed_mw;
        s.risk += p.shed_mw * p.p_c;
        s.risk_second_mcs += y2 * p.p_c;
        s.risk_second_is += y2 * w2q;
        if (p.p_c > 0) {
            if (!have_w || p.weight < s.min_w) s.min_w = p.weight;
            if (!have_w || p.weight > s.max_w) s.max_w = p.weight;
            have_w = true;
        }
    }
    const Rational n(static_cast<long long>(n_ref));
    s.w0_defined = s.mu > 0;
    if (s.w0_defined) s.w0 = s.second_moment / w0_den;
    s.d_mcs = s.mu * (1 - s.mu) / n;
    s.d_is_moment = (s.second_moment - s.mu * s.mu) / n;
    s.d_is_w0 = (s.w0 * s.mu - s.mu * s.mu) / n;
    s.d_risk_mcs = (s.risk_second_mcs - s.risk * s.risk) / n;
    s.d_risk_is = (s.risk_second_is - s.risk * s.risk) / n;
    return s;
}

W0Diagnostic w0_diagnostic(const PathEnumeration& e, double y0) {
    TailSummary s = summarize(e, y0);
    W0Diagnostic d;
    d.mu = s.mu;
    d.defined = s.w0_defined;
    if (!d.defined) return d;
    d.w0 = s.w0;
    d.condition_met = s.w0 < 1;
    d.within_bounds = s.min_w <= s.w0 && s.w0 <= s.max_w;
    d.w0_mu = s.w0 * s.mu;
    return d;
}

PropositionReport verify_propositions(const PathEnumeration& e, double y0) {
    TailSummary s = summarize(e, y0);
    PropositionReport r;
    r.y0 = y0;
    r.defined = s.w0_defined;
    r.qualifying = s.qualifying;
    for (const EnumeratedPath& p : e.paths) {
        if (p.shed_value >= y0 && p.q_c > p.p_c) ++r.proposal_heavier;
    }
    if (r.qualifying > 0) {
        r.proposal_heavier_fraction = static_cast<double>(r.proposal_heavier) / static_cast<double>(r.qualifying);
    }
    if (!r.defined) return r;
    r.bounds_hold = s.min_w <= s.w0 && s.w0 <= s.max_w;
    r.sign_variance_gap = boost::multiprecision::sign(Rational(s.d_is_moment - s.d_mcs));
    r.sign_w0_gap = boost::multiprecision::sign(Rational(s.w0 - 1));
    r.biconditional_holds = r.sign_variance_gap == r.sign_w0_gap;
    return r;
}

void write_golden(std::ostream& out, const PathEnumeration& e, std::span<const double> y0_list, std::size_t n_ref) {
    using nlohmann::json;
    json doc;
    doc["format"] = "opasis-golden/1";
    doc["model"] = {{"p0", e.model.p0}, {"p1", e.model.p1}, {"p_e", e.model.p_e}, {"p_max", e.model.p_max}};
    doc["proposal"] = {{"eta", e.config.eta}, {"p_max", e.config.p_max}, {"max_stages", e.config.max_stages}};
    json paths = json::array();
    for (const EnumeratedPath& p : e.paths) {
        char hex[17];
        std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(p.hash));
        paths.push_back({{"hash", hex},
                         {"key", p.key},
                         {"p_c", to_string(p.p_c)},
                         {"q_c", to_string(p.q_c)},
                         {"w", to_string(p.weight)},
                         {"shed_mw", to_string(p.shed_mw)}});
    }
    doc["paths"] = std::move(paths);
    json summary;
    summary["path_count"] = e.paths.size();
    summary["sum_p_c"] = to_string(e.total_p);
    summary["sum_q_c"] = to_string(e.total_q);
    summary["n_ref"] = n_ref;
    json tails = json::array();
    for (double y0 : y0_list) {
        TailSummary s = summarize(e, y0, n_ref);
        PropositionReport r = verify_propositions(e, y0);
        json t = {{"y0", y0},
                  {"qualifying", s.qualifying},
                  {"mu", to_string(s.mu)},
                  {"risk", to_string(s.risk)},
                  {"d_mcs", to_string(s.d_mcs)},
                  {"d_is", to_string(s.d_is_moment)},
                  {"d_is_from_w0", to_string(s.d_is_w0)},
                  {"d_risk_mcs", to_string(s.d_risk_mcs)},
                  {"d_risk_is", to_string(s.d_risk_is)},
                  {"proposal_heavier_fraction", r.proposal_heavier_fraction}};
        if (s.w0_defined) {
            t["w0"] = to_string(s.w0);
            t["min_w"] = to_string(s.min_w);
            t["max_w"] = to_string(s.max_w);
            t["w0_bounds_hold"] = r.bounds_hold;
            t["variance_reduced"] = s.w0 < 1;
            t["sign_rule_holds"] = r.biconditional_holds;
        } else {
            t["w0"] = nullptr;
        }
        tails.push_back(std::move(t));
    }
    summary["tails"] = std::move(tails);
    doc["summary"] = std::move(summary);
    out << doc.dump(2) << '\n';
}

}  // namespace opasis
