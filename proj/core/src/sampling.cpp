#include "opasis/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include "opasis/error.hpp"

namespace opasis {

void SisConfig::validate() const {
    if (!(eta >= 1.0) || !std::isfinite(eta)) throw UsageError("SIS amplification factor eta must be >= 1");
    if (!(p_max > 0.0 && p_max <= 1.0)) throw UsageError("SIS cap p_max must lie in (0, 1]");
    if (max_stages == 0) throw UsageError("max_stages must be positive");
}

double amplify(double p, const SisConfig& cfg) {
    if (p <= 0.0) return 0.0;
    return std::min(cfg.eta * p, std::max(cfg.p_max, p));
}

StepResult step(const SystemState& state, const Network& net, std::span<const double> flows,
                const OutageModel& model, const SisConfig& cfg, Philox4x32& rng) {
    std::vector<double> p = outage_probabilities(net, state, flows, model);
    std::vector<double> q(p.size(), 0.0);

    StepResult out{state, {}};
    out.next.stage = state.stage + 1;
    TransitionRecord& rec = out.record;
    for (ComponentIndex k = 0; k < state.size(); ++k) {
        if (!state.in_service(k)) continue;
        q[k] = amplify(p[k], cfg);
        if (q[k] > 0.0 && rng.uniform() < q[k]) {
            rec.tripped.push_back(k);
            out.next.status[k] = ComponentStatus::Tripped;
        } else {
            rec.survived.push_back(k);
        }
    }
    rec.p_hat = transition_probability(p, rec.tripped, rec.survived);
    rec.q_hat = transition_probability(q, rec.tripped, rec.survived);
    return out;
}

std::vector<SystemState> CascadePath::states(std::size_t components) const {
    std::vector<SystemState> out;
    SystemState s = SystemState::intact(components);
    out.push_back(s);
    for (const TransitionRecord& r : records) {
        if (r.tripped.empty()) break;
        for (ComponentIndex k : r.tripped) s.status[k] = ComponentStatus::Tripped;
        s.stage += 1;
        out.push_back(s);
    }
    return out;
}

std::string CascadePath::outcome_key() const {
    std::string key;
    for (const TransitionRecord& r : records) {
        key += '{';
        for (std::size_t i = 0; i < r.tripped.size(); ++i) {
            if (i) key += ',';
            key += std::to_string(r.tripped[i]);
        }
        key += '}';
    }
    return key;
}

CascadeSampler::CascadeSampler(const Network& net, const OutageModel& model, const SisConfig& cfg,
                               std::size_t cache_capacity)
    : net_(&net), model_(model), cfg_(cfg), capacity_(cache_capacity) {
    model_.validate();
    cfg_.validate();
}

const CascadeSampler::StageInfo& CascadeSampler::info(const SystemState& state) {
    auto key = state.key();
    if (auto it = entries_.find(key); it != entries_.end()) {
        ++hits_;
        return *it->second;
    }
    ++misses_;
    auto s = std::make_unique<StageInfo>();
    s->dispatch = std::make_shared<const DispatchResult>(dispatch(*net_, state));
    std::vector<double> p = outage_probabilities(*net_, state, s->dispatch->flow.branch_flows, model_);
    for (ComponentIndex k = 0; k < state.size(); ++k) {
        if (!state.in_service(k)) continue;
        double q = amplify(p[k], cfg_);
        if (q <= 0.0) {
            s->idle.push_back(k);
            continue;
        }
        s->candidates.push_back(k);
        s->q.push_back(q);
        s->log_p.push_back(std::log(p[k]));
        s->log1m_p.push_back(std::log1p(-p[k]));
        s->log_q.push_back(std::log(q));
        s->log1m_q.push_back(std::log1p(-q));
    }
    if (entries_.size() < capacity_) return *entries_.emplace(std::move(key), std::move(s)).first->second;
    scratch_ = std::move(s);
    return *scratch_;
}

CascadePath CascadeSampler::sample(Philox4x32& rng, PathDetail detail) {
    CascadePath path;
    SystemState state = SystemState::intact(*net_);
    std::vector<ComponentIndex> tripped;
    for (;;) {
        const StageInfo& s = info(state);
        if (path.stages == cfg_.max_stages) {
            path.truncated = true;
            path.shed_mw = s.dispatch->shed.total_shed_mw;
            break;
        }
        tripped.clear();
        double lp = 0.0;
        double lq = 0.0;
        for (std::size_t i = 0; i < s.candidates.size(); ++i) {
            if (rng.uniform() < s.q[i]) {
                tripped.push_back(s.candidates[i]);
                lp += s.log_p[i];
                lq += s.log_q[i];
            } else {
                lp += s.log1m_p[i];
                lq += s.log1m_q[i];
            }
        }
        if (detail != PathDetail::Summary) {
            TransitionRecord rec;
            rec.p_hat = LogProb::from_log(lp);
            rec.q_hat = LogProb::from_log(lq);
            rec.tripped = tripped;
            if (detail == PathDetail::Full) {
                for (ComponentIndex k = 0; k < state.size(); ++k) {
                    if (state.in_service(k) && !std::binary_search(tripped.begin(), tripped.end(), k)) {
                        rec.survived.push_back(k);
                    }
                }
            }
            path.records.push_back(std::move(rec));
        }
        path.log_p_c += lp;
        path.log_q_c += lq;
        ++path.stages;
        if (tripped.empty()) {
            path.shed_mw = s.dispatch->shed.total_shed_mw;
            break;
        }
        for (ComponentIndex k : tripped) state.status[k] = ComponentStatus::Tripped;
        state.stage += 1;
    }
    path.weight = std::exp(path.log_p_c - path.log_q_c);
    return path;
}

std::size_t SampleSet::truncated_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(paths.begin(), paths.end(), [](const CascadePath& p) { return p.truncated; }));
}

SampleSet run_campaign(const Network& net, const OutageModel& model, const SisConfig& cfg, std::size_t n_samples,
                       std::uint64_t seed, std::size_t workers, PathDetail detail) {
    model.validate();
    cfg.validate();
    if (n_samples == 0) throw UsageError("a campaign needs at least one sample");

    SampleSet set;
    set.eta = cfg.eta;
    set.seed = seed;
    set.model = model;
    set.config = cfg;
    set.paths.resize(n_samples);

    workers = std::clamp<std::size_t>(workers, 1, n_samples);
    auto work = [&](std::size_t first) {
        CascadeSampler sampler(net, model, cfg);
        for (std::size_t i = first; i < n_samples; i += workers) {
            Philox4x32 rng = path_stream(seed, i);
            set.paths[i] = sampler.sample(rng, detail);
        }
    };

    if (workers == 1) {
        work(0);
        return set;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                work(w);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return set;
}

}  // namespace opasis
