#include "opasis/estimators.hpp"

#include <cmath>

#include "opasis/error.hpp"
#include "opasis/summation.hpp"

namespace opasis {

std::string_view to_string(EstimatorKind kind) noexcept {
    switch (kind) {
        case EstimatorKind::McsProb: return "mcs_prob";
        case EstimatorKind::IsProb: return "is_prob";
        case EstimatorKind::McsRisk: return "mcs_risk";
        case EstimatorKind::IsRisk: return "is_risk";
    }
    return "unknown";
}

namespace {

std::span<const CascadePath> head(const SampleSet& s, std::size_t prefix) {
    return std::span<const CascadePath>(s.paths).first(std::min(prefix, s.paths.size()));
}

// Mean and plug-in variance of the mean of h(path) over completed paths.
template <typename F>
Estimate mean_of(std::span<const CascadePath> paths, EstimatorKind kind, F h) {
    CompensatedSum sum;
    CompensatedSum sq;
    std::size_t n = 0;
    bool hit = false;
    for (const CascadePath& p : paths) {
        if (p.truncated) continue;
        ++n;
        double v = h(p);
        if (v != 0.0) hit = true;
        sum += v;
        sq += v * v;
    }
    Estimate e;
    e.kind = kind;
    e.n_samples = n;
    e.no_tail_mass = !hit;
    if (n == 0) return e;
    const double nn = static_cast<double>(n);
    e.value = sum.value() / nn;
    e.variance = std::max(0.0, (sq.value() / nn - e.value * e.value) / nn);
    e.std_error = std::sqrt(e.variance);
    return e;
}

}  // namespace

Estimate prob_mcs(const SampleSet& samples, double y0, std::size_t prefix) {
    if (samples.eta != 1.0) {
        throw UsageError("prob_mcs needs a sample set drawn with eta = 1; use prob_is for weighted samples");
    }
    Estimate e = mean_of(head(samples, prefix), EstimatorKind::McsProb,
                         [y0](const CascadePath& p) { return p.shed_mw >= y0 ? 1.0 : 0.0; });
    if (e.n_samples > 0) {
        e.variance = e.value * (1.0 - e.value) / static_cast<double>(e.n_samples);
        e.std_error = std::sqrt(e.variance);
    }
    return e;
}

Estimate prob_is(const SampleSet& samples, double y0, std::size_t prefix) {
    return mean_of(head(samples, prefix), EstimatorKind::IsProb,
                   [y0](const CascadePath& p) { return p.shed_mw >= y0 ? p.weight : 0.0; });
}

Estimate risk(const SampleSet& samples, double y0, std::size_t prefix) {
    if (samples.eta == 1.0) {
        return mean_of(head(samples, prefix), EstimatorKind::McsRisk,
                       [y0](const CascadePath& p) { return p.shed_mw >= y0 ? p.shed_mw : 0.0; });
    }
    return mean_of(head(samples, prefix), EstimatorKind::IsRisk,
                   [y0](const CascadePath& p) { return p.shed_mw >= y0 ? p.shed_mw * p.weight : 0.0; });
}

VarCvar var_cvar(const SampleSet& samples, double alpha, std::size_t prefix) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must lie in (0, 1)");
    std::vector<Atom<double>> atoms;
    double top = -std::numeric_limits<double>::infinity();
    for (const CascadePath& p : head(samples, prefix)) {
        if (p.truncated) continue;
        atoms.push_back({p.shed_mw, p.weight});
        top = std::max(top, p.shed_mw);
    }
    VarCvar out;
    TailMeasures<double> t = tail_measures(std::move(atoms), alpha);
    if (t.empty) {
        out.flagged = true;
        return out;
    }
    out.var = t.var;
    out.cvar = t.cvar;
    out.tail_mass = t.tail_mass;
    out.exact = t.exact;
    out.flagged = !t.exact && t.var == top;
    return out;
}

double replicate_variance(std::span<const double> estimates) {
    if (estimates.size() < 2) throw UsageError("replicate variance needs at least two estimates");
    // Welford: identical estimates give exactly zero.
    double mean = 0.0;
    double m2 = 0.0;
    std::size_t n = 0;
    for (double v : estimates) {
        ++n;
        double delta = v - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (v - mean);
    }
    return m2 / static_cast<double>(n - 1);
}

}  // namespace opasis
