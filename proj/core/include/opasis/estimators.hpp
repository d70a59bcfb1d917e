#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "opasis/sampling.hpp"

namespace opasis {

enum class EstimatorKind { McsProb, IsProb, McsRisk, IsRisk };

std::string_view to_string(EstimatorKind kind) noexcept;

struct Estimate {
    double value = 0.0;
    double variance = 0.0;
    double std_error = 0.0;
    std::size_t n_samples = 0;  // completed paths used; truncated ones are left out
    EstimatorKind kind = EstimatorKind::McsProb;
    bool no_tail_mass = false;  // no sample reached Y0
};

/// Every estimator reads paths [0, prefix) of the set in index order.
inline constexpr std::size_t kAllPaths = std::numeric_limits<std::size_t>::max();

/// Plain Monte Carlo exceedance probability P(Y >= y0). Throws UsageError
/// when the set was not sampled with eta = 1.
Estimate prob_mcs(const SampleSet& samples, double y0, std::size_t prefix = kAllPaths);

/// Weighted exceedance probability with the plug-in second-moment variance.
Estimate prob_is(const SampleSet& samples, double y0, std::size_t prefix = kAllPaths);

/// E[Y 1{Y >= y0}], unweighted when eta = 1 and weighted otherwise.
Estimate risk(const SampleSet& samples, double y0, std::size_t prefix = kAllPaths);

/// A point mass of the weighted empirical shed distribution.
template <typename T>
struct Atom {
    T value;
    T mass;
};

template <typename T>
struct TailMeasures {
    T var{};
    T cvar{};
    T tail_mass{};       // mass at or above var, as a fraction of the total
    bool exact = false;  // tail_mass == 1 - alpha, so risk(var) == (1 - alpha) cvar
    bool empty = true;
};

/// Upper quantile VaR = min{y : F(y) > alpha} and CVaR = E[Y | Y >= VaR]
/// over the normalized atoms. Atoms need not be sorted or merged.
template <typename T>
TailMeasures<T> tail_measures(std::vector<Atom<T>> atoms, const T& alpha) {
    TailMeasures<T> out;
    std::sort(atoms.begin(), atoms.end(), [](const Atom<T>& a, const Atom<T>& b) { return a.value < b.value; });
    T total{};
    for (const Atom<T>& a : atoms) total += a.mass;
    if (!(total > T{})) return out;

    const T threshold = alpha * total;
    T below{};
    std::size_t i = 0;
    while (i < atoms.size()) {
        std::size_t j = i;
        T mass{};
        while (j < atoms.size() && atoms[j].value == atoms[i].value) mass += atoms[j++].mass;
        if (below + mass > threshold) break;
        below += mass;
        i = j;
    }
    if (i == atoms.size()) i = atoms.size() - 1;  // rounding left nothing above alpha

    T tail{};
    T moment{};
    for (std::size_t k = i; k < atoms.size(); ++k) {
        tail += atoms[k].mass;
        moment += atoms[k].mass * atoms[k].value;
    }
    out.var = atoms[i].value;
    out.cvar = moment / tail;
    out.tail_mass = tail / total;
    out.exact = below == threshold;
    out.empty = false;
    return out;
}

/// Tail of E[Y 1{Y >= y0}] over the normalized atoms.
template <typename T>
T tail_risk(const std::vector<Atom<T>>& atoms, const T& y0) {
    T total{};
    T moment{};
    for (const Atom<T>& a : atoms) {
        total += a.mass;
        if (a.value >= y0) moment += a.mass * a.value;
    }
    return total > T{} ? moment / total : T{};
}

struct VarCvar {
    double var = 0.0;
    double cvar = 0.0;
    double tail_mass = 0.0;
    bool exact = false;
    bool flagged = false;  // no completed samples, or alpha falls inside the top atom
};

/// Weighted empirical VaR and CVaR at level alpha in (0, 1). Masses are the
/// path weights, self-normalized.
VarCvar var_cvar(const SampleSet& samples, double alpha, std::size_t prefix = kAllPaths);

/// Unbiased sample variance across replicate estimates. Needs at least two.
double replicate_variance(std::span<const double> estimates);

}  // namespace opasis
