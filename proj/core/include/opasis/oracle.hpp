#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "opasis/cascade.hpp"
#include "opasis/grid.hpp"
#include "opasis/sampling.hpp"

namespace opasis {

using Rational = boost::multiprecision::cpp_rational;

/// The simplest rational that converts back to exactly `x` when one with a
/// denominator below 2^32 exists (0.1 -> 1/10), otherwise the exact binary
/// value of `x`. Throws UsageError for non-finite input.
Rational to_rational(double x);

std::string to_string(const Rational& r);

struct EnumeratedPath {
    std::string key;     // outcome sequence, as CascadePath::outcome_key
    std::uint64_t hash;  // fnv1a64 of key
    Rational p_c;
    Rational q_c;
    Rational weight;     // p_c / q_c
    Rational shed_mw;
    double shed_value;   // shed as dispatched
    std::size_t length;  // transitions, including the terminating one
};

/// Every terminating path of the cascade chain, with exact true and proposal
/// probabilities. Paths are in depth-first order, which is deterministic.
struct PathEnumeration {
    std::vector<EnumeratedPath> paths;
    Rational total_p;
    Rational total_q;
    OutageModel model;
    SisConfig config;
};

/// Exact enumeration. Branches with zero true and proposal probability are
/// pruned; outcomes possible under the true chain but not under the proposal
/// raise IntegrityError. Throws BudgetExceeded past `path_cap` paths or when
/// a path outgrows config.max_stages.
PathEnumeration enumerate(const Network& net, const OutageModel& model, const SisConfig& config,
                          std::size_t path_cap = 10'000'000);

/// Exact quantities for the event {Y >= y0} at a reference sample size.
struct TailSummary {
    double y0 = 0.0;
    std::size_t n_ref = 1;
    std::size_t qualifying = 0;      // paths with shed >= y0 and q_c > 0
    Rational mu;                     // sum delta p_c
    Rational second_moment;          // sum delta w^2 q_c
    Rational risk;                   // sum y delta p_c
    Rational risk_second_mcs;        // sum y^2 delta p_c
    Rational risk_second_is;         // sum y^2 delta w^2 q_c
    bool w0_defined = false;         // false when mu = 0
    Rational w0;                     // sum delta w^2 q_c / sum delta w q_c
    Rational min_w;                  // over qualifying paths
    Rational max_w;
    Rational d_mcs;                  // mu (1 - mu) / N
    Rational d_is_moment;            // (second_moment - mu^2) / N
    Rational d_is_w0;                // (w0 mu - mu^2) / N
    Rational d_risk_mcs;
    Rational d_risk_is;
};

TailSummary summarize(const PathEnumeration& e, double y0, std::size_t n_ref = 1);

struct W0Diagnostic {
    bool defined = false;
    Rational w0;
    bool condition_met = false;  // w0 < 1
    bool within_bounds = false;  // min w <= w0 <= max w
    Rational mu;
    Rational w0_mu;
};

/// Exact w0 for {Y >= y0} under the enumeration's proposal.
W0Diagnostic w0_diagnostic(const PathEnumeration& e, double y0);

struct PropositionReport {
    double y0 = 0.0;
    bool defined = false;              // mu > 0
    bool bounds_hold = false;          // min w <= w0 <= max w
    int sign_variance_gap = 0;         // sign(D_IS - D)
    int sign_w0_gap = 0;               // sign(w0 - 1)
    bool biconditional_holds = false;  // the two signs agree
    std::size_t qualifying = 0;
    std::size_t proposal_heavier = 0;  // qualifying paths with q_c > p_c
    double proposal_heavier_fraction = 0.0;
};

PropositionReport verify_propositions(const PathEnumeration& e, double y0);

/// Golden file: one JSON document with every path record (hash, key, p_c,
/// q_c, w, shed as exact fractions) and one summary per threshold.
void write_golden(std::ostream& out, const PathEnumeration& e, std::span<const double> y0_list,
                  std::size_t n_ref = 1);

}  // namespace opasis
