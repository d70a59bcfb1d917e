#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>

#include "opasis/estimators.hpp"
#include "opasis/sampling.hpp"

namespace opasis {

/// JSON Lines: a header object, then one object per path in index order.
/// Doubles are written in shortest round-trip form, so reading a file back
/// reproduces every stored value bit for bit.
void write_samples(std::ostream& out, const SampleSet& set);
SampleSet read_samples(std::istream& in);

void save_samples(const std::string& path, const SampleSet& set);
SampleSet load_samples(const std::string& path);

struct EstimateRow {
    Estimate estimate;
    double y0 = 0.0;
    double eta = 1.0;
    std::uint64_t seed = 0;
};

inline constexpr const char* kEstimateCsvHeader = "estimator_kind,Y0,value,variance,std_error,N,eta,seed";

/// Writes the header line followed by one line per row.
void write_estimates_csv(std::ostream& out, std::span<const EstimateRow> rows);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace opasis
