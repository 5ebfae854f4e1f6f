#pragma once

// Optimal video segmentation: cuts a silhouette stream into fixed-length
// gait cycles using the mismatch series against a maximum-variance
// benchmark frame.

#include <cstdint>
#include <vector>

#include "koopgait/dataio.hpp"

namespace koopgait::ovs {

struct SimilaritySeries {
  std::size_t benchmark_index = 0;
  std::vector<double> values;
};

struct SegmentConfig {
  int cycle_len = 12;
  // Cut at minima of the mismatch series instead of maxima.
  bool use_minima = false;
};

// Fraction of pixels where exactly one of the two binary frames is set.
double similarity(const Frame& m, const Frame& f);

SimilaritySeries select_benchmark(const SilhouetteSequence& seq, int cycle_len);

// Strict local maxima (plateaus resolve to their leftmost index), greedily
// thinned in descending order so that kept peaks are >= ceil(T/2) apart.
std::vector<std::size_t> find_segments(const SimilaritySeries& series, int cycle_len, bool use_minima = false);

std::vector<GaitCycle> extract_cycles(const SilhouetteSequence& seq, const std::vector<std::size_t>& cuts,
                                      int cycle_len);

std::vector<GaitCycle> segment(const SilhouetteSequence& seq, const SegmentConfig& cfg);

// Total pixel comparisons performed by similarity() in this process.
std::uint64_t pixel_comparisons();
void reset_pixel_comparisons();

}  // namespace koopgait::ovs
