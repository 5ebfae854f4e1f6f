#include "koopgait/ovs.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>
#include <string>

#include "koopgait/error.hpp"

namespace koopgait::ovs {

namespace {

std::atomic<std::uint64_t> g_comparisons{0};

double sample_variance(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return acc / (n - 1.0);
}

void check_length(std::size_t length, int cycle_len) {
  if (cycle_len < 2) throw Error(ErrorCode::BadSpec, "cycle length must be >= 2");
  if (length < 2 * static_cast<std::size_t>(cycle_len))
    throw Error(ErrorCode::SequenceTooShort, "need at least " + std::to_string(2 * cycle_len) +
                                                 " frames, got " + std::to_string(length));
}

}  // namespace

std::uint64_t pixel_comparisons() { return g_comparisons.load(); }
void reset_pixel_comparisons() { g_comparisons.store(0); }

double similarity(const Frame& m, const Frame& f) {
  if (m.rows() != f.rows() || m.cols() != f.cols() || m.size() == 0)
    throw Error(ErrorCode::ShapeMismatch, "frames must share a non-empty shape");
  if (!is_binary(m) || !is_binary(f)) throw Error(ErrorCode::NonBinaryInput, "similarity expects {0,1} frames");
  g_comparisons.fetch_add(static_cast<std::uint64_t>(m.size()), std::memory_order_relaxed);
  const auto mismatch = (m.array() * (1.0 - f.array()) + f.array() * (1.0 - m.array())).sum();
  return mismatch / static_cast<double>(m.size());
}

SimilaritySeries select_benchmark(const SilhouetteSequence& seq, int cycle_len) {
  const std::size_t n = seq.length();
  check_length(n, cycle_len);

  // The mismatch matrix is symmetric with a zero diagonal, so only the
  // C(n,2) upper-triangle pairs are evaluated.
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) d(i, j) = d(j, i) = similarity(seq.frames[i], seq.frames[j]);

  SimilaritySeries best;
  double best_var = -1.0;
  std::vector<double> row(n);
  for (std::size_t m = 0; m < n; ++m) {
    for (std::size_t i = 0; i < n; ++i) row[i] = d(m, i);
    const double var = sample_variance(row);
    if (var > best_var) {
      best_var = var;
      best.benchmark_index = m;
      best.values = row;
    }
  }
  return best;
}

std::vector<std::size_t> find_segments(const SimilaritySeries& series, int cycle_len, bool use_minima) {
  const std::size_t n = series.values.size();
  check_length(n, cycle_len);
  std::vector<double> s = series.values;
  if (use_minima)
    for (auto& v : s) v = -v;

  std::vector<std::size_t> peaks;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(s[i] > s[i - 1])) continue;
    std::size_t j = i;
    while (j + 1 < n && s[j + 1] == s[i]) ++j;
    if (j + 1 < n && s[j + 1] < s[i]) peaks.push_back(i);
    i = j;
  }

  std::stable_sort(peaks.begin(), peaks.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
  const std::size_t min_gap = static_cast<std::size_t>((cycle_len + 1) / 2);
  std::vector<std::size_t> kept;
  for (auto p : peaks) {
    const bool clear = std::all_of(kept.begin(), kept.end(), [&](std::size_t k) {
      return (p > k ? p - k : k - p) >= min_gap;
    });
    if (clear) kept.push_back(p);
  }
  if (kept.size() < 2)
    throw Error(ErrorCode::NoPeriodicity, "found " + std::to_string(kept.size()) + " usable peak(s)");
  std::sort(kept.begin(), kept.end());
  return kept;
}

std::vector<GaitCycle> extract_cycles(const SilhouetteSequence& seq, const std::vector<std::size_t>& cuts,
                                      int cycle_len) {
  if (cycle_len < 2) throw Error(ErrorCode::BadSpec, "cycle length must be >= 2");
  const auto T = static_cast<std::size_t>(cycle_len);
  std::vector<GaitCycle> cycles;
  for (auto c : cuts) {
    if (c + T > seq.length()) continue;
    GaitCycle g;
    g.subject_id = seq.subject_id;
    g.start_index = c;
    g.frames.assign(seq.frames.begin() + static_cast<std::ptrdiff_t>(c),
                    seq.frames.begin() + static_cast<std::ptrdiff_t>(c + T));
    cycles.push_back(std::move(g));
  }
  return cycles;
}

std::vector<GaitCycle> segment(const SilhouetteSequence& seq, const SegmentConfig& cfg) {
  const auto series = select_benchmark(seq, cfg.cycle_len);
  const auto cuts = find_segments(series, cfg.cycle_len, cfg.use_minima);
  return extract_cycles(seq, cuts, cfg.cycle_len);
}

}  // namespace koopgait::ovs
