#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "trajrl/embedding.hpp"

/**
 * Needleman-Wunsch alignment between embedding sequences, scored with a
 * thresholded cosine similarity.
 *
 * Two formulations are provided: the simple V/W recurrence, where skipped
 * elements are free, and the affine-gap three-matrix form (Gotoh), where a
 * run of skipped elements costs gap_open for its first element and
 * gap_extend for each further one. Both have brute-force enumeration
 * oracles over monotone matchings.
 */

namespace trajrl {

class NwError : public std::runtime_error {
 public:
  explicit NwError(const std::string& what) : std::runtime_error(what) {}
};

struct NwParams {
  double tau = 0.5;              // similarity threshold in [-1, 1]
  double mismatch_penalty = 0.5; // subtracted when cosine falls below tau
  double gap_open = -0.4;
  double gap_extend = -0.1;

  // gap_open <= gap_extend < 0: extending a run is never worse than
  // opening a new one, which is what makes the run-based oracle exact.
  void validate() const {
    if (tau < -1.0 || tau > 1.0) throw NwError("tau must be in [-1, 1]");
    if (mismatch_penalty < 0.0)
      throw NwError("mismatch_penalty must be >= 0");
    if (!(gap_open < 0.0) || !(gap_extend < 0.0))
      throw NwError("gap penalties must be negative");
    if (gap_open > gap_extend)
      throw NwError("|gap_open| must be >= |gap_extend|");
  }
};

struct NwResult {
  double score = 0.0;
  double reward = 0.0;               // clamp(score / m, 0, 1)
  std::uint64_t matrices_checksum = 0;  // digest of the final M/X/Y rows
};

/// One maximal run of skipped elements in one of the two sequences.
struct GapRun {
  bool in_generated = false;  // true: generated steps skipped, false: ground truth
  std::size_t start = 0;      // 1-based index of the first skipped element
  std::size_t length = 0;
};

struct NwAlignment {
  std::vector<std::pair<std::size_t, std::size_t>> matches;  // 1-based
  std::vector<GapRun> gaps;
  double score = 0.0;
};

/**
 * Cosine similarity, with the mismatch penalty applied below the threshold:
 * returns cos if cos >= tau, else cos - mismatch_penalty. A zero-norm vector
 * has cosine 0 against everything.
 */
inline double thresholded_cosine(const Vec& a, const Vec& b,
                                 const NwParams& params) {
  if (a.size() != b.size())
    throw NwError("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                  std::to_string(b.size()));
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  double cos = 0.0;
  if (na > 0.0 && nb > 0.0) cos = dot / (std::sqrt(na) * std::sqrt(nb));
  return cos >= params.tau ? cos : cos - params.mismatch_penalty;
}

namespace detail {

inline void check_nw_inputs(const EmbeddingSequence& generated,
                            const EmbeddingSequence& ground_truth) {
  if (generated.empty() || ground_truth.empty())
    throw NwError("sequences must be non-empty");
  if (generated.front().size() != ground_truth.front().size())
    throw NwError("dimension mismatch between sequences");
}

inline std::uint64_t fnv_append(std::uint64_t h, double x) {
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(x));
  std::memcpy(&bits, &x, sizeof(bits));
  for (int s = 0; s < 64; s += 8) {
    h ^= (bits >> s) & 0xffULL;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/**
 * Maximum alignment score W(n, m) of the simple formulation: V(k, l) is the
 * best score of a matching ending at the pair (k, l), W its running prefix
 * maximum. Skipped elements carry no penalty, so the empty matching floors
 * the score at 0.
 */
inline double nw_score_simple(const EmbeddingSequence& generated,
                              const EmbeddingSequence& ground_truth,
                              const NwParams& params) {
  detail::check_nw_inputs(generated, ground_truth);
  params.validate();
  const std::size_t n = generated.size();
  const std::size_t m = ground_truth.size();

  // W(k-1, l-1) is exactly the max of V over the strict predecessor box,
  // so V never needs to be materialized separately.
  std::vector<double> w((n + 1) * (m + 1), 0.0);
  auto at = [m](std::size_t i, std::size_t j) { return i * (m + 1) + j; };
  for (std::size_t k = 1; k <= n; ++k) {
    for (std::size_t l = 1; l <= m; ++l) {
      const double v = w[at(k - 1, l - 1)] +
                       thresholded_cosine(generated[k - 1],
                                          ground_truth[l - 1], params);
      w[at(k, l)] = std::max({w[at(k - 1, l)], w[at(k, l - 1)], v});
    }
  }
  return w[at(n, m)];
}

namespace detail {

struct AffineMatrices {
  std::size_t n = 0, m = 0;
  std::vector<double> M, X, Y;  // (n+1) x (m+1), row-major

  double& at(std::vector<double>& a, std::size_t i, std::size_t j) {
    return a[i * (m + 1) + j];
  }
  double get(const std::vector<double>& a, std::size_t i,
             std::size_t j) const {
    return a[i * (m + 1) + j];
  }
};

// Gotoh recurrences. M ends with a matched pair; X ends with a skipped
// ground-truth element; Y ends with a skipped generated element.
inline AffineMatrices fill_affine(const EmbeddingSequence& generated,
                                  const EmbeddingSequence& ground_truth,
                                  const NwParams& params) {
  const std::size_t n = generated.size();
  const std::size_t m = ground_truth.size();
  const double neg_inf = -std::numeric_limits<double>::infinity();

  AffineMatrices mat;
  mat.n = n;
  mat.m = m;
  mat.M.assign((n + 1) * (m + 1), neg_inf);
  mat.X.assign((n + 1) * (m + 1), neg_inf);
  mat.Y.assign((n + 1) * (m + 1), neg_inf);

  // Boundaries: X[0,j] = gap_open + (j-1) * gap_extend and symmetrically
  // for Y[i,0], built by the same incremental additions the interior uses
  // so that traceback can compare bit-for-bit.
  mat.at(mat.M, 0, 0) = 0.0;
  for (std::size_t j = 1; j <= m; ++j)
    mat.at(mat.X, 0, j) = (j == 1) ? params.gap_open
                                   : mat.get(mat.X, 0, j - 1) +
                                         params.gap_extend;
  for (std::size_t i = 1; i <= n; ++i)
    mat.at(mat.Y, i, 0) = (i == 1) ? params.gap_open
                                   : mat.get(mat.Y, i - 1, 0) +
                                         params.gap_extend;

  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const double s =
          thresholded_cosine(generated[i - 1], ground_truth[j - 1], params);
      mat.at(mat.M, i, j) =
          s + std::max({mat.get(mat.M, i - 1, j - 1),
                        mat.get(mat.X, i - 1, j - 1),
                        mat.get(mat.Y, i - 1, j - 1)});
      mat.at(mat.X, i, j) =
          std::max({mat.get(mat.M, i, j - 1) + params.gap_open,
                    mat.get(mat.X, i, j - 1) + params.gap_extend,
                    mat.get(mat.Y, i, j - 1) + params.gap_open});
      mat.at(mat.Y, i, j) =
          std::max({mat.get(mat.M, i - 1, j) + params.gap_open,
                    mat.get(mat.Y, i - 1, j) + params.gap_extend,
                    mat.get(mat.X, i - 1, j) + params.gap_open});
    }
  }
  return mat;
}

}  // namespace detail

/**
 * Affine-gap alignment score: max of M, X, Y at (n, m). The reward is
 * clamp(score / m, 0, 1) with m the ground-truth length, so a perfect
 * step-for-step match scores exactly 1.
 */
inline NwResult nw_score_affine(const EmbeddingSequence& generated,
                                const EmbeddingSequence& ground_truth,
                                const NwParams& params) {
  detail::check_nw_inputs(generated, ground_truth);
  params.validate();
  const auto mat = detail::fill_affine(generated, ground_truth, params);
  const std::size_t n = mat.n;
  const std::size_t m = mat.m;

  NwResult result;
  result.score = std::max({mat.get(mat.M, n, m), mat.get(mat.X, n, m),
                           mat.get(mat.Y, n, m)});
  result.reward =
      std::clamp(result.score / static_cast<double>(m), 0.0, 1.0);

  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t j = 0; j <= m; ++j) h = detail::fnv_append(h, mat.get(mat.M, n, j));
  for (std::size_t j = 0; j <= m; ++j) h = detail::fnv_append(h, mat.get(mat.X, n, j));
  for (std::size_t j = 0; j <= m; ++j) h = detail::fnv_append(h, mat.get(mat.Y, n, j));
  result.matrices_checksum = h;
  return result;
}

/// Affine-gap alignment reward in [0, 1].
inline double nw_reward(const EmbeddingSequence& generated,
                        const EmbeddingSequence& ground_truth,
                        const NwParams& params) {
  return nw_score_affine(generated, ground_truth, params).reward;
}

/**
 * Affine alignment with traceback: the matched index pairs plus the maximal
 * runs of skipped elements on either side. Ties prefer M, then X, then Y.
 */
inline NwAlignment nw_align_affine(const EmbeddingSequence& generated,
                                   const EmbeddingSequence& ground_truth,
                                   const NwParams& params) {
  detail::check_nw_inputs(generated, ground_truth);
  params.validate();
  const auto mat = detail::fill_affine(generated, ground_truth, params);
  const std::size_t n = mat.n;
  const std::size_t m = mat.m;

  NwAlignment out;
  out.score = std::max({mat.get(mat.M, n, m), mat.get(mat.X, n, m),
                        mat.get(mat.Y, n, m)});

  // Walk back cell by cell. skipped_* collect 1-based indices, grouped into
  // maximal runs afterwards.
  std::vector<bool> gen_skipped(n + 1, false), gt_skipped(m + 1, false);
  std::size_t i = n, j = m;
  char state;
  if (mat.get(mat.M, i, j) == out.score) state = 'M';
  else if (mat.get(mat.X, i, j) == out.score) state = 'X';
  else state = 'Y';

  // Comparisons recompute the exact forward expression, so the stored
  // optimum always matches at least one candidate bit-for-bit.
  while (i > 0 || j > 0) {
    if (state == 'M') {
      out.matches.emplace_back(i, j);
      const double cur = mat.get(mat.M, i, j);
      const double s = thresholded_cosine(generated[i - 1],
                                          ground_truth[j - 1], params);
      --i;
      --j;
      if (s + mat.get(mat.M, i, j) == cur) state = 'M';
      else if (s + mat.get(mat.X, i, j) == cur) state = 'X';
      else state = 'Y';
    } else if (state == 'X') {
      gt_skipped[j] = true;
      const double cur = mat.get(mat.X, i, j);
      --j;
      if (mat.get(mat.M, i, j) + params.gap_open == cur) state = 'M';
      else if (mat.get(mat.X, i, j) + params.gap_extend == cur) state = 'X';
      else state = 'Y';
    } else {
      gen_skipped[i] = true;
      const double cur = mat.get(mat.Y, i, j);
      --i;
      if (mat.get(mat.M, i, j) + params.gap_open == cur) state = 'M';
      else if (mat.get(mat.Y, i, j) + params.gap_extend == cur) state = 'Y';
      else state = 'X';
    }
  }
  std::reverse(out.matches.begin(), out.matches.end());

  auto collect_runs = [&](const std::vector<bool>& skipped, std::size_t len,
                          bool in_generated) {
    std::size_t k = 1;
    while (k <= len) {
      if (!skipped[k]) {
        ++k;
        continue;
      }
      std::size_t start = k;
      while (k <= len && skipped[k]) ++k;
      out.gaps.push_back(GapRun{in_generated, start, k - start});
    }
  };
  collect_runs(gen_skipped, n, true);
  collect_runs(gt_skipped, m, false);
  return out;
}

/**
 * Oracle for both variants: enumerate every monotone matching. The affine
 * flag charges gap_open for each maximal run of skipped elements and
 * gap_extend for every additional element in the run, in either sequence;
 * without it skips are free. Guarded to n + m <= 12.
 */
inline double nw_brute_force(const EmbeddingSequence& generated,
                             const EmbeddingSequence& ground_truth,
                             const NwParams& params, bool affine) {
  detail::check_nw_inputs(generated, ground_truth);
  params.validate();
  const std::size_t n = generated.size();
  const std::size_t m = ground_truth.size();
  if (n + m > 12)
    throw NwError("brute-force guard exceeded: n + m must be <= 12");

  std::vector<double> sim(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      sim[i * m + j] =
          thresholded_cosine(generated[i], ground_truth[j], params);

  auto run_penalty = [&](std::size_t len) {
    return len == 0 ? 0.0
                    : params.gap_open +
                          static_cast<double>(len - 1) * params.gap_extend;
  };

  // Score of a complete matching: matched similarities plus, in affine
  // mode, penalties for each maximal skipped run in each sequence.
  std::vector<std::pair<std::size_t, std::size_t>> matches;
  auto score_matching = [&]() {
    double total = 0.0;
    for (auto [i, j] : matches) total += sim[(i - 1) * m + (j - 1)];
    if (!affine) return total;
    std::size_t prev_i = 0, prev_j = 0;
    for (auto [i, j] : matches) {
      total += run_penalty(i - prev_i - 1);
      total += run_penalty(j - prev_j - 1);
      prev_i = i;
      prev_j = j;
    }
    total += run_penalty(n - prev_i);
    total += run_penalty(m - prev_j);
    return total;
  };

  double best = score_matching();  // empty matching
  auto extend = [&](auto&& self, std::size_t min_i, std::size_t min_j) -> void {
    for (std::size_t i = min_i; i <= n; ++i) {
      for (std::size_t j = min_j; j <= m; ++j) {
        matches.emplace_back(i, j);
        best = std::max(best, score_matching());
        self(self, i + 1, j + 1);
        matches.pop_back();
      }
    }
  };
  extend(extend, 1, 1);
  return best;
}

}  // namespace trajrl
