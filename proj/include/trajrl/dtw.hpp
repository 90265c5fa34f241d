#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "trajrl/embedding.hpp"

/**
 * Dynamic time warping between embedding sequences and the derived process
 * reward exp(-distance / m), with m the ground-truth length.
 *
 * A warping path runs from (1,1) to (n,m) in 1-based indices, moves by
 * (1,0), (0,1) or (1,1), and pays the Euclidean cost of every cell it
 * visits. dtw_distance is the exact minimum over all such paths;
 * dtw_brute_force recomputes it by full path enumeration and exists purely
 * as an oracle.
 */

namespace trajrl {

class DtwError : public std::runtime_error {
 public:
  explicit DtwError(const std::string& what) : std::runtime_error(what) {}
};

/// Index pairs of an optimal alignment, 1-based, (1,1) .. (n,m).
using WarpingPath = std::vector<std::pair<std::size_t, std::size_t>>;

struct DtwResult {
  double distance = 0.0;    // minimal total cost
  double normalized = 0.0;  // distance / ground-truth length
  WarpingPath path;
};

inline double euclidean_cost(const Vec& a, const Vec& b) {
  if (a.size() != b.size())
    throw DtwError("dimension mismatch: " + std::to_string(a.size()) +
                   " vs " + std::to_string(b.size()));
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    sum += d * d;
  }
  return std::sqrt(sum);
}

namespace detail {

inline void check_dtw_inputs(const EmbeddingSequence& generated,
                             const EmbeddingSequence& ground_truth) {
  if (generated.empty() || ground_truth.empty())
    throw DtwError("sequences must be non-empty");
  if (generated.front().size() != ground_truth.front().size())
    throw DtwError("dimension mismatch between sequences");
}

}  // namespace detail

/**
 * Exact DTW distance with backtraced path, normalized by the ground-truth
 * length. Backtrace ties prefer the diagonal step, then (0,1), then (1,0),
 * so the returned path is deterministic; the distance does not depend on
 * the tie-break.
 */
inline DtwResult dtw_distance(const EmbeddingSequence& generated,
                              const EmbeddingSequence& ground_truth) {
  detail::check_dtw_inputs(generated, ground_truth);
  const std::size_t n = generated.size();
  const std::size_t m = ground_truth.size();

  std::vector<double> cost(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      cost[i * m + j] = euclidean_cost(generated[i], ground_truth[j]);

  std::vector<double> acc(n * m);
  acc[0] = cost[0];
  for (std::size_t i = 1; i < n; ++i) acc[i * m] = acc[(i - 1) * m] + cost[i * m];
  for (std::size_t j = 1; j < m; ++j) acc[j] = acc[j - 1] + cost[j];
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 1; j < m; ++j) {
      const double best = std::min({acc[(i - 1) * m + (j - 1)],
                                    acc[i * m + (j - 1)],
                                    acc[(i - 1) * m + j]});
      acc[i * m + j] = cost[i * m + j] + best;
    }
  }

  WarpingPath path;
  std::size_t i = n - 1;
  std::size_t j = m - 1;
  path.emplace_back(i + 1, j + 1);
  while (i > 0 || j > 0) {
    if (i == 0) {
      --j;
    } else if (j == 0) {
      --i;
    } else {
      const double prev = acc[i * m + j] - cost[i * m + j];
      if (acc[(i - 1) * m + (j - 1)] == prev) {
        --i;
        --j;
      } else if (acc[i * m + (j - 1)] == prev) {
        --j;
      } else {
        --i;
      }
    }
    path.emplace_back(i + 1, j + 1);
  }
  std::reverse(path.begin(), path.end());

  DtwResult result;
  result.distance = acc[(n - 1) * m + (m - 1)];
  result.normalized = result.distance / static_cast<double>(m);
  result.path = std::move(path);
  return result;
}

/// Process reward exp(-normalized distance), in (0, 1]; 1 iff distance 0.
inline double dtw_reward(const EmbeddingSequence& generated,
                         const EmbeddingSequence& ground_truth) {
  return std::exp(-dtw_distance(generated, ground_truth).normalized);
}

/**
 * Oracle: minimal total cost by enumerating every warping path. Guarded to
 * n + m <= 14, which caps the enumeration at a few thousand paths.
 */
inline double dtw_brute_force(const EmbeddingSequence& generated,
                              const EmbeddingSequence& ground_truth) {
  detail::check_dtw_inputs(generated, ground_truth);
  const std::size_t n = generated.size();
  const std::size_t m = ground_truth.size();
  if (n + m > 14)
    throw DtwError("brute-force guard exceeded: n + m must be <= 14");

  double best = std::numeric_limits<double>::infinity();
  // Depth-first over the three step kinds, accumulating visited-cell costs.
  auto walk = [&](auto&& self, std::size_t i, std::size_t j,
                  double total) -> void {
    total += euclidean_cost(generated[i], ground_truth[j]);
    if (i + 1 == n && j + 1 == m) {
      best = std::min(best, total);
      return;
    }
    if (i + 1 < n && j + 1 < m) self(self, i + 1, j + 1, total);
    if (i + 1 < n) self(self, i + 1, j, total);
    if (j + 1 < m) self(self, i, j + 1, total);
  };
  walk(walk, 0, 0, 0.0);
  return best;
}

/// Structural check of the three warping-path conditions against (n, m).
inline bool is_valid_warping_path(const WarpingPath& path, std::size_t n,
                                  std::size_t m) {
  if (path.empty()) return false;
  if (path.front() != std::make_pair<std::size_t, std::size_t>(1, 1))
    return false;
  if (path.back() != std::make_pair(n, m)) return false;
  for (std::size_t l = 1; l < path.size(); ++l) {
    const auto di = path[l].first - path[l - 1].first;
    const auto dj = path[l].second - path[l - 1].second;
    const bool ok = (di == 1 && dj == 0) || (di == 0 && dj == 1) ||
                    (di == 1 && dj == 1);
    if (!ok) return false;
  }
  return true;
}

}  // namespace trajrl
