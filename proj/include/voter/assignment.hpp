#pragma once

// Dense linear assignment by shortest augmenting paths with dual potentials
// (Hungarian method). Costs are supplied by a callable and never stored, so
// memory is O(n).

#include <algorithm>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

namespace voter {

struct Assignment {
  double total_cost = 0.0;
  std::vector<std::size_t> row_to_col;
};

// `cost(i, j)` must be finite for 0 <= i, j < n.
template <class Cost>
Assignment solve_assignment(std::size_t n, Cost&& cost) {
  Assignment out;
  if (n == 0) return out;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based; index 0 means unmatched.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match_col(n + 1, 0), match_row(n + 1, 0);

  // Column reduction, then row reduction for rows left free; both keep the
  // duals feasible and only match along tight edges.
  for (std::size_t j = 1; j <= n; ++j) {
    double best = kInf;
    std::size_t arg = 1;
    for (std::size_t i = 1; i <= n; ++i) {
      const double c = cost(i - 1, j - 1);
      if (c < best) {
        best = c;
        arg = i;
      }
    }
    v[j] = best;
    if (match_row[arg] == 0) {
      match_row[arg] = j;
      match_col[j] = arg;
    }
  }
  for (std::size_t i = 1; i <= n; ++i) {
    if (match_row[i] != 0) continue;
    double best = kInf;
    std::size_t arg = 1;
    for (std::size_t j = 1; j <= n; ++j) {
      const double c = cost(i - 1, j - 1) - v[j];
      if (c < best) {
        best = c;
        arg = j;
      }
    }
    u[i] = best;
    if (match_col[arg] == 0) {
      match_col[arg] = i;
      match_row[i] = arg;
    }
  }

  // Shortest augmenting path from each free row, Dijkstra style over reduced
  // costs. Ties prefer unassigned columns, which ends the search early on
  // integer-valued costs.
  std::vector<double> dist(n + 1);
  std::vector<std::size_t> pred(n + 1), remaining(n), scanned_rows, scanned_cols;
  scanned_rows.reserve(n);
  scanned_cols.reserve(n);
  for (std::size_t root = 1; root <= n; ++root) {
    if (match_row[root] != 0) continue;
    std::fill(dist.begin(), dist.end(), kInf);
    for (std::size_t k = 0; k < n; ++k) remaining[k] = k + 1;
    std::size_t left = n;
    scanned_rows.clear();
    scanned_cols.clear();
    double reach = 0.0;
    std::size_t i = root;
    std::size_t sink = 0;
    while (sink == 0) {
      scanned_rows.push_back(i);
      double lowest = kInf;
      std::size_t pick = 0;
      const double ui = u[i];
      for (std::size_t k = 0; k < left; ++k) {
        const std::size_t j = remaining[k];
        const double r = reach + cost(i - 1, j - 1) - ui - v[j];
        if (r < dist[j]) {
          pred[j] = i;
          dist[j] = r;
        }
        if (dist[j] < lowest || (dist[j] == lowest && match_col[j] == 0)) {
          lowest = dist[j];
          pick = k;
        }
      }
      reach = lowest;
      const std::size_t j = remaining[pick];
      scanned_cols.push_back(j);
      remaining[pick] = remaining[--left];
      if (match_col[j] == 0) {
        sink = j;
      } else {
        i = match_col[j];
      }
    }
    u[root] += reach;
    for (std::size_t r : scanned_rows) {
      if (r != root) u[r] += reach - dist[match_row[r]];
    }
    for (std::size_t c : scanned_cols) v[c] -= reach - dist[c];
    for (std::size_t j = sink;;) {
      const std::size_t r = pred[j];
      match_col[j] = r;
      std::swap(match_row[r], j);
      if (r == root) break;
    }
  }

  out.row_to_col.resize(n);
  for (std::size_t j = 1; j <= n; ++j) out.row_to_col[match_col[j] - 1] = j - 1;
  for (std::size_t i = 0; i < n; ++i) out.total_cost += cost(i, out.row_to_col[i]);
  return out;
}

}  // namespace voter
