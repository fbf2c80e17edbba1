// Copyright 2026 The privot Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Exact discrete optimal transport. Uniform equal-size marginals reduce to
// the assignment problem, solved by shortest augmenting paths with
// potentials; the general case is solved by the transportation simplex on a
// spanning-tree basis. Both return exact optima up to pivot tolerances and
// break ties deterministically (lowest index first).

#ifndef PRIVOT_EXACT_OT_HPP_
#define PRIVOT_EXACT_OT_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "privot/common.hpp"

namespace privot {

// Minimum-cost perfect matching; returns the column assigned to each row.
inline std::vector<int> solve_assignment(const MatrixXd& cost) {
  require(cost.rows() == cost.cols() && cost.rows() >= 1,
          "assignment needs a square cost matrix");
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials; p[j] is the row matched to column j.
  std::vector<double> u(n + 1, 0), v(n + 1, 0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = -1;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n);
  for (int j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

struct ExactPlan {
  double value = 0;
  MatrixXd plan;
  int pivots = 0;
};

namespace exact_detail {

struct BasisCell {
  int i, j;
  double flow;
};

// Transportation simplex (MODI). Entering arc by most negative reduced cost
// with a Bland-style fallback after long degenerate runs. The final basis
// duals certify optimality: every reduced cost is nonnegative up to the
// pivot tolerance.
inline ExactPlan transport_simplex(const MatrixXd& C, VectorXd a, VectorXd b) {
  const int m = static_cast<int>(C.rows());
  const int k = static_cast<int>(C.cols());
  const double mass_a = a.sum(), mass_b = b.sum();
  require(mass_a > 0 && mass_b > 0, "marginals must have positive mass");
  require(std::fabs(mass_a - mass_b) <= 1e-9 * std::max(mass_a, mass_b),
          "marginals must carry equal mass");
  b *= mass_a / mass_b;

  // Northwest-corner initial basis: exactly m+k-1 cells, one per step.
  std::vector<BasisCell> basis;
  basis.reserve(m + k - 1);
  {
    VectorXd ra = a, rb = b;
    int i = 0, j = 0;
    while (true) {
      const double f = std::min(ra[i], rb[j]);
      basis.push_back({i, j, f});
      ra[i] -= f;
      rb[j] -= f;
      if (i == m - 1 && j == k - 1) break;
      if (i < m - 1 && (ra[i] < rb[j] || j == k - 1))
        ++i;
      else
        ++j;
    }
  }

  const int nodes = m + k;  // rows then columns
  const double tol = 1e-12 * (1.0 + C.cwiseAbs().maxCoeff());
  std::vector<double> u(m), v(k);
  std::vector<char> known(nodes);
  std::vector<std::vector<int>> adj(nodes);  // indices into basis
  std::vector<int> stack, parent_edge(nodes), parent_node(nodes);

  ExactPlan out;
  const long hard_cap = 20000L * (m + k);
  long degenerate_run = 0;
  for (long iter = 0;; ++iter) {
    if (iter > hard_cap)
      throw RuntimeFailure("transportation simplex exceeded pivot cap");
    // Duals from the basis tree, u[0] = 0.
    for (auto& lst : adj) lst.clear();
    for (int e = 0; e < static_cast<int>(basis.size()); ++e) {
      adj[basis[e].i].push_back(e);
      adj[m + basis[e].j].push_back(e);
    }
    std::fill(known.begin(), known.end(), 0);
    u[0] = 0;
    known[0] = 1;
    stack.assign(1, 0);
    while (!stack.empty()) {
      const int node = stack.back();
      stack.pop_back();
      for (int e : adj[node]) {
        const int other = (node < m) ? m + basis[e].j : basis[e].i;
        if (known[other]) continue;
        if (other < m)
          u[other] = C(basis[e].i, basis[e].j) - v[basis[e].j];
        else
          v[other - m] = C(basis[e].i, basis[e].j) - u[basis[e].i];
        known[other] = 1;
        stack.push_back(other);
      }
    }

    // Entering arc.
    int ei = -1, ej = -1;
    const bool bland = degenerate_run > 2L * (m + k);
    double best = -tol;
    for (int i = 0; i < m && (!bland || ei < 0); ++i) {
      for (int j = 0; j < k; ++j) {
        const double rc = C(i, j) - u[i] - v[j];
        if (rc < best) {
          best = rc;
          ei = i;
          ej = j;
          if (bland) break;
        }
      }
    }
    if (ei < 0) break;  // all reduced costs >= -tol: optimal

    // Cycle: tree path from row ei to column ej plus the entering arc.
    std::fill(known.begin(), known.end(), 0);
    known[ei] = 1;
    parent_node[ei] = -1;
    stack.assign(1, ei);
    while (!stack.empty()) {
      const int node = stack.back();
      stack.pop_back();
      if (node == m + ej) break;
      for (int e : adj[node]) {
        const int other = (node < m) ? m + basis[e].j : basis[e].i;
        if (known[other]) continue;
        known[other] = 1;
        parent_node[other] = node;
        parent_edge[other] = e;
        stack.push_back(other);
      }
    }
    require(known[m + ej], "basis lost connectivity");
    // Edges from column ej back to row ei; the one adjacent to the column
    // endpoint of the entering arc carries sign -, then alternating.
    std::vector<int> path;
    for (int node = m + ej; parent_node[node] >= 0; node = parent_node[node])
      path.push_back(parent_edge[node]);
    double delta = std::numeric_limits<double>::infinity();
    int leaving = -1;
    for (std::size_t s = 0; s < path.size(); s += 2) {
      if (basis[path[s]].flow < delta) {
        delta = basis[path[s]].flow;
        leaving = path[s];
      }
    }
    require(leaving >= 0, "degenerate cycle without leaving arc");
    for (std::size_t s = 0; s < path.size(); ++s) {
      BasisCell& cell = basis[path[s]];
      cell.flow = (s % 2 == 0) ? std::max(0.0, cell.flow - delta)
                               : cell.flow + delta;
    }
    basis[leaving] = {ei, ej, delta};
    degenerate_run = (delta <= 0) ? degenerate_run + 1 : 0;
    ++out.pivots;
  }

  out.plan = MatrixXd::Zero(m, k);
  for (const BasisCell& cell : basis) out.plan(cell.i, cell.j) += cell.flow;
  out.value = (out.plan.array() * C.array()).sum();
  return out;
}

}  // namespace exact_detail

// Exact optimal transport value and plan. Uniform equal-size marginals are
// routed to the assignment solver, everything else to the transportation
// simplex. Sizes are capped: the solvers are dense and meant for analysis.
inline ExactPlan exact_ot_lp(const MatrixXd& C, const VectorXd& a,
                             const VectorXd& b) {
  require(C.rows() == a.size() && C.cols() == b.size(),
          "marginal sizes must match the cost matrix");
  require(C.rows() <= 4096 && C.cols() <= 4096,
          "exact_ot_lp instances are capped at 4096 per side");
  const bool uniform_square =
      a.size() == b.size() &&
      (a.array() - 1.0 / static_cast<double>(a.size())).cwiseAbs().maxCoeff() <= 1e-15 &&
      (b.array() - 1.0 / static_cast<double>(b.size())).cwiseAbs().maxCoeff() <= 1e-15;
  if (uniform_square) {
    const auto row_to_col = solve_assignment(C);
    ExactPlan out;
    out.plan = MatrixXd::Zero(C.rows(), C.cols());
    const double w = 1.0 / static_cast<double>(C.rows());
    double total = 0;
    for (int i = 0; i < static_cast<int>(C.rows()); ++i) {
      out.plan(i, row_to_col[static_cast<std::size_t>(i)]) = w;
      total += C(i, row_to_col[static_cast<std::size_t>(i)]);
    }
    out.value = total * w;
    return out;
  }
  return exact_detail::transport_simplex(C, a, b);
}

}  // namespace privot

#endif  // PRIVOT_EXACT_OT_HPP_
