#pragma once

// Slow reference implementations used only by the tests. Nothing here shares
// code with the library beyond Environment::omega and the offsets.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "opbw/env.hpp"

namespace oracle {

using opbw::Coord;
using opbw::Environment;
using opbw::Site;
using opbw::operator+;

inline bool open_in_box(const Environment& env, const Site& s) { return env.in_box(s) && env.omega(s); }

/// Longest directed open path from s by enumerating every path, capped at
/// H − n. Sites outside the box count as closed.
inline std::int32_t ell_enumerate(const Environment& env, const Site& s) {
  if (!open_in_box(env, s)) return -1;
  const std::int32_t cap = env.horizon() - s.n;
  std::int32_t best = 0;
  std::vector<Site> path{s};
  std::vector<std::size_t> next{0};
  const auto& offsets = env.config().offsets;
  while (!path.empty()) {
    if (static_cast<std::int32_t>(path.size()) - 1 == cap || next.back() == offsets.size()) {
      best = std::max(best, static_cast<std::int32_t>(path.size()) - 1);
      path.pop_back();
      next.pop_back();
      continue;
    }
    const Site y{path.back().x + offsets[next.back()++], path.back().n + 1};
    if (open_in_box(env, y)) {
      path.push_back(y);
      next.push_back(0);
    } else {
      best = std::max(best, static_cast<std::int32_t>(path.size()) - 1);
    }
  }
  return best;
}

/// Breadth-first search over the explicit adjacency {(y, m) -> (y + u, m + 1)}
/// restricted to open in-box sites.
inline bool bfs_reachable(const Environment& env, const Site& from, const Site& to) {
  if (!open_in_box(env, from)) return false;
  std::set<std::pair<std::int32_t, Coord>> seen{{from.n, from.x}};
  std::vector<Site> frontier{from};
  while (!frontier.empty()) {
    std::vector<Site> next;
    for (const auto& s : frontier) {
      if (s.n == to.n && s.x == to.x) return true;
      if (s.n >= to.n) continue;
      for (const auto& u : env.config().offsets) {
        const Site y{s.x + u, s.n + 1};
        if (open_in_box(env, y) && seen.insert({y.n, y.x}).second) next.push_back(y);
      }
    }
    frontier = std::move(next);
  }
  return false;
}

/// Probability of each length-k path of the direct walk from `start`, by
/// multiplying 1 / #(backbone successors) along the path. `on_backbone`
/// decides ξ.
template <class Xi>
std::map<std::vector<Coord>, double> path_law(const Environment& env, const Site& start, int k, Xi&& on_backbone) {
  std::map<std::vector<Coord>, double> out;
  struct Item {
    std::vector<Coord> path;
    double prob;
  };
  std::vector<Item> stack{{{start.x}, 1.0}};
  while (!stack.empty()) {
    Item it = std::move(stack.back());
    stack.pop_back();
    const auto len = static_cast<std::int32_t>(it.path.size()) - 1;
    if (len == k) {
      out[it.path] += it.prob;
      continue;
    }
    const Site s{it.path.back(), start.n + len};
    std::vector<Coord> succ;
    for (const auto& u : env.config().offsets) {
      const Site y{s.x + u, s.n + 1};
      if (on_backbone(y)) succ.push_back(y.x);
    }
    for (const auto& y : succ) {
      Item nx{it.path, it.prob / static_cast<double>(succ.size())};
      nx.path.push_back(y);
      stack.push_back(std::move(nx));
    }
  }
  return out;
}

}  // namespace oracle
