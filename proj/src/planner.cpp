#include "fnav/planner.hpp"

#include <algorithm>
#include <cmath>

namespace fnav {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSqrt2 = 1.4142135623730951;

// Fixed neighbor order; argmin ties resolve to the earliest entry, which
// keeps extracted paths deterministic.
constexpr int kNeighborX[8] = {1, -1, 0, 0, 1, 1, -1, -1};
constexpr int kNeighborY[8] = {0, 0, 1, -1, 1, -1, 1, -1};
constexpr double kStepLen[8] = {1, 1, 1, 1, kSqrt2, kSqrt2, kSqrt2, kSqrt2};

}  // namespace

void CostModel::validate() const {
  if (!(b_clamp_eps > 0.0 && b_clamp_eps < 0.5)) {
    throw std::invalid_argument("b_clamp_eps must lie in (0, 0.5)");
  }
  if (mode == Mode::expected && !(c_obst >= kSqrt2)) {
    throw std::invalid_argument("C_obst must be >= sqrt(2) cell units to keep the heuristic admissible");
  }
}

double octile_distance(const Cell2& a, const Cell2& b) {
  const double dx = std::abs(a.x() - b.x());
  const double dy = std::abs(a.y() - b.y());
  return std::max(dx, dy) + (kSqrt2 - 1.0) * std::min(dx, dy);
}

double expected_edge_cost(double b_next, double step_len, double c_obst) {
  return b_next * c_obst + (1.0 - b_next) * step_len;
}

double log_reach_edge_cost(double b_next, double step_len, double eps) {
  const double b = std::min(b_next, 1.0 - eps);
  return -std::log1p(-b) * step_len;
}

double heuristic(const Cell2& from, const Cell2& to, double b_min, const CostModel& cost) {
  const double d = octile_distance(from, to);
  if (cost.mode == CostModel::Mode::expected) {
    return (1.0 - b_min) * d;
  }
  return -std::log1p(-std::min(b_min, 1.0 - cost.b_clamp_eps)) * d;
}

double Path::length_cells() const {
  double len = 0.0;
  for (std::size_t i = 1; i < cells.size(); ++i) {
    len += octile_distance(cells[i - 1], cells[i]);
  }
  return len;
}

DStarLitePlanner::DStarLitePlanner(const ObstructionMap& map, double footprint_radius,
                                   const Cell2& start, const Cell2& goal, const CostModel& cost)
    : width_(map.width),
      height_(map.height),
      b_(map.scores),
      offsets_(footprint_offsets(footprint_radius, map.cell_size)),
      cost_(cost),
      start_(start),
      goal_(goal),
      last_start_(start) {
  cost_.validate();
  if (!contains(start) || !contains(goal)) {
    throw std::invalid_argument("start and goal must lie inside the map");
  }
  const std::size_t n = b_.size();
  b_max_.resize(n);
  for (int iy = 0; iy < height_; ++iy) {
    for (int ix = 0; ix < width_; ++ix) {
      b_max_[index({ix, iy})] = compute_footprint_max({ix, iy});
    }
  }
  initialize();
}

double DStarLitePlanner::compute_footprint_max(const Cell2& cell) const {
  double worst = 0.0;
  for (const Cell2& d : offsets_) {
    const Cell2 c = cell + d;
    if (!contains(c)) return 1.0;
    worst = std::max(worst, b_[index(c)]);
  }
  return worst;
}

double DStarLitePlanner::edge_cost_to(const Cell2& to, double step_len) const {
  const double b = b_max_[index(to)];
  if (cost_.mode == CostModel::Mode::expected) {
    return expected_edge_cost(b, step_len, cost_.c_obst);
  }
  return log_reach_edge_cost(b, step_len, cost_.b_clamp_eps);
}

DStarLitePlanner::Key DStarLitePlanner::calc_key(const Cell2& c) const {
  const std::size_t i = index(c);
  const double k2 = std::min(g_[i], rhs_[i]);
  if (k2 == kInf) return {kInf, kInf};
  return {k2 + heuristic(start_, c, b_min_, cost_) + km_, k2};
}

void DStarLitePlanner::queue_insert(const Cell2& c, const Key& k) {
  const std::size_t i = index(c);
  queue_.insert({k, c.y(), c.x()});
  queued_[i] = 1;
  queued_key_[i] = k;
}

void DStarLitePlanner::queue_remove(const Cell2& c) {
  const std::size_t i = index(c);
  if (!queued_[i]) return;
  queue_.erase({queued_key_[i], c.y(), c.x()});
  queued_[i] = 0;
}

void DStarLitePlanner::update_vertex(const Cell2& c) {
  const std::size_t i = index(c);
  if (c != goal_) {
    double best = kInf;
    for (int k = 0; k < 8; ++k) {
      const Cell2 s{c.x() + kNeighborX[k], c.y() + kNeighborY[k]};
      if (!contains(s)) continue;
      const double v = edge_cost_to(s, kStepLen[k]) + g_[index(s)];
      if (v < best) best = v;
    }
    rhs_[i] = best;
  }
  queue_remove(c);
  if (g_[i] != rhs_[i]) queue_insert(c, calc_key(c));
}

void DStarLitePlanner::compute_shortest_path() {
  const std::size_t start_i = index(start_);
  while (!queue_.empty()) {
    const QueueEntry top = *queue_.begin();
    const Key start_key = calc_key(start_);
    const bool start_consistent = rhs_[start_i] == g_[start_i];
    if (!(top.key.k1 < start_key.k1 ||
          (top.key.k1 == start_key.k1 && top.key.k2 < start_key.k2)) &&
        start_consistent) {
      break;
    }
    const Cell2 u{top.x, top.y};
    const std::size_t ui = index(u);
    const Key k_new = calc_key(u);
    if (top.key.k1 < k_new.k1 || (top.key.k1 == k_new.k1 && top.key.k2 < k_new.k2)) {
      queue_remove(u);
      queue_insert(u, k_new);
    } else if (g_[ui] > rhs_[ui]) {
      g_[ui] = rhs_[ui];
      queue_remove(u);
      for (int k = 0; k < 8; ++k) {
        const Cell2 s{u.x() + kNeighborX[k], u.y() + kNeighborY[k]};
        if (contains(s)) update_vertex(s);
      }
    } else {
      g_[ui] = kInf;
      update_vertex(u);
      for (int k = 0; k < 8; ++k) {
        const Cell2 s{u.x() + kNeighborX[k], u.y() + kNeighborY[k]};
        if (contains(s)) update_vertex(s);
      }
    }
  }
}

void DStarLitePlanner::initialize() {
  const std::size_t n = b_.size();
  b_min_ = 1.0;
  for (double b : b_) b_min_ = std::min(b_min_, b);
  km_ = 0.0;
  last_start_ = start_;
  g_.assign(n, kInf);
  rhs_.assign(n, kInf);
  queue_.clear();
  queued_.assign(n, 0);
  queued_key_.assign(n, Key{});
  rhs_[index(goal_)] = 0.0;
  queue_insert(goal_, calc_key(goal_));
}

Path DStarLitePlanner::extract_path() const {
  if (g_[index(start_)] == kInf) {
    throw UnreachableGoalError("goal unreachable from start");
  }
  Path path;
  path.cells.push_back(start_);
  Cell2 cur = start_;
  const std::size_t step_limit = b_.size() + 1;
  for (std::size_t steps = 0; cur != goal_ && steps < step_limit; ++steps) {
    double best = kInf;
    Cell2 next = cur;
    double best_edge = 0.0;
    for (int k = 0; k < 8; ++k) {
      const Cell2 s{cur.x() + kNeighborX[k], cur.y() + kNeighborY[k]};
      if (!contains(s)) continue;
      const double edge = edge_cost_to(s, kStepLen[k]);
      const double v = edge + g_[index(s)];
      if (v < best) {
        best = v;
        next = s;
        best_edge = edge;
      }
    }
    if (next == cur || best == kInf) {
      throw UnreachableGoalError("path extraction stalled before reaching the goal");
    }
    path.total_cost += best_edge;
    path.cells.push_back(next);
    cur = next;
  }
  if (cur != goal_) {
    throw UnreachableGoalError("path extraction exceeded the step limit");
  }
  return path;
}

Path DStarLitePlanner::plan() {
  compute_shortest_path();
  return extract_path();
}

Path DStarLitePlanner::update_and_replan(std::span<const CellChange> changes,
                                         const Cell2& new_start) {
  if (!contains(new_start)) throw std::invalid_argument("new start outside map");

  bool lowered_below_min = false;
  std::vector<Cell2> touched;
  touched.reserve(changes.size());
  for (const CellChange& ch : changes) {
    if (!contains(ch.cell)) throw std::invalid_argument("cell change outside map");
    if (!(ch.b >= 0.0 && ch.b <= 1.0)) throw std::invalid_argument("cell score must lie in [0,1]");
    const std::size_t i = index(ch.cell);
    if (b_[i] == ch.b) continue;
    b_[i] = ch.b;
    touched.push_back(ch.cell);
    if (ch.b < b_min_) lowered_below_min = true;
  }

  if (new_start != start_) {
    km_ += heuristic(last_start_, new_start, b_min_, cost_);
    last_start_ = new_start;
    start_ = new_start;
  }

  if (lowered_below_min) {
    // A lower b_min would inflate queued keys past admissibility; rebuild
    // the search session instead.
    for (const Cell2& cell : touched) {
      for (const Cell2& d : offsets_) {
        const Cell2 c = cell - d;
        if (contains(c)) b_max_[index(c)] = compute_footprint_max(c);
      }
    }
    initialize();
    compute_shortest_path();
    return extract_path();
  }

  // Footprint maxima only change within the footprint reach of a touched
  // cell; recompute those lazily and update the affected incoming edges.
  std::vector<Cell2> bmax_changed;
  for (const Cell2& cell : touched) {
    for (const Cell2& d : offsets_) {
      const Cell2 c = cell - d;
      if (!contains(c)) continue;
      const std::size_t i = index(c);
      const double fresh = compute_footprint_max(c);
      if (fresh != b_max_[i]) {
        b_max_[i] = fresh;
        bmax_changed.push_back(c);
      }
    }
  }
  for (const Cell2& v : bmax_changed) {
    // Incoming edge costs of v changed: refresh every predecessor, plus v
    // itself in case it sits in the queue with a stale key.
    for (int k = 0; k < 8; ++k) {
      const Cell2 u{v.x() + kNeighborX[k], v.y() + kNeighborY[k]};
      if (contains(u)) update_vertex(u);
    }
  }

  compute_shortest_path();
  return extract_path();
}

Path plan(const ObstructionMap& map, double footprint_radius, const Cell2& start,
          const Cell2& goal, const CostModel& cost) {
  DStarLitePlanner planner(map, footprint_radius, start, goal, cost);
  return planner.plan();
}

double path_reachability(const Path& path, const ObstructionMap& map, double footprint_radius,
                         double eps) {
  double reach = 1.0;
  for (std::size_t i = 1; i < path.cells.size(); ++i) {
    const double b =
        std::min(footprint_score(map, path.cells[i], footprint_radius), 1.0 - eps);
    const double len = octile_distance(path.cells[i - 1], path.cells[i]);
    reach *= std::pow(1.0 - b, len);
  }
  return reach;
}

}  // namespace fnav
