#pragma once

#include "fnav/obstruction.hpp"

#include <limits>
#include <set>
#include <span>
#include <stdexcept>
#include <vector>

namespace fnav {

/// Edge-cost choice for planning. Costs are expressed in cell units
/// (straight step 1, diagonal sqrt(2)).
struct CostModel {
  enum class Mode { expected, log_reach };

  Mode mode = Mode::log_reach;
  double c_obst = 5.0;        // expected-cost obstruction penalty, cell units
  double b_clamp_eps = 1e-6;  // keeps log costs finite at b = 1

  void validate() const;
};

/// Octile distance in cell units: max(dx,dy) + (sqrt(2)-1) min(dx,dy).
double octile_distance(const Cell2& a, const Cell2& b);

/// Expected transition cost: b*C_obst + (1-b)*step_len.
double expected_edge_cost(double b_next, double step_len, double c_obst);

/// Negative log-reachability cost: -log(1-b)*step_len, with b clamped to
/// 1-eps so the cost stays finite.
double log_reach_edge_cost(double b_next, double step_len, double eps);

/// Admissible heuristic from `from` to `to` given the map-wide minimum
/// score b_min.
double heuristic(const Cell2& from, const Cell2& to, double b_min, const CostModel& cost);

struct Path {
  std::vector<Cell2> cells;
  double total_cost = 0.0;

  double length_cells() const;
  double length_meters(double cell_size) const { return length_cells() * cell_size; }
};

struct CellChange {
  Cell2 cell;
  double b = 0.0;
};

struct UnreachableGoalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Incremental D* Lite search over the 8-connected grid of an obstruction
/// map. Edge costs charge the destination cell's footprint score; the
/// planner owns a mutable copy of the scores so local updates never touch
/// the source map.
class DStarLitePlanner {
 public:
  DStarLitePlanner(const ObstructionMap& map, double footprint_radius, const Cell2& start,
                   const Cell2& goal, const CostModel& cost);

  /// Computes (or repairs) the shortest path from the current start.
  /// Throws UnreachableGoalError when no finite-cost path exists.
  Path plan();

  /// Applies score changes and a start move, then replans. The resulting
  /// cost matches a from-scratch search on the updated map. If a change
  /// lowers a score below the session b_min the planner re-initializes to
  /// keep the heuristic admissible.
  Path update_and_replan(std::span<const CellChange> changes, const Cell2& new_start);

  double session_b_min() const { return b_min_; }
  double cost_from(const Cell2& cell) const { return g_[index(cell)]; }
  double footprint_value(const Cell2& cell) const { return b_max_[index(cell)]; }
  double score(const Cell2& cell) const { return b_[index(cell)]; }
  const Cell2& start() const { return start_; }
  const Cell2& goal() const { return goal_; }
  int width() const { return width_; }
  int height() const { return height_; }

 private:
  struct Key {
    double k1 = 0.0, k2 = 0.0;
    bool operator==(const Key&) const = default;
  };
  struct QueueEntry {
    Key key;
    int y = 0, x = 0;
    bool operator<(const QueueEntry& o) const {
      if (key.k1 != o.key.k1) return key.k1 < o.key.k1;
      if (key.k2 != o.key.k2) return key.k2 < o.key.k2;
      if (y != o.y) return y < o.y;
      return x < o.x;
    }
  };

  std::size_t index(const Cell2& c) const {
    return static_cast<std::size_t>(c.x()) + static_cast<std::size_t>(width_) * static_cast<std::size_t>(c.y());
  }
  bool contains(const Cell2& c) const {
    return c.x() >= 0 && c.x() < width_ && c.y() >= 0 && c.y() < height_;
  }
  double edge_cost_to(const Cell2& to, double step_len) const;
  double compute_footprint_max(const Cell2& cell) const;
  Key calc_key(const Cell2& c) const;
  void queue_insert(const Cell2& c, const Key& k);
  void queue_remove(const Cell2& c);
  void update_vertex(const Cell2& c);
  void compute_shortest_path();
  void initialize();
  Path extract_path() const;

  int width_ = 0, height_ = 0;
  std::vector<double> b_;
  std::vector<double> b_max_;
  std::vector<Cell2> offsets_;
  CostModel cost_;
  double b_min_ = 0.0;
  Cell2 start_, goal_, last_start_;
  double km_ = 0.0;
  std::vector<double> g_, rhs_;
  std::set<QueueEntry> queue_;
  std::vector<uint8_t> queued_;
  std::vector<Key> queued_key_;
};

/// One-shot planning convenience wrapper.
Path plan(const ObstructionMap& map, double footprint_radius, const Cell2& start,
          const Cell2& goal, const CostModel& cost);

/// Path reachability: prod (1 - b_max(s_i+1))^step_len, the probability of
/// traversing the path without hitting an obstructed cell. Equals
/// exp(-J) for the log-reachability cost J of the same path.
double path_reachability(const Path& path, const ObstructionMap& map, double footprint_radius,
                         double eps = 1e-6);

}  // namespace fnav
