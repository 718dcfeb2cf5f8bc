#pragma once

// Comparison planners: RRT, RRT-Connect, RRT*, Informed RRT* and Sorted RRT*
// (SORRT*), which extends toward the best unconsidered sample of a batch.

#include "bitstar/core/geometry.hpp"
#include "bitstar/planner/result.hpp"
#include "bitstar/rgg/connection.hpp"
#include "bitstar/rgg/spatial_index.hpp"
#include "bitstar/sampling/informed.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace bitstar {

struct RrtConfig {
  /// Maximum edge length, r_steer.
  double max_edge_length = 0.3;
  double goal_bias = 0.05;
  /// Multiplier on the rewiring radius lower bound.
  double eta = 2.0;
  /// Samples per SORRT* batch.
  std::size_t batch_size = 100;
  /// Prune an informed tree only once the solution improved by more than this
  /// fraction since the previous prune.
  double prune_threshold_fraction = 0.05;
  /// SORRT* hook, called with (batch number, f_hat) for every sample taken
  /// from the queue.
  std::function<void(std::size_t batch, double f)> on_queue_pop;
  /// RRT* family hook, called with every non-goal sample as it is drawn and
  /// the best cost at that moment.
  std::function<void(const StateVec& x, double best_cost)> on_sample;

  void validate() const {
    if (!(max_edge_length > 0.0)) throw std::invalid_argument("RrtConfig: max_edge_length must be > 0");
    if (!(goal_bias >= 0.0 && goal_bias <= 1.0)) {
      throw std::invalid_argument("RrtConfig: goal_bias must be in [0, 1]");
    }
    if (!(eta > 1.0)) throw std::invalid_argument("RrtConfig: eta must be > 1");
    if (batch_size < 1) throw std::invalid_argument("RrtConfig: batch_size must be >= 1");
  }
};

/// The maximum edge lengths used for the benchmark dimensions; other
/// dimensions interpolate on a log scale.
inline double default_steer_length(std::size_t dimension) {
  switch (dimension) {
    case 2: return 0.3;
    case 4: return 0.5;
    case 8: return 0.9;
    case 16: return 1.7;
    default: break;
  }
  if (dimension < 2) return 0.3;
  const double t = std::log2(static_cast<double>(dimension));
  // Fit through (1, 0.3), (2, 0.5), (3, 0.9), (4, 1.7).
  const double lo = std::floor(t);
  const double table[] = {0.3, 0.3, 0.5, 0.9, 1.7};
  if (t >= 4.0) return 1.7 * std::pow(1.7 / 0.9, t - 4.0);
  const auto i = static_cast<std::size_t>(lo);
  return table[i] * std::pow(table[i + 1] / table[i], t - lo);
}

/// Truncates the step from `from` toward `to` to at most `max_length`.
/// Returns `to` itself when it is within reach.
inline StateVec steer(const StateVec& from, const StateVec& to, double max_length) {
  const double d = (to - from).norm();
  if (d <= max_length) return to;
  return from + (to - from) * (max_length / d);
}

/// Tree with cached cost-to-come and child lists for subtree updates.
class RrtTree {
 public:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  struct Vertex {
    StateVec x;
    std::size_t parent = npos;
    double edge = 0.0;
    double g = 0.0;
    std::vector<std::size_t> children;
    bool alive = true;
    bool goal = false;
  };

  explicit RrtTree(std::size_t dimension) : index_(dimension) {}

  std::size_t add_root(const StateVec& x) {
    const std::size_t id = vertices_.size();
    vertices_.push_back({x, npos, 0.0, 0.0, {}, true, false});
    index_.insert(id, x);
    ++alive_;
    return id;
  }

  std::size_t add(const StateVec& x, std::size_t parent, double edge) {
    const std::size_t id = vertices_.size();
    vertices_.push_back({x, parent, edge, vertices_[parent].g + edge, {}, true, false});
    vertices_[parent].children.push_back(id);
    index_.insert(id, x);
    ++alive_;
    return id;
  }

  /// Moves `id` below `parent` and refreshes the subtree's cached costs.
  void rewire(std::size_t id, std::size_t parent, double edge) {
    auto& old = vertices_[vertices_[id].parent].children;
    std::erase(old, id);
    vertices_[id].parent = parent;
    vertices_[id].edge = edge;
    vertices_[parent].children.push_back(id);
    std::vector<std::size_t> stack{id};
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      vertices_[u].g = vertices_[vertices_[u].parent].g + vertices_[u].edge;
      for (std::size_t c : vertices_[u].children) stack.push_back(c);
    }
  }

  /// Removes a leaf.
  void remove_leaf(std::size_t id) {
    Vertex& v = vertices_[id];
    if (!v.children.empty()) throw std::logic_error("RrtTree::remove_leaf: vertex has children");
    if (v.parent != npos) std::erase(vertices_[v.parent].children, id);
    v.alive = false;
    index_.erase(id);
    --alive_;
  }

  std::size_t nearest(const StateVec& x) const { return *index_.nearest(x); }

  std::vector<std::size_t> near(const StateVec& x, double r) const { return index_.radius(x, r); }

  std::vector<StateVec> path_to(std::size_t id) const {
    std::vector<StateVec> path;
    for (; id != npos; id = vertices_[id].parent) path.push_back(vertices_[id].x);
    std::reverse(path.begin(), path.end());
    return path;
  }

  const Vertex& operator[](std::size_t id) const { return vertices_[id]; }
  Vertex& operator[](std::size_t id) { return vertices_[id]; }
  std::size_t capacity() const { return vertices_.size(); }
  std::size_t size() const { return alive_; }

 private:
  std::vector<Vertex> vertices_;
  SpatialIndex index_;
  std::size_t alive_ = 0;
};

enum class RrtOutcome { kTrapped, kExtended, kSolved };

/// Single-tree RRT. Non-anytime: it stops improving after the first solution.
class RrtPlanner {
 public:
  RrtPlanner(const ProblemDef& problem, RrtConfig config, std::uint64_t seed)
      : problem_(&problem), config_(std::move(config)), rng_(seed), tree_(problem.dimension()) {
    config_.validate();
    tree_.add_root(problem.start());
    for (const StateVec& g : problem.goals()) {
      if ((g - problem.start()).norm() == 0.0) solve_at(0);
    }
  }

  RrtOutcome iterate() {
    ++iterations_;
    if (goal_ != RrtTree::npos) return RrtOutcome::kSolved;
    bool toward_goal = false;
    StateVec target = draw(toward_goal);
    const std::size_t nearest = tree_.nearest(target);
    if ((tree_[nearest].x - target).norm() == 0.0) return RrtOutcome::kTrapped;
    StateVec x = steer(tree_[nearest].x, target, config_.max_edge_length);
    ++collision_checks_;
    if (!problem_->is_state_valid(x) || !problem_->is_segment_free(tree_[nearest].x, x)) {
      return RrtOutcome::kTrapped;
    }
    const double edge = (x - tree_[nearest].x).norm();
    const bool reached = toward_goal && (x - target).norm() == 0.0;
    const std::size_t id = tree_.add(x, nearest, edge);
    if (reached) {
      solve_at(id);
      return RrtOutcome::kSolved;
    }
    return RrtOutcome::kExtended;
  }

  PlanResult solve(const Budget& budget, const ProgressCallback& callback = {}) {
    StopCheck stop(budget);
    if (!(budget.time_s > 0.0)) return result();
    if (goal_ != RrtTree::npos && callback) callback(0.0, cost(), tree_.path_to(goal_));
    std::uint64_t steps = 0;
    while (goal_ == RrtTree::npos && !stop.should_stop(cost(), steps)) {
      ++steps;
      if (iterate() == RrtOutcome::kSolved && callback) {
        callback(stop.elapsed_s(), cost(), tree_.path_to(goal_));
      }
    }
    return result();
  }

  double cost() const { return goal_ == RrtTree::npos ? kInfinity : tree_[goal_].g; }
  const RrtTree& tree() const { return tree_; }
  std::uint64_t iterations() const { return iterations_; }

  PlanResult result() const {
    PlanResult r;
    r.cost = cost();
    r.solved = goal_ != RrtTree::npos;
    if (r.solved) {
      r.path = tree_.path_to(goal_);
      if (r.path.size() == 1) r.path.push_back(r.path.front());
    }
    r.counters = {{"iterations", iterations_},
                  {"collision_checks", collision_checks_},
                  {"vertices", tree_.size()}};
    return r;
  }

 private:
  StateVec draw(bool& toward_goal) {
    const auto& goals = problem_->goals();
    if (config_.goal_bias > 0.0 && rng_.uniform01() < config_.goal_bias) {
      toward_goal = true;
      return goals[static_cast<std::size_t>(rng_.uniform01() * static_cast<double>(goals.size())) %
                   goals.size()];
    }
    return sample_uniform_box(rng_, problem_->bounds());
  }

  void solve_at(std::size_t id) {
    tree_[id].goal = true;
    goal_ = id;
  }

  const ProblemDef* problem_;
  RrtConfig config_;
  Rng rng_;
  RrtTree tree_;
  std::size_t goal_ = RrtTree::npos;
  std::uint64_t iterations_ = 0;
  std::uint64_t collision_checks_ = 0;
};

/// Bidirectional RRT with the extend/connect heuristic. The goal tree is
/// rooted at every goal. Non-anytime.
class RrtConnectPlanner {
 public:
  RrtConnectPlanner(const ProblemDef& problem, RrtConfig config, std::uint64_t seed)
      : problem_(&problem),
        config_(std::move(config)),
        rng_(seed),
        start_tree_(problem.dimension()),
        goal_tree_(problem.dimension()) {
    config_.validate();
    start_tree_.add_root(problem.start());
    for (const StateVec& g : problem.goals()) {
      const std::size_t id = goal_tree_.add_root(g);
      goal_tree_[id].goal = true;
      if ((g - problem.start()).norm() == 0.0) {
        solved_ = true;
        path_ = {g, g};
        cost_ = 0.0;
      }
    }
  }

  enum class Extend { kTrapped, kAdvanced, kReached };

  RrtOutcome iterate() {
    ++iterations_;
    if (solved_) return RrtOutcome::kSolved;
    RrtTree& a = forward_ ? start_tree_ : goal_tree_;
    RrtTree& b = forward_ ? goal_tree_ : start_tree_;
    const StateVec target = sample_uniform_box(rng_, problem_->bounds());
    std::size_t a_new = RrtTree::npos;
    const Extend ea = extend(a, target, a_new);
    RrtOutcome outcome = RrtOutcome::kTrapped;
    if (ea != Extend::kTrapped) {
      outcome = RrtOutcome::kExtended;
      const StateVec reached = a[a_new].x;
      std::size_t b_new = RrtTree::npos;
      Extend eb = Extend::kAdvanced;
      while (eb == Extend::kAdvanced) eb = extend(b, reached, b_new);
      if (eb == Extend::kReached) {
        std::vector<StateVec> from_a = a.path_to(a_new);
        std::vector<StateVec> from_b = b.path_to(b_new);
        std::reverse(from_b.begin(), from_b.end());
        // The meeting state appears at the end of both halves.
        from_a.insert(from_a.end(), from_b.begin() + 1, from_b.end());
        if (!forward_) std::reverse(from_a.begin(), from_a.end());
        path_ = std::move(from_a);
        cost_ = path_cost(*problem_, path_);
        solved_ = true;
        outcome = RrtOutcome::kSolved;
      }
    }
    forward_ = !forward_;
    return outcome;
  }

  PlanResult solve(const Budget& budget, const ProgressCallback& callback = {}) {
    StopCheck stop(budget);
    if (!(budget.time_s > 0.0)) return result();
    if (solved_ && callback) callback(0.0, cost_, path_);
    std::uint64_t steps = 0;
    while (!solved_ && !stop.should_stop(cost_, steps)) {
      ++steps;
      if (iterate() == RrtOutcome::kSolved && callback) callback(stop.elapsed_s(), cost_, path_);
    }
    return result();
  }

  double cost() const { return cost_; }
  std::uint64_t iterations() const { return iterations_; }
  const std::vector<StateVec>& path() const { return path_; }

  PlanResult result() const {
    PlanResult r;
    r.solved = solved_;
    r.cost = cost_;
    r.path = path_;
    r.counters = {{"iterations", iterations_},
                  {"collision_checks", collision_checks_},
                  {"vertices", start_tree_.size() + goal_tree_.size()}};
    return r;
  }

 private:
  Extend extend(RrtTree& tree, const StateVec& target, std::size_t& added) {
    const std::size_t nearest = tree.nearest(target);
    const StateVec& from = tree[nearest].x;
    if ((from - target).norm() == 0.0) {
      added = nearest;
      return Extend::kReached;
    }
    StateVec x = steer(from, target, config_.max_edge_length);
    ++collision_checks_;
    if (!problem_->is_state_valid(x) || !problem_->is_segment_free(from, x)) return Extend::kTrapped;
    const double edge = (x - from).norm();
    const bool reached = (x - target).norm() == 0.0;
    added = tree.add(x, nearest, edge);
    return reached ? Extend::kReached : Extend::kAdvanced;
  }

  const ProblemDef* problem_;
  RrtConfig config_;
  Rng rng_;
  RrtTree start_tree_;
  RrtTree goal_tree_;
  bool forward_ = true;
  bool solved_ = false;
  double cost_ = kInfinity;
  std::vector<StateVec> path_;
  std::uint64_t iterations_ = 0;
  std::uint64_t collision_checks_ = 0;
};

enum class RrtStarVariant { kPlain, kInformed, kSorted };

/// RRT* with ordered parent selection. The informed variant samples the
/// informed set once a solution exists and prunes the tree as the solution
/// improves; the sorted variant (SORRT*) additionally draws batches of
/// informed samples and extends toward them in order of f_hat.
class RrtStarPlanner {
 public:
  RrtStarPlanner(const ProblemDef& problem, RrtConfig config, std::uint64_t seed,
                 RrtStarVariant variant)
      : problem_(&problem),
        config_(std::move(config)),
        variant_(variant),
        rng_(seed),
        sampler_(problem),
        tree_(problem.dimension()) {
    config_.validate();
    rgg_.eta = config_.eta;
    rgg_.dimension = problem.dimension();
    rgg_.space_measure = problem.bounds().measure();
    rgg_.batch_size = config_.batch_size;
    tree_.add_root(problem.start());
    for (const StateVec& g : problem.goals()) {
      if ((g - problem.start()).norm() == 0.0 && !tree_[0].goal) {
        tree_[0].goal = true;
        goals_.push_back(0);
        best_cost_ = 0.0;
      }
    }
  }

  RrtOutcome iterate() {
    ++iterations_;
    // A solution at the straight-line cost leaves nothing to sample.
    if (variant_ != RrtStarVariant::kPlain && informed_set_empty()) return RrtOutcome::kTrapped;
    bool toward_goal = false;
    const StateVec target = draw(toward_goal);
    const std::size_t nearest = tree_.nearest(target);
    if ((tree_[nearest].x - target).norm() == 0.0) return RrtOutcome::kTrapped;
    StateVec x = steer(tree_[nearest].x, target, config_.max_edge_length);
    if (!problem_->is_state_valid(x)) return RrtOutcome::kTrapped;

    const double r = rewire_radius();
    std::vector<std::size_t> near = tree_.near(x, r);
    if (std::find(near.begin(), near.end(), nearest) == near.end()) near.push_back(nearest);

    // Ordered parent selection: the first collision-free candidate in order
    // of cost through it is the best parent.
    std::vector<std::pair<double, std::size_t>> through;
    through.reserve(near.size());
    for (std::size_t u : near) through.emplace_back(tree_[u].g + (tree_[u].x - x).norm(), u);
    std::sort(through.begin(), through.end());
    std::size_t parent = RrtTree::npos;
    double parent_edge = 0.0;
    for (const auto& [cost, u] : through) {
      ++collision_checks_;
      if (problem_->is_segment_free(tree_[u].x, x)) {
        parent = u;
        parent_edge = (tree_[u].x - x).norm();
        break;
      }
    }
    if (parent == RrtTree::npos) return RrtOutcome::kTrapped;
    const std::size_t id = tree_.add(x, parent, parent_edge);
    if (toward_goal && (x - target).norm() == 0.0) {
      tree_[id].goal = true;
      goals_.push_back(id);
    }

    std::vector<std::pair<double, std::size_t>> order;
    order.reserve(near.size());
    for (std::size_t u : near) {
      if (u == parent) continue;
      order.emplace_back(tree_[id].g + (tree_[u].x - x).norm() + h_hat(*problem_, tree_[u].x), u);
    }
    std::sort(order.begin(), order.end());
    for (const auto& [total, u] : order) {
      const double edge = (tree_[u].x - x).norm();
      if (!(tree_[id].g + edge < tree_[u].g)) continue;
      ++collision_checks_;
      if (!problem_->is_segment_free(x, tree_[u].x)) continue;
      tree_.rewire(u, id, edge);
      ++rewirings_;
    }

    const double before = best_cost_;
    for (std::size_t g : goals_) best_cost_ = std::min(best_cost_, tree_[g].g);
    if (best_cost_ < before) {
      improved_ = true;
      if (variant_ != RrtStarVariant::kPlain && should_prune()) prune();
      return RrtOutcome::kSolved;
    }
    return RrtOutcome::kExtended;
  }

  PlanResult solve(const Budget& budget, const ProgressCallback& callback = {}) {
    StopCheck stop(budget);
    if (!(budget.time_s > 0.0)) return result();
    if (best_cost_ < kInfinity && callback) callback(0.0, best_cost_, best_path());
    std::uint64_t steps = 0;
    while (!stop.should_stop(best_cost_, steps)) {
      if (variant_ != RrtStarVariant::kPlain && informed_set_empty()) break;
      ++steps;
      improved_ = false;
      iterate();
      if (improved_ && callback) callback(stop.elapsed_s(), best_cost_, best_path());
    }
    return result();
  }

  double best_cost() const { return best_cost_; }
  const RrtTree& tree() const { return tree_; }
  std::uint64_t iterations() const { return iterations_; }
  std::size_t batches() const { return batches_; }

  std::vector<StateVec> best_path() const {
    std::size_t best = RrtTree::npos;
    for (std::size_t g : goals_) {
      if (best == RrtTree::npos || tree_[g].g < tree_[best].g) best = g;
    }
    if (best == RrtTree::npos) return {};
    std::vector<StateVec> path = tree_.path_to(best);
    if (path.size() == 1) path.push_back(path.front());
    return path;
  }

  PlanResult result() const {
    PlanResult r;
    r.cost = best_cost_;
    r.solved = best_cost_ < kInfinity;
    if (r.solved) r.path = best_path();
    r.counters = {{"iterations", iterations_},
                  {"collision_checks", collision_checks_},
                  {"vertices", tree_.size()},
                  {"rewirings", rewirings_},
                  {"samples_drawn", samples_drawn_},
                  {"batches", batches_},
                  {"pruned_vertices", pruned_},
                  {"informed_violations", informed_violations_}};
    return r;
  }

 private:
  StateVec draw(bool& toward_goal) {
    const auto& goals = problem_->goals();
    if (config_.goal_bias > 0.0 && rng_.uniform01() < config_.goal_bias) {
      toward_goal = true;
      return goals[static_cast<std::size_t>(rng_.uniform01() * static_cast<double>(goals.size())) %
                   goals.size()];
    }
    ++samples_drawn_;
    if (variant_ == RrtStarVariant::kSorted) {
      if (queue_.empty()) refill();
      StateVec x = std::move(queue_.front().second);
      const double f = queue_.front().first;
      queue_.pop_front();
      if (config_.on_queue_pop) config_.on_queue_pop(batches_, f);
      return x;
    }
    if (variant_ == RrtStarVariant::kInformed && best_cost_ < kInfinity) {
      StateVec x = sampler_.sample(rng_, best_cost_);
      if (!(f_hat(*problem_, x) < best_cost_)) ++informed_violations_;
      if (config_.on_sample) config_.on_sample(x, best_cost_);
      return x;
    }
    StateVec x = sample_uniform_box(rng_, problem_->bounds());
    if (config_.on_sample) config_.on_sample(x, best_cost_);
    return x;
  }

  void refill() {
    ++batches_;
    std::vector<std::pair<double, StateVec>> batch;
    batch.reserve(config_.batch_size);
    for (std::size_t i = 0; i < config_.batch_size; ++i) {
      StateVec x = sampler_.sample(rng_, best_cost_);
      const double f = f_hat(*problem_, x);
      if (best_cost_ < kInfinity && !(f < best_cost_)) ++informed_violations_;
      if (config_.on_sample) config_.on_sample(x, best_cost_);
      batch.emplace_back(f, std::move(x));
    }
    std::stable_sort(batch.begin(), batch.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& e : batch) queue_.push_back(std::move(e));
  }

  bool informed_set_empty() const {
    return best_cost_ < kInfinity && !(sampler_.union_upper_bound(best_cost_) > 0.0);
  }

  double rewire_radius() const {
    const std::size_t q = tree_.size() + 1;
    if (q < 2) return config_.max_edge_length;
    const double informed = (variant_ != RrtStarVariant::kPlain && best_cost_ < kInfinity)
                                ? sampler_.informed_measure(best_cost_)
                                : kInfinity;
    return std::min(config_.max_edge_length, radius_bound(rgg_, informed, q));
  }

  bool should_prune() const {
    if (last_prune_cost_ == kInfinity) return true;
    return (last_prune_cost_ - best_cost_) > config_.prune_threshold_fraction * last_prune_cost_;
  }

  /// Removes, leaves first, every vertex with f_hat >= c_best whose whole
  /// subtree is also outside the informed set.
  void prune() {
    last_prune_cost_ = best_cost_;
    std::vector<std::size_t> order;
    std::vector<std::size_t> stack{0};
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      order.push_back(u);
      for (std::size_t c : tree_[u].children) stack.push_back(c);
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const std::size_t u = *it;
      if (u == 0 || !tree_[u].children.empty() || tree_[u].goal) continue;
      if (f_hat(*problem_, tree_[u].x) >= best_cost_) {
        tree_.remove_leaf(u);
        ++pruned_;
      }
    }
  }

  const ProblemDef* problem_;
  RrtConfig config_;
  RrtStarVariant variant_;
  Rng rng_;
  InformedSampler sampler_;
  RrtTree tree_;
  RggParams rgg_;
  std::vector<std::size_t> goals_;
  std::deque<std::pair<double, StateVec>> queue_;
  double best_cost_ = kInfinity;
  double last_prune_cost_ = kInfinity;
  bool improved_ = false;
  std::size_t batches_ = 0;
  std::uint64_t iterations_ = 0;
  std::uint64_t collision_checks_ = 0;
  std::uint64_t rewirings_ = 0;
  std::uint64_t samples_drawn_ = 0;
  std::uint64_t pruned_ = 0;
  std::uint64_t informed_violations_ = 0;
};

}  // namespace bitstar
