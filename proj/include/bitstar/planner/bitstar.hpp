#pragma once

// Batch Informed Trees: an anytime search of an edge-implicit random geometric
// graph, built from batches of informed samples and searched lazily in order of
// potential solution cost.
//
// Vertex and edge queue keys are kept exact: whenever a rewiring lowers the
// cost-to-come of a subtree, the queued entries of every vertex in that subtree
// are re-keyed in place, so the front of each queue always reflects the
// current tree.

#include "bitstar/core/geometry.hpp"
#include "bitstar/planner/indexed_heap.hpp"
#include "bitstar/planner/result.hpp"
#include "bitstar/rgg/connection.hpp"
#include "bitstar/rgg/spatial_index.hpp"
#include "bitstar/sampling/informed.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

namespace bitstar {

/// Cost-to-go estimate used for queue ordering, edge filtering and pruning.
/// kZero turns the search into Dijkstra's algorithm over the batch graph.
enum class CostToGo { kEuclidean, kZero };

/// Number of samples for a shell of the given measure at the given density,
/// rounded to nearest; the rounding remainder is carried into `carry` so the
/// long-run count matches the density.
inline std::size_t jit_sample_count(double shell_measure, double density, double& carry) {
  const double wanted = density * std::max(0.0, shell_measure) + carry;
  const auto count = static_cast<std::size_t>(std::max(0.0, std::floor(wanted + 0.5)));
  carry = wanted - static_cast<double>(count);
  return count;
}

struct BitstarConfig {
  std::size_t batch_size = 100;
  /// Mode, eta and r_max are read from here; dimension, space measure and batch
  /// size are filled in from the problem and this config.
  RggParams rgg{};
  /// Compute the first batch's limits as if its samples were already present,
  /// so the first and second batches use the same limit.
  bool threshold_initial_radius = true;
  /// Also subtract recycled vertices from the graph size used by the limits.
  bool subtract_recycled = false;
  bool delayed_rewiring = true;
  bool jit_sampling = false;
  /// Samples per unit measure for JIT sampling; defaults to batch_size over
  /// the measure of the current informed set.
  std::optional<double> jit_density;
  bool sample_removal = false;
  bool prune = true;
  /// Prune only when the solution improved by more than this fraction since
  /// the previous prune.
  double prune_threshold_fraction = 0.05;
  /// Remove queued edges that can no longer improve their target after an
  /// edge is added.
  bool purge_edge_queue = true;
  CostToGo cost_to_go = CostToGo::kEuclidean;
  /// Stop after this many sample batches have been searched to exhaustion.
  std::optional<std::size_t> max_batches;

  void validate() const {
    if (batch_size < 1) throw std::invalid_argument("BitstarConfig: batch_size must be >= 1");
    if (!(prune_threshold_fraction >= 0.0 && prune_threshold_fraction < 1.0)) {
      throw std::invalid_argument("BitstarConfig: prune_threshold_fraction must be in [0, 1)");
    }
    if (jit_density && !(*jit_density > 0.0)) {
      throw std::invalid_argument("BitstarConfig: jit_density must be > 0");
    }
    rgg.validate();
  }
};

enum class EdgeOutcome { kEdgeAdded, kDiscarded, kBatchExhausted };

enum class StepOutcome {
  kBatchStarted,
  kVertexExpanded,
  kEdgeAdded,
  kDiscarded,
  kBatchExhausted,
  kFinished,
};

/// Lexicographic (g_T(v) + h(v), g_T(v)), then insertion order.
struct VertexKey {
  double total = kInfinity;
  double cost_to_come = kInfinity;
  std::uint64_t seq = 0;
  bool operator<(const VertexKey& o) const {
    return std::tie(total, cost_to_come, seq) < std::tie(o.total, o.cost_to_come, o.seq);
  }
};

/// Lexicographic (g_T(v) + c_hat(v,x) + h(x), g_T(v) + c_hat(v,x), g_T(v)),
/// then insertion order.
struct EdgeKey {
  double total = kInfinity;
  double through = kInfinity;
  double cost_to_come = kInfinity;
  std::uint64_t seq = 0;
  bool operator<(const EdgeKey& o) const {
    return std::tie(total, through, cost_to_come, seq) <
           std::tie(o.total, o.through, o.cost_to_come, o.seq);
  }
};

struct TreeNode {
  std::size_t id = 0;
  StateVec state;
  /// Position of the parent in the snapshot, -1 for the root.
  std::int64_t parent = -1;
  double cost_to_come = kInfinity;
  bool is_goal = false;
};

struct QueuedEdge {
  std::size_t source = 0;
  std::size_t target = 0;
  EdgeKey key;
};

/// Test hooks; both run synchronously inside the planner.
struct BitstarObservers {
  std::function<void(std::size_t source, std::size_t target)> edge_queued;
  /// Every freshly drawn sample together with the solution cost at draw time.
  std::function<void(const StateVec& sample, double best_cost)> sample_drawn;
};

class BitstarPlanner {
 public:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  /// `problem` must outlive the planner.
  BitstarPlanner(const ProblemDef& problem, BitstarConfig config, std::uint64_t seed)
      : problem_(&problem),
        config_(std::move(config)),
        rng_(seed),
        sampler_(problem),
        sample_index_(problem.dimension()),
        vertex_index_(problem.dimension()) {
    config_.rgg.dimension = problem.dimension();
    config_.rgg.space_measure = problem.bounds().measure();
    config_.rgg.batch_size = config_.batch_size;
    config_.validate();
    initialize();
  }

  BitstarPlanner(const BitstarPlanner&) = delete;
  BitstarPlanner& operator=(const BitstarPlanner&) = delete;

  void set_observers(BitstarObservers observers) { observers_ = std::move(observers); }

  // --- single-step API -------------------------------------------------------

  /// One queue operation of the main loop: start a batch when both queues are
  /// empty, otherwise expand one vertex if the vertex queue is not worse than
  /// the edge queue, otherwise process the best edge.
  StepOutcome step() {
    ++counters_.iterations;
    if (edge_queue_.empty() && vertex_queue_.empty()) {
      if (config_.max_batches && batches_ >= *config_.max_batches) return StepOutcome::kFinished;
      if (solution_is_optimal()) return StepOutcome::kFinished;
      start_new_batch();
      return StepOutcome::kBatchStarted;
    }
    if (!vertex_queue_.empty() &&
        (edge_queue_.empty() || vertex_queue_.top_key().total <= edge_queue_.top_key().total)) {
      // Every outgoing edge of the front vertex is keyed no better than the
      // vertex itself; if neither queue can beat the solution the batch is done.
      if (vertex_queue_.top_key().total >= best_cost_ &&
          (edge_queue_.empty() || edge_queue_.top_key().total >= best_cost_)) {
        clear_queues();
        return StepOutcome::kBatchExhausted;
      }
      expand_next_vertex();
      return StepOutcome::kVertexExpanded;
    }
    if (edge_queue_.empty()) return StepOutcome::kBatchExhausted;
    switch (process_best_edge()) {
      case EdgeOutcome::kEdgeAdded:
        return StepOutcome::kEdgeAdded;
      case EdgeOutcome::kDiscarded:
        return StepOutcome::kDiscarded;
      case EdgeOutcome::kBatchExhausted:
        return StepOutcome::kBatchExhausted;
    }
    return StepOutcome::kDiscarded;
  }

  /// Prunes (when due), draws a batch of informed samples and requeues every
  /// vertex.
  void start_new_batch() { begin_batch(std::nullopt); }

  /// As start_new_batch, but with caller-supplied samples in place of random
  /// ones. Invalid states are skipped.
  void start_new_batch(std::span<const StateVec> fresh) { begin_batch(fresh); }

  void expand_next_vertex() {
    if (vertex_queue_.empty()) throw std::logic_error("expand_next_vertex: vertex queue is empty");
    const std::size_t v = vertex_queue_.pop();
    ++counters_.vertices_expanded;
    if (config_.jit_sampling) jit_update_samples(v);

    Node& node = nodes_[v];
    const bool was_unexpanded = node.unexpanded;
    const StateVec& xv = node.x;
    scratch_.clear();
    if (!was_unexpanded && node.near_batch == batches_) {
      for (std::size_t id : node.near_new) {
        if (nodes_[id].kind == Kind::kSample && nodes_[id].is_new) scratch_.push_back(id);
      }
    } else if (!was_unexpanded && config_.rgg.mode == RggMode::kRadius && radius_ < kInfinity) {
      // Only this batch's samples are candidates; scanning them directly is
      // cheaper than a range query over every sample.
      const double r2 = radius_ * radius_;
      for (std::size_t id : new_ids_) {
        if (nodes_[id].kind == Kind::kSample && nodes_[id].is_new &&
            (nodes_[id].x - xv).squaredNorm() <= r2) {
          scratch_.push_back(id);
        }
      }
    } else {
      near(sample_index_, samples_.ids, xv, v, scratch_);
      if (!was_unexpanded) {
        std::erase_if(scratch_, [this](std::size_t id) { return !nodes_[id].is_new; });
      }
    }
    for (std::size_t x : scratch_) {
      const double c = c_hat(xv, nodes_[x].x);
      if (nodes_[v].g_hat + c + heuristic(x) < best_cost_) queue_edge(v, x, c);
    }

    bool rewire = false;
    if (config_.delayed_rewiring) {
      if (was_unexpanded) {
        nodes_[v].unexpanded = false;
        nodes_[v].delayed = true;
      }
      rewire = nodes_[v].delayed && best_cost_ < kInfinity;
    } else {
      rewire = was_unexpanded;
      nodes_[v].unexpanded = false;
    }
    if (!rewire) return;

    scratch_.clear();
    near(vertex_index_, vertices_.ids, nodes_[v].x, v, scratch_);
    for (std::size_t w : scratch_) {
      if (nodes_[w].parent == v) continue;
      const double c = c_hat(nodes_[v].x, nodes_[w].x);
      const double through = nodes_[v].g_hat + c;
      if (through + heuristic(w) < best_cost_ && through < nodes_[w].g_tree) queue_edge(v, w, c);
    }
    if (config_.delayed_rewiring) nodes_[v].delayed = false;
  }

  /// Pops the best edge and adds it to the tree if it passes the four
  /// conditions; the true edge cost is only evaluated after the two estimate
  /// conditions hold.
  EdgeOutcome process_best_edge() {
    if (edge_queue_.empty()) throw std::logic_error("process_best_edge: edge queue is empty");
    const std::size_t rec = edge_queue_.pop();
    const std::size_t v = records_[rec].source;
    const std::size_t x = records_[rec].target;
    const double estimate = records_[rec].c_hat;
    const double gv = nodes_[v].g_tree;
    ++counters_.edges_processed;

    if (!(gv + estimate + heuristic(x) < best_cost_)) {
      clear_queues();
      return EdgeOutcome::kBatchExhausted;
    }
    if (!(gv + estimate < nodes_[x].g_tree)) return EdgeOutcome::kDiscarded;

    ++counters_.collision_checks;
    const double edge_cost = c_true(*problem_, nodes_[v].x, nodes_[x].x);
    if (!(gv + edge_cost + heuristic(x) < best_cost_)) return EdgeOutcome::kDiscarded;
    if (!(gv + edge_cost < nodes_[x].g_tree)) return EdgeOutcome::kDiscarded;

    if (nodes_[x].kind == Kind::kVertex) {
      detach(x);
      ++counters_.rewirings;
    } else {
      samples_.remove(x, nodes_);
      sample_index_.erase(x);
      nodes_[x].kind = Kind::kVertex;
      vertices_.add(x, nodes_);
      vertex_index_.insert(x, nodes_[x].x);
      nodes_[x].unexpanded = true;
      nodes_[x].delayed = false;
      if (nodes_[x].is_goal) solution_vertices_.push_back(x);
      ++counters_.vertices_added;
    }
    attach(v, x, edge_cost);
    if (!vertex_queue_.contains(x) && nodes_[x].unexpanded) enqueue_vertex(x);

    if (config_.purge_edge_queue) {
      for (std::size_t in : nodes_[x].in_edges) {
        if (!edge_queue_.contains(in)) continue;
        if (nodes_[records_[in].source].g_hat + records_[in].c_hat >= nodes_[x].g_tree) {
          edge_queue_.erase(in);
          ++counters_.edges_purged;
        }
      }
    }
    update_best_cost();
    return EdgeOutcome::kEdgeAdded;
  }

  /// Restricts the graph to the informed set of the current solution and
  /// returns the disconnected vertices that could still improve it; they are
  /// turned back into samples.
  std::vector<std::size_t> prune() {
    std::vector<std::size_t> recycled;
    if (best_cost_ == kInfinity) return recycled;
    clear_queues();
    ++counters_.prunes;
    const double c = best_cost_;

    const std::vector<std::size_t> samples(samples_.ids.begin(), samples_.ids.end());
    for (std::size_t s : samples) {
      if (f_value(s) >= c) {
        kill(s);
        ++counters_.pruned_samples;
      }
    }

    std::vector<std::size_t> order(vertices_.ids.begin(), vertices_.ids.end());
    std::sort(order.begin(), order.end(), [this](std::size_t a, std::size_t b) {
      return std::tie(nodes_[a].g_tree, a) < std::tie(nodes_[b].g_tree, b);
    });
    std::vector<char> removed(nodes_.size(), 0);
    for (std::size_t v : order) {
      const std::size_t parent = nodes_[v].parent;
      const double g = (parent != npos && removed[parent]) ? kInfinity : nodes_[v].g_tree;
      const double f = f_value(v);
      if (!(f > c || g + heuristic(v) > c)) continue;
      removed[v] = 1;
      ++counters_.pruned_vertices;
      if (parent != npos && !removed[parent]) {
        auto& siblings = nodes_[parent].children;
        std::erase(siblings, v);
      }
      nodes_[v].children.clear();
      nodes_[v].parent = npos;
      nodes_[v].g_tree = kInfinity;
      vertices_.remove(v, nodes_);
      vertex_index_.erase(v);
      std::erase(solution_vertices_, v);
      if (f < c) {
        sample_index_.insert(v, nodes_[v].x);
        nodes_[v].kind = Kind::kSample;
        nodes_[v].unexpanded = false;
        nodes_[v].delayed = false;
        samples_.add(v, nodes_);
        recycled.push_back(v);
        ++counters_.recycled;
      } else {
        nodes_[v].kind = Kind::kSample;  // so kill() finds it in no list
        kill(v);
      }
    }
    return recycled;
  }

  /// Draws the samples needed to cover the neighbourhood of `v` at the
  /// configured density, by growing the sampled informed set to
  /// min{f_hat(v) + 2r, c_best}.
  void jit_update_samples(std::size_t v) {
    const double required = std::min(f_value(v) + 2.0 * radius_, best_cost_);
    // The unlimited-radius pass over start and goals draws nothing.
    if (required == kInfinity || !(required > sampled_cost_)) return;
    const double shell = sampler_.union_upper_bound(required) -
                         (sampled_cost_ > 0.0 ? sampler_.union_upper_bound(sampled_cost_) : 0.0);
    if (!(shell > 0.0)) {
      sampled_cost_ = required;
      return;
    }
    const std::size_t count = jit_sample_count(shell, jit_density_, jit_carry_);
    for (std::size_t i = 0; i < count; ++i) {
      StateVec x = draw_shell_sample(sampled_cost_, required);
      ++counters_.sample_attempts;
      ++counters_.jit_samples;
      if (!problem_->bounds().contains(x) || !problem_->is_state_valid(x)) continue;
      add_fresh_sample(std::move(x));
    }
    sampled_cost_ = required;
  }

  /// Forgets every unconnected sample except unconnected goals.
  void drop_unconnected_samples() {
    const std::vector<std::size_t> samples(samples_.ids.begin(), samples_.ids.end());
    for (std::size_t s : samples) {
      if (nodes_[s].is_goal) continue;
      kill(s);
      ++counters_.dropped_samples;
    }
  }

  // --- anytime driver --------------------------------------------------------

  PlanResult solve(const Budget& budget, const ProgressCallback& callback = {}) {
    StopCheck stop(budget);
    if (!(budget.time_s > 0.0)) return result();
    on_improvement_ = [&](double cost) {
      if (callback) callback(stop.elapsed_s(), cost, best_path());
    };
    if (best_cost_ < kInfinity) on_improvement_(best_cost_);
    std::uint64_t steps = 0;
    while (!stop.should_stop(best_cost_, steps)) {
      ++steps;
      if (step() == StepOutcome::kFinished) break;
    }
    on_improvement_ = nullptr;
    return result();
  }

  PlanResult result() const {
    PlanResult r;
    r.cost = best_cost_;
    r.solved = best_cost_ < kInfinity;
    if (r.solved) r.path = best_path();
    r.counters = counters();
    return r;
  }

  // --- inspection ------------------------------------------------------------

  double best_cost() const { return best_cost_; }
  std::size_t batches() const { return batches_; }
  double connection_radius() const { return radius_; }
  std::size_t connection_k() const { return k_; }
  /// Graph size used for the current batch's connection limits.
  std::size_t connection_graph_size() const { return last_q_; }
  const BitstarConfig& config() const { return config_; }

  std::size_t vertex_queue_size() const { return vertex_queue_.size(); }
  std::size_t edge_queue_size() const { return edge_queue_.size(); }

  std::vector<QueuedEdge> edge_queue_snapshot() const {
    std::vector<QueuedEdge> out;
    for (std::size_t rec : edge_queue_.handles()) {
      out.push_back({records_[rec].source, records_[rec].target, edge_queue_.key(rec)});
    }
    std::sort(out.begin(), out.end(),
              [](const QueuedEdge& a, const QueuedEdge& b) { return a.key < b.key; });
    return out;
  }

  std::vector<std::size_t> vertex_queue_snapshot() const {
    std::vector<std::size_t> out(vertex_queue_.handles().begin(), vertex_queue_.handles().end());
    std::sort(out.begin(), out.end(), [this](std::size_t a, std::size_t b) {
      return vertex_queue_.key(a) < vertex_queue_.key(b);
    });
    return out;
  }

  std::optional<VertexKey> best_vertex_key() const {
    if (vertex_queue_.empty()) return std::nullopt;
    return vertex_queue_.top_key();
  }
  std::optional<EdgeKey> best_edge_key() const {
    if (edge_queue_.empty()) return std::nullopt;
    return edge_queue_.top_key();
  }

  std::size_t state_count() const { return nodes_.size(); }
  const StateVec& state(std::size_t id) const { return nodes_.at(id).x; }
  bool is_vertex(std::size_t id) const { return nodes_.at(id).kind == Kind::kVertex; }
  bool is_sample(std::size_t id) const { return nodes_.at(id).kind == Kind::kSample; }
  bool is_new(std::size_t id) const { return nodes_.at(id).is_new; }
  bool is_unexpanded(std::size_t id) const { return nodes_.at(id).unexpanded; }
  bool is_delayed(std::size_t id) const { return nodes_.at(id).delayed; }
  bool is_goal(std::size_t id) const { return nodes_.at(id).is_goal; }
  double cost_to_come(std::size_t id) const { return nodes_.at(id).g_tree; }
  std::size_t parent(std::size_t id) const { return nodes_.at(id).parent; }
  std::size_t root() const { return root_; }

  std::vector<std::size_t> vertex_ids() const { return vertices_.ids; }
  std::vector<std::size_t> sample_ids() const { return samples_.ids; }
  std::vector<std::size_t> solution_vertices() const { return solution_vertices_; }

  /// Recomputes g_T from the root along parent links.
  double recompute_cost_to_come(std::size_t id) const {
    double total = 0.0;
    std::size_t guard = 0;
    while (id != root_) {
      const std::size_t p = nodes_.at(id).parent;
      if (p == npos) return kInfinity;
      total += (nodes_[id].x - nodes_[p].x).norm();
      id = p;
      if (++guard > nodes_.size()) throw std::logic_error("cycle in search tree");
    }
    return total;
  }

  std::vector<TreeNode> tree_snapshot() const {
    std::vector<TreeNode> out;
    std::vector<std::int64_t> position(nodes_.size(), -1);
    // Parents are always cheaper than children, so sorting by cost orders
    // every parent before its children.
    std::vector<std::size_t> order(vertices_.ids.begin(), vertices_.ids.end());
    std::sort(order.begin(), order.end(), [this](std::size_t a, std::size_t b) {
      return std::tie(nodes_[a].g_tree, a) < std::tie(nodes_[b].g_tree, b);
    });
    for (std::size_t id : order) {
      position[id] = static_cast<std::int64_t>(out.size());
      const std::size_t p = nodes_[id].parent;
      out.push_back({id, nodes_[id].x, p == npos ? -1 : position[p], nodes_[id].g_tree,
                     nodes_[id].is_goal});
    }
    return out;
  }

  std::vector<StateVec> best_path() const {
    std::vector<StateVec> path;
    const std::size_t goal = best_goal();
    if (goal == npos) return path;
    for (std::size_t id = goal; id != npos; id = nodes_[id].parent) path.push_back(nodes_[id].x);
    std::reverse(path.begin(), path.end());
    if (path.size() == 1) path.push_back(path.front());
    return path;
  }

  Counters counters() const {
    return {
        {"iterations", counters_.iterations},
        {"batches", batches_},
        {"samples_drawn", counters_.samples_drawn},
        {"sample_attempts", counters_.sample_attempts},
        {"jit_samples", counters_.jit_samples},
        {"collision_checks", counters_.collision_checks},
        {"edges_queued", counters_.edges_queued},
        {"edges_processed", counters_.edges_processed},
        {"edges_purged", counters_.edges_purged},
        {"vertices_expanded", counters_.vertices_expanded},
        {"vertices_added", counters_.vertices_added},
        {"vertices", vertices_.ids.size()},
        {"samples", samples_.ids.size()},
        {"rewirings", counters_.rewirings},
        {"prunes", counters_.prunes},
        {"pruned_vertices", counters_.pruned_vertices},
        {"pruned_samples", counters_.pruned_samples},
        {"recycled", counters_.recycled},
        {"dropped_samples", counters_.dropped_samples},
        {"informed_violations", counters_.informed_violations},
        {"shell_fallbacks", shell_stats_.fallbacks},
        {"vertex_queue", vertex_queue_.size()},
        {"edge_queue", edge_queue_.size()},
    };
  }

 private:
  enum class Kind : std::uint8_t { kSample, kVertex, kDead };

  struct Node {
    StateVec x;
    double g_hat = 0.0;
    double h_hat = 0.0;
    double g_tree = kInfinity;
    std::size_t parent = npos;
    double parent_edge = kInfinity;
    std::vector<std::size_t> children;
    std::vector<std::size_t> out_edges;
    std::vector<std::size_t> in_edges;
    std::size_t list_pos = npos;
    Kind kind = Kind::kSample;
    bool is_new = false;
    bool unexpanded = false;
    bool delayed = false;
    bool is_goal = false;
    bool touched = false;
    // New samples within the radius, found once per batch from the sample side.
    std::vector<std::size_t> near_new;
    std::size_t near_batch = 0;
  };

  /// Dense id list with O(1) removal; positions live in the nodes.
  struct IdList {
    std::vector<std::size_t> ids;
    void add(std::size_t id, std::vector<Node>& nodes) {
      nodes[id].list_pos = ids.size();
      ids.push_back(id);
    }
    void remove(std::size_t id, std::vector<Node>& nodes) {
      const std::size_t at = nodes[id].list_pos;
      const std::size_t last = ids.back();
      ids[at] = last;
      nodes[last].list_pos = at;
      ids.pop_back();
      nodes[id].list_pos = npos;
    }
  };

  struct EdgeRecord {
    std::size_t source;
    std::size_t target;
    double c_hat;
  };

  struct Tally {
    std::uint64_t iterations = 0;
    std::uint64_t samples_drawn = 0;
    std::uint64_t sample_attempts = 0;
    std::uint64_t jit_samples = 0;
    std::uint64_t collision_checks = 0;
    std::uint64_t edges_queued = 0;
    std::uint64_t edges_processed = 0;
    std::uint64_t edges_purged = 0;
    std::uint64_t vertices_expanded = 0;
    std::uint64_t vertices_added = 0;
    std::uint64_t rewirings = 0;
    std::uint64_t prunes = 0;
    std::uint64_t pruned_vertices = 0;
    std::uint64_t pruned_samples = 0;
    std::uint64_t recycled = 0;
    std::uint64_t dropped_samples = 0;
    std::uint64_t informed_violations = 0;
  };

  void initialize() {
    const ProblemDef& p = *problem_;
    root_ = new_node(p.start());
    Node& start = nodes_[root_];
    start.kind = Kind::kVertex;
    start.g_tree = 0.0;
    start.unexpanded = true;
    vertices_.add(root_, nodes_);
    for (const StateVec& goal : p.goals()) {
      if ((goal - p.start()).norm() == 0.0) {
        if (!nodes_[root_].is_goal) {
          nodes_[root_].is_goal = true;
          solution_vertices_.push_back(root_);
        }
        continue;
      }
      const std::size_t id = new_node(goal);
      nodes_[id].is_goal = true;
      nodes_[id].is_new = true;
      samples_.add(id, nodes_);
      new_ids_.push_back(id);
    }
    vertex_index_.insert(root_, nodes_[root_].x);
    for (std::size_t id : samples_.ids) sample_index_.insert(id, nodes_[id].x);
    sample_index_.rebuild();
    // Before the first batch the graph is just start and goals, fully connected.
    radius_ = kInfinity;
    k_ = nodes_.size();
    enqueue_vertex(root_);
    update_best_cost();
  }

  std::size_t new_node(const StateVec& x) {
    Node node;
    node.x = x;
    node.g_hat = (x - problem_->start()).norm();
    node.h_hat = h_hat(*problem_, x);
    nodes_.push_back(std::move(node));
    return nodes_.size() - 1;
  }

  double heuristic(std::size_t id) const {
    return config_.cost_to_go == CostToGo::kZero ? 0.0 : nodes_[id].h_hat;
  }

  double f_value(std::size_t id) const { return nodes_[id].g_hat + heuristic(id); }

  /// Neighbours of x among the states of one index, excluding `self`.
  void near(const SpatialIndex& index, const std::vector<std::size_t>& members, const StateVec& x,
            std::size_t self, std::vector<std::size_t>& out) const {
    auto accept = [self](std::size_t id) { return id != self; };
    if (radius_ == kInfinity) {
      for (std::size_t id : members) {
        if (accept(id)) out.push_back(id);
      }
    } else if (config_.rgg.mode == RggMode::kRadius) {
      index.radius(x, radius_, accept, out);
    } else {
      index.nearest_k(x, k_, accept, out);
    }
  }

  void begin_batch(std::optional<std::span<const StateVec>> injected) {
    ++batches_;
    clear_queues();
    std::vector<std::size_t> recycled;
    bool dropped = false;
    if (config_.prune && should_prune()) {
      recycled = prune();
      last_prune_cost_ = best_cost_;
      if (config_.sample_removal) {
        drop_unconnected_samples();
        recycled.clear();
        dropped = true;
      }
    }
    for (std::size_t id : new_ids_) {
      if (id < nodes_.size()) nodes_[id].is_new = false;
    }
    new_ids_.clear();
    for (std::size_t id : recycled) {
      nodes_[id].is_new = true;
      new_ids_.push_back(id);
    }

    std::size_t fresh = 0;
    if (injected) {
      for (const StateVec& x : *injected) {
        if (!problem_->is_state_valid(x)) continue;
        add_fresh_sample(x);
        ++fresh;
      }
    } else if (!config_.jit_sampling && !solution_is_optimal()) {
      const std::size_t cap = 1000 * config_.batch_size;
      for (std::size_t attempt = 0; fresh < config_.batch_size && attempt < cap; ++attempt) {
        StateVec x = sampler_.sample(rng_, best_cost_);
        ++counters_.sample_attempts;
        if (!problem_->is_state_valid(x)) continue;
        add_fresh_sample(std::move(x));
        ++fresh;
      }
    }

    std::size_t subtract = fresh;
    if (config_.subtract_recycled) subtract += recycled.size();
    // After samples are dropped the graph restarts from the tree alone, like
    // the first batch.
    if (config_.threshold_initial_radius && (batches_ == 1 || dropped)) subtract = 0;
    const std::size_t total = vertices_.ids.size() + samples_.ids.size();
    const std::size_t q = std::max<std::size_t>(2, total > subtract ? total - subtract : 0);
    last_q_ = q;
    const double informed = best_cost_ < kInfinity ? sampler_.informed_measure(best_cost_) : kInfinity;
    radius_ = radius_bound(config_.rgg, informed, q);
    k_ = k_bound(config_.rgg, q);

    if (config_.jit_sampling) {
      sampled_cost_ = 0.0;
      const double measure = std::min(config_.rgg.space_measure, informed);
      jit_density_ = config_.jit_density.value_or(
          measure > 0.0 ? static_cast<double>(config_.batch_size) / measure : 0.0);
    }

    if (!config_.jit_sampling) index_new_samples();
    for (std::size_t v : vertices_.ids) {
      if (!vertex_queue_.contains(v)) enqueue_vertex(v);
    }
  }

  /// Lists, for every vertex, the new samples within the radius. One range
  /// query per new sample replaces a scan of all new samples per vertex; the
  /// lists keep the order of new_ids_ and the same inclusive test.
  void index_new_samples() {
    if (config_.rgg.mode != RggMode::kRadius || !(radius_ < kInfinity)) return;
    for (std::size_t v : vertices_.ids) {
      nodes_[v].near_new.clear();
      nodes_[v].near_batch = batches_;
    }
    const double r2 = radius_ * radius_;
    auto any = [](std::size_t) { return true; };
    for (std::size_t id : new_ids_) {
      if (nodes_[id].kind != Kind::kSample) continue;
      scratch_.clear();
      vertex_index_.radius(nodes_[id].x, radius_ * (1.0 + 1e-9), any, scratch_);
      for (std::size_t w : scratch_) {
        if ((nodes_[id].x - nodes_[w].x).squaredNorm() <= r2) nodes_[w].near_new.push_back(id);
      }
    }
  }

  /// True once the solution costs the straight-line distance to its goal:
  /// the informed set is then empty and no sample can improve it.
  bool solution_is_optimal() const {
    return best_cost_ < kInfinity && !(sampler_.union_upper_bound(best_cost_) > 0.0);
  }

  bool should_prune() const {
    if (best_cost_ == kInfinity) return false;
    if (last_prune_cost_ == kInfinity) return true;
    return (last_prune_cost_ - best_cost_) > config_.prune_threshold_fraction * last_prune_cost_;
  }

  void add_fresh_sample(StateVec x) {
    if (observers_.sample_drawn) observers_.sample_drawn(x, best_cost_);
    if (best_cost_ < kInfinity && !(f_hat(*problem_, x) < best_cost_)) {
      ++counters_.informed_violations;
    }
    const std::size_t id = new_node(x);
    nodes_[id].is_new = true;
    nodes_[id].is_goal = false;
    samples_.add(id, nodes_);
    new_ids_.push_back(id);
    sample_index_.insert(id, nodes_[id].x);
    ++counters_.samples_drawn;
  }

  StateVec draw_shell_sample(double c_lo, double c_hi) {
    const auto& phs = sampler_.hyperspheroids();
    if (phs.size() == 1) {
      const double lo = std::max(c_lo, phs.front().c_min());
      if (c_hi == kInfinity) return sample_informed_shell(rng_, phs.front(), problem_->bounds(), lo, c_hi, &shell_stats_);
      // Sample the unclipped shell so the density per unit measure is exact;
      // states outside the bounds are discarded by the caller.
      return sample_informed_shell(rng_, phs.front(), phs.front().bounding_box(c_hi), lo, c_hi,
                                   &shell_stats_);
    }
    for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
      StateVec x = sampler_.sample(rng_, c_hi);
      if (f_hat(*problem_, x) >= c_lo) return x;
    }
    ++shell_stats_.fallbacks;
    return sampler_.sample(rng_, c_hi);
  }

  void enqueue_vertex(std::size_t v) {
    vertex_queue_.push(v, vertex_key(v, vertex_seq_++));
  }

  VertexKey vertex_key(std::size_t v, std::uint64_t seq) const {
    const double g = nodes_[v].g_tree;
    return {g + heuristic(v), g, seq};
  }

  EdgeKey edge_key(std::size_t rec, std::uint64_t seq) const {
    const EdgeRecord& e = records_[rec];
    const double g = nodes_[e.source].g_tree;
    return {g + e.c_hat + heuristic(e.target), g + e.c_hat, g, seq};
  }

  void queue_edge(std::size_t v, std::size_t x, double estimate) {
    const std::size_t rec = records_.size();
    records_.push_back({v, x, estimate});
    edge_queue_.push(rec, edge_key(rec, rec));
    nodes_[v].out_edges.push_back(rec);
    nodes_[x].in_edges.push_back(rec);
    touch(v);
    touch(x);
    ++counters_.edges_queued;
    if (observers_.edge_queued) observers_.edge_queued(v, x);
  }

  void touch(std::size_t id) {
    if (nodes_[id].touched) return;
    nodes_[id].touched = true;
    touched_.push_back(id);
  }

  void clear_queues() {
    vertex_queue_.clear();
    edge_queue_.clear();
    records_.clear();
    for (std::size_t id : touched_) {
      nodes_[id].out_edges.clear();
      nodes_[id].in_edges.clear();
      nodes_[id].touched = false;
    }
    touched_.clear();
  }

  void detach(std::size_t x) {
    const std::size_t p = nodes_[x].parent;
    if (p != npos) std::erase(nodes_[p].children, x);
    nodes_[x].parent = npos;
  }

  /// Connects x below v and pushes the new cost-to-come through x's subtree,
  /// re-keying every queued entry whose key depends on a changed cost.
  void attach(std::size_t v, std::size_t x, double edge_cost) {
    nodes_[x].parent = v;
    nodes_[x].parent_edge = edge_cost;
    nodes_[v].children.push_back(x);
    stack_.clear();
    stack_.push_back(x);
    while (!stack_.empty()) {
      const std::size_t u = stack_.back();
      stack_.pop_back();
      nodes_[u].g_tree = nodes_[nodes_[u].parent].g_tree + nodes_[u].parent_edge;
      if (vertex_queue_.contains(u)) vertex_queue_.update(u, vertex_key(u, vertex_queue_.key(u).seq));
      for (std::size_t rec : nodes_[u].out_edges) {
        if (edge_queue_.contains(rec)) edge_queue_.update(rec, edge_key(rec, edge_queue_.key(rec).seq));
      }
      for (std::size_t child : nodes_[u].children) stack_.push_back(child);
    }
  }

  void kill(std::size_t id) {
    Node& node = nodes_[id];
    if (node.kind == Kind::kSample && node.list_pos != npos) samples_.remove(id, nodes_);
    node.kind = Kind::kDead;
    node.is_new = false;
    sample_index_.erase(id);
    vertex_index_.erase(id);
    node.children.clear();
    node.children.shrink_to_fit();
  }

  std::size_t best_goal() const {
    std::size_t best = npos;
    double cost = kInfinity;
    for (std::size_t g : solution_vertices_) {
      if (nodes_[g].g_tree < cost) {
        cost = nodes_[g].g_tree;
        best = g;
      }
    }
    return best;
  }

  void update_best_cost() {
    const std::size_t goal = best_goal();
    const double cost = goal == npos ? kInfinity : nodes_[goal].g_tree;
    if (cost < best_cost_) {
      best_cost_ = cost;
      if (on_improvement_) on_improvement_(best_cost_);
    }
  }

  const ProblemDef* problem_;
  BitstarConfig config_;
  Rng rng_;
  InformedSampler sampler_;
  SpatialIndex sample_index_;
  SpatialIndex vertex_index_;
  BitstarObservers observers_;
  std::function<void(double)> on_improvement_;

  std::vector<Node> nodes_;
  IdList vertices_;
  IdList samples_;
  std::vector<std::size_t> new_ids_;
  std::vector<std::size_t> solution_vertices_;
  std::size_t root_ = 0;

  IndexedHeap<VertexKey> vertex_queue_;
  IndexedHeap<EdgeKey> edge_queue_;
  std::vector<EdgeRecord> records_;
  std::vector<std::size_t> touched_;
  std::uint64_t vertex_seq_ = 0;

  double best_cost_ = kInfinity;
  double last_prune_cost_ = kInfinity;
  std::size_t batches_ = 0;
  double radius_ = kInfinity;
  std::size_t k_ = 0;
  std::size_t last_q_ = 0;

  double sampled_cost_ = 0.0;
  double jit_density_ = 0.0;
  double jit_carry_ = 0.0;
  ShellStats shell_stats_;

  Tally counters_;
  std::vector<std::size_t> scratch_;
  std::vector<std::size_t> stack_;
};

/// Runs BIT* on `problem` until the budget is spent.
inline PlanResult solve_bitstar(const ProblemDef& problem, const BitstarConfig& config,
                                std::uint64_t seed, const Budget& budget,
                                const ProgressCallback& callback = {}) {
  BitstarPlanner planner(problem, config, seed);
  return planner.solve(budget, callback);
}

}  // namespace bitstar
