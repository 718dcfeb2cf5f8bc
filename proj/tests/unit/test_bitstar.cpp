#include "bitstar/bench/scenarios.hpp"
#include "bitstar/planner/bitstar.hpp"

#include "checks.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

using namespace bitstar;
using testutil::vec;

namespace {

std::vector<std::size_t> sorted(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  return v;
}

BitstarConfig small_config() {
  BitstarConfig cfg;
  cfg.batch_size = 20;
  return cfg;
}

// Wall blocking the straight line, open above and below.
ProblemDef walled(double half_height = 0.5) {
  return ProblemDef(testutil::cube(2, 1), {AxisBox(vec({-0.05, -half_height}), vec({0.05, half_height}))},
                    vec({-0.5, 0}), {vec({0.5, 0})});
}

void expect_same_tree(const BitstarPlanner& p, const oracle::ReferenceBitstar& ref, const std::string& where) {
  ASSERT_EQ(p.state_count(), ref.size()) << where;
  for (std::size_t id = 0; id < ref.size(); ++id) {
    const bool ref_vertex = ref.kind(id) == oracle::ReferenceBitstar::Kind::kVertex;
    const bool ref_sample = ref.kind(id) == oracle::ReferenceBitstar::Kind::kSample;
    ASSERT_EQ(p.is_vertex(id), ref_vertex) << where << " state " << id;
    ASSERT_EQ(p.is_sample(id), ref_sample) << where << " state " << id;
    if (!ref_vertex) continue;
    ASSERT_EQ(p.parent(id), ref.parent(id)) << where << " state " << id;
    ASSERT_NEAR(p.cost_to_come(id), ref.g(id), 1e-12) << where << " state " << id;
  }
  ASSERT_EQ(p.best_cost(), ref.cost()) << where;
}

}  // namespace

TEST(BitstarInit, StandardProblem) {
  const ProblemDef p = walled();
  const BitstarPlanner planner(p, small_config(), 1);
  EXPECT_EQ(planner.vertex_ids().size(), 1u);
  EXPECT_EQ(planner.sample_ids().size(), 1u);
  EXPECT_EQ(planner.best_cost(), kInfinity);
  EXPECT_TRUE(planner.is_unexpanded(planner.root()));
  EXPECT_EQ(planner.connection_radius(), kInfinity);
  EXPECT_EQ(planner.vertex_queue_size(), 1u);
}

TEST(BitstarInit, StartIsAGoal) {
  const ProblemDef p(testutil::cube(2, 1), {}, vec({0, 0}), {vec({0, 0}), vec({0.5, 0})});
  BitstarPlanner planner(p, small_config(), 1);
  EXPECT_EQ(planner.best_cost(), 0.0);
  EXPECT_EQ(planner.best_path().size(), 2u);
  std::vector<double> costs;
  planner.solve({.time_s = 0.05}, [&](double, double c, const std::vector<StateVec>&) { costs.push_back(c); });
  EXPECT_EQ(costs, std::vector<double>{0.0});
}

TEST(BitstarInit, EveryGoalIsASample) {
  const ProblemDef p(testutil::cube(2, 1), {}, vec({0, 0}), {vec({0.5, 0}), vec({-0.5, 0}), vec({0, 0.5})});
  const BitstarPlanner planner(p, small_config(), 1);
  EXPECT_EQ(planner.sample_ids().size(), 3u);
  for (std::size_t id : planner.sample_ids()) EXPECT_TRUE(planner.is_goal(id));
}

TEST(BitstarConfigValidation, RejectsBadValues) {
  const ProblemDef p = walled();
  BitstarConfig cfg;
  cfg.batch_size = 0;
  EXPECT_THROW(BitstarPlanner(p, cfg, 1), std::invalid_argument);
  cfg = {};
  cfg.rgg.eta = 1.0;
  EXPECT_THROW(BitstarPlanner(p, cfg, 1), std::invalid_argument);
  cfg = {};
  cfg.jit_density = -1.0;
  EXPECT_THROW(BitstarPlanner(p, cfg, 1), std::invalid_argument);
}

TEST(BitstarEdges, FirstFreeEdgeGrowsTheTree) {
  const ProblemDef p = walled();
  BitstarPlanner planner(p, small_config(), 1);
  checks::run_batch(planner);  // start-goal edge is blocked
  EXPECT_EQ(planner.vertex_ids().size(), 1u);
  const std::vector<StateVec> samples{vec({-0.3, 0.2})};
  planner.start_new_batch(samples);
  planner.expand_next_vertex();
  ASSERT_EQ(planner.edge_queue_size(), 1u);
  EXPECT_EQ(planner.process_best_edge(), EdgeOutcome::kEdgeAdded);
  EXPECT_EQ(planner.vertex_ids().size(), 2u);
}

TEST(BitstarEdges, ConditionOneFailureClearsTheQueues) {
  const ProblemDef p = walled();
  BitstarPlanner planner(p, small_config(), 1);
  checks::run_batch(planner);
  // A leads over the wall to the goal; D is queued before the solution
  // exists and is too expensive afterwards.
  const std::vector<StateVec> samples{vec({0.0, 0.55}), vec({-0.5, -0.9})};
  planner.start_new_batch(samples);
  while (planner.best_cost() == kInfinity) planner.step();
  ASSERT_GT(planner.edge_queue_size(), 0u);
  ASSERT_GE(planner.best_edge_key()->total, planner.best_cost());
  EXPECT_EQ(planner.process_best_edge(), EdgeOutcome::kBatchExhausted);
  EXPECT_EQ(planner.edge_queue_size(), 0u);
  EXPECT_EQ(planner.vertex_queue_size(), 0u);
  const std::size_t batches = planner.batches();
  EXPECT_EQ(planner.step(), StepOutcome::kBatchStarted);
  EXPECT_EQ(planner.batches(), batches + 1);
}

TEST(BitstarExpansion, UnexpandedVertexQueuesEveryInRangeSample) {
  const ProblemDef p = walled();
  BitstarPlanner planner(p, small_config(), 1);
  checks::run_batch(planner);
  const std::vector<StateVec> samples{vec({-0.6, 0.1}), vec({-0.4, -0.1}), vec({-0.5, 0.2})};
  planner.start_new_batch(samples);
  ASSERT_GT(planner.connection_radius(), 0.3);
  // The root was expanded in the first pass, so it sees new samples only;
  // all three are new.
  planner.expand_next_vertex();
  EXPECT_EQ(planner.edge_queue_size(), 3u);
}

TEST(BitstarExpansion, ExpandedVertexSeesOnlyNewSamples) {
  const ProblemDef p = walled();
  BitstarPlanner planner(p, small_config(), 1);
  checks::run_batch(planner);
  // The goal stays unconnected behind the wall, so it is an old sample in
  // the second batch.
  planner.start_new_batch(std::vector<StateVec>{vec({-0.6, 0.3})});
  checks::run_batch(planner);
  ASSERT_EQ(planner.best_cost(), kInfinity);
  const std::vector<std::size_t> old_samples = planner.sample_ids();
  ASSERT_FALSE(old_samples.empty());
  planner.start_new_batch(std::vector<StateVec>{vec({-0.45, -0.2})});
  std::set<std::size_t> targets;
  BitstarObservers obs;
  obs.edge_queued = [&](std::size_t, std::size_t t) { targets.insert(t); };
  planner.set_observers(obs);
  ASSERT_EQ(planner.vertex_queue_snapshot().front(), planner.root());
  ASSERT_FALSE(planner.is_unexpanded(planner.root()));
  planner.expand_next_vertex();
  EXPECT_EQ(targets, (std::set<std::size_t>{planner.state_count() - 1}));
  for (std::size_t s : old_samples) EXPECT_EQ(targets.count(s), 0u);
}

// Brute-force enumeration of the expansion sets on a tiny instance.
TEST(BitstarExpansion, QueueContentsMatchEnumeration) {
  for (bool delayed : {true, false}) {
    const ProblemDef p = walled(0.3);
    BitstarConfig cfg = small_config();
    cfg.delayed_rewiring = delayed;
    cfg.rgg.r_max = 0.5;
    BitstarPlanner planner(p, cfg, 1);
    checks::run_batch(planner);
    const std::vector<StateVec> b1{vec({-0.2, 0.4}), vec({0.2, 0.4})};
    planner.start_new_batch(b1);
    checks::run_batch(planner);
    ASSERT_LT(planner.best_cost(), kInfinity);
    const std::vector<StateVec> b2{vec({-0.3, 0.35}), vec({0.0, 0.45})};
    planner.start_new_batch(b2);
    // Expand every queued vertex one by one and check each expansion.
    const double r = planner.connection_radius();
    const double c = planner.best_cost();
    while (planner.vertex_queue_size() > 0) {
      const std::size_t v = planner.vertex_queue_snapshot().front();
      const bool unexpanded = planner.is_unexpanded(v);
      const bool rewires = delayed ? (planner.is_delayed(v) || unexpanded) && c < kInfinity : unexpanded;
      std::set<std::pair<std::size_t, std::size_t>> want;
      for (std::size_t x = 0; x < planner.state_count(); ++x) {
        if (x == v || (planner.state(x) - planner.state(v)).norm() > r) continue;
        const double est = g_hat(p, planner.state(v)) + c_hat(planner.state(v), planner.state(x));
        if (planner.is_sample(x) && (unexpanded || planner.is_new(x)) && est + h_hat(p, planner.state(x)) < c) {
          want.insert({v, x});
        }
        if (rewires && planner.is_vertex(x) && planner.parent(x) != v && est + h_hat(p, planner.state(x)) < c &&
            est < planner.cost_to_come(x)) {
          want.insert({v, x});
        }
      }
      std::set<std::pair<std::size_t, std::size_t>> got;
      BitstarObservers obs;
      obs.edge_queued = [&](std::size_t s, std::size_t t) { got.insert({s, t}); };
      planner.set_observers(obs);
      planner.expand_next_vertex();
      EXPECT_EQ(got, want) << "vertex " << v << " delayed=" << delayed;
    }
  }
}

TEST(BitstarReference, FiveStateInstance) {
  const ProblemDef p = walled(0.4);
  for (bool delayed : {true, false}) {
    BitstarConfig cfg = small_config();
    cfg.delayed_rewiring = delayed;
    BitstarPlanner planner(p, cfg, 1);
    oracle::ReferenceBitstar ref(p, delayed, false, true);
    checks::run_batch(planner);
    ref.run_batch();
    expect_same_tree(planner, ref, "initial");
    const std::vector<StateVec> samples{vec({-0.2, 0.45}), vec({0.25, 0.5}), vec({0.1, -0.6})};
    planner.start_new_batch(samples);
    ref.begin_batch(samples, planner.connection_radius());
    checks::run_batch(planner);
    ref.run_batch();
    expect_same_tree(planner, ref, "batch 1");
    EXPECT_LT(planner.best_cost(), kInfinity);
  }
}

// Randomized small instances over several batches, with obstacles, a capped
// radius, pruning, both rewiring modes and both cost-to-go estimates.
TEST(BitstarReference, RandomSmallInstances) {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int solved = 0, pruned = 0;
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<AxisBox> boxes;
    const int nboxes = 2 + trial % 4;
    for (int k = 0; k < nboxes; ++k) {
      const StateVec c = vec({0.7 * u(gen), 0.7 * u(gen)});
      const StateVec h = vec({0.05 + 0.2 * std::abs(u(gen)), 0.05 + 0.2 * std::abs(u(gen))});
      boxes.emplace_back(c - h, c + h);
    }
    StateVec s, g;
    do {
      s = vec({-0.9 + 0.3 * std::abs(u(gen)), 0.8 * u(gen)});
      g = vec({0.9 - 0.3 * std::abs(u(gen)), 0.8 * u(gen)});
    } while ([&] {
      for (const auto& b : boxes) {
        if (b.interior_contains(s) || b.interior_contains(g)) return true;
      }
      return false;
    }());
    const ProblemDef p(testutil::cube(2, 1), boxes, s, {g});
    const bool delayed = trial % 2 == 0;
    const bool zero_h = trial % 3 == 0;
    BitstarConfig cfg = small_config();
    cfg.delayed_rewiring = delayed;
    cfg.cost_to_go = zero_h ? CostToGo::kZero : CostToGo::kEuclidean;
    cfg.rgg.r_max = 0.5 + 0.5 * std::abs(u(gen));
    BitstarPlanner planner(p, cfg, static_cast<std::uint64_t>(trial));
    oracle::ReferenceBitstar ref(p, delayed, zero_h, true);
    checks::run_batch(planner);
    ref.run_batch();
    expect_same_tree(planner, ref, "trial " + std::to_string(trial) + " initial");
    for (int batch = 1; batch <= 4; ++batch) {
      std::vector<StateVec> samples;
      for (int i = 0; i < 6; ++i) samples.push_back(vec({u(gen), u(gen)}));
      planner.start_new_batch(samples);
      ref.begin_batch(samples, planner.connection_radius());
      checks::run_batch(planner);
      ref.run_batch();
      expect_same_tree(planner, ref, "trial " + std::to_string(trial) + " batch " + std::to_string(batch));
    }
    solved += planner.best_cost() < kInfinity;
    pruned += planner.counters().at("prunes") > 0;
  }
  // The instances must actually exercise solutions and pruning.
  EXPECT_GT(solved, 20);
  EXPECT_GT(pruned, 10);
}

TEST(BitstarReference, DijkstraReduction) {
  for (std::uint64_t w = 0; w < 5; ++w) {
    const Scenario s = gen_random_world(2, w);
    const auto cmp = checks::dijkstra_compare(s.problem, w, 100);
    EXPECT_LE(cmp.max_error, 1e-9) << "world " << w;
    EXPECT_EQ(cmp.missing, 0u) << "world " << w;
    EXPECT_GT(cmp.vertices, 10u);
  }
}

// After every edge addition, cached costs equal a walk along parent links;
// before every edge pop, the popped key is no worse than any queued key and
// every queued key is exact.
TEST(BitstarProperties, CostsAndQueueKeysStayExact) {
  for (bool delayed : {true, false}) {
    const Scenario s = gen_dual_enclosure(2);
    BitstarConfig cfg;
    cfg.delayed_rewiring = delayed;
    BitstarPlanner planner(s.problem, cfg, 3);
    std::size_t rewired_checks = 0;
    for (int i = 0; i < 40000; ++i) {
      const bool edge_next = planner.edge_queue_size() > 0 &&
                             (planner.vertex_queue_size() == 0 ||
                              planner.best_edge_key()->total < planner.best_vertex_key()->total);
      if (edge_next) {
        const EdgeKey top = *planner.best_edge_key();
        if (planner.vertex_queue_size() > 0) {
          ASSERT_LT(top.total, planner.best_vertex_key()->total);
        }
        if (i % 97 == 0) {
          for (const QueuedEdge& e : planner.edge_queue_snapshot()) {
            ASSERT_FALSE(e.key < top);
            const double g = planner.cost_to_come(e.source);
            const double h = h_hat(s.problem, planner.state(e.target));
            const double c = c_hat(planner.state(e.source), planner.state(e.target));
            ASSERT_EQ(e.key.cost_to_come, g);
            ASSERT_NEAR(e.key.total, g + c + h, 1e-12);
          }
          for (std::size_t v : planner.vertex_queue_snapshot()) {
            const double g = planner.cost_to_come(v);
            ASSERT_LE(top.total, g + h_hat(s.problem, planner.state(v)) + 1e-12);
          }
        }
      }
      const std::uint64_t rewirings = planner.counters().at("rewirings");
      const StepOutcome out = planner.step();
      if (out == StepOutcome::kEdgeAdded) {
        const bool rewired = planner.counters().at("rewirings") > rewirings;
        if (rewired || i % 13 == 0) {
          ++rewired_checks;
          for (std::size_t v : planner.vertex_ids()) {
            ASSERT_NEAR(planner.cost_to_come(v), planner.recompute_cost_to_come(v), 1e-9);
          }
        }
      }
    }
    EXPECT_GT(planner.counters().at("rewirings"), 0u);
    EXPECT_GT(rewired_checks, 10u);
    EXPECT_LT(planner.best_cost(), kInfinity);
  }
}

TEST(BitstarProperties, TrueCostOnlyAfterEstimatesPass) {
  const Scenario s = gen_dual_enclosure(2);
  BitstarPlanner planner(s.problem, BitstarConfig{}, 5);
  for (int i = 0; i < 20000; ++i) {
    const bool edge_next = planner.edge_queue_size() > 0 &&
                           (planner.vertex_queue_size() == 0 ||
                            planner.best_edge_key()->total < planner.best_vertex_key()->total);
    if (!edge_next) {
      planner.step();
      continue;
    }
    const QueuedEdge e = planner.edge_queue_snapshot().front();
    const double g = planner.cost_to_come(e.source);
    const double c = c_hat(planner.state(e.source), planner.state(e.target));
    const double h = h_hat(s.problem, planner.state(e.target));
    const bool estimates_pass = g + c + h < planner.best_cost() && g + c < planner.cost_to_come(e.target);
    const std::uint64_t before = planner.counters().at("collision_checks");
    planner.process_best_edge();
    ASSERT_EQ(planner.counters().at("collision_checks") - before, estimates_pass ? 1u : 0u);
  }
  const Counters c = planner.counters();
  EXPECT_LT(c.at("collision_checks"), c.at("edges_queued"));
  EXPECT_LE(c.at("collision_checks"), c.at("edges_processed"));
}

TEST(BitstarProperties, NoEdgeQueuedTwicePerBatch) {
  for (bool delayed : {true, false}) {
    const Scenario s = gen_dual_enclosure(2);
    BitstarConfig cfg;
    cfg.delayed_rewiring = delayed;
    BitstarPlanner planner(s.problem, cfg, 7);
    std::set<std::pair<std::size_t, std::size_t>> seen;
    std::size_t duplicates = 0, queued = 0;
    BitstarObservers obs;
    obs.edge_queued = [&](std::size_t a, std::size_t b) {
      ++queued;
      if (!seen.insert({a, b}).second) ++duplicates;
    };
    planner.set_observers(obs);
    for (int i = 0; i < 60000; ++i) {
      if (planner.step() == StepOutcome::kBatchStarted) seen.clear();
    }
    EXPECT_EQ(duplicates, 0u);
    EXPECT_GT(queued, 1000u);
    EXPECT_GT(planner.batches(), 3u);
  }
}

TEST(BitstarProperties, SamplesAfterASolutionAreInformed) {
  for (bool jit : {false, true}) {
    const Scenario s = gen_dual_enclosure(2);
    BitstarConfig cfg;
    cfg.jit_sampling = jit;
    BitstarPlanner planner(s.problem, cfg, 9);
    std::size_t checked = 0, violations = 0;
    BitstarObservers obs;
    obs.sample_drawn = [&](const StateVec& x, double c) {
      if (c == kInfinity) return;
      ++checked;
      if (!(f_hat(s.problem, x) < c)) ++violations;
    };
    planner.set_observers(obs);
    planner.solve({.time_s = 0.3});
    EXPECT_EQ(violations, 0u);
    EXPECT_EQ(planner.counters().at("informed_violations"), 0u);
    EXPECT_GT(checked, 100u);
  }
}

// Hand-built tree: a first solution over a wall, then a cheaper one below
// it. E is reached only through a detour, so once the cheaper solution exists
// E lies in the informed set but its tree cost does not.
TEST(BitstarPrune, RemovesAndRecyclesByTheBranchConditions) {
  const ProblemDef p(AxisBox(vec({-2, -2}), vec({2, 2})),
                     {AxisBox(vec({0.45, -0.2}), vec({0.55, 0.5})), AxisBox(vec({0.1, -0.04}), vec({0.2, 0.1}))},
                     vec({0, 0}), {vec({1, 0})});
  BitstarConfig cfg;
  BitstarPlanner planner(p, cfg, 1);
  checks::run_batch(planner);
  ASSERT_EQ(planner.best_cost(), kInfinity);
  const StateVec a = vec({0.5, 0.6}), h = vec({0.15, 0.2}), e = vec({0.3, -0.05}), b = vec({0.5, -0.25});
  planner.start_new_batch(std::vector<StateVec>{a, h, e});
  checks::run_batch(planner);
  ASSERT_NEAR(planner.best_cost(), 2.0 * std::sqrt(0.25 + 0.36), 1e-12);
  const std::size_t ia = 2, ih = 3, ie = 4;
  ASSERT_EQ(planner.state(ie), e);
  ASSERT_EQ(planner.parent(ie), ih);
  planner.start_new_batch(std::vector<StateVec>{b});
  checks::run_batch(planner);
  const double c = planner.best_cost();
  ASSERT_NEAR(c, 2.0 * std::sqrt(0.25 + 0.0625), 1e-12);
  ASSERT_LT(f_hat(p, e), c);
  ASSERT_GT(planner.cost_to_come(ie) + h_hat(p, e), c);
  ASSERT_GT(f_hat(p, h), c);
  ASSERT_GT(f_hat(p, a), c);

  planner.start_new_batch(std::vector<StateVec>{});
  EXPECT_TRUE(planner.is_sample(ie));
  EXPECT_TRUE(planner.is_new(ie));
  EXPECT_FALSE(planner.is_vertex(ih));
  EXPECT_FALSE(planner.is_sample(ih));
  EXPECT_FALSE(planner.is_vertex(ia));
  EXPECT_FALSE(planner.is_sample(ia));
  EXPECT_EQ(planner.counters().at("recycled"), 1u);
  EXPECT_EQ(planner.best_cost(), c);

  // Everything left is inside the informed set and optimally connected.
  checks::run_batch(planner);
  const auto vertices = sorted(planner.vertex_ids());
  const auto samples = sorted(planner.sample_ids());
  EXPECT_TRUE(planner.prune().empty());
  EXPECT_EQ(sorted(planner.vertex_ids()), vertices);
  EXPECT_EQ(sorted(planner.sample_ids()), samples);
}

// Pruning on random runs against a direct evaluation of the branch
// conditions on a snapshot taken just before the prune.
TEST(BitstarPrune, MatchesBranchConditionsOnRandomRuns) {
  std::size_t recycled_total = 0, removed_total = 0;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const Scenario s = gen_dual_enclosure(2);
    BitstarPlanner planner(s.problem, BitstarConfig{}, seed);
    for (int round = 0; round < 40; ++round) {
      checks::run_batch(planner);
      const double c = planner.best_cost();
      if (c == kInfinity) {
        planner.start_new_batch();
        continue;
      }
      std::map<std::size_t, double> g;
      std::map<std::size_t, std::size_t> parent;
      for (std::size_t v : planner.vertex_ids()) {
        g[v] = planner.cost_to_come(v);
        parent[v] = planner.parent(v);
      }
      const auto samples_before = planner.sample_ids();
      std::vector<std::size_t> order;
      for (auto& [v, _] : g) order.push_back(v);
      std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return std::make_pair(g[x], x) < std::make_pair(g[y], y);
      });
      std::set<std::size_t> removed, recycled;
      for (std::size_t v : order) {
        const bool orphan = parent[v] != BitstarPlanner::npos && removed.count(parent[v]);
        const double gv = orphan ? kInfinity : g[v];
        const double f = f_hat(s.problem, planner.state(v));
        const double hv = h_hat(s.problem, planner.state(v));
        if (f > c || gv + hv > c) {
          removed.insert(v);
          if (f < c) recycled.insert(v);
        }
      }
      const auto got = planner.prune();
      EXPECT_EQ(std::set<std::size_t>(got.begin(), got.end()), recycled);
      for (auto& [v, _] : g) EXPECT_EQ(planner.is_vertex(v), removed.count(v) == 0) << v;
      for (std::size_t x : samples_before) {
        EXPECT_EQ(planner.is_sample(x), f_hat(s.problem, planner.state(x)) < c);
      }
      recycled_total += recycled.size();
      removed_total += removed.size();
      planner.start_new_batch();
    }
  }
  EXPECT_GT(removed_total, 0u);
}

TEST(BitstarJit, SampleCountRounding) {
  double carry = 0.0;
  EXPECT_EQ(jit_sample_count(10.0, 5.0, carry), 50u);
  EXPECT_EQ(carry, 0.0);
  EXPECT_EQ(jit_sample_count(0.0, 5.0, carry), 0u);
  // Fractional counts accumulate.
  std::size_t total = 0;
  carry = 0.0;
  for (int i = 0; i < 1000; ++i) total += jit_sample_count(0.37, 1.0, carry);
  EXPECT_NEAR(static_cast<double>(total), 370.0, 1.0);
}

TEST(BitstarJit, NoSamplesWhenTheShellIsAlreadyCovered) {
  const Scenario s = gen_dual_enclosure(2);
  BitstarConfig cfg;
  cfg.jit_sampling = true;
  BitstarPlanner planner(s.problem, cfg, 2);
  checks::run_batch(planner);
  planner.start_new_batch();
  EXPECT_EQ(planner.counters().at("samples_drawn"), 0u);
  const std::size_t root = planner.root();
  planner.jit_update_samples(root);
  const std::uint64_t drawn = planner.counters().at("jit_samples");
  EXPECT_GT(drawn, 0u);
  planner.jit_update_samples(root);
  EXPECT_EQ(planner.counters().at("jit_samples"), drawn);
}

TEST(BitstarJit, ZeroMeasureShellDrawsNothing) {
  // Straight-line solution: the informed set has zero measure.
  const ProblemDef p = testutil::empty_problem(2);
  BitstarConfig cfg;
  cfg.jit_sampling = true;
  BitstarPlanner planner(p, cfg, 2);
  checks::run_batch(planner);
  ASSERT_DOUBLE_EQ(planner.best_cost(), 1.0);
  planner.start_new_batch();
  checks::run_batch(planner);
  EXPECT_EQ(planner.counters().at("jit_samples"), 0u);
}

TEST(BitstarJit, SolvesWithShellSampling) {
  const Scenario s = gen_dual_enclosure(2);
  BitstarConfig cfg;
  cfg.jit_sampling = true;
  const PlanResult r = solve_bitstar(s.problem, cfg, 4, {.time_s = 1.0});
  EXPECT_TRUE(r.solved);
  EXPECT_NEAR(path_cost(s.problem, r.path), r.cost, 1e-9);
  EXPECT_GT(r.counters.at("jit_samples"), 0u);
}

TEST(BitstarSampleRemoval, DropsUnconnectedSamples) {
  const Scenario s = gen_dual_enclosure(2);
  BitstarConfig cfg;
  cfg.sample_removal = true;
  BitstarPlanner planner(s.problem, cfg, 3);
  while (planner.best_cost() == kInfinity) planner.step();
  checks::run_batch(planner);
  planner.drop_unconnected_samples();
  for (std::size_t x : planner.sample_ids()) EXPECT_TRUE(planner.is_goal(x));
  EXPECT_GT(planner.counters().at("dropped_samples"), 0u);
}

TEST(BitstarSampleRemoval, GraphSizeRestartsAfterADrop) {
  const Scenario s = gen_dual_enclosure(2);
  BitstarConfig cfg;
  cfg.sample_removal = true;
  cfg.batch_size = 50;
  BitstarPlanner fresh(s.problem, cfg, 3);
  checks::run_batch(fresh);
  fresh.start_new_batch();
  EXPECT_EQ(fresh.connection_graph_size(), fresh.vertex_ids().size() + fresh.sample_ids().size());

  BitstarPlanner planner(s.problem, cfg, 3);
  while (planner.best_cost() == kInfinity) planner.step();
  checks::run_batch(planner);
  const std::uint64_t prunes = planner.counters().at("prunes");
  planner.start_new_batch();
  ASSERT_EQ(planner.counters().at("prunes"), prunes + 1);
  // Only the tree, unconnected goals and this batch's samples remain.
  EXPECT_EQ(planner.connection_graph_size(), planner.vertex_ids().size() + planner.sample_ids().size());
  std::size_t non_goal = 0;
  for (std::size_t x : planner.sample_ids()) non_goal += !planner.is_goal(x);
  EXPECT_EQ(non_goal, 50u);
  RggParams params = planner.config().rgg;
  const double want = radius_bound(params, InformedSampler(s.problem).informed_measure(planner.best_cost()),
                                   planner.connection_graph_size());
  EXPECT_DOUBLE_EQ(planner.connection_radius(), want);
}

TEST(BitstarSampleRemoval, StillConverges) {
  BitstarConfig cfg;
  cfg.sample_removal = true;
  // A small block on the straight line, so the search needs samples.
  const ProblemDef p(testutil::cube(2, 1), {AxisBox(vec({-0.05, -0.05}), vec({0.05, 0.05}))}, vec({-0.5, 0}),
                     {vec({0.5, 0})});
  const PlanResult r = solve_bitstar(p, cfg, 1, {.time_s = 1.0});
  ASSERT_TRUE(r.solved);
  EXPECT_LT(r.cost, 1.02);
}

TEST(BitstarOptions, PurgeDoesNotChangeTheResult) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Scenario s = gen_dual_enclosure(2);
    BitstarConfig on, off;
    on.max_batches = 8;
    off.max_batches = 8;
    off.purge_edge_queue = false;
    const PlanResult a = solve_bitstar(s.problem, on, seed, {.time_s = 60});
    const PlanResult b = solve_bitstar(s.problem, off, seed, {.time_s = 60});
    ASSERT_TRUE(a.solved);
    EXPECT_EQ(a.cost, b.cost);
    EXPECT_EQ(a.path, b.path);
    EXPECT_GT(a.counters.at("edges_purged"), 0u);
    EXPECT_EQ(b.counters.at("edges_purged"), 0u);
  }
}

TEST(BitstarOptions, KNearestMode) {
  const Scenario s = gen_dual_enclosure(2);
  BitstarConfig cfg;
  cfg.rgg.mode = RggMode::kKNearest;
  BitstarPlanner planner(s.problem, cfg, 1);
  planner.solve({.time_s = 0.5});
  EXPECT_LT(planner.best_cost(), kInfinity);
  EXPECT_EQ(planner.connection_k(), k_bound(planner.config().rgg, planner.connection_graph_size()));
}

TEST(BitstarOptions, RadiusFollowsTheGraphSizeRules) {
  const Scenario s = gen_dual_enclosure(2);
  BitstarConfig cfg;
  cfg.batch_size = 100;
  BitstarPlanner planner(s.problem, cfg, 1);
  checks::run_batch(planner);
  planner.start_new_batch();
  // First batch: counted as if its samples were already present.
  EXPECT_EQ(planner.connection_graph_size(), 1 + 1 + 100u);
  const std::size_t q1 = planner.connection_graph_size();
  checks::run_batch(planner);
  planner.start_new_batch();
  const std::size_t before = planner.vertex_ids().size() + planner.sample_ids().size() - 100;
  EXPECT_EQ(planner.connection_graph_size(), std::max<std::size_t>(2, before));
  if (planner.best_cost() == kInfinity) {
    EXPECT_EQ(planner.connection_graph_size(), q1);
  }

  BitstarConfig plain = cfg;
  plain.threshold_initial_radius = false;
  BitstarPlanner other(s.problem, plain, 1);
  checks::run_batch(other);
  other.start_new_batch();
  EXPECT_EQ(other.connection_graph_size(), 2u);
}

TEST(BitstarSolve, ConvergesOnAnEmptyProblem) {
  const Scenario s = gen_empty_world(2);
  const PlanResult r = solve_bitstar(s.problem, BitstarConfig{}, 1, {.time_s = 1.0});
  ASSERT_TRUE(r.solved);
  EXPECT_LE(r.cost, 1.01);
}

TEST(BitstarSolve, CallbackCostsStrictlyDecrease) {
  const Scenario s = gen_dual_enclosure(2);
  std::vector<double> costs;
  std::vector<double> times;
  const PlanResult r = solve_bitstar(s.problem, BitstarConfig{}, 11, {.time_s = 0.5},
                                     [&](double t, double c, const std::vector<StateVec>& path) {
                                       costs.push_back(c);
                                       times.push_back(t);
                                       EXPECT_NEAR(path_cost(s.problem, path), c, 1e-9);
                                     });
  ASSERT_TRUE(r.solved);
  ASSERT_GT(costs.size(), 1u);
  for (std::size_t i = 1; i < costs.size(); ++i) {
    EXPECT_LT(costs[i], costs[i - 1]);
    EXPECT_GE(times[i], times[i - 1]);
  }
  EXPECT_EQ(costs.back(), r.cost);
  EXPECT_EQ(r.path.front(), s.problem.start());
  EXPECT_EQ(r.path.back(), s.problem.goals()[0]);
}

TEST(BitstarSolve, StopsOnTargetAndFirstSolution) {
  const Scenario s = gen_dual_enclosure(2);
  const PlanResult first = solve_bitstar(s.problem, BitstarConfig{}, 1, {.time_s = 5, .stop_on_first_solution = true});
  ASSERT_TRUE(first.solved);
  const PlanResult target = solve_bitstar(s.problem, BitstarConfig{}, 1, {.time_s = 5, .target_cost = 4.0});
  ASSERT_TRUE(target.solved);
  EXPECT_LE(target.cost, 4.0);
  const PlanResult none = solve_bitstar(s.problem, BitstarConfig{}, 1, {.time_s = 0});
  EXPECT_FALSE(none.solved);
}

TEST(BitstarSolve, DeterministicForASeed) {
  const Scenario s = gen_dual_enclosure(2);
  Budget budget{.time_s = 60, .max_iterations = 30000};
  std::vector<double> a, b;
  const PlanResult ra = solve_bitstar(s.problem, BitstarConfig{}, 5, budget,
                                      [&](double, double c, const std::vector<StateVec>&) { a.push_back(c); });
  const PlanResult rb = solve_bitstar(s.problem, BitstarConfig{}, 5, budget,
                                      [&](double, double c, const std::vector<StateVec>&) { b.push_back(c); });
  EXPECT_EQ(a, b);
  EXPECT_EQ(ra.path, rb.path);
  EXPECT_EQ(ra.counters, rb.counters);
}

TEST(BitstarSolve, MultipleGoalsPickTheCheapest) {
  const ProblemDef p(testutil::cube(2, 1), {AxisBox(vec({-0.05, -0.5}), vec({0.05, 0.5}))}, vec({-0.5, 0}),
                     {vec({0.5, 0}), vec({-0.5, 0.8})});
  const PlanResult r = solve_bitstar(p, BitstarConfig{}, 1, {.time_s = 0.3});
  ASSERT_TRUE(r.solved);
  EXPECT_EQ(r.path.back(), vec({-0.5, 0.8}));
  EXPECT_DOUBLE_EQ(r.cost, 0.8);
}

TEST(BitstarSolve, HigherDimensions) {
  for (std::size_t n : {4u, 8u}) {
    const Scenario s = gen_dual_enclosure(n);
    const PlanResult r = solve_bitstar(s.problem, BitstarConfig{}, 1, {.time_s = 2.0});
    EXPECT_TRUE(r.solved) << n;
    if (r.solved) {
      EXPECT_NEAR(path_cost(s.problem, r.path), r.cost, 1e-9) << n;
    }
  }
}
