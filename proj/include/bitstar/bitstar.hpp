#pragma once

#include "bitstar/baselines/rrt.hpp"
#include "bitstar/bench/harness.hpp"
#include "bitstar/bench/io.hpp"
#include "bitstar/bench/scenarios.hpp"
#include "bitstar/core/geometry.hpp"
#include "bitstar/planner/bitstar.hpp"
#include "bitstar/planner/indexed_heap.hpp"
#include "bitstar/planner/result.hpp"
#include "bitstar/planners.hpp"
#include "bitstar/rgg/connection.hpp"
#include "bitstar/rgg/spatial_index.hpp"
#include "bitstar/sampling/informed.hpp"
