#pragma once

// Umbrella header: the whole pipeline in dependency order.

#include "adamec/errors.hpp"
#include "adamec/rng.hpp"
#include "adamec/model_graph.hpp"
#include "adamec/cost_oracle.hpp"
#include "adamec/latency_predictor.hpp"
#include "adamec/prepartition.hpp"
#include "adamec/combination_search.hpp"
#include "adamec/offload_planner.hpp"
#include "adamec/runtime_sim.hpp"
