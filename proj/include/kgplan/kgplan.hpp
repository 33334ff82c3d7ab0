#pragma once
// Umbrella header.

#include "kgplan/ablation.hpp"
#include "kgplan/config.hpp"
#include "kgplan/demo_world.hpp"
#include "kgplan/lm.hpp"
#include "kgplan/pddl.hpp"
#include "kgplan/pddl_parser.hpp"
#include "kgplan/planner.hpp"
#include "kgplan/retrieval.hpp"
#include "kgplan/similarity.hpp"
#include "kgplan/simulator.hpp"
#include "kgplan/task_pipeline.hpp"
#include "kgplan/updater.hpp"
#include "kgplan/util.hpp"
#include "kgplan/world_graph.hpp"
