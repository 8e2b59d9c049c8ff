#pragma once

// Umbrella header for the demonstration-to-plan pipeline.

#include "demoplan/analyzer.hpp"
#include "demoplan/core.hpp"
#include "demoplan/ftsig.hpp"
#include "demoplan/pddl.hpp"
#include "demoplan/planner.hpp"
#include "demoplan/remote.hpp"
#include "demoplan/sim.hpp"
#include "demoplan/skill.hpp"
#include "demoplan/tactile.hpp"
