#pragma once

#include "vg/belief_store.hpp"
#include "vg/dialogue_acts.hpp"
#include "vg/dot.hpp"
#include "vg/implicature.hpp"
#include "vg/planner.hpp"
#include "vg/repl.hpp"
#include "vg/scenario.hpp"
#include "vg/term.hpp"
#include "vg/trace.hpp"
