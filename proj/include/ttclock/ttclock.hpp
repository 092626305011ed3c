#pragma once

#include "ttclock/errors.hpp"
#include "ttclock/parallel.hpp"
#include "ttclock/grid.hpp"
#include "ttclock/propagator.hpp"
#include "ttclock/oracles.hpp"
#include "ttclock/clock.hpp"
#include "ttclock/larmor.hpp"
#include "ttclock/distance.hpp"
#include "ttclock/ensemble.hpp"
#include "ttclock/scenario.hpp"
#include "ttclock/runner.hpp"
