#pragma once

#include "pmq/analytic.hpp"
#include "pmq/emit.hpp"
#include "pmq/errors.hpp"
#include "pmq/model.hpp"
#include "pmq/optimize.hpp"
#include "pmq/rng.hpp"
#include "pmq/run.hpp"
#include "pmq/scenario.hpp"
#include "pmq/simulator.hpp"
#include "pmq/stats.hpp"
#include "pmq/validate.hpp"
