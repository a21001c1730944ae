#pragma once

#include "cbi/config.hpp"
#include "cbi/constraints.hpp"
#include "cbi/density.hpp"
#include "cbi/empirical.hpp"
#include "cbi/errors.hpp"
#include "cbi/fit.hpp"
#include "cbi/format.hpp"
#include "cbi/harness.hpp"
#include "cbi/immigration.hpp"
#include "cbi/jump_density.hpp"
#include "cbi/lambda_grid.hpp"
#include "cbi/mechanism.hpp"
#include "cbi/metrics.hpp"
#include "cbi/observations.hpp"
#include "cbi/operator.hpp"
#include "cbi/quadrature.hpp"
#include "cbi/rng.hpp"
#include "cbi/simulator.hpp"
#include "cbi/stats.hpp"
