#pragma once

#include "analysis.hpp"
#include "branching.hpp"
#include "config_io.hpp"
#include "convergence.hpp"
#include "distributions.hpp"
#include "errors.hpp"
#include "fluid.hpp"
#include "linalg.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "report_io.hpp"
#include "rng.hpp"
#include "simulator.hpp"
#include "stats.hpp"
#include "version.hpp"
