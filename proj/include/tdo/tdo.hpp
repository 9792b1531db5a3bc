#pragma once

#include "tdo/benchmark.hpp"
#include "tdo/config.hpp"
#include "tdo/controller.hpp"
#include "tdo/diagnostics.hpp"
#include "tdo/dynamics.hpp"
#include "tdo/invariant_set.hpp"
#include "tdo/jet.hpp"
#include "tdo/log_io.hpp"
#include "tdo/lp.hpp"
#include "tdo/matrix_io.hpp"
#include "tdo/ocp.hpp"
#include "tdo/polytope.hpp"
#include "tdo/qp.hpp"
#include "tdo/riccati.hpp"
#include "tdo/simulation.hpp"
#include "tdo/sqp.hpp"
#include "tdo/svg.hpp"
#include "tdo/vehicle.hpp"
