#pragma once

#include "rscox/core/error.hpp"
#include "rscox/core/fields.hpp"
#include "rscox/core/grid.hpp"
#include "rscox/core/parallel.hpp"
#include "rscox/core/params.hpp"
#include "rscox/core/random.hpp"
#include "rscox/diagnose.hpp"
#include "rscox/estimate/bootstrap.hpp"
#include "rscox/estimate/equation.hpp"
#include "rscox/estimate/godambe.hpp"
#include "rscox/estimate/newton.hpp"
#include "rscox/estimate/skeleton.hpp"
#include "rscox/posterior.hpp"
#include "rscox/rate.hpp"
#include "rscox/scenarios.hpp"
#include "rscox/sim.hpp"
#include "rscox/state.hpp"
#include "rscox/version.hpp"
