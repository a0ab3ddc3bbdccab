#pragma once

#include "tip/errors.hpp"
#include "tip/rng.hpp"
#include "tip/hilbert.hpp"
#include "tip/preference.hpp"
#include "tip/estimator.hpp"
#include "tip/geometry.hpp"
#include "tip/scenario.hpp"
#include "tip/planner.hpp"
#include "tip/tipmetric.hpp"
#include "tip/cases.hpp"
#include "tip/io.hpp"
#include "tip/sweep.hpp"
