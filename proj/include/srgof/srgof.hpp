#pragma once

// Umbrella header for the whole library.

#include "srgof/calibration.hpp"
#include "srgof/core.hpp"
#include "srgof/filters.hpp"
#include "srgof/harness.hpp"
#include "srgof/kernels.hpp"
#include "srgof/plan.hpp"
#include "srgof/plot.hpp"
#include "srgof/rng.hpp"
#include "srgof/sample_io.hpp"
#include "srgof/samplers.hpp"
#include "srgof/statistic.hpp"
