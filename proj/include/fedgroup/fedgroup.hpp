#pragma once

// Umbrella header for the whole library.

#include "fedgroup/clustering.hpp"
#include "fedgroup/config.hpp"
#include "fedgroup/data.hpp"
#include "fedgroup/errors.hpp"
#include "fedgroup/features.hpp"
#include "fedgroup/lsh.hpp"
#include "fedgroup/nn.hpp"
#include "fedgroup/orchestrator.hpp"
#include "fedgroup/parallel.hpp"
#include "fedgroup/report.hpp"
#include "fedgroup/rng.hpp"
