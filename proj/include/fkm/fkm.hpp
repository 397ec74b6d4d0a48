#pragma once

// Umbrella header.

#include "fkm/basis.hpp"
#include "fkm/benchmark.hpp"
#include "fkm/dataset.hpp"
#include "fkm/metrics.hpp"
#include "fkm/model_selection.hpp"
#include "fkm/rng.hpp"
#include "fkm/serialize.hpp"
#include "fkm/simulation.hpp"
#include "fkm/solver.hpp"
#include "fkm/version.hpp"
