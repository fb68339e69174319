// Umbrella header.
#pragma once

#include "oro/adaptive.hpp"
#include "oro/bench.hpp"
#include "oro/core.hpp"
#include "oro/csv.hpp"
#include "oro/matrix.hpp"
#include "oro/parallel.hpp"
#include "oro/problem.hpp"
#include "oro/projections.hpp"
#include "oro/rng.hpp"
#include "oro/solver.hpp"
#include "oro/spectral.hpp"
