#pragma once

// Umbrella header: the whole toolkit in one include.

#include "fmkit/analysis.hpp"
#include "fmkit/blueprint.hpp"
#include "fmkit/cnf.hpp"
#include "fmkit/core.hpp"
#include "fmkit/diagnostics.hpp"
#include "fmkit/harness.hpp"
#include "fmkit/provider.hpp"
#include "fmkit/solver.hpp"
#include "fmkit/uvl.hpp"
