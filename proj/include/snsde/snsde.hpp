#pragma once

#include "snsde/error.hpp"
#include "snsde/grid.hpp"
#include "snsde/field.hpp"
#include "snsde/operators.hpp"
#include "snsde/lattice.hpp"
#include "snsde/noise.hpp"
#include "snsde/quadrature.hpp"
#include "snsde/solver.hpp"
#include "snsde/schemes.hpp"
#include "snsde/manufactured.hpp"
#include "snsde/stats.hpp"
#include "snsde/harness.hpp"
