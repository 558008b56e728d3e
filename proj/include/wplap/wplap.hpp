#pragma once

/// Umbrella header for the weighted p-Laplacian toolkit.

#include "wplap/error.hpp"
#include "wplap/geometry.hpp"
#include "wplap/quadrature.hpp"
#include "wplap/expression.hpp"
#include "wplap/weight.hpp"
#include "wplap/discretization.hpp"
#include "wplap/space.hpp"
#include "wplap/nonlinearity.hpp"
#include "wplap/energy.hpp"
#include "wplap/certificate.hpp"
#include "wplap/solver.hpp"
#include "wplap/oracle1d.hpp"
#include "wplap/config.hpp"
#include "wplap/commands.hpp"
