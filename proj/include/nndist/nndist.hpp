#pragma once

#include "nndist/activation.hpp"
#include "nndist/bounds.hpp"
#include "nndist/brute_force.hpp"
#include "nndist/constraints.hpp"
#include "nndist/distribution.hpp"
#include "nndist/error.hpp"
#include "nndist/estimator.hpp"
#include "nndist/network.hpp"
#include "nndist/quadrature.hpp"
#include "nndist/rng.hpp"
#include "nndist/special.hpp"
#include "nndist/stochastic.hpp"
#include "nndist/witness.hpp"
