#pragma once

//! Umbrella header for the variable-bandwidth kernel density estimation
//! library.

#include "vkde/asymptotics.hpp"
#include "vkde/clipping.hpp"
#include "vkde/densities.hpp"
#include "vkde/estimators.hpp"
#include "vkde/io.hpp"
#include "vkde/kernels.hpp"
#include "vkde/quadrature.hpp"
#include "vkde/rng.hpp"
#include "vkde/simlab.hpp"
#include "vkde/stats.hpp"
