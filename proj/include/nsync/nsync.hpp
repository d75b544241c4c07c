#pragma once

#include "nsync/calibration.hpp"
#include "nsync/config.hpp"
#include "nsync/continuation.hpp"
#include "nsync/gains.hpp"
#include "nsync/io.hpp"
#include "nsync/mde.hpp"
#include "nsync/model.hpp"
#include "nsync/orbit.hpp"
#include "nsync/quadrature.hpp"
#include "nsync/stochastic.hpp"
#include "nsync/syncstat.hpp"
