#pragma once

#include "carousel/asym.hpp"
#include "carousel/core.hpp"
#include "carousel/exact.hpp"
#include "carousel/limit.hpp"
#include "carousel/quadrature.hpp"
#include "carousel/random.hpp"
#include "carousel/report.hpp"
#include "carousel/sim.hpp"
