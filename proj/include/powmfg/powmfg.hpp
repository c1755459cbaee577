#pragma once

#include "powmfg/attack_model.hpp"
#include "powmfg/errors.hpp"
#include "powmfg/grid.hpp"
#include "powmfg/io.hpp"
#include "powmfg/montecarlo.hpp"
#include "powmfg/parallel.hpp"
#include "powmfg/rewards.hpp"
#include "powmfg/scenarios.hpp"
#include "powmfg/solver.hpp"
