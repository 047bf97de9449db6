#pragma once

#include "driftopt/common.hpp"
#include "driftopt/dataset.hpp"
#include "driftopt/io.hpp"
#include "driftopt/mlp.hpp"
#include "driftopt/model.hpp"
#include "driftopt/mpc.hpp"
#include "driftopt/selection.hpp"
#include "driftopt/sim.hpp"
#include "driftopt/trajopt.hpp"
#include "driftopt/types.hpp"
