#pragma once

#include "itofflow/raster.hpp"
#include "itofflow/core.hpp"
#include "itofflow/warp.hpp"
#include "itofflow/sim.hpp"
#include "itofflow/losses.hpp"
#include "itofflow/optim.hpp"
#include "itofflow/gradcheck.hpp"
#include "itofflow/io.hpp"
