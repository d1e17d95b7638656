#pragma once

#include "subpot/asymptotics.hpp"
#include "subpot/conv_engine.hpp"
#include "subpot/density_series.hpp"
#include "subpot/error.hpp"
#include "subpot/laplace_inversion.hpp"
#include "subpot/levy_core.hpp"
#include "subpot/mc_sim.hpp"
#include "subpot/model_io.hpp"
#include "subpot/output.hpp"
#include "subpot/parallel.hpp"
#include "subpot/philox.hpp"
#include "subpot/rational.hpp"
#include "subpot/smoothness.hpp"
#include "subpot/special.hpp"
