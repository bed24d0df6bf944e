#pragma once

#include "specrecon/common.hpp"
#include "specrecon/grid.hpp"
#include "specrecon/potential.hpp"
#include "specrecon/sl_core.hpp"
#include "specrecon/kernels.hpp"
#include "specrecon/zeros.hpp"
#include "specrecon/analytic.hpp"
#include "specrecon/cauchy.hpp"
#include "specrecon/recon.hpp"
#include "specrecon/gl_inverse.hpp"
#include "specrecon/half_inverse.hpp"
#include "specrecon/stability.hpp"
#include "specrecon/cli.hpp"
