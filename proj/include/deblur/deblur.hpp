#pragma once

#include "deblur/color.hpp"
#include "deblur/error.hpp"
#include "deblur/experiment.hpp"
#include "deblur/filtering.hpp"
#include "deblur/io.hpp"
#include "deblur/metrics.hpp"
#include "deblur/operators.hpp"
#include "deblur/psf.hpp"
#include "deblur/spectrum.hpp"
#include "deblur/transforms.hpp"
#include "deblur/types.hpp"
