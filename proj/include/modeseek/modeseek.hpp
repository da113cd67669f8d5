#pragma once

#include "modeseek/kernels.hpp"
#include "modeseek/hermite.hpp"
#include "modeseek/dataset.hpp"
#include "modeseek/density.hpp"
#include "modeseek/meanshift.hpp"
#include "modeseek/diagnostics.hpp"
#include "modeseek/degenerate.hpp"
#include "modeseek/io.hpp"
#include "modeseek/figure2.hpp"
