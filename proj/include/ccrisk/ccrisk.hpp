#pragma once

// Umbrella header: the whole library.

#include "ccrisk/errors.hpp"
#include "ccrisk/rng.hpp"
#include "ccrisk/csv.hpp"
#include "ccrisk/dataset.hpp"
#include "ccrisk/shift.hpp"
#include "ccrisk/optim.hpp"
#include "ccrisk/cv.hpp"
#include "ccrisk/models.hpp"
#include "ccrisk/eval.hpp"
#include "ccrisk/pipeline.hpp"
#include "ccrisk/stats.hpp"
#include "ccrisk/synth.hpp"
#include "ccrisk/svg.hpp"
#include "ccrisk/cli.hpp"
