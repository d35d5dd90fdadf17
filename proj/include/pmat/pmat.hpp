#pragma once

#include "pmat/core.hpp"
#include "pmat/dataset.hpp"
#include "pmat/eval.hpp"
#include "pmat/experiment.hpp"
#include "pmat/random.hpp"
#include "pmat/trainers.hpp"
