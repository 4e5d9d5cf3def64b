#pragma once

#include "clicknet/datagen.hpp"
#include "clicknet/errors.hpp"
#include "clicknet/experiments.hpp"
#include "clicknet/linear.hpp"
#include "clicknet/mlp.hpp"
#include "clicknet/model_io.hpp"
#include "clicknet/moments.hpp"
#include "clicknet/parallel.hpp"
#include "clicknet/report.hpp"
#include "clicknet/rng.hpp"
#include "clicknet/sampling.hpp"
#include "clicknet/states.hpp"
