#pragma once

#include "pointsource/core/point.hpp"
#include "pointsource/core/measure.hpp"
#include "pointsource/kernels/kernel.hpp"
#include "pointsource/kernels/certificate.hpp"
#include "pointsource/model/forward_model.hpp"
#include "pointsource/model/experiment.hpp"
#include "pointsource/inner/bnb.hpp"
#include "pointsource/inner/weights.hpp"
#include "pointsource/algorithms/config.hpp"
#include "pointsource/algorithms/problem.hpp"
#include "pointsource/algorithms/solver.hpp"
#include "pointsource/harness/spec.hpp"
#include "pointsource/harness/run.hpp"
#include "pointsource/harness/checks.hpp"
