#pragma once

#include <fdrpred/evaluation.hpp>
#include <fdrpred/experiment.hpp>
#include <fdrpred/moments.hpp>
#include <fdrpred/predictors.hpp>
#include <fdrpred/regression.hpp>
#include <fdrpred/run.hpp>
#include <fdrpred/trace.hpp>
#include <fdrpred/tuning.hpp>
