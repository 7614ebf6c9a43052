#pragma once

// Everything at once.
#include "censnv/dataset.hpp"
#include "censnv/error.hpp"
#include "censnv/experiment.hpp"
#include "censnv/learner.hpp"
#include "censnv/linear.hpp"
#include "censnv/loss.hpp"
#include "censnv/lp_oracle.hpp"
#include "censnv/metrics.hpp"
#include "censnv/mlp.hpp"
#include "censnv/model_io.hpp"
#include "censnv/normal.hpp"
#include "censnv/simplex.hpp"
#include "censnv/synthetic.hpp"
#include "censnv/theory.hpp"
#include "censnv/training.hpp"
#include "censnv/tuning.hpp"
