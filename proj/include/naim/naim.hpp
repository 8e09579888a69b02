#pragma once

#include "naim/checkpoint.hpp"
#include "naim/common.hpp"
#include "naim/data.hpp"
#include "naim/experiment.hpp"
#include "naim/folds.hpp"
#include "naim/gradcheck.hpp"
#include "naim/imputers.hpp"
#include "naim/metrics.hpp"
#include "naim/missingness.hpp"
#include "naim/model.hpp"
#include "naim/optim.hpp"
#include "naim/tape.hpp"
#include "naim/tensor.hpp"
#include "naim/trainer.hpp"
