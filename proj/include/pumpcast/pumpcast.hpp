#pragma once

#include "pumpcast/balance.hpp"
#include "pumpcast/config.hpp"
#include "pumpcast/error.hpp"
#include "pumpcast/eval.hpp"
#include "pumpcast/experiments.hpp"
#include "pumpcast/features.hpp"
#include "pumpcast/labeling.hpp"
#include "pumpcast/models/baselines.hpp"
#include "pumpcast/models/boosted.hpp"
#include "pumpcast/models/forest.hpp"
#include "pumpcast/models/isolation.hpp"
#include "pumpcast/models/linear.hpp"
#include "pumpcast/models/model.hpp"
#include "pumpcast/models/tree.hpp"
#include "pumpcast/rng.hpp"
#include "pumpcast/stats.hpp"
#include "pumpcast/telemetry.hpp"
#include "pumpcast/textio.hpp"
