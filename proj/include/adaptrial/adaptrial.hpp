#pragma once

#include "adaptrial/cli.hpp"
#include "adaptrial/config.hpp"
#include "adaptrial/csv.hpp"
#include "adaptrial/environments.hpp"
#include "adaptrial/error.hpp"
#include "adaptrial/estimators.hpp"
#include "adaptrial/harness.hpp"
#include "adaptrial/limit_laws.hpp"
#include "adaptrial/math.hpp"
#include "adaptrial/parallel.hpp"
#include "adaptrial/policies.hpp"
#include "adaptrial/rng.hpp"
#include "adaptrial/stats.hpp"
#include "adaptrial/trajectory_io.hpp"
#include "adaptrial/trial.hpp"
