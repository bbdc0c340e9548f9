#pragma once

// Umbrella header for the whole simulator library.

#include "fogsim/caching_env.hpp"
#include "fogsim/config.hpp"
#include "fogsim/dqn.hpp"
#include "fogsim/errors.hpp"
#include "fogsim/harness.hpp"
#include "fogsim/matrix.hpp"
#include "fogsim/mec_env.hpp"
#include "fogsim/neural.hpp"
#include "fogsim/noma.hpp"
#include "fogsim/popularity.hpp"
#include "fogsim/rl.hpp"
#include "fogsim/rng.hpp"
#include "fogsim/scenario.hpp"
