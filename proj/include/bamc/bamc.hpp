#pragma once

// Umbrella header for the whole library.

#include "bamc/chain_analysis.hpp"
#include "bamc/concentration.hpp"
#include "bamc/errors.hpp"
#include "bamc/estimation.hpp"
#include "bamc/experiment.hpp"
#include "bamc/generator.hpp"
#include "bamc/history.hpp"
#include "bamc/instance.hpp"
#include "bamc/policy.hpp"
#include "bamc/rng.hpp"
#include "bamc/simulate.hpp"
#include "bamc/transition_matrix.hpp"
