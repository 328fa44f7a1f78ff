#pragma once

// Umbrella header for the whole library.

#include "iwknn/bench.hpp"
#include "iwknn/config.hpp"
#include "iwknn/filter.hpp"
#include "iwknn/fingerprint.hpp"
#include "iwknn/locator.hpp"
#include "iwknn/radio_map.hpp"
#include "iwknn/selection.hpp"
#include "iwknn/sim.hpp"
#include "iwknn/store.hpp"
#include "iwknn/types.hpp"
