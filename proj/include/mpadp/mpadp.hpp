#pragma once

// Umbrella header.

#include "atom.hpp"
#include "benchmarks.hpp"
#include "dictionaries.hpp"
#include "dictionary.hpp"
#include "experiments.hpp"
#include "extended_value.hpp"
#include "grid.hpp"
#include "hash.hpp"
#include "matching_pursuit.hpp"
#include "maxplus_core.hpp"
#include "mdp.hpp"
#include "mdp_io.hpp"
#include "partition.hpp"
#include "reduced_vi.hpp"
#include "serialization.hpp"

namespace mpadp {
inline constexpr const char* kVersion = "0.1.0";
}
