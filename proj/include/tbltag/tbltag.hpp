#pragma once

// Umbrella header: transformation-based dialogue-act tagging with Monte
// Carlo training, committee confidence estimation, and entropy-selected cue
// patterns.

#include "tbltag/committee.hpp"
#include "tbltag/corpus.hpp"
#include "tbltag/cue_patterns.hpp"
#include "tbltag/errors.hpp"
#include "tbltag/eval.hpp"
#include "tbltag/features.hpp"
#include "tbltag/hash.hpp"
#include "tbltag/model.hpp"
#include "tbltag/monte_carlo.hpp"
#include "tbltag/rng.hpp"
#include "tbltag/tbl.hpp"
#include "tbltag/text.hpp"
