#pragma once

// Umbrella header for the boostsel library: gradient-boosted oblivious trees,
// dual feature-importance ranking, top-k intersection feature selection, and
// stratified cross-validated evaluation for labeled tabular data.

#include "boostsel/common.hpp"
#include "boostsel/rng.hpp"
#include "boostsel/parallel.hpp"
#include "boostsel/dataset.hpp"
#include "boostsel/metrics.hpp"
#include "boostsel/boosting.hpp"
#include "boostsel/importance.hpp"
#include "boostsel/knn.hpp"
#include "boostsel/evaluation.hpp"
#include "boostsel/selection.hpp"
#include "boostsel/synthetic.hpp"
#include "boostsel/manifest.hpp"
