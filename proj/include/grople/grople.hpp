#pragma once

// Umbrella header.

#include "grople/arff.hpp"
#include "grople/baseline.hpp"
#include "grople/classifier.hpp"
#include "grople/dataset.hpp"
#include "grople/error.hpp"
#include "grople/evaluation.hpp"
#include "grople/feature_embedding.hpp"
#include "grople/grouping.hpp"
#include "grople/label_embedding.hpp"
#include "grople/metrics.hpp"
#include "grople/rng.hpp"
#include "grople/serialization.hpp"
