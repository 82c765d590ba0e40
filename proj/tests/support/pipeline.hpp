#pragma once

#include "invscope/ml/dataset.hpp"
#include "invscope/scenario.hpp"
#include "invscope/store.hpp"

namespace invscope::testing {

/// Generates `spec`, correlates it with the default rules and stores the
/// events, the alerts and the labeler's classifications.
void load_scenario(store::Store& store, const scenario::ScenarioSpec& spec);

/// Labeled dataset of the benchmark scenario, built in `store`.
ml::LabeledDataset benchmark_dataset(store::Store& store);

}  // namespace invscope::testing
