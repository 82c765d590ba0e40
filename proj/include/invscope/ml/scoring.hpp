#pragma once

#include <string>
#include <vector>

#include "invscope/ml/model.hpp"
#include "invscope/timestamp.hpp"

namespace invscope::store {
class Store;
}

namespace invscope::ml {

struct SkippedAlert {
    std::string alert_id;
    std::string reason;
};

struct ScoreReport {
    std::size_t scored = 0;
    std::vector<SkippedAlert> skipped;
};

/// Scores every alert that has no score from `model` yet. Alerts whose
/// events cannot all be resolved are skipped and reported. A second call
/// with no new alerts scores nothing.
ScoreReport score_pending(store::Store& store, const Model& model, Timestamp now);

}  // namespace invscope::ml
