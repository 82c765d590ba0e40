#include "invscope/ml/scoring.hpp"

#include "invscope/ml/features.hpp"
#include "invscope/store.hpp"

namespace invscope::ml {

ScoreReport score_pending(store::Store& store, const Model& model, Timestamp now)
{
    ScoreReport report;
    std::vector<MlScore> pending;
    for (const Alert& alert : store.alerts()) {
        if (store.has_score(alert.id, model.model_id())) continue;
        std::vector<Event> events;
        std::string missing;
        for (const auto& eid : alert.event_ids) {
            if (auto e = store.find_event(eid)) events.push_back(std::move(*e));
            else if (missing.empty()) missing = eid;
        }
        if (!missing.empty() || events.empty()) {
            report.skipped.push_back({alert.id, missing.empty() ? "alert has no events"
                                                                : "missing event " + missing});
            continue;
        }
        const double p = model.predict(extract_features(alert, events));
        pending.push_back(MlScore{alert.id, p, model.model_id(), now});
    }
    report.scored = store.put_scores(pending);
    return report;
}

}  // namespace invscope::ml
