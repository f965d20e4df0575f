#pragma once

#include <utility>
#include <vector>

#include "mlfed/action.hpp"
#include "mlfed/environment.hpp"
#include "mlfed/evaluation.hpp"

namespace mlfed {

// Metrics of one test episode: trace order, no shuffle. AP values are in
// [0,1]; cost is the per-image average in call units.
struct EpisodeReport {
    ApSummary summary;
    double episode_cost = 0.0;
    double mean_reward = 0.0;
    double mean_accuracy = 0.0;
    std::vector<long> selection_counts;
    std::vector<Action> actions;  // per record, trace order
};

// Runs `select(record_index, features) -> Action` over every record and
// scores the resulting predictions. Dataset metrics use true ground truth
// when the trace carries it, else the pseudo ground truth.
template <typename SelectFn>
EpisodeReport run_episode(const Environment& env, SelectFn&& select) {
    const std::size_t count = env.size();
    EpisodeReport report;
    report.selection_counts.assign(env.n_providers(), 0);
    report.actions.reserve(count);

    std::vector<ImagePrediction> preds(count);
    for (std::size_t rec = 0; rec < count; ++rec) {
        const Action action = select(rec, env.trace().records[rec].features);
        const StepOutcome out =
            env.eval_action(rec, action, static_cast<std::int64_t>(rec), &preds[rec]);
        report.episode_cost += out.cost;
        report.mean_reward += out.reward;
        report.mean_accuracy += out.accuracy;
        for (std::size_t i = 0; i < action.size(); ++i) {
            report.selection_counts[i] += action[i] ? 1 : 0;
        }
        report.actions.push_back(action);
    }
    report.episode_cost /= static_cast<double>(count);
    report.mean_reward /= static_cast<double>(count);
    report.mean_accuracy /= static_cast<double>(count);

    std::vector<GtImage> reference(count);
    bool any_box = false;
    for (std::size_t rec = 0; rec < count; ++rec) {
        reference[rec] = env.record_has_gt(rec) ? env.gt(rec) : env.pseudo_ground_truth(rec);
        any_box = any_box || !reference[rec].empty();
    }
    if (any_box) report.summary = dataset_summary(preds, reference);
    return report;
}

}  // namespace mlfed
