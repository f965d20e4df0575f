#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlfed/action.hpp"
#include "mlfed/ensemble.hpp"
#include "mlfed/error.hpp"
#include "mlfed/evaluation.hpp"
#include "mlfed/grouping.hpp"
#include "mlfed/rng.hpp"
#include "mlfed/trace.hpp"

namespace mlfed {

// Per-request cost in units of 10^-3 USD (one unit = one provider call).
struct ProviderCostModel {
    std::vector<double> unit_costs;  // per provider; empty -> all 1.0
    std::map<std::int64_t, std::vector<double>> overrides;  // timestamp -> per-provider costs

    double cost(std::int64_t t, int provider) const {
        const auto it = overrides.find(t);
        if (it != overrides.end() && provider < static_cast<int>(it->second.size())) {
            return it->second[provider];
        }
        if (provider < static_cast<int>(unit_costs.size())) return unit_costs[provider];
        return 1.0;
    }

    double action_cost(std::int64_t t, const Action& a) const {
        double c = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i]) c += cost(t, static_cast<int>(i));
        }
        return c;
    }

    void validate(int n_providers) const {
        if (!unit_costs.empty() && static_cast<int>(unit_costs.size()) != n_providers) {
            throw Error("BadConfig", "unit cost count != provider count");
        }
        for (const double c : unit_costs) {
            if (c < 0.0) throw Error("BadConfig", "negative provider cost");
        }
        for (const auto& [t, costs] : overrides) {
            for (const double c : costs) {
                if (c < 0.0) throw Error("BadConfig", "negative provider cost override");
            }
        }
    }
};

enum class RewardMode { kWithGt, kWithoutGt };

inline std::string to_string(RewardMode m) {
    return m == RewardMode::kWithGt ? "with_gt" : "without_gt";
}

inline RewardMode reward_mode_from_string(const std::string& s) {
    if (s == "with_gt") return RewardMode::kWithGt;
    if (s == "without_gt") return RewardMode::kWithoutGt;
    throw Error("UnknownRewardMode", s);
}

struct RewardConfig {
    double beta = 0.0;  // usually non-positive; trades accuracy against cost
    RewardMode mode = RewardMode::kWithGt;
    double pseudo_gt_score_floor = 0.0;  // fused detections below this are not pseudo-GT

    void validate() const {
        if (!std::isfinite(beta)) throw Error("BadConfig", "beta must be finite");
        if (pseudo_gt_score_floor < 0.0) throw Error("BadConfig", "negative pseudo-GT floor");
    }
};

struct StepOutcome {
    double reward = 0.0;
    double accuracy = 0.0;  // per-image AP50 against the reference
    double cost = 0.0;
    std::vector<double> next_state;
    bool done = false;
};

// Total latency of a federated request: inputs are sent sequentially
// (transmission adds up) while providers infer in parallel (max wins).
inline double federated_latency(const std::vector<double>& transmission,
                                const std::vector<double>& inference) {
    double total = 0.0;
    for (const double t : transmission) {
        if (t < 0.0) throw Error("BadConfig", "negative transmission time");
        total += t;
    }
    double max_q = 0.0;
    for (const double q : inference) {
        if (q < 0.0) throw Error("BadConfig", "negative inference time");
        max_q = std::max(max_q, q);
    }
    return total + max_q;
}

// Trace-driven environment. Serves precomputed states, executes provider
// subsets against stored predictions, and produces rewards/costs. One
// instance is stepped by one controller at a time; distinct instances over
// the same trace may run concurrently.
class Environment {
public:
    Environment(std::shared_ptr<const Trace> trace, GroupingTable table, EnsembleConfig ensemble_cfg,
                RewardConfig reward_cfg, ProviderCostModel cost_model, std::uint64_t seed,
                bool shuffle)
        : trace_(std::move(trace)),
          table_(std::move(table)),
          ensemble_cfg_(ensemble_cfg),
          reward_cfg_(reward_cfg),
          cost_model_(std::move(cost_model)),
          rng_(seed),
          shuffle_(shuffle) {
        if (!trace_ || trace_->records.empty()) throw Error("EmptyTrace", "trace has no records");
        if (trace_->header.n_providers < 1) throw Error("BadConfig", "trace has no providers");
        ensemble_cfg_.validate();
        reward_cfg_.validate();
        cost_model_.validate(trace_->header.n_providers);

        if (reward_cfg_.mode == RewardMode::kWithGt) {
            for (const auto& rec : trace_->records) {
                if (!rec.has_gt) {
                    throw Error("TraceMissingGroundTruth",
                                "with_gt reward mode needs ground truth on every record (image " +
                                    rec.image_id + ")");
                }
            }
        }

        // unify labels once; everything downstream sees group indices
        normalized_.reserve(trace_->records.size());
        gt_.reserve(trace_->records.size());
        for (const auto& rec : trace_->records) {
            std::vector<ImagePrediction> per_provider;
            per_provider.reserve(rec.providers.size());
            for (const auto& dets : rec.providers) {
                ImagePrediction pred;
                for (const auto& raw : dets) {
                    if (auto det = normalize(raw, table_)) {
                        pred.detections.push_back(*det);
                    } else {
                        ++dropped_detections_;
                    }
                }
                per_provider.push_back(std::move(pred));
            }
            normalized_.push_back(std::move(per_provider));

            GtImage gt_image;
            for (const auto& entry : rec.gt) {
                const auto group = table_.lookup(entry.category);
                if (group) {
                    gt_image.push_back(GtBox{*group, entry.box});
                } else {
                    ++dropped_gt_boxes_;
                }
            }
            gt_.push_back(std::move(gt_image));
        }
        pseudo_gt_cache_.resize(trace_->records.size());
        order_.resize(trace_->records.size());
        std::iota(order_.begin(), order_.end(), std::size_t{0});
    }

    int n_providers() const { return trace_->header.n_providers; }
    int feature_dim() const { return trace_->header.feature_dim; }
    std::size_t size() const { return trace_->records.size(); }
    const Trace& trace() const { return *trace_; }
    const GroupingTable& grouping() const { return table_; }
    const EnsembleConfig& ensemble_config() const { return ensemble_cfg_; }
    const RewardConfig& reward_config() const { return reward_cfg_; }
    const ProviderCostModel& cost_model() const { return cost_model_; }
    std::size_t dropped_detections() const { return dropped_detections_; }
    std::size_t dropped_gt_boxes() const { return dropped_gt_boxes_; }

    const std::vector<ImagePrediction>& provider_predictions(std::size_t record) const {
        return normalized_[record];
    }
    const GtImage& gt(std::size_t record) const { return gt_[record]; }
    bool record_has_gt(std::size_t record) const { return trace_->records[record].has_gt; }
    bool has_true_gt() const { return trace_->all_records_have_gt(); }

    // Begin a new episode, continuing the shuffle stream.
    std::vector<double> reset() {
        if (shuffle_) rng_.shuffle(order_);
        cursor_ = 0;
        episode_open_ = true;
        return trace_->records[order_[0]].features;
    }

    // Begin a new episode from an explicit seed (re-seeds the stream).
    std::vector<double> reset(std::uint64_t seed, bool shuffle) {
        rng_ = Rng(seed);
        shuffle_ = shuffle;
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        return reset();
    }

    std::size_t current_record() const {
        if (!episode_open_) throw Error("EpisodeFinished", "no open episode");
        return order_[cursor_];
    }

    // Scores a provider subset on one record without advancing: ensemble the
    // selected providers' stored predictions, score against the reference
    // (true GT or pseudo-GT), charge the per-call costs. The reward is
    // v + beta*c, or -1 when every selected provider came back empty while
    // the reference says there was something to find.
    StepOutcome eval_action(std::size_t record, const Action& action, std::int64_t t,
                            ImagePrediction* prediction_out = nullptr) const {
        validate_action(action, n_providers());

        std::vector<ImagePrediction> selected;
        bool all_empty = true;
        for (std::size_t i = 0; i < action.size(); ++i) {
            if (!action[i]) continue;
            selected.push_back(normalized_[record][i]);
            all_empty = all_empty && normalized_[record][i].detections.empty();
        }

        const GtImage& reference =
            reward_cfg_.mode == RewardMode::kWithGt ? gt_[record] : pseudo_ground_truth(record);

        StepOutcome out;
        out.cost = cost_model_.action_cost(t, action);
        const ImagePrediction pred = ensemble(selected, ensemble_cfg_);
        if (all_empty && !reference.empty()) {
            out.accuracy = 0.0;
            out.reward = -1.0;
        } else {
            out.accuracy = per_image_ap50(pred, reference);
            out.reward = out.accuracy + reward_cfg_.beta * out.cost;
        }
        if (prediction_out) *prediction_out = pred;
        return out;
    }

    // Executes the subset on the current image and advances the episode.
    StepOutcome step(const Action& action) {
        if (!episode_open_) throw Error("EpisodeFinished", "call reset() before step()");

        const std::size_t rec = order_[cursor_];
        StepOutcome out = eval_action(rec, action, steps_taken_);

        ++steps_taken_;
        ++cursor_;
        out.done = cursor_ == order_.size();
        if (out.done) {
            episode_open_ = false;
            out.next_state.assign(feature_dim(), 0.0);
        } else {
            out.next_state = trace_->records[order_[cursor_]].features;
        }
        return out;
    }

    // Reward reference when no labels exist: the all-provider Affirmative-WBF
    // ensemble with scores discarded. Depends only on the record; cached.
    const GtImage& pseudo_ground_truth(std::size_t record) const {
        auto& slot = pseudo_gt_cache_[record];
        if (!slot) {
            EnsembleConfig cfg;  // Affirmative-WBF regardless of the configured pathway
            cfg.voting = Voting::kAffirmative;
            cfg.ablation = Ablation::kWbf;
            cfg.match_iou = ensemble_cfg_.match_iou;
            const ImagePrediction fused = ensemble(normalized_[record], cfg);
            GtImage gt_image;
            for (const auto& det : fused.detections) {
                if (det.score < reward_cfg_.pseudo_gt_score_floor) continue;
                gt_image.push_back(GtBox{det.group, det.box});
            }
            slot = std::move(gt_image);
        }
        return *slot;
    }

    std::int64_t steps_taken() const { return steps_taken_; }
    const std::vector<std::size_t>& episode_order() const { return order_; }

    json state_to_json() const {
        json j;
        j["order"] = order_;
        j["cursor"] = cursor_;
        j["rng"] = rng_.serialize();
        j["steps_taken"] = steps_taken_;
        j["episode_open"] = episode_open_;
        j["shuffle"] = shuffle_;
        return j;
    }

    void state_from_json(const json& j) {
        order_ = j.at("order").get<std::vector<std::size_t>>();
        if (order_.size() != trace_->records.size()) {
            throw Error("CheckpointMismatch", "episode order length != trace size");
        }
        cursor_ = j.at("cursor").get<std::size_t>();
        rng_.deserialize(j.at("rng").get<std::string>());
        steps_taken_ = j.at("steps_taken").get<std::int64_t>();
        episode_open_ = j.at("episode_open").get<bool>();
        shuffle_ = j.at("shuffle").get<bool>();
    }

private:
    std::shared_ptr<const Trace> trace_;
    GroupingTable table_;
    EnsembleConfig ensemble_cfg_;
    RewardConfig reward_cfg_;
    ProviderCostModel cost_model_;
    Rng rng_;
    bool shuffle_ = false;

    std::vector<std::vector<ImagePrediction>> normalized_;  // [record][provider]
    std::vector<GtImage> gt_;
    mutable std::vector<std::optional<GtImage>> pseudo_gt_cache_;
    std::size_t dropped_detections_ = 0;
    std::size_t dropped_gt_boxes_ = 0;

    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
    bool episode_open_ = false;
    std::int64_t steps_taken_ = 0;
};

}  // namespace mlfed
