#pragma once

#include <algorithm>
#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "mlfed/error.hpp"
#include "mlfed/geometry.hpp"

namespace mlfed {

enum class Voting { kAffirmative, kConsensus, kUnanimous };
enum class Ablation { kNone, kNms, kSoftNms, kWbf };

inline std::string to_string(Voting v) {
    switch (v) {
        case Voting::kAffirmative: return "affirmative";
        case Voting::kConsensus: return "consensus";
        case Voting::kUnanimous: return "unanimous";
    }
    return "affirmative";
}

inline std::string to_string(Ablation a) {
    switch (a) {
        case Ablation::kNone: return "none";
        case Ablation::kNms: return "nms";
        case Ablation::kSoftNms: return "soft_nms";
        case Ablation::kWbf: return "wbf";
    }
    return "wbf";
}

inline Voting voting_from_string(const std::string& s) {
    if (s == "affirmative") return Voting::kAffirmative;
    if (s == "consensus") return Voting::kConsensus;
    if (s == "unanimous") return Voting::kUnanimous;
    throw Error("UnknownVoting", s);
}

inline Ablation ablation_from_string(const std::string& s) {
    if (s == "none") return Ablation::kNone;
    if (s == "nms") return Ablation::kNms;
    if (s == "soft_nms") return Ablation::kSoftNms;
    if (s == "wbf") return Ablation::kWbf;
    throw Error("UnknownAblation", s);
}

// Pathway selector for the 2-stage pipeline: 3 voting rules x 4 ablation
// rules. Affirmative-WBF is the default pathway.
struct EnsembleConfig {
    Voting voting = Voting::kAffirmative;
    Ablation ablation = Ablation::kWbf;
    double match_iou = 0.5;     // grouping threshold (strict >)
    double nms_iou = 0.5;       // kept for config compatibility; per-group NMS needs no threshold
    double score_floor = 0.001; // soft-NMS survivors below this are dropped

    void validate() const {
        if (!(match_iou > 0.0 && match_iou <= 1.0)) throw Error("BadConfig", "match_iou not in (0,1]");
        if (!(nms_iou > 0.0 && nms_iou <= 1.0)) throw Error("BadConfig", "nms_iou not in (0,1]");
        if (!(score_floor > 0.0 && score_floor <= 1.0)) throw Error("BadConfig", "score_floor not in (0,1]");
    }
};

struct GroupMember {
    int provider = 0;  // index within the queried-provider list
    Detection det;
};

// Cluster of detections that agree on category and overlap the seed member.
// Members are kept in insertion order (descending score stream), so the
// seed is members[seed].
struct DetectionGroup {
    std::vector<GroupMember> members;
    std::size_t seed = 0;
};

inline int provider_count(const DetectionGroup& g) {
    std::set<int> providers;
    for (const auto& m : g.members) providers.insert(m.provider);
    return static_cast<int>(providers.size());
}

// Greedy seed-based clustering. Detections are streamed in descending score
// order (ties: lower provider index, then input order); each joins the first
// group whose seed shares its category with iou strictly above match_iou,
// else seeds a new group. Every input detection lands in exactly one group.
inline std::vector<DetectionGroup> group_detections(const std::vector<ImagePrediction>& per_provider,
                                                    double match_iou) {
    struct Item {
        int provider;
        int order;
        Detection det;
    };
    std::vector<Item> items;
    for (int p = 0; p < static_cast<int>(per_provider.size()); ++p) {
        const auto& dets = per_provider[p].detections;
        for (int i = 0; i < static_cast<int>(dets.size()); ++i) {
            items.push_back(Item{p, i, dets[i]});
        }
    }
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
        if (a.det.score != b.det.score) return a.det.score > b.det.score;
        if (a.provider != b.provider) return a.provider < b.provider;
        return a.order < b.order;
    });

    std::vector<DetectionGroup> groups;
    for (const auto& item : items) {
        bool placed = false;
        for (auto& g : groups) {
            const Detection& seed = g.members[g.seed].det;
            if (seed.group == item.det.group && iou(seed.box, item.det.box) > match_iou) {
                g.members.push_back(GroupMember{item.provider, item.det});
                placed = true;
                break;
            }
        }
        if (!placed) {
            groups.push_back(DetectionGroup{{GroupMember{item.provider, item.det}}, 0});
        }
    }
    return groups;
}

// Voting keeps a group based on how many distinct queried providers
// contributed to it. n_selected is the number of queried providers.
inline std::vector<DetectionGroup> vote(const std::vector<DetectionGroup>& groups, Voting method,
                                        int n_selected) {
    if (n_selected < 1) throw Error("BadConfig", "vote requires n_selected >= 1");
    if (method == Voting::kAffirmative) return groups;
    std::vector<DetectionGroup> kept;
    for (const auto& g : groups) {
        const int count = provider_count(g);
        const bool keep = (method == Voting::kConsensus)
                              ? (2 * count > n_selected)
                              : (count == n_selected);
        if (keep) kept.push_back(g);
    }
    return kept;
}

namespace detail {

// Max-score member; ties broken by lower provider index, then insertion order.
inline std::size_t keeper_index(const DetectionGroup& g) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < g.members.size(); ++i) {
        const auto& a = g.members[i];
        const auto& b = g.members[best];
        if (a.det.score > b.det.score ||
            (a.det.score == b.det.score && a.provider < b.provider)) {
            best = i;
        }
    }
    return best;
}

}  // namespace detail

// NMS: keep only the highest-score member of the group.
inline Detection ablate_nms(const DetectionGroup& g) {
    if (g.members.empty()) throw Error("EmptyGroup", "ablate_nms on empty group");
    return g.members[detail::keeper_index(g)].det;
}

// Soft-NMS, linear decay: the keeper survives unchanged; every other member
// decays by s <- s * (1 - iou(member, keeper)) and is dropped below the floor.
inline std::vector<Detection> ablate_soft_nms(const DetectionGroup& g, double score_floor) {
    if (g.members.empty()) throw Error("EmptyGroup", "ablate_soft_nms on empty group");
    const std::size_t keep = detail::keeper_index(g);
    std::vector<Detection> out;
    out.push_back(g.members[keep].det);
    for (std::size_t i = 0; i < g.members.size(); ++i) {
        if (i == keep) continue;
        Detection d = g.members[i].det;
        d.score *= 1.0 - iou(d.box, g.members[keep].det.box);
        if (d.score >= score_floor) out.push_back(d);
    }
    return out;
}

// WBF: fused coordinates are the score-weighted average of member
// coordinates; fused score is the plain mean of member scores. When every
// score is zero the box falls back to the unweighted mean (flagged via
// all_zero, not fatal).
inline Detection ablate_wbf(const DetectionGroup& g, bool* all_zero = nullptr) {
    if (g.members.empty()) throw Error("EmptyGroup", "ablate_wbf on empty group");
    if (g.members.size() == 1) {  // fixed point, bit-exact
        if (all_zero) *all_zero = g.members[0].det.score <= 0.0;
        return g.members[0].det;
    }
    double weight_sum = 0.0;
    double score_sum = 0.0;
    for (const auto& m : g.members) {
        weight_sum += m.det.score;
        score_sum += m.det.score;
    }
    const bool zero = weight_sum <= 0.0;
    if (all_zero) *all_zero = zero;

    Detection fused;
    fused.group = g.members[0].det.group;
    fused.score = score_sum / static_cast<double>(g.members.size());
    double x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;
    for (const auto& m : g.members) {
        const double w = zero ? 1.0 : m.det.score;
        x1 += w * m.det.box.x_min;
        y1 += w * m.det.box.y_min;
        x2 += w * m.det.box.x_max;
        y2 += w * m.det.box.y_max;
    }
    const double denom = zero ? static_cast<double>(g.members.size()) : weight_sum;
    fused.box = BBox{x1 / denom, y1 / denom, x2 / denom, y2 / denom};
    return fused;
}

// Full pipeline: group -> vote -> per-group ablation -> concatenate,
// sorted by descending score. Deterministic for identical inputs.
inline ImagePrediction ensemble(const std::vector<ImagePrediction>& per_provider,
                                const EnsembleConfig& config) {
    config.validate();
    ImagePrediction out;
    if (per_provider.empty()) return out;

    const auto groups = group_detections(per_provider, config.match_iou);
    const auto kept = vote(groups, config.voting, static_cast<int>(per_provider.size()));

    for (const auto& g : kept) {
        switch (config.ablation) {
            case Ablation::kNone:
                for (const auto& m : g.members) out.detections.push_back(m.det);
                break;
            case Ablation::kNms:
                out.detections.push_back(ablate_nms(g));
                break;
            case Ablation::kSoftNms: {
                const auto survivors = ablate_soft_nms(g, config.score_floor);
                out.detections.insert(out.detections.end(), survivors.begin(), survivors.end());
                break;
            }
            case Ablation::kWbf:
                out.detections.push_back(ablate_wbf(g));
                break;
        }
    }
    std::stable_sort(out.detections.begin(), out.detections.end(),
                     [](const Detection& a, const Detection& b) { return a.score > b.score; });
    return out;
}

}  // namespace mlfed
