#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <set>
#include <vector>

#include "mlfed/error.hpp"
#include "mlfed/geometry.hpp"

namespace mlfed {

// One ground-truth object: unified category-group index plus box.
struct GtBox {
    int group = 0;
    BBox box;
};

using GtImage = std::vector<GtBox>;

struct MatchEntry {
    double score = 0.0;
    bool tp = false;
};

struct CategoryMatch {
    std::vector<MatchEntry> entries;  // detections of this category, descending score
    int gt_count = 0;
    int false_negatives = 0;  // unmatched ground truths
};

// Per-image match result, keyed by category group.
using ImageMatch = std::map<int, CategoryMatch>;

// Greedy matching within each category: detections in descending score order
// (ties: input order) each claim the unmatched GT box with highest iou,
// provided iou >= iou_thr. Ties in iou go to the first GT index. Each GT box
// is matched at most once.
inline ImageMatch match(const ImagePrediction& pred, const GtImage& gt, double iou_thr) {
    if (!(iou_thr > 0.0 && iou_thr <= 1.0)) throw Error("BadConfig", "iou_thr not in (0,1]");

    ImageMatch result;
    for (const auto& g : gt) result[g.group].gt_count += 1;

    std::vector<int> order(pred.detections.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&pred](int a, int b) {
        return pred.detections[a].score > pred.detections[b].score;
    });

    std::vector<bool> gt_matched(gt.size(), false);
    for (const int idx : order) {
        const Detection& det = pred.detections[idx];
        CategoryMatch& cm = result[det.group];

        int best_gt = -1;
        double best_iou = 0.0;
        for (std::size_t j = 0; j < gt.size(); ++j) {
            if (gt[j].group != det.group || gt_matched[j]) continue;
            const double v = iou(det.box, gt[j].box);
            if (v > best_iou) {  // strict: iou ties keep the first GT index
                best_iou = v;
                best_gt = static_cast<int>(j);
            }
        }
        const bool tp = best_gt >= 0 && best_iou >= iou_thr;
        if (tp) gt_matched[best_gt] = true;
        cm.entries.push_back(MatchEntry{det.score, tp});
    }

    for (auto& [group, cm] : result) {
        int matched = 0;
        for (const auto& e : cm.entries) matched += e.tp ? 1 : 0;
        cm.false_negatives = cm.gt_count - matched;
    }
    return result;
}

// Average precision with 101-point interpolation (recall grid 0, 0.01, ...,
// 1.0; precision at a grid point is the max precision at any recall >= it).
// The stream must already be sorted by descending score. Conventions for
// empty ground truth: 0 if any detection exists, 1 if none (vacuous
// perfection; used per-image only).
inline double average_precision(const std::vector<MatchEntry>& stream, long total_gt) {
    if (total_gt < 0) throw Error("BadConfig", "negative ground-truth count");
    if (total_gt == 0) return stream.empty() ? 1.0 : 0.0;
    if (stream.empty()) return 0.0;

    const std::size_t n = stream.size();
    std::vector<double> precision(n), recall(n);
    long tp = 0, fp = 0;
    for (std::size_t i = 0; i < n; ++i) {
        (stream[i].tp ? tp : fp) += 1;
        precision[i] = static_cast<double>(tp) / static_cast<double>(tp + fp);
        recall[i] = static_cast<double>(tp) / static_cast<double>(total_gt);
    }

    // suffix max of precision; recall is non-decreasing in stream order
    std::vector<double> best_from(n);
    best_from[n - 1] = precision[n - 1];
    for (std::size_t i = n - 1; i > 0; --i) {
        best_from[i - 1] = std::max(precision[i - 1], best_from[i]);
    }

    double ap_sum = 0.0;
    std::size_t idx = 0;
    for (int k = 0; k <= 100; ++k) {
        const double r = static_cast<double>(k) / 100.0;
        while (idx < n && recall[idx] < r) ++idx;
        if (idx >= n) break;
        ap_sum += best_from[idx];
    }
    return ap_sum / 101.0;
}

struct DatasetAp {
    std::map<int, double> per_category;  // categories present in GT
    double mean = 0.0;
};

// Pools detections across images per category (matching stays per-image),
// sorts the pooled stream by score, and builds one PR curve per category.
// Categories absent from GT are excluded from the mean.
inline DatasetAp dataset_ap(const std::vector<ImagePrediction>& preds,
                            const std::vector<GtImage>& gt, double iou_thr) {
    if (preds.size() != gt.size()) throw Error("BadConfig", "preds/gt image counts differ");
    bool any_gt = false;
    for (const auto& g : gt) any_gt = any_gt || !g.empty();
    if (!any_gt) throw Error("EmptyGroundTruth", "no image has any ground-truth box");

    std::map<int, std::vector<MatchEntry>> pooled;
    std::map<int, long> gt_counts;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const ImageMatch im = match(preds[i], gt[i], iou_thr);
        for (const auto& [group, cm] : im) {
            auto& dst = pooled[group];
            dst.insert(dst.end(), cm.entries.begin(), cm.entries.end());
            gt_counts[group] += cm.gt_count;
        }
    }

    DatasetAp out;
    double sum = 0.0;
    int count = 0;
    for (auto& [group, entries] : pooled) {
        if (gt_counts[group] == 0) continue;  // hallucinated category: not a GT category
        // stable: ties keep (image order, within-image order)
        std::stable_sort(entries.begin(), entries.end(),
                         [](const MatchEntry& a, const MatchEntry& b) { return a.score > b.score; });
        const double ap = average_precision(entries, gt_counts[group]);
        out.per_category[group] = ap;
        sum += ap;
        count += 1;
    }
    out.mean = count > 0 ? sum / static_cast<double>(count) : 0.0;
    return out;
}

struct ApSummary {
    double map = 0.0;   // mean over IoU thresholds 0.50:0.05:0.95
    double ap50 = 0.0;
    double ap75 = 0.0;
};

inline ApSummary dataset_summary(const std::vector<ImagePrediction>& preds,
                                 const std::vector<GtImage>& gt) {
    ApSummary s;
    double sum = 0.0;
    for (int k = 0; k < 10; ++k) {
        const double thr = 0.5 + 0.05 * static_cast<double>(k);
        const double mean = dataset_ap(preds, gt, thr).mean;
        sum += mean;
        if (k == 0) s.ap50 = mean;
        if (k == 5) s.ap75 = mean;
    }
    s.map = sum / 10.0;
    return s;
}

// Single-image AP50 (the reward accuracy term): AP at IoU 0.5 per category
// present in gt or prediction, averaged over those categories. Empty gt and
// empty prediction scores 1; empty gt with any prediction scores 0.
inline double per_image_ap50(const ImagePrediction& pred, const GtImage& gt) {
    if (gt.empty()) return pred.detections.empty() ? 1.0 : 0.0;

    const ImageMatch im = match(pred, gt, 0.5);
    double sum = 0.0;
    int count = 0;
    for (const auto& [group, cm] : im) {
        sum += average_precision(cm.entries, cm.gt_count);
        count += 1;
    }
    return count > 0 ? sum / static_cast<double>(count) : 1.0;
}

}  // namespace mlfed
