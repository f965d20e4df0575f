#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "mlfed/error.hpp"
#include "mlfed/rng.hpp"
#include "mlfed/trace.hpp"

namespace mlfed {

// Knobs for one synthetic provider, applied to the base trace's ground
// truth: per-box recall probability, Gaussian corner jitter (std as a
// fraction of box size), score noise, and a false-positive injection rate
// (expected FP count per image).
struct ProviderSynthParams {
    std::string name = "synthetic";
    double recall = 1.0;
    double jitter = 0.0;
    double score_noise = 0.0;
    double fp_rate = 0.0;

    void validate() const {
        if (!(recall >= 0.0 && recall <= 1.0)) throw Error("BadConfig", "recall not in [0,1]");
        if (jitter < 0.0) throw Error("BadConfig", "negative jitter");
        if (score_noise < 0.0) throw Error("BadConfig", "negative score noise");
        if (fp_rate < 0.0) throw Error("BadConfig", "negative fp rate");
    }
};

namespace detail {

inline BBox jitter_box(const BBox& b, double jitter, double extent_x, double extent_y, Rng& rng) {
    const double w = b.x_max - b.x_min;
    const double h = b.y_max - b.y_min;
    double x1 = b.x_min + rng.normal(0.0, jitter * w);
    double x2 = b.x_max + rng.normal(0.0, jitter * w);
    double y1 = b.y_min + rng.normal(0.0, jitter * h);
    double y2 = b.y_max + rng.normal(0.0, jitter * h);
    if (x1 > x2) std::swap(x1, x2);
    if (y1 > y2) std::swap(y1, y2);
    return BBox{std::clamp(x1, 0.0, extent_x), std::clamp(y1, 0.0, extent_y),
                std::clamp(x2, 0.0, extent_x), std::clamp(y2, 0.0, extent_y)};
}

inline BBox random_box(double extent_x, double extent_y, Rng& rng) {
    const double w = rng.uniform(0.05, 0.3) * extent_x;
    const double h = rng.uniform(0.05, 0.3) * extent_y;
    const double x1 = rng.uniform(0.0, extent_x - w);
    const double y1 = rng.uniform(0.0, extent_y - h);
    return BBox{x1, y1, x1 + w, y1 + h};
}

}  // namespace detail

// Appends one synthetic detection list per record for each parameter set,
// generated by perturbing the base trace's ground truth. Deterministic
// under seed.
inline Trace synthesize_providers(const Trace& base, const std::vector<ProviderSynthParams>& params,
                                  std::uint64_t seed) {
    if (params.empty()) throw Error("BadConfig", "no synthetic provider parameters given");
    for (const auto& p : params) p.validate();
    if (!base.any_gt_box()) {
        throw Error("EmptyGroundTruth", "provider synthesis needs ground truth in the base trace");
    }

    // box extent for false positives: unit square for normalized traces,
    // otherwise the largest coordinate seen in the ground truth
    double extent_x = 1.0, extent_y = 1.0;
    if (base.header.coords != "normalized") {
        for (const auto& rec : base.records) {
            for (const auto& g : rec.gt) {
                extent_x = std::max(extent_x, g.box.x_max);
                extent_y = std::max(extent_y, g.box.y_max);
            }
        }
    }

    std::vector<std::string> vocab;
    {
        std::set<std::string> cats;
        for (const auto& rec : base.records) {
            for (const auto& g : rec.gt) cats.insert(g.category);
        }
        vocab.assign(cats.begin(), cats.end());
    }

    Trace out = base;
    out.header.n_providers += static_cast<int>(params.size());
    for (std::size_t p = 0; p < params.size(); ++p) {
        out.header.provider_names.push_back(params[p].name.empty()
                                                ? "synthetic" + std::to_string(p)
                                                : params[p].name);
    }

    Rng rng(seed);
    for (auto& rec : out.records) {
        for (const auto& prm : params) {
            std::vector<RawDetection> dets;
            for (const auto& g : rec.gt) {
                if (!rng.bernoulli(prm.recall)) continue;
                RawDetection d;
                d.label = g.category;
                d.box = prm.jitter > 0.0
                            ? detail::jitter_box(g.box, prm.jitter, extent_x, extent_y, rng)
                            : g.box;
                d.score = prm.score_noise > 0.0
                              ? std::clamp(1.0 - std::abs(rng.normal(0.0, prm.score_noise)), 0.05, 1.0)
                              : 1.0;
                dets.push_back(std::move(d));
            }
            const int n_fp = rng.poisson(prm.fp_rate);
            for (int f = 0; f < n_fp; ++f) {
                RawDetection d;
                d.box = detail::random_box(extent_x, extent_y, rng);
                d.label = vocab[rng.uniform_index(vocab.size())];
                d.score = rng.uniform(0.1, 0.7);
                dets.push_back(std::move(d));
            }
            rec.providers.push_back(std::move(dets));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic scenario builders used by the benchmark suite and the demo verb.
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& builtin_categories() {
    static const std::vector<std::string> cats = {"person", "car",    "dog",  "cat",
                                                  "chair",  "bottle", "bird", "bicycle"};
    return cats;
}

struct GtTraceParams {
    int n_images = 1000;
    int n_categories = 6;     // prefix of builtin_categories()
    int feature_dim = 8;      // pure-noise features
    int max_boxes = 3;        // 1..max_boxes objects per image
};

// Ground-truth-only trace (zero providers): the base for provider synthesis.
inline Trace make_gt_only_trace(const GtTraceParams& p, std::uint64_t seed) {
    if (p.n_images < 1) throw Error("BadConfig", "n_images must be >= 1");
    const int n_cats = std::clamp(p.n_categories, 1, static_cast<int>(builtin_categories().size()));

    Trace trace;
    trace.header.n_providers = 0;
    trace.header.feature_dim = p.feature_dim;
    trace.header.coords = "normalized";

    Rng rng(seed);
    for (int i = 0; i < p.n_images; ++i) {
        TraceRecord rec;
        rec.image_id = "img" + std::to_string(i);
        for (int f = 0; f < p.feature_dim; ++f) rec.features.push_back(rng.uniform());
        rec.has_gt = true;
        const int n_boxes = 1 + static_cast<int>(rng.uniform_index(p.max_boxes));
        for (int b = 0; b < n_boxes; ++b) {
            GtEntry g;
            g.category = builtin_categories()[rng.uniform_index(n_cats)];
            g.box = detail::random_box(1.0, 1.0, rng);
            rec.gt.push_back(std::move(g));
        }
        trace.records.push_back(std::move(rec));
    }
    return trace;
}

struct SelectorTraceParams {
    int n_images = 2000;
    int n_providers = 3;
    int n_categories = 6;
    int feature_dim = 8;
    int max_boxes = 3;
    double duplicate_prob = 0.5;    // chance a non-matching provider echoes a GT box
    double duplicate_jitter = 0.02; // corner jitter of echoed boxes
    double garbage_prob = 0.1;      // chance of one off-target box per non-matching provider
};

// Benchmark trace where feature coordinate 0 determines which single
// provider reproduces the ground truth exactly. The other providers echo a
// jittered subset at low confidence and occasionally add an off-target box.
inline Trace make_selector_trace(const SelectorTraceParams& p, std::uint64_t seed) {
    if (p.n_providers < 1) throw Error("BadConfig", "n_providers must be >= 1");
    if (p.n_images < 1) throw Error("BadConfig", "n_images must be >= 1");
    if (p.feature_dim < 1) throw Error("BadConfig", "feature_dim must be >= 1");
    const int n_cats = std::clamp(p.n_categories, 1, static_cast<int>(builtin_categories().size()));

    Trace trace;
    trace.header.n_providers = p.n_providers;
    for (int i = 0; i < p.n_providers; ++i) {
        trace.header.provider_names.push_back("cloud" + std::to_string(i));
    }
    trace.header.feature_dim = p.feature_dim;
    trace.header.coords = "normalized";

    Rng rng(seed);
    for (int i = 0; i < p.n_images; ++i) {
        TraceRecord rec;
        rec.image_id = "img" + std::to_string(i);
        const int best = static_cast<int>(rng.uniform_index(p.n_providers));
        rec.features.push_back(p.n_providers > 1
                                   ? static_cast<double>(best) / (p.n_providers - 1)
                                   : 1.0);
        for (int f = 1; f < p.feature_dim; ++f) rec.features.push_back(rng.uniform());

        rec.has_gt = true;
        const int n_boxes = 1 + static_cast<int>(rng.uniform_index(p.max_boxes));
        for (int b = 0; b < n_boxes; ++b) {
            GtEntry g;
            g.category = builtin_categories()[rng.uniform_index(n_cats)];
            g.box = detail::random_box(1.0, 1.0, rng);
            rec.gt.push_back(std::move(g));
        }

        for (int prov = 0; prov < p.n_providers; ++prov) {
            std::vector<RawDetection> dets;
            if (prov == best) {
                for (const auto& g : rec.gt) {
                    dets.push_back(RawDetection{g.category, rng.uniform(0.88, 0.98), g.box});
                }
            } else {
                for (const auto& g : rec.gt) {
                    if (!rng.bernoulli(p.duplicate_prob)) continue;
                    dets.push_back(RawDetection{
                        g.category, rng.uniform(0.3, 0.7),
                        detail::jitter_box(g.box, p.duplicate_jitter, 1.0, 1.0, rng)});
                }
                if (rng.bernoulli(p.garbage_prob)) {
                    dets.push_back(RawDetection{builtin_categories()[rng.uniform_index(n_cats)],
                                                rng.uniform(0.3, 0.7),
                                                detail::random_box(1.0, 1.0, rng)});
                }
            }
            rec.providers.push_back(std::move(dets));
        }
        trace.records.push_back(std::move(rec));
    }
    return trace;
}

}  // namespace mlfed
