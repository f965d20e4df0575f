#include <doctest.h>

#include <set>

#include "mlfed/ensemble.hpp"
#include "mlfed/rng.hpp"

using namespace mlfed;

namespace {

Detection det(int group, double score, double x1, double y1, double x2, double y2) {
    return Detection{group, score, BBox{x1, y1, x2, y2}};
}

ImagePrediction pred(std::vector<Detection> dets) { return ImagePrediction{std::move(dets)}; }

DetectionGroup make_group(std::vector<GroupMember> members) {
    return DetectionGroup{std::move(members), 0};
}

}  // namespace

TEST_CASE("group_detections: disjoint boxes from one provider stay separate") {
    const auto groups = group_detections(
        {pred({det(0, 0.9, 0, 0, 1, 1), det(0, 0.8, 5, 5, 6, 6)})}, 0.5);
    REQUIRE(groups.size() == 2);
    CHECK(groups[0].members.size() == 1);
    CHECK(groups[1].members.size() == 1);
}

TEST_CASE("group_detections: overlapping same-category boxes merge") {
    // iou of these two boxes is 0.8 > 0.5
    const auto groups = group_detections({pred({det(3, 0.9, 0, 0, 10, 10)}),
                                          pred({det(3, 0.7, 0, 0, 10, 8)})},
                                         0.5);
    REQUIRE(groups.size() == 1);
    CHECK(groups[0].members.size() == 2);
    CHECK(groups[0].members[0].provider == 0);  // higher score seeds
}

TEST_CASE("group_detections: category mismatch keeps groups apart") {
    const auto groups = group_detections({pred({det(3, 0.9, 0, 0, 10, 10)}),
                                          pred({det(5, 0.8, 0, 0, 10, 10)})},
                                         0.5);
    CHECK(groups.size() == 2);
}

TEST_CASE("group_detections: matching threshold is strict") {
    // identical half-overlap: iou exactly 1/3, below threshold 0.5; and a
    // pair at exactly the threshold must not merge (strict >)
    const auto apart = group_detections({pred({det(0, 0.9, 0, 0, 2, 1)}),
                                         pred({det(0, 0.8, 1, 0, 3, 1)})},
                                        0.5);
    CHECK(apart.size() == 2);

    // iou([0,0,2,1],[0,0,1,1]) = 0.5 exactly
    const auto at_thr = group_detections({pred({det(0, 0.9, 0, 0, 2, 1)}),
                                          pred({det(0, 0.8, 0, 0, 1, 1)})},
                                         0.5);
    CHECK(at_thr.size() == 2);
}

TEST_CASE("group_detections partitions the input") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<ImagePrediction> providers(1 + rng.uniform_index(4));
        std::size_t total = 0;
        for (auto& p : providers) {
            const std::size_t n = rng.uniform_index(6);
            for (std::size_t i = 0; i < n; ++i) {
                const double x = rng.uniform(0, 8);
                const double y = rng.uniform(0, 8);
                p.detections.push_back(det(static_cast<int>(rng.uniform_index(3)),
                                           rng.uniform(0.01, 1.0), x, y, x + rng.uniform(0.5, 3),
                                           y + rng.uniform(0.5, 3)));
            }
            total += n;
        }
        const auto groups = group_detections(providers, 0.5);
        std::size_t grouped = 0;
        for (const auto& g : groups) grouped += g.members.size();
        REQUIRE(grouped == total);
    }
}

TEST_CASE("vote: consensus and unanimous thresholds") {
    // one group contributed by providers {0, 1} out of 3 selected
    const auto g = make_group({{0, det(1, 0.9, 0, 0, 1, 1)}, {1, det(1, 0.8, 0, 0, 1, 1)}});

    CHECK(vote({g}, Voting::kAffirmative, 3).size() == 1);
    CHECK(vote({g}, Voting::kConsensus, 3).size() == 1);  // 2 > 1.5
    CHECK(vote({g}, Voting::kUnanimous, 3).empty());      // 2 != 3

    // duplicate detections from one provider count once
    const auto dup = make_group({{0, det(1, 0.9, 0, 0, 1, 1)},
                                 {0, det(1, 0.8, 0, 0, 1, 1)},
                                 {1, det(1, 0.7, 0, 0, 1, 1)}});
    CHECK(provider_count(dup) == 2);
    CHECK(vote({dup}, Voting::kConsensus, 4).empty());  // 2 > 2 is false
}

TEST_CASE("vote monotonicity: unanimous within consensus within affirmative") {
    Rng rng(23);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n_selected = 1 + static_cast<int>(rng.uniform_index(5));
        std::vector<DetectionGroup> groups;
        const std::size_t n_groups = 1 + rng.uniform_index(6);
        for (std::size_t i = 0; i < n_groups; ++i) {
            DetectionGroup g;
            const std::size_t n_members = 1 + rng.uniform_index(n_selected);
            for (std::size_t m = 0; m < n_members; ++m) {
                g.members.push_back({static_cast<int>(rng.uniform_index(n_selected)),
                                     det(0, rng.uniform(), 0, 0, 1, 1)});
            }
            groups.push_back(std::move(g));
        }
        auto survivors = [](const std::vector<DetectionGroup>& kept) {
            std::multiset<std::size_t> sizes;
            for (const auto& g : kept) sizes.insert(g.members.size());
            return sizes;
        };
        const auto aff = vote(groups, Voting::kAffirmative, n_selected);
        const auto con = vote(groups, Voting::kConsensus, n_selected);
        const auto una = vote(groups, Voting::kUnanimous, n_selected);
        REQUIRE(una.size() <= con.size());
        REQUIRE(con.size() <= aff.size());
        // every unanimous survivor passes consensus; every consensus survivor exists
        for (const auto& g : una) {
            CHECK(2 * provider_count(g) > n_selected);
        }
        CHECK(aff.size() == groups.size());
        (void)survivors;
    }
}

TEST_CASE("ablate_nms keeps the max-score member; ties to lower provider") {
    const auto g = make_group({{0, det(1, 0.9, 0, 0, 1, 1)}, {1, det(1, 0.7, 0, 0, 1, 1)}});
    CHECK(ablate_nms(g).score == 0.9);

    const auto single = make_group({{2, det(1, 0.4, 0, 0, 1, 1)}});
    CHECK(ablate_nms(single).score == 0.4);

    const auto tied = make_group({{1, det(1, 0.5, 0, 0, 1, 1)}, {0, det(1, 0.5, 5, 5, 6, 6)}});
    CHECK(ablate_nms(tied).box.x_min == 5);  // provider 0 wins the tie
}

TEST_CASE("ablate_soft_nms decays by linear rule and applies the floor") {
    // keeper 0.9; other member iou 0.8 with keeper -> 0.6 * 0.2 = 0.12
    const auto g = make_group({{0, det(1, 0.9, 0, 0, 10, 10)}, {1, det(1, 0.6, 0, 0, 10, 8)}});
    const auto out = ablate_soft_nms(g, 0.001);
    REQUIRE(out.size() == 2);
    CHECK(out[0].score == 0.9);
    CHECK(out[1].score == doctest::Approx(0.6 * (1.0 - 0.8)).epsilon(1e-12));

    const auto single = make_group({{0, det(1, 0.9, 0, 0, 1, 1)}});
    CHECK(ablate_soft_nms(single, 0.001).size() == 1);

    // near-total overlap decays below the floor and is dropped
    const auto near = make_group({{0, det(1, 0.9, 0, 0, 1000, 1000)},
                                  {1, det(1, 0.6, 0, 0, 1000, 999.5)}});
    const auto survivors = ablate_soft_nms(near, 0.001);
    CHECK(survivors.size() == 1);
}

TEST_CASE("ablate_wbf weighted-average example") {
    const auto g = make_group({{0, det(2, 0.8, 0, 0, 10, 10)}, {1, det(2, 0.4, 2, 2, 12, 12)}});
    const auto fused = ablate_wbf(g);
    CHECK(fused.group == 2);
    CHECK(fused.score == doctest::Approx(0.6));
    CHECK(fused.box.x_min == doctest::Approx(0.8 / 1.2).epsilon(1e-12));
    CHECK(fused.box.y_min == doctest::Approx(0.8 / 1.2).epsilon(1e-12));
    CHECK(fused.box.x_max == doctest::Approx((0.8 * 10 + 0.4 * 12) / 1.2).epsilon(1e-12));
    CHECK(fused.box.y_max == doctest::Approx((0.8 * 10 + 0.4 * 12) / 1.2).epsilon(1e-12));
}

TEST_CASE("ablate_wbf singleton and identical-box cases") {
    const auto single = make_group({{0, det(1, 0.37, 1, 2, 3, 4)}});
    const auto fused = ablate_wbf(single);
    CHECK(fused.score == 0.37);
    CHECK(fused.box.x_min == 1);
    CHECK(fused.box.y_max == 4);

    const auto same = make_group({{0, det(1, 0.2, 1, 1, 2, 2)}, {1, det(1, 0.8, 1, 1, 2, 2)}});
    const auto avg = ablate_wbf(same);
    CHECK(avg.score == doctest::Approx(0.5));
    CHECK(avg.box.x_min == doctest::Approx(1.0));
    CHECK(avg.box.x_max == doctest::Approx(2.0));
}

TEST_CASE("ablate_wbf all-zero scores fall back to unweighted mean") {
    const auto g = make_group({{0, det(1, 0.0, 0, 0, 2, 2)}, {1, det(1, 0.0, 2, 2, 4, 4)}});
    bool all_zero = false;
    const auto fused = ablate_wbf(g, &all_zero);
    CHECK(all_zero);
    CHECK(fused.score == 0.0);
    CHECK(fused.box.x_min == doctest::Approx(1.0));
    CHECK(fused.box.x_max == doctest::Approx(3.0));
}

TEST_CASE("wbf matches a hand weighted-average oracle and stays in member bounds") {
    Rng rng(31);
    for (int trial = 0; trial < 1000; ++trial) {
        DetectionGroup g;
        const std::size_t n = 1 + rng.uniform_index(5);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = rng.uniform(0, 5), y = rng.uniform(0, 5);
            g.members.push_back({static_cast<int>(i),
                                 det(7, rng.uniform(0.01, 1.0), x, y, x + rng.uniform(0.1, 3),
                                     y + rng.uniform(0.1, 3))});
        }
        const auto fused = ablate_wbf(g);

        // oracle: accumulate with plain loops over each coordinate
        double ws = 0, score_sum = 0;
        double cx1 = 0, cy1 = 0, cx2 = 0, cy2 = 0;
        for (const auto& m : g.members) {
            ws += m.det.score;
            score_sum += m.det.score;
            cx1 += m.det.score * m.det.box.x_min;
            cy1 += m.det.score * m.det.box.y_min;
            cx2 += m.det.score * m.det.box.x_max;
            cy2 += m.det.score * m.det.box.y_max;
        }
        REQUIRE(fused.score == doctest::Approx(score_sum / n).epsilon(1e-9));
        REQUIRE(fused.box.x_min == doctest::Approx(cx1 / ws).epsilon(1e-9));
        REQUIRE(fused.box.y_min == doctest::Approx(cy1 / ws).epsilon(1e-9));
        REQUIRE(fused.box.x_max == doctest::Approx(cx2 / ws).epsilon(1e-9));
        REQUIRE(fused.box.y_max == doctest::Approx(cy2 / ws).epsilon(1e-9));

        // containment: fused coordinates lie within member min/max
        double lo = 1e9, hi = -1e9;
        for (const auto& m : g.members) {
            lo = std::min(lo, m.det.box.x_min);
            hi = std::max(hi, m.det.box.x_min);
        }
        CHECK(fused.box.x_min >= lo - 1e-12);
        CHECK(fused.box.x_min <= hi + 1e-12);
    }
}

TEST_CASE("ensemble: empty input and single-provider fixed points") {
    EnsembleConfig cfg;
    CHECK(ensemble({}, cfg).detections.empty());

    ImagePrediction mine = pred({det(0, 0.9, 0, 0, 1, 1), det(1, 0.7, 3, 3, 4, 4)});

    // ablation none: detections unchanged (sorted by score)
    EnsembleConfig none_cfg;
    none_cfg.ablation = Ablation::kNone;
    const auto out_none = ensemble({mine}, none_cfg);
    REQUIRE(out_none.detections.size() == 2);
    CHECK(out_none.detections[0].score == 0.9);
    CHECK(out_none.detections[1].score == 0.7);

    // singleton-group wbf: boxes unchanged
    const auto out_wbf = ensemble({mine}, cfg);
    REQUIRE(out_wbf.detections.size() == 2);
    CHECK(out_wbf.detections[0].box.x_min == 0);
    CHECK(out_wbf.detections[1].box.x_min == 3);
}

TEST_CASE("ensemble: affirmative-wbf fuses an agreeing pair") {
    EnsembleConfig cfg;  // affirmative + wbf
    // iou([0,0,10,10],[1,1,11,11]) = 81/119 > 0.5, so the pair groups
    const auto out = ensemble({pred({det(2, 0.8, 0, 0, 10, 10)}),
                               pred({det(2, 0.4, 1, 1, 11, 11)})},
                              cfg);
    REQUIRE(out.detections.size() == 1);
    CHECK(out.detections[0].score == doctest::Approx(0.6));
    CHECK(out.detections[0].box.x_min == doctest::Approx(0.4 / 1.2));
    CHECK(out.detections[0].box.x_max == doctest::Approx((0.8 * 10 + 0.4 * 11) / 1.2));
}

TEST_CASE("ensemble determinism") {
    Rng rng(57);
    std::vector<ImagePrediction> providers(3);
    for (auto& p : providers) {
        for (int i = 0; i < 5; ++i) {
            const double x = rng.uniform(0, 5), y = rng.uniform(0, 5);
            p.detections.push_back(det(static_cast<int>(rng.uniform_index(2)),
                                       rng.uniform(0.01, 1.0), x, y, x + 1.5, y + 1.5));
        }
    }
    for (const Ablation ab : {Ablation::kNone, Ablation::kNms, Ablation::kSoftNms, Ablation::kWbf}) {
        EnsembleConfig cfg;
        cfg.ablation = ab;
        const auto a = ensemble(providers, cfg);
        const auto b = ensemble(providers, cfg);
        REQUIRE(a.detections.size() == b.detections.size());
        for (std::size_t i = 0; i < a.detections.size(); ++i) {
            CHECK(a.detections[i].score == b.detections[i].score);
            CHECK(a.detections[i].group == b.detections[i].group);
            CHECK(a.detections[i].box.x_min == b.detections[i].box.x_min);
        }
    }
}
