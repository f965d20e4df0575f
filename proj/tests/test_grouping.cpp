#include <doctest.h>

#include "mlfed/grouping.hpp"

using namespace mlfed;

namespace {

SynonymLexicon lex(std::map<std::string, std::set<std::string>> entries) {
    SynonymLexicon l;
    l.entries = std::move(entries);
    return l;
}

}  // namespace

TEST_CASE("build_grouping merges lexicon synonyms") {
    const auto table = build_grouping({"motorcycle"}, lex({{"motorcycle", {"motorbike"}}}), {});
    REQUIRE(table.size() == 1);
    CHECK(table.lookup("motorcycle") == 0);
    CHECK(table.lookup("motorbike") == 0);
    CHECK(table.lookup("Motorbike") == 0);  // lowercased lookup
    CHECK(!table.lookup("bicycle").has_value());
}

TEST_CASE("build_grouping identity when lexicon empty") {
    const auto table = build_grouping({"dog"}, {}, {});
    REQUIRE(table.size() == 1);
    CHECK(table.groups()[0].members == std::set<std::string>{"dog"});
}

TEST_CASE("build_grouping unions lexicon and overrides") {
    const auto table = build_grouping({"couch"}, lex({{"couch", {"sofa", "lounge"}}}),
                                      {{"settee", "couch"}});
    REQUIRE(table.size() == 1);
    CHECK(table.groups()[0].members ==
          std::set<std::string>{"couch", "sofa", "lounge", "settee"});
}

TEST_CASE("label claimed by two groups goes to the earlier template group") {
    const auto table = build_grouping({"couch", "bench"},
                                      lex({{"couch", {"seat"}}, {"bench", {"seat"}}}), {});
    CHECK(table.lookup("seat") == 0);
    CHECK(!table.warnings().empty());
}

TEST_CASE("override beats lexicon membership") {
    const auto table = build_grouping({"couch", "bench"},
                                      lex({{"couch", {"seat"}}}), {{"seat", "bench"}});
    CHECK(table.lookup("seat") == 1);
}

TEST_CASE("conflicting overrides raise OverrideConflict") {
    CHECK_THROWS_WITH_AS(
        build_grouping({"couch", "bench"}, {}, {{"seat", "couch"}, {"seat", "bench"}}),
        doctest::Contains("OverrideConflict"), Error);
    // a template category cannot be moved out of its own group
    CHECK_THROWS_WITH_AS(build_grouping({"couch", "bench"}, {}, {{"bench", "couch"}}),
                         doctest::Contains("OverrideConflict"), Error);
}

TEST_CASE("duplicate template categories rejected") {
    CHECK_THROWS_WITH_AS(build_grouping({"dog", "Dog"}, {}, {}),
                         doctest::Contains("DuplicateTemplateCategory"), Error);
}

TEST_CASE("normalize maps labels and never alters score or box") {
    const auto table = build_grouping({"motorcycle"}, lex({{"motorcycle", {"motorbike"}}}), {});
    const BBox box{1, 2, 3, 4};
    const auto det = normalize(RawDetection{"Motorbike", 0.9, box}, table);
    REQUIRE(det.has_value());
    CHECK(det->group == 0);
    CHECK(det->score == 0.9);
    CHECK(det->box.x_min == 1);
    CHECK(det->box.y_max == 4);

    CHECK(!normalize(RawDetection{"dog", 0.5, box}, table).has_value());

    const auto couch = build_grouping({"couch"}, lex({{"couch", {"sofa", "lounge"}}}), {});
    const auto sofa = normalize(RawDetection{"sofa", 0.5, box}, couch);
    REQUIRE(sofa.has_value());
    CHECK(sofa->group == 0);
}

TEST_CASE("built tables are deterministic and disjoint; round-trip holds") {
    const std::vector<std::string> tmpl = {"person", "car", "dog", "cat", "chair"};
    const auto lexicon = lex({{"person", {"human", "individual"}},
                              {"car", {"auto", "automobile", "machine"}},
                              {"dog", {"hound", "canine"}},
                              {"cat", {"feline"}},
                              {"chair", {"seat"}}});
    const auto a = build_grouping(tmpl, lexicon, {{"pup", "dog"}});
    const auto b = build_grouping(tmpl, lexicon, {{"pup", "dog"}});

    REQUIRE(a.size() == b.size());
    std::set<std::string> seen;
    for (int g = 0; g < a.size(); ++g) {
        CHECK(a.groups()[g].canonical == tmpl[g]);
        CHECK(a.groups()[g].members == b.groups()[g].members);
        for (const auto& m : a.groups()[g].members) {
            CHECK(!seen.count(m));  // disjointness
            seen.insert(m);
            CHECK(a.lookup(m) == g);  // index inverts membership
        }
        CHECK(a.lookup(tmpl[g]) == g);  // round-trip
    }
}
