#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mlfed/synth.hpp"
#include "mlfed/trace.hpp"

using namespace mlfed;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("mlfed_test_" + std::to_string(std::rand()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
    std::ofstream out(path);
    for (const auto& l : lines) out << l << '\n';
}

}  // namespace

TEST_CASE("trace save/load round trip") {
    TempDir dir;
    const Trace original = make_selector_trace({.n_images = 20, .n_providers = 3}, 99);
    const std::string path = dir.file("trace.jsonl");
    original.save(path);

    const Trace loaded = Trace::load(path);
    REQUIRE(loaded.records.size() == original.records.size());
    CHECK(loaded.header.n_providers == 3);
    CHECK(loaded.header.coords == "normalized");
    CHECK(loaded.header.feature_dim == original.header.feature_dim);
    for (std::size_t i = 0; i < loaded.records.size(); ++i) {
        const auto& a = original.records[i];
        const auto& b = loaded.records[i];
        CHECK(a.image_id == b.image_id);
        CHECK(a.features == b.features);
        REQUIRE(a.providers.size() == b.providers.size());
        for (std::size_t p = 0; p < a.providers.size(); ++p) {
            REQUIRE(a.providers[p].size() == b.providers[p].size());
            for (std::size_t d = 0; d < a.providers[p].size(); ++d) {
                CHECK(a.providers[p][d].label == b.providers[p][d].label);
                CHECK(a.providers[p][d].score == b.providers[p][d].score);
                CHECK(a.providers[p][d].box.x_min == b.providers[p][d].box.x_min);
            }
        }
        CHECK(a.has_gt == b.has_gt);
        REQUIRE(a.gt.size() == b.gt.size());
    }

    // saving the loaded trace is byte-identical
    const std::string path2 = dir.file("trace2.jsonl");
    loaded.save(path2);
    CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("trace load validates shape") {
    TempDir dir;
    const std::string path = dir.file("bad.jsonl");

    write_lines(path, {R"({"n_providers":2,"providers":["a","b"],"feature_dim":2,"coords":"pixel"})",
                       R"({"image_id":"x","features":[0.1],"providers":[[],[]]})"});
    CHECK_THROWS_WITH_AS(Trace::load(path), doctest::Contains("feature length"), Error);

    write_lines(path, {R"({"n_providers":2,"providers":["a","b"],"feature_dim":1,"coords":"pixel"})",
                       R"({"image_id":"x","features":[0.1],"providers":[[]]})"});
    CHECK_THROWS_WITH_AS(Trace::load(path), doctest::Contains("provider list"), Error);

    write_lines(path, {R"({"n_providers":1,"providers":["a"],"feature_dim":1,"coords":"pixel"})",
                       R"({"image_id":"x","features":[0.1],"providers":[[{"label":"dog","score":1.5,"box":[0,0,1,1]}]]})"});
    CHECK_THROWS_WITH_AS(Trace::load(path), doctest::Contains("score"), Error);
}

TEST_CASE("ingest compiles dumps into a trace; re-ingest is byte-identical") {
    TempDir dir;
    write_lines(dir.file("features.jsonl"),
                {R"({"image_id":"a","features":[0.1,0.2]})",
                 R"({"image_id":"b","features":[0.3,0.4]})"});
    write_lines(dir.file("p0.jsonl"),
                {R"({"image_id":"a","detections":[{"label":"dog","score":0.9,"box":[0,0,2,2]}]})",
                 R"({"image_id":"b","detections":[]})"});
    write_lines(dir.file("gt.jsonl"),
                {R"({"image_id":"a","gt":[{"category":"dog","box":[0,0,2,2]}]})",
                 R"({"image_id":"b","gt":[]})"});

    IngestInputs inputs;
    inputs.provider_dump_paths = {dir.file("p0.jsonl")};
    inputs.feature_path = dir.file("features.jsonl");
    inputs.gt_path = dir.file("gt.jsonl");

    const Trace trace = ingest(inputs);
    REQUIRE(trace.records.size() == 2);
    CHECK(trace.header.n_providers == 1);
    CHECK(trace.header.feature_dim == 2);
    CHECK(trace.records[0].image_id == "a");
    CHECK(trace.records[0].providers[0].size() == 1);
    CHECK(trace.records[1].providers[0].empty());
    CHECK(trace.records[0].has_gt);
    CHECK(trace.records[1].gt.empty());

    trace.save(dir.file("t1.jsonl"));
    ingest(inputs).save(dir.file("t2.jsonl"));
    CHECK(slurp(dir.file("t1.jsonl")) == slurp(dir.file("t2.jsonl")));
}

TEST_CASE("ingest rejects mismatched image ids") {
    TempDir dir;
    write_lines(dir.file("features.jsonl"), {R"({"image_id":"a","features":[0.1]})"});
    write_lines(dir.file("p0.jsonl"), {R"({"image_id":"zzz","detections":[]})"});

    IngestInputs inputs;
    inputs.provider_dump_paths = {dir.file("p0.jsonl")};
    inputs.feature_path = dir.file("features.jsonl");
    CHECK_THROWS_WITH_AS(ingest(inputs), doctest::Contains("IdMismatch"), Error);
}

TEST_CASE("synthesize_providers appends deterministic providers") {
    const Trace base = make_gt_only_trace({.n_images = 30, .n_categories = 4}, 7);

    ProviderSynthParams perfect;  // recall 1, no jitter, no noise, no FPs
    perfect.name = "perfect";
    const Trace ext_a = synthesize_providers(base, {perfect}, 123);
    const Trace ext_b = synthesize_providers(base, {perfect}, 123);

    REQUIRE(ext_a.header.n_providers == 1);
    CHECK(ext_a.header.provider_names.back() == "perfect");
    for (std::size_t i = 0; i < ext_a.records.size(); ++i) {
        const auto& dets = ext_a.records[i].providers.back();
        const auto& gt = ext_a.records[i].gt;
        REQUIRE(dets.size() == gt.size());
        for (std::size_t d = 0; d < dets.size(); ++d) {
            CHECK(dets[d].label == gt[d].category);
            CHECK(dets[d].score == 1.0);
            CHECK(dets[d].box.x_min == gt[d].box.x_min);
        }
        // determinism across calls
        const auto& other = ext_b.records[i].providers.back();
        REQUIRE(other.size() == dets.size());
        for (std::size_t d = 0; d < dets.size(); ++d) {
            CHECK(other[d].score == dets[d].score);
            CHECK(other[d].box.x_max == dets[d].box.x_max);
        }
    }

    ProviderSynthParams blind;
    blind.recall = 0.0;
    const Trace empty_provider = synthesize_providers(base, {blind}, 5);
    for (const auto& rec : empty_provider.records) {
        CHECK(rec.providers.back().empty());
    }
}
