#pragma once

#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlfed/error.hpp"
#include "mlfed/geometry.hpp"

namespace mlfed {

using json = nlohmann::json;

// Raw ground-truth entry as stored in a trace (category still a string;
// unification to group indices happens when an environment is built).
struct GtEntry {
    std::string category;
    BBox box;
};

// One image: precomputed state features, per-provider raw detections,
// optional ground truth.
struct TraceRecord {
    std::string image_id;
    std::vector<double> features;
    std::vector<std::vector<RawDetection>> providers;
    std::vector<GtEntry> gt;
    bool has_gt = false;
};

struct TraceHeader {
    int n_providers = 0;
    std::vector<std::string> provider_names;
    int feature_dim = 0;
    std::string coords = "pixel";  // "pixel" or "normalized"
};

namespace detail {

inline BBox box_from_json(const json& j) {
    if (!j.is_array() || j.size() != 4) throw Error("TraceFormat", "box must be [x1,y1,x2,y2]");
    BBox b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
    if (!b.valid()) throw Error("TraceFormat", "invalid box coordinates");
    return b;
}

inline json box_to_json(const BBox& b) {
    return json::array({b.x_min, b.y_min, b.x_max, b.y_max});
}

}  // namespace detail

// Offline dataset enabling reproducible environment steps. File format is
// JSON lines: a header object, then one record object per image.
struct Trace {
    TraceHeader header;
    std::vector<TraceRecord> records;

    bool all_records_have_gt() const {
        for (const auto& r : records) {
            if (!r.has_gt) return false;
        }
        return !records.empty();
    }

    bool any_gt_box() const {
        for (const auto& r : records) {
            if (!r.gt.empty()) return true;
        }
        return false;
    }

    // Sorted unique category vocabulary over GT entries and provider labels.
    std::vector<std::string> label_vocabulary() const {
        std::set<std::string> vocab;
        for (const auto& r : records) {
            for (const auto& g : r.gt) vocab.insert(g.category);
            for (const auto& dets : r.providers) {
                for (const auto& d : dets) vocab.insert(d.label);
            }
        }
        return {vocab.begin(), vocab.end()};
    }

    static Trace load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error("FileNotFound", "trace file: " + path);
        Trace trace;
        std::string line;
        if (!std::getline(in, line)) throw Error("TraceFormat", "missing header line");
        {
            const json h = json::parse(line);
            trace.header.n_providers = h.at("n_providers").get<int>();
            trace.header.provider_names = h.at("providers").get<std::vector<std::string>>();
            trace.header.feature_dim = h.at("feature_dim").get<int>();
            trace.header.coords = h.value("coords", "pixel");
            if (trace.header.n_providers < 0 ||
                static_cast<int>(trace.header.provider_names.size()) != trace.header.n_providers) {
                throw Error("TraceFormat", "provider name count does not match n_providers");
            }
        }
        std::size_t line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            json j;
            try {
                j = json::parse(line);
            } catch (const json::parse_error& e) {
                throw Error("TraceFormat", "line " + std::to_string(line_no) + ": " + e.what());
            }
            TraceRecord rec;
            rec.image_id = j.at("image_id").get<std::string>();
            rec.features = j.at("features").get<std::vector<double>>();
            if (static_cast<int>(rec.features.size()) != trace.header.feature_dim) {
                throw Error("TraceFormat", "line " + std::to_string(line_no) +
                                               ": feature length != header feature_dim");
            }
            const json& provs = j.at("providers");
            if (static_cast<int>(provs.size()) != trace.header.n_providers) {
                throw Error("TraceFormat", "line " + std::to_string(line_no) +
                                               ": provider list length != n_providers");
            }
            for (const auto& dets : provs) {
                std::vector<RawDetection> list;
                for (const auto& d : dets) {
                    RawDetection raw;
                    raw.label = d.at("label").get<std::string>();
                    raw.score = d.at("score").get<double>();
                    if (!(raw.score >= 0.0 && raw.score <= 1.0)) {
                        throw Error("TraceFormat",
                                    "line " + std::to_string(line_no) + ": score outside [0,1]");
                    }
                    raw.box = detail::box_from_json(d.at("box"));
                    list.push_back(std::move(raw));
                }
                rec.providers.push_back(std::move(list));
            }
            if (j.contains("gt")) {
                rec.has_gt = true;
                for (const auto& g : j.at("gt")) {
                    rec.gt.push_back(GtEntry{g.at("category").get<std::string>(),
                                             detail::box_from_json(g.at("box"))});
                }
            }
            trace.records.push_back(std::move(rec));
        }
        return trace;
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw Error("FileWrite", "cannot open for writing: " + path);
        json h;
        h["n_providers"] = header.n_providers;
        h["providers"] = header.provider_names;
        h["feature_dim"] = header.feature_dim;
        h["coords"] = header.coords;
        out << h.dump() << '\n';
        for (const auto& rec : records) {
            json j;
            j["image_id"] = rec.image_id;
            j["features"] = rec.features;
            json provs = json::array();
            for (const auto& dets : rec.providers) {
                json list = json::array();
                for (const auto& d : dets) {
                    list.push_back({{"label", d.label},
                                    {"score", d.score},
                                    {"box", detail::box_to_json(d.box)}});
                }
                provs.push_back(std::move(list));
            }
            j["providers"] = std::move(provs);
            if (rec.has_gt) {
                json gts = json::array();
                for (const auto& g : rec.gt) {
                    gts.push_back({{"category", g.category}, {"box", detail::box_to_json(g.box)}});
                }
                j["gt"] = std::move(gts);
            }
            out << j.dump() << '\n';
        }
    }
};

// Inputs for trace compilation: per-provider response dumps keyed by
// image_id, a feature file, and an optional GT file. All are JSON lines
// with an image_id field.
struct IngestInputs {
    std::vector<std::string> provider_dump_paths;
    std::vector<std::string> provider_names;  // empty -> provider0, provider1, ...
    std::string feature_path;
    std::string gt_path;  // optional
    std::string coords = "pixel";
};

namespace detail {

inline std::vector<json> read_json_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("FileNotFound", path);
    std::vector<json> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw Error("IngestFormat", path + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace detail

// Compiles raw dumps into the trace format. Record order follows the
// feature file. Deterministic: re-ingesting identical inputs yields a
// byte-identical trace.
inline Trace ingest(const IngestInputs& inputs) {
    if (inputs.provider_dump_paths.empty()) throw Error("BadConfig", "no provider dumps given");

    Trace trace;
    trace.header.n_providers = static_cast<int>(inputs.provider_dump_paths.size());
    trace.header.coords = inputs.coords;
    for (std::size_t i = 0; i < inputs.provider_dump_paths.size(); ++i) {
        trace.header.provider_names.push_back(
            i < inputs.provider_names.size() ? inputs.provider_names[i]
                                             : "provider" + std::to_string(i));
    }

    // feature file drives record order
    std::vector<std::string> id_order;
    std::map<std::string, std::vector<double>> features;
    for (const auto& j : detail::read_json_lines(inputs.feature_path)) {
        const std::string id = j.at("image_id").get<std::string>();
        if (features.count(id)) throw Error("IngestFormat", "duplicate image_id in features: " + id);
        id_order.push_back(id);
        features[id] = j.at("features").get<std::vector<double>>();
    }
    if (id_order.empty()) throw Error("EmptyTrace", "feature file has no records");
    trace.header.feature_dim = static_cast<int>(features.begin()->second.size());

    std::vector<std::map<std::string, std::vector<RawDetection>>> provider_dets(
        trace.header.n_providers);
    for (int p = 0; p < trace.header.n_providers; ++p) {
        for (const auto& j : detail::read_json_lines(inputs.provider_dump_paths[p])) {
            const std::string id = j.at("image_id").get<std::string>();
            std::vector<RawDetection> dets;
            for (const auto& d : j.at("detections")) {
                dets.push_back(RawDetection{d.at("label").get<std::string>(),
                                            d.at("score").get<double>(),
                                            detail::box_from_json(d.at("box"))});
            }
            provider_dets[p][id] = std::move(dets);
        }
    }

    std::map<std::string, std::vector<GtEntry>> gt;
    const bool have_gt = !inputs.gt_path.empty();
    if (have_gt) {
        for (const auto& j : detail::read_json_lines(inputs.gt_path)) {
            const std::string id = j.at("image_id").get<std::string>();
            std::vector<GtEntry> entries;
            for (const auto& g : j.at("gt")) {
                entries.push_back(GtEntry{g.at("category").get<std::string>(),
                                          detail::box_from_json(g.at("box"))});
            }
            gt[id] = std::move(entries);
        }
    }

    // all image_id sets must align
    auto check_ids = [&id_order](const auto& m, const std::string& what) {
        std::vector<std::string> missing, extra;
        std::set<std::string> ordered(id_order.begin(), id_order.end());
        for (const auto& id : id_order) {
            if (!m.count(id)) missing.push_back(id);
        }
        for (const auto& [id, unused] : m) {
            if (!ordered.count(id)) extra.push_back(id);
        }
        if (!missing.empty() || !extra.empty()) {
            std::string detail = what + ":";
            for (const auto& id : missing) detail += " missing=" + id;
            for (const auto& id : extra) detail += " extra=" + id;
            throw Error("IdMismatch", detail);
        }
    };
    for (int p = 0; p < trace.header.n_providers; ++p) {
        check_ids(provider_dets[p], "provider " + trace.header.provider_names[p]);
    }
    if (have_gt) check_ids(gt, "ground truth");

    for (const auto& id : id_order) {
        TraceRecord rec;
        rec.image_id = id;
        rec.features = features[id];
        if (static_cast<int>(rec.features.size()) != trace.header.feature_dim) {
            throw Error("IngestFormat", "inconsistent feature length for " + id);
        }
        for (int p = 0; p < trace.header.n_providers; ++p) {
            rec.providers.push_back(provider_dets[p][id]);
        }
        if (have_gt) {
            rec.has_gt = true;
            rec.gt = gt[id];
        }
        trace.records.push_back(std::move(rec));
    }
    return trace;
}

}  // namespace mlfed
