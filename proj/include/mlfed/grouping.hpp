#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mlfed/error.hpp"
#include "mlfed/geometry.hpp"

namespace mlfed {

inline std::string normalize_label(const std::string& raw) {
    std::size_t begin = 0;
    std::size_t end = raw.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(raw[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(raw[end - 1]))) --end;
    std::string out = raw.substr(begin, end - begin);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Noun-sense synonym map, typically extracted from an external thesaurus.
// Treated as opaque input data.
struct SynonymLexicon {
    std::map<std::string, std::set<std::string>> entries;

    // Line format: word<TAB>syn1,syn2,...
    static SynonymLexicon load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error("FileNotFound", "lexicon file: " + path);
        SynonymLexicon lex;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            const auto tab = line.find('\t');
            if (tab == std::string::npos) {
                throw Error("LexiconFormat", "missing tab separator: " + line);
            }
            const std::string word = normalize_label(line.substr(0, tab));
            auto& syns = lex.entries[word];
            std::stringstream rest(line.substr(tab + 1));
            std::string syn;
            while (std::getline(rest, syn, ',')) {
                const std::string s = normalize_label(syn);
                if (!s.empty()) syns.insert(s);
            }
        }
        return lex;
    }
};

struct GroupEntry {
    std::string canonical;          // template category (lowercased)
    std::set<std::string> members;  // canonical + synonyms + overrides
};

// Maps provider label strings onto shared group indices. Built once,
// immutable afterwards; member sets are pairwise disjoint and `lookup`
// is exactly the inverse of the membership relation.
class GroupingTable {
public:
    const std::vector<GroupEntry>& groups() const { return groups_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

    std::optional<int> lookup(const std::string& label) const {
        const auto it = index_.find(normalize_label(label));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    int size() const { return static_cast<int>(groups_.size()); }

    const std::string& canonical(int group) const { return groups_[group].canonical; }

    friend GroupingTable build_grouping(const std::vector<std::string>&, const SynonymLexicon&,
                                        const std::vector<std::pair<std::string, std::string>>&);

private:
    std::vector<GroupEntry> groups_;
    std::unordered_map<std::string, int> index_;
    std::vector<std::string> warnings_;
};

// One group per template category, in template order. Each group holds the
// category, its single-hop lexicon synonyms, and override labels. A label
// claimed by two groups goes to the earlier template group (warning
// recorded); overrides beat the lexicon.
inline GroupingTable build_grouping(
    const std::vector<std::string>& template_categories, const SynonymLexicon& lexicon,
    const std::vector<std::pair<std::string, std::string>>& overrides) {
    if (template_categories.empty()) {
        throw Error("EmptyTemplate", "template must contain at least one category");
    }

    GroupingTable table;
    std::unordered_map<std::string, int> canonical_index;
    for (const auto& raw_cat : template_categories) {
        const std::string cat = normalize_label(raw_cat);
        if (cat.empty()) throw Error("EmptyTemplate", "blank template category");
        if (canonical_index.count(cat)) {
            throw Error("DuplicateTemplateCategory", cat);
        }
        canonical_index[cat] = static_cast<int>(table.groups_.size());
        table.groups_.push_back(GroupEntry{cat, {cat}});
    }

    // Overrides first: they take precedence over lexicon membership.
    std::unordered_map<std::string, int> override_target;
    for (const auto& [raw_label, raw_cat] : overrides) {
        const std::string label = normalize_label(raw_label);
        const std::string cat = normalize_label(raw_cat);
        const auto cat_it = canonical_index.find(cat);
        if (cat_it == canonical_index.end()) {
            throw Error("OverrideUnknownCategory", label + " -> " + cat);
        }
        const auto prev = override_target.find(label);
        if (prev != override_target.end() && prev->second != cat_it->second) {
            throw Error("OverrideConflict", label + " mapped to both '" +
                                                table.groups_[prev->second].canonical +
                                                "' and '" + cat + "'");
        }
        const auto own = canonical_index.find(label);
        if (own != canonical_index.end() && own->second != cat_it->second) {
            // a template category always stays in its own group
            throw Error("OverrideConflict",
                        "'" + label + "' is a template category and cannot be moved to '" + cat + "'");
        }
        override_target[label] = cat_it->second;
    }

    auto claim = [&table](const std::string& label, int group, bool is_override) {
        const auto it = table.index_.find(label);
        if (it == table.index_.end()) {
            table.index_[label] = group;
            table.groups_[group].members.insert(label);
            return;
        }
        if (it->second == group) return;
        if (is_override) {
            // override wins over an earlier lexicon claim
            table.groups_[it->second].members.erase(label);
            table.index_[label] = group;
            table.groups_[group].members.insert(label);
            table.warnings_.push_back("label '" + label + "' moved to group '" +
                                      table.groups_[group].canonical + "' by override");
        } else {
            table.warnings_.push_back("label '" + label + "' claimed by groups '" +
                                      table.groups_[it->second].canonical + "' and '" +
                                      table.groups_[group].canonical +
                                      "'; keeping the existing assignment");
        }
    };

    for (int g = 0; g < static_cast<int>(table.groups_.size()); ++g) {
        table.index_[table.groups_[g].canonical] = g;
    }

    // Single-hop synonyms of each template category, in template order.
    for (int g = 0; g < static_cast<int>(table.groups_.size()); ++g) {
        const auto lex_it = lexicon.entries.find(table.groups_[g].canonical);
        if (lex_it == lexicon.entries.end()) continue;
        for (const auto& syn : lex_it->second) {
            const auto ov = override_target.find(syn);
            if (ov != override_target.end() && ov->second != g) continue;  // override wins
            claim(syn, g, false);
        }
    }

    for (const auto& [raw_label, raw_cat] : overrides) {
        const std::string label = normalize_label(raw_label);
        claim(label, override_target.at(label), true);
    }

    return table;
}

// Unify a raw detection's label; nullopt is the Dropped marker for labels
// outside every group. Score and box pass through unchanged.
inline std::optional<Detection> normalize(const RawDetection& raw, const GroupingTable& table) {
    const auto group = table.lookup(raw.label);
    if (!group) return std::nullopt;
    return Detection{*group, raw.score, raw.box};
}

// Template file: newline-separated category names.
inline std::vector<std::string> load_template(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("FileNotFound", "template file: " + path);
    std::vector<std::string> categories;
    std::string line;
    while (std::getline(in, line)) {
        const std::string cat = normalize_label(line);
        if (!cat.empty() && cat[0] != '#') categories.push_back(cat);
    }
    return categories;
}

// Overrides file: provider_label<TAB>template_category per line.
inline std::vector<std::pair<std::string, std::string>> load_overrides(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("FileNotFound", "overrides file: " + path);
    std::vector<std::pair<std::string, std::string>> overrides;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw Error("OverridesFormat", "missing tab separator: " + line);
        }
        overrides.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
    return overrides;
}

}  // namespace mlfed
