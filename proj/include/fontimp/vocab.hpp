#pragma once

// Canonical impression-tag vocabulary: frequency filtering, spelling-variant
// merges and compound-tag expansion.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "fontimp/error.hpp"
#include "fontimp/io.hpp"

namespace fontimp {

using TagSet = std::set<std::string>;

/// Lowercases, trims and collapses internal runs of whitespace to one space.
inline std::string normalize_tag(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    for (char c : raw) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

/// One font and the raw tags attached to it.
struct RawTagRecord {
    std::string font_id;
    std::vector<std::string> tags;
};

class MergeRules {
public:
    MergeRules() = default;

    /// Keys and targets are normalized. Throws RuleError on overlap, cycles,
    /// self-maps or compounds with fewer than two components.
    MergeRules(std::map<std::string, std::string> variants,
               std::map<std::string, std::vector<std::string>> compounds) {
        for (auto& [k, v] : variants) {
            variants_[normalize_tag(k)] = normalize_tag(v);
        }
        for (auto& [k, parts] : compounds) {
            std::vector<std::string> norm;
            for (const auto& p : parts) {
                auto n = normalize_tag(p);
                if (std::find(norm.begin(), norm.end(), n) == norm.end()) {
                    norm.push_back(std::move(n));
                }
            }
            compounds_[normalize_tag(k)] = std::move(norm);
        }
        validate();
    }

    const std::map<std::string, std::string>& variants() const noexcept { return variants_; }
    const std::map<std::string, std::vector<std::string>>& compounds() const noexcept {
        return compounds_;
    }

    bool is_key(const std::string& tag) const {
        return variants_.count(tag) != 0 || compounds_.count(tag) != 0;
    }

    /// Canonical tags induced by one normalized raw tag (before vocabulary filtering).
    std::vector<std::string> apply(const std::string& tag) const {
        if (auto it = variants_.find(tag); it != variants_.end()) {
            return {it->second};
        }
        if (auto it = compounds_.find(tag); it != compounds_.end()) {
            return it->second;
        }
        return {tag};
    }

    /// Reads `{"variants": {raw: canonical}, "compounds": {raw: [canonical, ...]}}`.
    static MergeRules from_json(const nlohmann::json& doc) {
        if (!doc.is_object()) {
            throw ParseError("merge rules: expected an object");
        }
        std::map<std::string, std::string> variants;
        std::map<std::string, std::vector<std::string>> compounds;
        for (const auto& [key, value] : doc.items()) {
            if (key == "variants") {
                for (const auto& [k, v] : value.items()) {
                    variants[k] = v.get<std::string>();
                }
            } else if (key == "compounds") {
                for (const auto& [k, v] : value.items()) {
                    compounds[k] = v.get<std::vector<std::string>>();
                }
            } else {
                throw ParseError("merge rules: unknown section '" + key + "'");
            }
        }
        return MergeRules(std::move(variants), std::move(compounds));
    }

    static MergeRules load(const std::filesystem::path& path) {
        try {
            return from_json(nlohmann::json::parse(io::read_file(path)));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + ": " + e.what());
        }
    }

private:
    void validate() const {
        for (const auto& [k, v] : variants_) {
            if (k.empty() || v.empty()) {
                throw RuleError(k, "empty tag in variant rule");
            }
            if (compounds_.count(k) != 0) {
                throw RuleError(k, "key appears in both variants and compounds");
            }
            if (k == v || is_key(v)) {
                throw RuleError(k, "variant target '" + v + "' is itself a rule key (cycle)");
            }
        }
        for (const auto& [k, parts] : compounds_) {
            if (parts.size() < 2) {
                throw RuleError(k, "compound must expand to at least two tags");
            }
            for (const auto& p : parts) {
                if (p.empty() || is_key(p)) {
                    throw RuleError(k, "compound component '" + p + "' is itself a rule key");
                }
            }
        }
    }

    std::map<std::string, std::string> variants_;
    std::map<std::string, std::vector<std::string>> compounds_;
};

class TagVocabulary {
public:
    TagVocabulary() = default;

    /// `entries` must already be in canonical order (descending count, then tag).
    explicit TagVocabulary(std::vector<std::pair<std::string, std::size_t>> entries) {
        for (std::size_t i = 0; i < entries.size(); ++i) {
            auto& [tag, count] = entries[i];
            if (i > 0) {
                const auto& [ptag, pcount] = entries[i - 1];
                if (pcount < count || (pcount == count && !(ptag < tag))) {
                    throw InvalidArgument("vocabulary not in canonical order at '" + tag + "'");
                }
            }
            if (!index_.emplace(tag, i).second) {
                throw InvalidArgument("duplicate vocabulary tag '" + tag + "'");
            }
            tags_.push_back(tag);
            counts_.push_back(count);
        }
    }

    std::size_t size() const noexcept { return tags_.size(); }
    const std::vector<std::string>& tags() const noexcept { return tags_; }
    const std::vector<std::size_t>& counts() const noexcept { return counts_; }
    bool contains(const std::string& tag) const { return index_.count(tag) != 0; }

    std::size_t index_of(const std::string& tag) const {
        auto it = index_.find(tag);
        if (it == index_.end()) {
            throw InvalidArgument("tag '" + tag + "' is not in the vocabulary");
        }
        return it->second;
    }

    std::size_t count(const std::string& tag) const { return counts_[index_of(tag)]; }

    /// `tag,count` lines in canonical order.
    std::string to_text() const {
        std::ostringstream out;
        for (std::size_t i = 0; i < tags_.size(); ++i) {
            out << tags_[i] << ',' << counts_[i] << '\n';
        }
        return out.str();
    }

    static TagVocabulary from_lines(const std::vector<std::string>& lines) {
        std::vector<std::pair<std::string, std::size_t>> entries;
        for (const auto& line : lines) {
            const auto pos = line.rfind(',');
            if (pos == std::string::npos) {
                throw ParseError("vocabulary line without count: '" + line + "'");
            }
            auto tag = normalize_tag(line.substr(0, pos));
            const auto n = io::parse_int(line.substr(pos + 1), "vocabulary count");
            if (tag.empty() || n < 0) {
                throw ParseError("bad vocabulary line: '" + line + "'");
            }
            entries.emplace_back(std::move(tag), static_cast<std::size_t>(n));
        }
        return TagVocabulary(std::move(entries));
    }

    static TagVocabulary load(const std::filesystem::path& path) {
        return from_lines(io::read_lines(path));
    }

    friend bool operator==(const TagVocabulary& a, const TagVocabulary& b) {
        return a.tags_ == b.tags_ && a.counts_ == b.counts_;
    }

private:
    std::vector<std::string> tags_;
    std::vector<std::size_t> counts_;
    std::unordered_map<std::string, std::size_t> index_;
};

namespace detail {

inline std::vector<std::pair<std::string, std::size_t>>
sorted_by_count(const std::map<std::string, std::size_t>& counts) {
    std::vector<std::pair<std::string, std::size_t>> v(counts.begin(), counts.end());
    std::stable_sort(v.begin(), v.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    return v;
}

inline std::set<std::string> normalized_set(const std::vector<std::string>& raw) {
    std::set<std::string> out;
    for (const auto& t : raw) {
        auto n = normalize_tag(t);
        if (!n.empty()) {
            out.insert(std::move(n));
        }
    }
    return out;
}

} // namespace detail

/// Builds the vocabulary in three stages:
///  1. rank raw (normalized) tags by the number of fonts carrying them and keep
///     the `top_n` most frequent (ties by tag);
///  2. drop candidates that are merge-rule keys, since they fold into other tags;
///  3. recount fonts per canonical tag after applying the rules to every record,
///     and drop tags below `min_count`.
/// A compound key that survives stage 1 must expand only to tags in the result.
inline TagVocabulary build_vocabulary(const std::vector<RawTagRecord>& records,
                                      const MergeRules& rules, std::size_t top_n,
                                      std::size_t min_count) {
    if (records.empty()) {
        throw InvalidArgument("build_vocabulary: no records");
    }
    if (top_n == 0) {
        throw InvalidArgument("build_vocabulary: top_n must be positive");
    }
    std::map<std::string, std::size_t> raw_counts;
    std::map<std::string, std::size_t> canonical_counts;
    for (const auto& rec : records) {
        TagSet canonical;
        for (const auto& tag : detail::normalized_set(rec.tags)) {
            ++raw_counts[tag];
            for (auto& c : rules.apply(tag)) {
                canonical.insert(std::move(c));
            }
        }
        for (const auto& c : canonical) {
            ++canonical_counts[c];
        }
    }

    const auto ranked = detail::sorted_by_count(raw_counts);
    std::set<std::string> kept;
    for (std::size_t i = 0; i < ranked.size() && i < top_n; ++i) {
        const auto& tag = ranked[i].first;
        if (!rules.is_key(tag) && canonical_counts[tag] >= min_count) {
            kept.insert(tag);
        }
    }
    for (std::size_t i = 0; i < ranked.size() && i < top_n; ++i) {
        const auto& tag = ranked[i].first;
        if (auto it = rules.compounds().find(tag); it != rules.compounds().end()) {
            for (const auto& part : it->second) {
                if (kept.count(part) == 0) {
                    throw RuleError(tag, "compound component '" + part +
                                             "' is not in the final vocabulary");
                }
            }
        }
    }

    std::map<std::string, std::size_t> final_counts;
    for (const auto& t : kept) {
        final_counts[t] = canonical_counts[t];
    }
    return TagVocabulary(detail::sorted_by_count(final_counts));
}

/// In-vocabulary canonical tags induced by `raw`. Out-of-vocabulary tags are
/// dropped; `dropped`, when given, is incremented once per dropped raw tag.
inline TagSet canonicalize(const std::vector<std::string>& raw, const MergeRules& rules,
                           const TagVocabulary& vocab, std::size_t* dropped = nullptr) {
    TagSet out;
    for (const auto& tag : detail::normalized_set(raw)) {
        bool any = false;
        for (auto& c : rules.apply(tag)) {
            if (vocab.contains(c)) {
                out.insert(std::move(c));
                any = true;
            }
        }
        if (!any && dropped != nullptr) {
            ++*dropped;
        }
    }
    return out;
}

// ---- record files ---------------------------------------------------------

/// Parses `font_id, tag, tag, ...` lines, or line-delimited JSON objects
/// `{"font_id": ..., "tags": [...]}` when a line starts with '{'.
/// Duplicate tags within one record collapse.
inline std::vector<RawTagRecord> parse_tag_records(const std::vector<std::string>& lines,
                                                   std::string_view context) {
    std::vector<RawTagRecord> out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        RawTagRecord rec;
        if (lines[i].front() == '{') {
            try {
                const auto obj = nlohmann::json::parse(lines[i]);
                for (const auto& [key, value] : obj.items()) {
                    if (key == "font_id") {
                        rec.font_id = value.get<std::string>();
                    } else if (key == "tags") {
                        rec.tags = value.get<std::vector<std::string>>();
                    } else {
                        throw ParseError(std::string(context) + ": line " + std::to_string(i + 1) +
                                         ": unknown field '" + key + "'");
                    }
                }
            } catch (const nlohmann::json::exception& e) {
                throw ParseError(std::string(context) + ": line " + std::to_string(i + 1) + ": " +
                                 e.what());
            }
        } else {
            auto fields = io::split(lines[i]);
            rec.font_id = fields.front();
            for (std::size_t j = 1; j < fields.size(); ++j) {
                if (!fields[j].empty()) {
                    rec.tags.push_back(std::move(fields[j]));
                }
            }
        }
        rec.font_id = std::string(io::trim(rec.font_id));
        if (rec.font_id.empty()) {
            throw ParseError(std::string(context) + ": line " + std::to_string(i + 1) +
                             ": empty font id");
        }
        std::vector<std::string> unique;
        std::set<std::string> seen;
        for (auto& t : rec.tags) {
            if (seen.insert(normalize_tag(t)).second) {
                unique.push_back(std::move(t));
            }
        }
        rec.tags = std::move(unique);
        out.push_back(std::move(rec));
    }
    return out;
}

inline std::vector<RawTagRecord> load_tag_records(const std::filesystem::path& path) {
    return parse_tag_records(io::read_lines(path), path.string());
}

/// `id, tag, tag, ...` lines (tags in set order).
inline std::string format_tag_sets(const std::vector<std::string>& ids,
                                   const std::vector<TagSet>& sets) {
    std::ostringstream out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out << ids[i];
        for (const auto& t : sets[i]) {
            out << ',' << t;
        }
        out << '\n';
    }
    return out.str();
}

} // namespace fontimp
