#pragma once

// Exemplar fonts with their tag sets, and the score vectors that rank them
// for a query.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fontimp/error.hpp"
#include "fontimp/io.hpp"
#include "fontimp/vocab.hpp"

namespace fontimp {

struct Exemplar {
    std::string font_id;
    TagSet tags;
};

/// Exemplars ordered by font id. Ids are unique; every tag is in the vocabulary
/// the set was loaded against.
class ExemplarSet {
public:
    ExemplarSet() = default;

    explicit ExemplarSet(std::vector<Exemplar> exemplars) : exemplars_(std::move(exemplars)) {
        std::sort(exemplars_.begin(), exemplars_.end(),
                  [](const Exemplar& a, const Exemplar& b) { return a.font_id < b.font_id; });
        for (std::size_t i = 0; i < exemplars_.size(); ++i) {
            if (!index_.emplace(exemplars_[i].font_id, i).second) {
                throw InvalidArgument("duplicate exemplar font id '" + exemplars_[i].font_id + "'");
            }
        }
    }

    std::size_t size() const noexcept { return exemplars_.size(); }
    const Exemplar& operator[](std::size_t i) const { return exemplars_[i]; }
    auto begin() const noexcept { return exemplars_.begin(); }
    auto end() const noexcept { return exemplars_.end(); }

    std::size_t index_of(const std::string& font_id) const {
        auto it = index_.find(font_id);
        if (it == index_.end()) {
            throw InvalidArgument("unknown exemplar '" + font_id + "'");
        }
        return it->second;
    }

    std::vector<std::string> ids() const {
        std::vector<std::string> out;
        out.reserve(exemplars_.size());
        for (const auto& e : exemplars_) {
            out.push_back(e.font_id);
        }
        return out;
    }

private:
    std::vector<Exemplar> exemplars_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Canonicalizes each record against `vocab`; throws on duplicate font ids.
inline ExemplarSet load_exemplars(const std::vector<RawTagRecord>& records,
                                  const MergeRules& rules, const TagVocabulary& vocab,
                                  std::size_t* dropped = nullptr) {
    std::vector<Exemplar> exemplars;
    exemplars.reserve(records.size());
    for (const auto& rec : records) {
        exemplars.push_back({rec.font_id, canonicalize(rec.tags, rules, vocab, dropped)});
    }
    return ExemplarSet(std::move(exemplars));
}

/// Nonnegative, finite per-exemplar scores for one query.
class ScoreVector {
public:
    static constexpr double kNormalizedTolerance = 1e-6;

    ScoreVector() = default;

    explicit ScoreVector(std::vector<double> scores) : scores_(std::move(scores)) {
        double sum = 0.0;
        for (std::size_t i = 0; i < scores_.size(); ++i) {
            if (!std::isfinite(scores_[i])) {
                throw InvalidArgument("score " + std::to_string(i) + " is not finite");
            }
            if (scores_[i] < 0.0) {
                throw InvalidArgument("score " + std::to_string(i) + " is negative");
            }
            sum += scores_[i];
        }
        normalized_ = !scores_.empty() && std::abs(sum - 1.0) <= kNormalizedTolerance;
    }

    std::size_t size() const noexcept { return scores_.size(); }
    double operator[](std::size_t i) const { return scores_[i]; }
    std::span<const double> values() const noexcept { return scores_; }
    bool normalized() const noexcept { return normalized_; }

private:
    std::vector<double> scores_;
    bool normalized_ = false;
};

/// One row of an externally computed score matrix.
inline ScoreVector score_from_matrix(std::span<const double> row, std::size_t expected_n) {
    if (row.size() != expected_n) {
        throw InvalidArgument("score row has " + std::to_string(row.size()) +
                              " values, expected " + std::to_string(expected_n));
    }
    return ScoreVector(std::vector<double>(row.begin(), row.end()));
}

using FeatureVector = std::vector<double>;

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

/// softmax(-d_n / temperature) over Euclidean distances to every exemplar.
inline ScoreVector nearest_exemplar_scores(std::span<const double> query,
                                           const std::vector<FeatureVector>& exemplar_features,
                                           double temperature) {
    if (exemplar_features.empty()) {
        throw InvalidArgument("nearest_exemplar_scores: no exemplars");
    }
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw InvalidArgument("nearest_exemplar_scores: temperature must be positive");
    }
    std::vector<double> logits(exemplar_features.size());
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < exemplar_features.size(); ++n) {
        if (exemplar_features[n].size() != query.size()) {
            throw InvalidArgument("feature dimension mismatch at exemplar " + std::to_string(n) +
                                  ": " + std::to_string(exemplar_features[n].size()) + " vs " +
                                  std::to_string(query.size()));
        }
        logits[n] = -euclidean_distance(query, exemplar_features[n]) / temperature;
        max_logit = std::max(max_logit, logits[n]);
    }
    double sum = 0.0;
    for (auto& l : logits) {
        l = std::exp(l - max_logit);
        sum += l;
    }
    for (auto& l : logits) {
        l /= sum;
    }
    return ScoreVector(std::move(logits));
}

/// Indices of the `n_tilde` highest scores, descending; equal scores keep
/// ascending index order.
inline std::vector<std::size_t> top_n_indices(const ScoreVector& scores, std::size_t n_tilde) {
    if (n_tilde < 1 || n_tilde > scores.size()) {
        throw InvalidArgument("n_tilde=" + std::to_string(n_tilde) + " outside [1, " +
                              std::to_string(scores.size()) + "]");
    }
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto by_score = [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
    };
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_tilde), idx.end(),
                      by_score);
    idx.resize(n_tilde);
    return idx;
}

// ---- files ------------------------------------------------------------------

/// Query rows of a score matrix, with columns permuted into exemplar-set order.
struct ScoreMatrix {
    std::vector<std::string> sample_ids;
    std::vector<ScoreVector> rows;
};

/// Reads a `sample_id,<exemplar id>...` matrix. Every exemplar must appear
/// exactly once in the header.
inline ScoreMatrix load_score_matrix(const std::filesystem::path& path,
                                     const ExemplarSet& exemplars) {
    const auto m = io::read_labeled_matrix(path);
    if (m.col_labels.size() != exemplars.size()) {
        throw ParseError(path.string() + ": header has " + std::to_string(m.col_labels.size()) +
                         " exemplar columns, expected " + std::to_string(exemplars.size()));
    }
    std::vector<std::size_t> column_of(exemplars.size(), exemplars.size());
    for (std::size_t c = 0; c < m.col_labels.size(); ++c) {
        const auto n = exemplars.index_of(m.col_labels[c]);
        if (column_of[n] != exemplars.size()) {
            throw ParseError(path.string() + ": duplicate column '" + m.col_labels[c] + "'");
        }
        column_of[n] = c;
    }
    ScoreMatrix out;
    for (std::size_t r = 0; r < m.values.size(); ++r) {
        std::vector<double> row(exemplars.size());
        for (std::size_t n = 0; n < exemplars.size(); ++n) {
            row[n] = m.values[r][column_of[n]];
        }
        try {
            out.rows.push_back(score_from_matrix(row, exemplars.size()));
        } catch (const InvalidArgument& e) {
            throw ParseError(path.string() + ": sample '" + m.row_labels[r] + "': " + e.what());
        }
        out.sample_ids.push_back(m.row_labels[r]);
    }
    return out;
}

/// `id, v1, ..., vD` rows; every row has the same dimension.
struct FeatureStore {
    std::vector<std::string> ids;
    std::vector<FeatureVector> features;

    std::size_t dimension() const { return features.empty() ? 0 : features.front().size(); }

    std::string to_text() const {
        std::ostringstream out;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            out << ids[i];
            for (double v : features[i]) {
                out << ',' << io::format_double(v);
            }
            out << '\n';
        }
        return out.str();
    }

    static FeatureStore load(const std::filesystem::path& path) {
        FeatureStore store;
        for (const auto& line : io::read_lines(path)) {
            auto fields = io::split(line);
            FeatureVector v;
            for (std::size_t j = 1; j < fields.size(); ++j) {
                v.push_back(io::parse_double(fields[j], path.string()));
                if (!std::isfinite(v.back())) {
                    throw ParseError(path.string() + ": non-finite feature for '" + fields[0] + "'");
                }
            }
            if (!store.features.empty() && v.size() != store.dimension()) {
                throw ParseError(path.string() + ": '" + fields[0] + "' has dimension " +
                                 std::to_string(v.size()) + ", expected " +
                                 std::to_string(store.dimension()));
            }
            store.ids.push_back(std::move(fields[0]));
            store.features.push_back(std::move(v));
        }
        return store;
    }

    /// Features reordered to match `exemplars`; throws if any exemplar is missing.
    std::vector<FeatureVector> aligned_to(const ExemplarSet& exemplars) const {
        std::unordered_map<std::string, std::size_t> where;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (!where.emplace(ids[i], i).second) {
                throw ParseError("duplicate feature row '" + ids[i] + "'");
            }
        }
        std::vector<FeatureVector> out;
        out.reserve(exemplars.size());
        for (const auto& e : exemplars) {
            auto it = where.find(e.font_id);
            if (it == where.end()) {
                throw ParseError("no feature row for exemplar '" + e.font_id + "'");
            }
            out.push_back(features[it->second]);
        }
        return out;
    }
};

} // namespace fontimp
