#pragma once

// Turns exemplar score vectors into impression-tag predictions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fontimp/error.hpp"
#include "fontimp/exemplar.hpp"
#include "fontimp/vocab.hpp"

namespace fontimp {

/// Aggregate the tags of the `n_tilde` best-scoring exemplars and keep tags
/// seen at least `p` times.
struct EnsembleParams {
    std::size_t n_tilde = 11;
    std::size_t p = 3;

    void validate(std::size_t n_exemplars) const {
        if (p < 1 || p > n_tilde || n_tilde > n_exemplars) {
            throw InvalidArgument("ensemble parameters must satisfy 1 <= p <= n_tilde <= N (p=" +
                                  std::to_string(p) + ", n_tilde=" + std::to_string(n_tilde) +
                                  ", N=" + std::to_string(n_exemplars) + ")");
        }
    }
};

struct Estimate {
    TagSet selected;
    std::map<std::string, std::size_t> tag_counts;
    std::vector<std::string> contributing;

    /// Tags by descending count, then tag; the order used in text output.
    std::vector<std::pair<std::string, std::size_t>> ranked_counts() const {
        std::vector<std::pair<std::string, std::size_t>> v(tag_counts.begin(), tag_counts.end());
        std::stable_sort(v.begin(), v.end(),
                         [](const auto& a, const auto& b) { return a.second > b.second; });
        return v;
    }
};

inline Estimate estimate_ensemble(const ScoreVector& scores, const ExemplarSet& exemplars,
                                  const EnsembleParams& params) {
    if (scores.size() != exemplars.size()) {
        throw InvalidArgument("score vector has " + std::to_string(scores.size()) +
                              " entries for " + std::to_string(exemplars.size()) + " exemplars");
    }
    params.validate(exemplars.size());
    Estimate est;
    for (std::size_t n : top_n_indices(scores, params.n_tilde)) {
        est.contributing.push_back(exemplars[n].font_id);
        for (const auto& tag : exemplars[n].tags) {
            ++est.tag_counts[tag];
        }
    }
    for (const auto& [tag, count] : est.tag_counts) {
        if (count >= params.p) {
            est.selected.insert(tag);
        }
    }
    return est;
}

/// Threshold baseline for per-tag scores produced by a direct multi-label model.
/// Class weights only matter when training that model; they do not change the
/// thresholding here.
struct MultiLabelParams {
    double theta = 0.1;
    std::optional<std::map<std::string, double>> class_weights;

    void validate(const TagVocabulary& vocab) const {
        if (!(theta >= 0.0 && theta <= 1.0)) {
            throw InvalidArgument("theta must lie in [0, 1]");
        }
        if (class_weights) {
            for (const auto& tag : vocab.tags()) {
                auto it = class_weights->find(tag);
                if (it == class_weights->end() || !(it->second > 0.0)) {
                    throw InvalidArgument("class weight for '" + tag + "' missing or not positive");
                }
            }
        }
    }
};

/// {t : score(t) >= theta}. Scores must cover every vocabulary tag.
/// `theta` is not range-checked here so callers can probe thresholds above 1.
inline TagSet threshold_tags(const std::map<std::string, double>& tag_scores,
                             const TagVocabulary& vocab, double theta) {
    TagSet out;
    for (const auto& tag : vocab.tags()) {
        auto it = tag_scores.find(tag);
        if (it == tag_scores.end()) {
            throw InvalidArgument("no score for tag '" + tag + "'");
        }
        if (!std::isfinite(it->second)) {
            throw InvalidArgument("score for tag '" + tag + "' is not finite");
        }
        if (it->second >= theta) {
            out.insert(tag);
        }
    }
    return out;
}

inline TagSet estimate_multilabel(const std::map<std::string, double>& tag_scores,
                                  const TagVocabulary& vocab, const MultiLabelParams& params) {
    params.validate(vocab);
    return threshold_tags(tag_scores, vocab, params.theta);
}

/// (M - M_k) / M_k, the weight that rebalances tag k among M training samples.
inline double class_weight(std::uint64_t total, std::uint64_t with_tag) {
    if (with_tag == 0) {
        throw InvalidArgument("class weight undefined: tag never occurs in the training set");
    }
    if (with_tag > total) {
        throw InvalidArgument("class weight: M_k exceeds M");
    }
    return static_cast<double>(total - with_tag) / static_cast<double>(with_tag);
}

// ---- output -------------------------------------------------------------------

/// `sample_id,tag:count,...` with tags by descending count.
inline std::string format_count_line(const std::string& sample_id, const Estimate& est) {
    std::string line = sample_id;
    for (const auto& [tag, count] : est.ranked_counts()) {
        line += ',' + tag + ':' + std::to_string(count);
    }
    return line;
}

inline nlohmann::ordered_json estimate_to_json(const std::string& sample_id, const Estimate& est) {
    nlohmann::ordered_json j;
    j["sample_id"] = sample_id;
    j["selected"] = std::vector<std::string>(est.selected.begin(), est.selected.end());
    nlohmann::ordered_json counts = nlohmann::ordered_json::object();
    for (const auto& [tag, count] : est.ranked_counts()) {
        counts[tag] = count;
    }
    j["tag_counts"] = counts;
    j["contributing"] = est.contributing;
    return j;
}

} // namespace fontimp
