#pragma once

// Synthetic latent-font corpora with controllable missing and noisy tags, and
// a comparison harness between the exemplar ensemble and a direct multi-label
// threshold baseline.
//
// Fonts are points in [0,1]^D. Each tag has an anchor point; a font's true tags
// are its `tags_per_font` nearest anchors, so nearby fonts share tags. Observed
// tags are the true tags after independent drops (miss_rate) plus, with
// probability noise_rate, one uniformly drawn wrong tag.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fontimp/error.hpp"
#include "fontimp/estimator.hpp"
#include "fontimp/exemplar.hpp"
#include "fontimp/io.hpp"
#include "fontimp/metrics.hpp"
#include "fontimp/vocab.hpp"

namespace fontimp {

/// 64-bit Mersenne Twister (MT19937-64). Uniform and normal draws are derived
/// here rather than through <random> distributions, whose outputs are not
/// portable across standard libraries.
class Rng {
public:
    static constexpr const char* kAlgorithm = "mt19937_64";

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n) by rejection.
    std::size_t index(std::size_t n) {
        const std::uint64_t bound = n;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x = 0;
        do {
            x = next();
        } while (x >= limit);
        return static_cast<std::size_t>(x % bound);
    }

    /// Standard normal by the Box-Muller transform (one variate per call).
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 engine_;
};

struct CorruptionParams {
    double miss_rate = 0.3;
    double noise_rate = 0.1;
    std::uint64_t seed = 1;

    void validate() const {
        if (!(miss_rate >= 0.0 && miss_rate <= 1.0)) {
            throw InvalidArgument("miss_rate must lie in [0, 1]");
        }
        if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) {
            throw InvalidArgument("noise_rate must lie in [0, 1]");
        }
    }
};

struct LatentFontModel {
    std::vector<std::string> font_ids;
    std::vector<std::string> tag_names;
    std::vector<FeatureVector> font_centers;
    std::vector<FeatureVector> tag_anchors;
    std::vector<TagSet> true_tags;
    std::vector<TagSet> observed_tags;

    std::size_t n_fonts() const { return font_ids.size(); }
    std::size_t feature_dim() const { return font_centers.empty() ? 0 : font_centers[0].size(); }

    /// Every tag, counted over observed tag sets.
    TagVocabulary vocabulary() const {
        std::map<std::string, std::size_t> counts;
        for (const auto& t : tag_names) {
            counts[t] = 0;
        }
        for (const auto& tags : observed_tags) {
            for (const auto& t : tags) {
                ++counts[t];
            }
        }
        return TagVocabulary(detail::sorted_by_count(counts));
    }

    /// Exemplars carrying the observed (corrupted) tags. Font ids are zero-padded,
    /// so exemplar index == font index.
    ExemplarSet exemplars() const {
        std::vector<Exemplar> ex;
        for (std::size_t f = 0; f < n_fonts(); ++f) {
            ex.push_back({font_ids[f], observed_tags[f]});
        }
        return ExemplarSet(std::move(ex));
    }
};

namespace detail {

inline std::string padded_name(const char* prefix, std::size_t i, std::size_t count) {
    std::size_t width = 1;
    for (std::size_t n = count > 0 ? count - 1 : 0; n >= 10; n /= 10) {
        ++width;
    }
    auto digits = std::to_string(i);
    return prefix + std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
}

inline FeatureVector uniform_point(Rng& rng, std::size_t dim) {
    FeatureVector v(dim);
    for (auto& x : v) {
        x = rng.uniform();
    }
    return v;
}

/// Index of the nearest point; ties go to the lower index.
inline std::size_t nearest_index(std::span<const double> q, const std::vector<FeatureVector>& pts) {
    std::size_t best = 0;
    double best_d = euclidean_distance(q, pts[0]);
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const double d = euclidean_distance(q, pts[i]);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

} // namespace detail

/// Size and geometry of a latent-font corpus. Fonts come in families: family
/// centers are uniform in [0,1]^D and each font is its family center plus
/// Gaussian noise of scale `family_spread`.
struct CorpusShape {
    std::size_t n_fonts = 300;
    std::size_t feature_dim = 8;
    std::size_t tag_vocab_size = 84;
    std::size_t tags_per_font = 4;
    std::size_t family_size = 10;
    double family_spread = 0.05;
};

/// Draws a corpus from an existing generator. The draw order is fixed:
/// family centers, font centers, tag anchors, then per-font corruption.
inline LatentFontModel generate_corpus(const CorpusShape& shape, double miss_rate,
                                       double noise_rate, Rng& rng) {
    CorruptionParams{miss_rate, noise_rate, 0}.validate();
    const auto [n_fonts, feature_dim, tag_vocab_size, tags_per_font, family_size, family_spread] =
        shape;
    if (family_size < 1 || !(family_spread >= 0.0)) {
        throw InvalidArgument("generate_corpus: family size must be positive and spread nonnegative");
    }
    if (n_fonts < 1 || feature_dim < 1 || tag_vocab_size < 1) {
        throw InvalidArgument("generate_corpus: n_fonts, feature_dim and vocabulary size must be positive");
    }
    if (tags_per_font < 1 || tags_per_font > tag_vocab_size) {
        throw InvalidArgument("generate_corpus: tags_per_font must lie in [1, vocabulary size]");
    }
    LatentFontModel m;
    for (std::size_t f = 0; f < n_fonts; ++f) {
        m.font_ids.push_back(detail::padded_name("font", f, std::max<std::size_t>(n_fonts, 1000)));
    }
    for (std::size_t k = 0; k < tag_vocab_size; ++k) {
        m.tag_names.push_back(detail::padded_name("tag", k, std::max<std::size_t>(tag_vocab_size, 100)));
    }

    const std::size_t n_families = std::max<std::size_t>(1, (n_fonts + family_size - 1) / family_size);
    std::vector<FeatureVector> families;
    for (std::size_t i = 0; i < n_families; ++i) {
        families.push_back(detail::uniform_point(rng, feature_dim));
    }
    for (std::size_t f = 0; f < n_fonts; ++f) {
        const auto& fam = families[f % n_families];
        while (true) {
            auto c = fam;
            for (auto& x : c) {
                x += family_spread * rng.normal();
            }
            if (std::find(m.font_centers.begin(), m.font_centers.end(), c) == m.font_centers.end()) {
                m.font_centers.push_back(std::move(c));
                break;
            }
        }
    }

    // Anchors sit on distinct fonts when there are enough of them, which
    // guarantees every tag is the true tag of at least one font.
    if (n_fonts >= tag_vocab_size) {
        std::vector<std::size_t> order(n_fonts);
        for (std::size_t i = 0; i < n_fonts; ++i) {
            order[i] = i;
        }
        for (std::size_t k = 0; k < tag_vocab_size; ++k) {
            std::swap(order[k], order[k + rng.index(n_fonts - k)]);
            m.tag_anchors.push_back(m.font_centers[order[k]]);
        }
    } else {
        for (std::size_t k = 0; k < tag_vocab_size; ++k) {
            m.tag_anchors.push_back(detail::uniform_point(rng, feature_dim));
        }
    }

    for (std::size_t f = 0; f < n_fonts; ++f) {
        std::vector<std::pair<double, std::size_t>> by_distance;
        for (std::size_t k = 0; k < tag_vocab_size; ++k) {
            by_distance.emplace_back(euclidean_distance(m.font_centers[f], m.tag_anchors[k]), k);
        }
        std::partial_sort(by_distance.begin(),
                          by_distance.begin() + static_cast<std::ptrdiff_t>(tags_per_font),
                          by_distance.end());
        TagSet tags;
        for (std::size_t i = 0; i < tags_per_font; ++i) {
            tags.insert(m.tag_names[by_distance[i].second]);
        }
        m.true_tags.push_back(std::move(tags));
    }

    for (std::size_t f = 0; f < n_fonts; ++f) {
        TagSet observed;
        for (const auto& t : m.true_tags[f]) {
            if (!(rng.uniform() < miss_rate)) {
                observed.insert(t);
            }
        }
        if (rng.uniform() < noise_rate) {
            std::vector<std::string> wrong;
            for (const auto& t : m.tag_names) {
                if (m.true_tags[f].count(t) == 0) {
                    wrong.push_back(t);
                }
            }
            if (!wrong.empty()) {
                observed.insert(wrong[rng.index(wrong.size())]);
            }
        }
        m.observed_tags.push_back(std::move(observed));
    }
    return m;
}

inline LatentFontModel generate_corpus(std::size_t n_fonts, std::size_t feature_dim,
                                       std::size_t tag_vocab_size, std::size_t tags_per_font,
                                       const CorruptionParams& params) {
    params.validate();
    Rng rng(params.seed);
    CorpusShape shape;
    shape.n_fonts = n_fonts;
    shape.feature_dim = feature_dim;
    shape.tag_vocab_size = tag_vocab_size;
    shape.tags_per_font = tags_per_font;
    return generate_corpus(shape, params.miss_rate, params.noise_rate, rng);
}

/// One rendering of a font: its center plus isotropic Gaussian noise of scale sigma.
struct QuerySample {
    std::size_t font_index = 0;
    FeatureVector feature;
    TagSet true_tags;
};

inline std::vector<QuerySample> make_queries(const LatentFontModel& model,
                                             const std::vector<std::size_t>& fonts,
                                             std::size_t per_font, double sigma, Rng& rng) {
    if (!(sigma >= 0.0)) {
        throw InvalidArgument("make_queries: sigma must be nonnegative");
    }
    std::vector<QuerySample> out;
    for (auto f : fonts) {
        if (f >= model.n_fonts()) {
            throw InvalidArgument("make_queries: font index out of range");
        }
        for (std::size_t r = 0; r < per_font; ++r) {
            QuerySample q{f, model.font_centers[f], model.true_tags[f]};
            for (auto& x : q.feature) {
                x += sigma * rng.normal();
            }
            out.push_back(std::move(q));
        }
    }
    return out;
}

inline std::vector<std::size_t> all_fonts(const LatentFontModel& model) {
    std::vector<std::size_t> v(model.n_fonts());
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = i;
    }
    return v;
}

/// Fraction of renderings whose nearest font center is their own font.
inline double top1_accuracy(const LatentFontModel& model, const std::vector<QuerySample>& queries) {
    if (queries.empty()) {
        return 0.0;
    }
    std::size_t hits = 0;
    for (const auto& q : queries) {
        hits += detail::nearest_index(q.feature, model.font_centers) == q.font_index ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(queries.size());
}

/// Rendering noise scale at which nearest-center top-1 accuracy reaches
/// `target_accuracy`, found by bisection over a fixed set of perturbation
/// directions (`per_font` per font). Accuracy is non-increasing in sigma along
/// fixed directions because Voronoi cells are convex.
inline double calibrate_sigma(const LatentFontModel& model, double target_accuracy,
                              std::size_t per_font, Rng& rng) {
    if (!(target_accuracy > 0.0 && target_accuracy < 1.0)) {
        throw InvalidArgument("calibrate_sigma: target accuracy must lie in (0, 1)");
    }
    const auto unit = make_queries(model, all_fonts(model), per_font, 1.0, rng);
    auto accuracy_at = [&](double sigma) {
        auto qs = unit;
        for (auto& q : qs) {
            const auto& c = model.font_centers[q.font_index];
            for (std::size_t d = 0; d < c.size(); ++d) {
                q.feature[d] = c[d] + sigma * (q.feature[d] - c[d]);
            }
        }
        return top1_accuracy(model, qs);
    };
    double lo = 0.0;
    double hi = 1.0 / 64.0;
    while (accuracy_at(hi) >= target_accuracy && hi < 64.0) {
        hi *= 2.0;
    }
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (accuracy_at(mid) >= target_accuracy ? lo : hi) = mid;
    }
    return lo;
}

/// Per-tag weighted fraction of the `neighbors` best-scoring exemplars (all of
/// them when 0) that carry the tag, with the exemplar scores as weights. Over
/// all exemplars this is what a multi-label model fitted to the observed tags
/// would output given the font posterior.
inline std::map<std::string, double> neighbor_tag_scores(const ScoreVector& scores,
                                                         const ExemplarSet& exemplars,
                                                         const TagVocabulary& vocab,
                                                         std::size_t neighbors) {
    std::map<std::string, double> out;
    for (const auto& t : vocab.tags()) {
        out[t] = 0.0;
    }
    double total = 0.0;
    for (auto n : top_n_indices(scores, neighbors == 0 ? scores.size() : neighbors)) {
        total += scores[n];
        for (const auto& t : exemplars[n].tags) {
            out[t] += scores[n];
        }
    }
    if (total > 0.0) {
        for (auto& [t, v] : out) {
            v /= total;
        }
    }
    return out;
}

struct ComparisonParams {
    EnsembleParams ensemble;
    MultiLabelParams multilabel;
    double temperature = 0.01;
    std::size_t baseline_neighbors = 0;
};

struct Comparison {
    EvalReport ensemble;
    EvalReport baseline;
    std::vector<TagSet> ensemble_predictions;
    std::vector<TagSet> baseline_predictions;
};

/// Scores every query against the exemplar centers, predicts with both methods
/// from the observed exemplar tags, and evaluates both against the true tags.
inline Comparison run_comparison(const LatentFontModel& model,
                                 const std::vector<QuerySample>& queries,
                                 const ComparisonParams& params) {
    const auto vocab = model.vocabulary();
    const auto exemplars = model.exemplars();
    params.multilabel.validate(vocab);
    Comparison cmp;
    std::vector<TagSet> truth;
    for (const auto& q : queries) {
        const auto scores = nearest_exemplar_scores(q.feature, model.font_centers, params.temperature);
        cmp.ensemble_predictions.push_back(
            estimate_ensemble(scores, exemplars, params.ensemble).selected);
        cmp.baseline_predictions.push_back(estimate_multilabel(
            neighbor_tag_scores(scores, exemplars, vocab, params.baseline_neighbors), vocab,
            params.multilabel));
        truth.push_back(q.true_tags);
    }
    cmp.ensemble = evaluate(cmp.ensemble_predictions, truth, vocab);
    cmp.baseline = evaluate(cmp.baseline_predictions, truth, vocab);
    return cmp;
}

/// |A ∩ B| / |A ∪ B|, with two empty sets counting as identical.
inline double jaccard(const TagSet& a, const TagSet& b) {
    std::size_t inter = 0;
    for (const auto& t : a) {
        inter += b.count(t);
    }
    const std::size_t uni = a.size() + b.size() - inter;
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

inline double mean_pairwise_jaccard(const std::vector<TagSet>& sets) {
    if (sets.size() < 2) {
        return 1.0;
    }
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        for (std::size_t j = i + 1; j < sets.size(); ++j) {
            sum += jaccard(sets[i], sets[j]);
            ++pairs;
        }
    }
    return sum / static_cast<double>(pairs);
}

/// Everything one simulated experiment needs. All randomness comes from a
/// single Rng seeded with `corruption.seed`, consumed in the order: corpus,
/// sigma calibration, queries.
struct SimulationConfig {
    CorpusShape shape;
    CorruptionParams corruption;
    double target_accuracy = 0.8;
    std::size_t calibration_per_font = 4;
    std::size_t queries_per_font = 3;
    /// Softmax temperature as a multiple of the calibrated sigma.
    double temperature_scale = 1.0;
    EnsembleParams ensemble;
    double theta = 0.1;
    std::size_t baseline_neighbors = 0;
};

struct SimulationResult {
    LatentFontModel model;
    double sigma = 0.0;
    double top1_accuracy = 0.0;
    ComparisonParams params;
    std::vector<QuerySample> queries;
    Comparison comparison;
};

inline SimulationResult run_simulation(const SimulationConfig& cfg) {
    cfg.corruption.validate();
    if (!(cfg.temperature_scale > 0.0)) {
        throw InvalidArgument("temperature_scale must be positive");
    }
    Rng rng(cfg.corruption.seed);
    SimulationResult r;
    r.model = generate_corpus(cfg.shape, cfg.corruption.miss_rate, cfg.corruption.noise_rate, rng);
    r.sigma = calibrate_sigma(r.model, cfg.target_accuracy, cfg.calibration_per_font, rng);
    r.queries = make_queries(r.model, all_fonts(r.model), cfg.queries_per_font, r.sigma, rng);
    r.top1_accuracy = top1_accuracy(r.model, r.queries);
    r.params.ensemble = cfg.ensemble;
    r.params.multilabel.theta = cfg.theta;
    r.params.baseline_neighbors = cfg.baseline_neighbors;
    // sigma == 0 only for degenerate corpora; keep the temperature positive.
    r.params.temperature = cfg.temperature_scale * (r.sigma > 0.0 ? r.sigma : 1e-3);
    r.comparison = run_comparison(r.model, r.queries, r.params);
    return r;
}

struct Stability {
    double ensemble = 0.0;
    double baseline = 0.0;
};

/// Mean pairwise Jaccard similarity of the tag sets each method predicts for
/// `renderings` independent renderings of one font.
inline Stability measure_stability(const LatentFontModel& model, std::size_t font,
                                   std::size_t renderings, double sigma,
                                   const ComparisonParams& params, Rng& rng) {
    const auto queries = make_queries(model, {font}, renderings, sigma, rng);
    const auto cmp = run_comparison(model, queries, params);
    return {mean_pairwise_jaccard(cmp.ensemble_predictions),
            mean_pairwise_jaccard(cmp.baseline_predictions)};
}

// ---- export -----------------------------------------------------------------------

/// Writes the corpus in the exemplar-module formats:
///   vocab.csv            tag,count
///   exemplars.csv        font_id, observed tags...
///   exemplar_truth.csv   font_id, true tags...
///   features.csv         font_id, center coordinates
///   queries.csv          sample_id, query coordinates
///   query_truth.csv      sample_id, true tags...
inline void export_corpus(const LatentFontModel& model, const std::vector<QuerySample>& queries,
                          const std::filesystem::path& dir) {
    io::write_file(dir / "vocab.csv", model.vocabulary().to_text());
    io::write_file(dir / "exemplars.csv", format_tag_sets(model.font_ids, model.observed_tags));
    io::write_file(dir / "exemplar_truth.csv", format_tag_sets(model.font_ids, model.true_tags));
    io::write_file(dir / "features.csv", FeatureStore{model.font_ids, model.font_centers}.to_text());
    FeatureStore qstore;
    std::vector<TagSet> qtruth;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        qstore.ids.push_back(detail::padded_name("q", i, std::max<std::size_t>(queries.size(), 10000)));
        qstore.features.push_back(queries[i].feature);
        qtruth.push_back(queries[i].true_tags);
    }
    io::write_file(dir / "queries.csv", qstore.to_text());
    io::write_file(dir / "query_truth.csv", format_tag_sets(qstore.ids, qtruth));
}

} // namespace fontimp
