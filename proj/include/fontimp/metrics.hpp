#pragma once

// Macro-averaged multi-label evaluation and (n_tilde, p) grid sweeps.

#include <algorithm>
#include <cstddef>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "fontimp/error.hpp"
#include "fontimp/estimator.hpp"
#include "fontimp/exemplar.hpp"
#include "fontimp/io.hpp"
#include "fontimp/vocab.hpp"

namespace fontimp {

struct TagScore {
    std::string tag;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    double recall = 0.0;
    double precision = 0.0;
    double f1 = 0.0;
};

/// Per-tag confusion counts and their unweighted means over the whole vocabulary.
/// Any zero denominator yields 0 for that metric.
struct EvalReport {
    std::vector<TagScore> per_tag;  // vocabulary order
    double macro_recall = 0.0;
    double macro_precision = 0.0;
    double macro_f1 = 0.0;
    std::size_t n_samples = 0;

    /// `tag,tp,fp,fn,precision,recall,f1` rows followed by a `macro` row.
    std::string to_csv() const {
        std::ostringstream out;
        out << "tag,tp,fp,fn,precision,recall,f1\n";
        for (const auto& s : per_tag) {
            out << s.tag << ',' << s.tp << ',' << s.fp << ',' << s.fn << ','
                << io::format_double(s.precision) << ',' << io::format_double(s.recall) << ','
                << io::format_double(s.f1) << '\n';
        }
        out << "macro,,,," << io::format_double(macro_precision) << ','
            << io::format_double(macro_recall) << ',' << io::format_double(macro_f1) << '\n';
        return out.str();
    }

    std::string to_table() const {
        std::ostringstream out;
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%-24s %6s %6s %6s %9s %9s %9s\n", "tag", "tp", "fp", "fn",
                      "precision", "recall", "f1");
        out << buf;
        for (const auto& s : per_tag) {
            std::snprintf(buf, sizeof(buf), "%-24s %6zu %6zu %6zu %9.4f %9.4f %9.4f\n",
                          s.tag.c_str(), s.tp, s.fp, s.fn, s.precision, s.recall, s.f1);
            out << buf;
        }
        std::snprintf(buf, sizeof(buf),
                      "\nsamples %zu  tags %zu\nmacro precision %.4f  recall %.4f  f1 %.4f\n",
                      n_samples, per_tag.size(), macro_precision, macro_recall, macro_f1);
        out << buf;
        return out.str();
    }
};

namespace detail {

inline double safe_ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

inline void check_in_vocab(const TagSet& tags, const TagVocabulary& vocab, std::size_t sample,
                           const char* what) {
    for (const auto& t : tags) {
        if (!vocab.contains(t)) {
            throw InvalidArgument(std::string(what) + " of sample " + std::to_string(sample) +
                                  " contains out-of-vocabulary tag '" + t + "'");
        }
    }
}

} // namespace detail

inline EvalReport evaluate(const std::vector<TagSet>& predictions,
                           const std::vector<TagSet>& ground_truth, const TagVocabulary& vocab) {
    if (predictions.size() != ground_truth.size()) {
        throw InvalidArgument("evaluate: " + std::to_string(predictions.size()) +
                              " predictions for " + std::to_string(ground_truth.size()) +
                              " ground-truth samples");
    }
    EvalReport report;
    report.n_samples = predictions.size();
    report.per_tag.resize(vocab.size());
    for (std::size_t k = 0; k < vocab.size(); ++k) {
        report.per_tag[k].tag = vocab.tags()[k];
    }
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        detail::check_in_vocab(predictions[i], vocab, i, "prediction");
        detail::check_in_vocab(ground_truth[i], vocab, i, "ground truth");
        for (const auto& t : predictions[i]) {
            auto& s = report.per_tag[vocab.index_of(t)];
            ground_truth[i].count(t) != 0 ? ++s.tp : ++s.fp;
        }
        for (const auto& t : ground_truth[i]) {
            if (predictions[i].count(t) == 0) {
                ++report.per_tag[vocab.index_of(t)].fn;
            }
        }
    }
    if (vocab.size() == 0) {
        return report;
    }
    for (auto& s : report.per_tag) {
        s.precision = detail::safe_ratio(s.tp, s.tp + s.fp);
        s.recall = detail::safe_ratio(s.tp, s.tp + s.fn);
        const double denom = s.precision + s.recall;
        s.f1 = denom > 0.0 ? 2.0 * s.precision * s.recall / denom : 0.0;
        report.macro_precision += s.precision;
        report.macro_recall += s.recall;
        report.macro_f1 += s.f1;
    }
    const auto k = static_cast<double>(vocab.size());
    report.macro_precision /= k;
    report.macro_recall /= k;
    report.macro_f1 /= k;
    return report;
}

struct SweepPoint {
    std::size_t n_tilde = 0;
    std::size_t p = 0;
    double macro_f1 = 0.0;
};

/// Grid in evaluation order; `best` maximizes macro F1, ties to smaller
/// n_tilde and then smaller p.
struct SweepResult {
    std::vector<SweepPoint> grid;
    SweepPoint best;

    std::string to_csv() const {
        std::ostringstream out;
        out << "n_tilde,p,macro_f1\n";
        for (const auto& g : grid) {
            out << g.n_tilde << ',' << g.p << ',' << io::format_double(g.macro_f1) << '\n';
        }
        return out.str();
    }
};

/// Evaluates the ensemble at every (n_tilde, p) pair with p <= n_tilde <= N.
inline SweepResult sweep(const std::vector<ScoreVector>& score_rows,
                         const std::vector<TagSet>& ground_truth, const ExemplarSet& exemplars,
                         const TagVocabulary& vocab, const std::vector<std::size_t>& n_tilde_range,
                         const std::vector<std::size_t>& p_range) {
    if (score_rows.size() != ground_truth.size()) {
        throw InvalidArgument("sweep: score rows and ground truth differ in length");
    }
    std::vector<std::size_t> ns(n_tilde_range);
    std::vector<std::size_t> ps(p_range);
    std::sort(ns.begin(), ns.end());
    ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
    std::sort(ps.begin(), ps.end());
    ps.erase(std::unique(ps.begin(), ps.end()), ps.end());

    SweepResult result;
    bool have_best = false;
    std::vector<TagSet> predictions(score_rows.size());
    for (auto n : ns) {
        if (n < 1 || n > exemplars.size()) {
            continue;
        }
        for (auto p : ps) {
            if (p < 1 || p > n) {
                continue;
            }
            const EnsembleParams params{n, p};
            for (std::size_t i = 0; i < score_rows.size(); ++i) {
                predictions[i] = estimate_ensemble(score_rows[i], exemplars, params).selected;
            }
            const double f1 = evaluate(predictions, ground_truth, vocab).macro_f1;
            result.grid.push_back({n, p, f1});
            if (!have_best || f1 > result.best.macro_f1) {
                result.best = result.grid.back();
                have_best = true;
            }
        }
    }
    if (result.grid.empty()) {
        throw InvalidArgument("sweep: no (n_tilde, p) pair satisfies 1 <= p <= n_tilde <= N");
    }
    return result;
}

} // namespace fontimp
