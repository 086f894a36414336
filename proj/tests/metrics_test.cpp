#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "fontimp/metrics.hpp"

using namespace fontimp;

namespace {

// Straightforward per-tag recount, kept separate from the library code.
struct Oracle {
    double precision = 0, recall = 0, f1 = 0;
};

Oracle brute_force(const std::vector<TagSet>& pred, const std::vector<TagSet>& truth,
                   const std::vector<std::string>& tags) {
    Oracle o;
    for (const auto& t : tags) {
        double tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const bool p = pred[i].count(t) > 0;
            const bool g = truth[i].count(t) > 0;
            tp += p && g;
            fp += p && !g;
            fn += !p && g;
        }
        const double pr = tp + fp > 0 ? tp / (tp + fp) : 0.0;
        const double rc = tp + fn > 0 ? tp / (tp + fn) : 0.0;
        o.precision += pr;
        o.recall += rc;
        o.f1 += pr + rc > 0 ? 2 * pr * rc / (pr + rc) : 0.0;
    }
    o.precision /= tags.size();
    o.recall /= tags.size();
    o.f1 /= tags.size();
    return o;
}

TagVocabulary vocab_of(std::size_t k) {
    std::vector<std::pair<std::string, std::size_t>> entries;
    for (std::size_t i = 0; i < k; ++i) {
        entries.emplace_back("t" + std::to_string(10 + i), 1);
    }
    return TagVocabulary(entries);
}

TagSet random_set(std::mt19937_64& gen, const TagVocabulary& v) {
    TagSet s;
    for (const auto& t : v.tags()) {
        if (gen() % 3 == 0) s.insert(t);
    }
    return s;
}

} // namespace

TEST(EvaluateTest, HandExample) {
    const TagVocabulary v({{"a", 2}, {"b", 1}});
    const auto r = evaluate({{"a", "b"}, {"a"}}, {{"a"}, {"a", "b"}}, v);
    EXPECT_DOUBLE_EQ(r.per_tag[0].precision, 1.0);
    EXPECT_DOUBLE_EQ(r.per_tag[0].f1, 1.0);
    EXPECT_EQ(r.per_tag[1].fp, 1u);
    EXPECT_EQ(r.per_tag[1].fn, 1u);
    EXPECT_DOUBLE_EQ(r.per_tag[1].f1, 0.0);
    EXPECT_DOUBLE_EQ(r.macro_f1, 0.5);
    EXPECT_EQ(r.n_samples, 2u);
}

TEST(EvaluateTest, PerfectAndEmptyPredictions) {
    const TagVocabulary v({{"a", 2}, {"b", 1}, {"c", 1}});
    const std::vector<TagSet> truth{{"a"}, {"a", "b"}};
    const auto perfect = evaluate(truth, truth, v);
    // "c" never occurs, so it scores 0 and pulls the macro mean down.
    EXPECT_DOUBLE_EQ(perfect.macro_f1, 2.0 / 3.0);
    const auto empty = evaluate({{}, {}}, truth, v);
    EXPECT_DOUBLE_EQ(empty.macro_f1, 0.0);
    EXPECT_DOUBLE_EQ(empty.macro_precision, 0.0);
    EXPECT_DOUBLE_EQ(empty.macro_recall, 0.0);
}

TEST(EvaluateTest, Errors) {
    const TagVocabulary v({{"a", 1}});
    EXPECT_THROW(evaluate({{"a"}}, {}, v), InvalidArgument);
    EXPECT_THROW(evaluate({{"z"}}, {{"a"}}, v), InvalidArgument);
    EXPECT_THROW(evaluate({{"a"}}, {{"z"}}, v), InvalidArgument);
}

TEST(EvaluateTest, CsvLayout) {
    const TagVocabulary v({{"a", 2}, {"b", 1}});
    const auto csv = evaluate({{"a", "b"}, {"a"}}, {{"a"}, {"a", "b"}}, v).to_csv();
    EXPECT_EQ(csv,
              "tag,tp,fp,fn,precision,recall,f1\n"
              "a,2,0,0,1,1,1\n"
              "b,0,1,1,0,0,0\n"
              "macro,,,,0.5,0.5,0.5\n");
}

TEST(EvaluatePropertyTest, MatchesBruteForceAndBounds) {
    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 200; ++trial) {
        const auto v = vocab_of(1 + gen() % 12);
        std::vector<TagSet> pred, truth;
        const std::size_t n = gen() % 25;
        for (std::size_t i = 0; i < n; ++i) {
            pred.push_back(random_set(gen, v));
            truth.push_back(random_set(gen, v));
        }
        const auto r = evaluate(pred, truth, v);
        const auto o = brute_force(pred, truth, v.tags());
        EXPECT_NEAR(r.macro_precision, o.precision, 1e-12);
        EXPECT_NEAR(r.macro_recall, o.recall, 1e-12);
        EXPECT_NEAR(r.macro_f1, o.f1, 1e-12);
        for (double x : {r.macro_precision, r.macro_recall, r.macro_f1}) {
            EXPECT_GE(x, 0.0);
            EXPECT_LE(x, 1.0);
        }

        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::shuffle(perm.begin(), perm.end(), gen);
        std::vector<TagSet> pp, tt;
        for (auto i : perm) {
            pp.push_back(pred[i]);
            tt.push_back(truth[i]);
        }
        EXPECT_DOUBLE_EQ(evaluate(pp, tt, v).macro_f1, r.macro_f1);
    }
}

TEST(SweepTest, OccurrenceThresholdFiltersNoise) {
    // Each query's best exemplar carries a stray tag that only a vote removes.
    const TagVocabulary v({{"a", 4}, {"b", 4}});
    const ExemplarSet ex({{"e0", {"a", "b"}},
                          {"e1", {"a"}},
                          {"e2", {"a"}},
                          {"e3", {"b"}},
                          {"e4", {"b"}},
                          {"e5", {"a", "b"}}});
    const std::vector<ScoreVector> rows{ScoreVector({0.4, 0.3, 0.2, 0.04, 0.03, 0.03}),
                                        ScoreVector({0.04, 0.03, 0.03, 0.3, 0.2, 0.4})};
    const std::vector<TagSet> truth{{"a"}, {"b"}};
    const auto r = sweep(rows, truth, ex, v, {3, 1, 2, 2}, {2, 1});
    ASSERT_EQ(r.grid.size(), 5u);
    EXPECT_EQ(r.grid.front().n_tilde, 1u);
    EXPECT_DOUBLE_EQ(r.grid.front().macro_f1, 2.0 / 3.0);
    EXPECT_EQ(r.best.n_tilde, 2u);
    EXPECT_EQ(r.best.p, 2u);
    EXPECT_DOUBLE_EQ(r.best.macro_f1, 1.0);
    EXPECT_EQ(r.to_csv().substr(0, 19), "n_tilde,p,macro_f1\n");
}

TEST(SweepTest, SinglePointAndEmptyGrid) {
    const TagVocabulary v({{"a", 1}});
    const ExemplarSet ex({{"e0", {"a"}}, {"e1", {}}});
    const std::vector<ScoreVector> rows{ScoreVector({0.9, 0.1})};
    const auto r = sweep(rows, {{"a"}}, ex, v, {1}, {1});
    ASSERT_EQ(r.grid.size(), 1u);
    EXPECT_DOUBLE_EQ(r.best.macro_f1, 1.0);
    EXPECT_THROW(sweep(rows, {{"a"}}, ex, v, {5}, {1}), InvalidArgument);
    EXPECT_THROW(sweep(rows, {{"a"}}, ex, v, {1}, {2}), InvalidArgument);
}

TEST(SweepTest, MatchesDirectEvaluation) {
    std::mt19937_64 gen(17);
    const auto v = vocab_of(6);
    std::vector<Exemplar> raw;
    for (int i = 0; i < 12; ++i) raw.push_back({"f" + std::to_string(10 + i), random_set(gen, v)});
    const ExemplarSet ex(raw);
    std::vector<ScoreVector> rows;
    std::vector<TagSet> truth;
    for (int q = 0; q < 15; ++q) {
        std::vector<double> s(12);
        for (auto& x : s) x = static_cast<double>(gen() % 10);
        rows.emplace_back(s);
        truth.push_back(random_set(gen, v));
    }
    const auto r = sweep(rows, truth, ex, v, {1, 3, 5, 7}, {1, 2, 3});
    for (const auto& g : r.grid) {
        std::vector<TagSet> pred;
        for (const auto& s : rows) pred.push_back(estimate_ensemble(s, ex, {g.n_tilde, g.p}).selected);
        EXPECT_DOUBLE_EQ(g.macro_f1, evaluate(pred, truth, v).macro_f1);
        EXPECT_LE(g.macro_f1, r.best.macro_f1);
    }
}
