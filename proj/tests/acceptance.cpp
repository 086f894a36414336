// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fontimp/fontimp.hpp"

namespace fs = std::filesystem;
using namespace fontimp;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (budget_s > 0 && secs > budget_s) {
        o.pass = false;
        o.detail += " [over time budget " + std::to_string(budget_s) + "s]";
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s criterion %d: %s -- %s (%.2fs)\n", o.pass ? "PASS" : "FAIL", id, name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), f, a, b, c, d);
    return buf;
}

TagVocabulary vocab_of(std::size_t k) {
    std::vector<std::pair<std::string, std::size_t>> e;
    for (std::size_t i = 0; i < k; ++i) e.emplace_back("t" + std::to_string(i), 1);
    return TagVocabulary(e);
}

TagSet random_set(std::mt19937_64& gen, const TagVocabulary& v, unsigned one_in) {
    TagSet s;
    for (const auto& t : v.tags())
        if (gen() % one_in == 0) s.insert(t);
    return s;
}

// ---- 1 ---------------------------------------------------------------------------

Outcome metric_oracle() {
    std::mt19937_64 gen(101);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto vocab = vocab_of(1 + gen() % 10);
        const std::size_t n = gen() % 51;
        std::vector<TagSet> pred(n), truth(n);
        for (std::size_t i = 0; i < n; ++i) {
            pred[i] = random_set(gen, vocab, 2 + gen() % 3);
            truth[i] = random_set(gen, vocab, 2 + gen() % 3);
        }
        // Oracle: visit every (tag, sample) cell.
        double p_sum = 0, r_sum = 0, f_sum = 0;
        for (const auto& t : vocab.tags()) {
            long tp = 0, fp = 0, fn = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const bool in_p = pred[i].count(t), in_g = truth[i].count(t);
                if (in_p && in_g) ++tp;
                if (in_p && !in_g) ++fp;
                if (!in_p && in_g) ++fn;
            }
            const double p = tp + fp ? double(tp) / double(tp + fp) : 0.0;
            const double r = tp + fn ? double(tp) / double(tp + fn) : 0.0;
            p_sum += p;
            r_sum += r;
            f_sum += p + r > 0 ? 2 * p * r / (p + r) : 0.0;
        }
        const double k = static_cast<double>(vocab.size());
        const auto rep = evaluate(pred, truth, vocab);
        worst = std::max({worst, std::abs(rep.macro_precision - p_sum / k),
                          std::abs(rep.macro_recall - r_sum / k), std::abs(rep.macro_f1 - f_sum / k)});
    }
    return {worst <= 1e-12, fmt("200 instances, max |diff| %.3g (tol 1e-12)", worst)};
}

// ---- 2 ---------------------------------------------------------------------------

Outcome ensemble_algebra() {
    std::mt19937_64 gen(202);
    std::size_t subset_bad = 0, prefix_bad = 0, argmax_bad = 0;
    const auto vocab = vocab_of(8);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 1 + gen() % 25;
        std::vector<Exemplar> raw;
        for (std::size_t i = 0; i < n; ++i) {
            char id[16];
            std::snprintf(id, sizeof(id), "x%03zu", i);
            raw.push_back({id, random_set(gen, vocab, 3)});
        }
        const ExemplarSet ex(raw);
        std::vector<double> v(n);
        for (auto& x : v) x = static_cast<double>(gen() % 6) / 5.0;  // ties are common
        const ScoreVector s(v);

        std::size_t arg = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (v[i] > v[arg]) arg = i;
        if (estimate_ensemble(s, ex, {1, 1}).selected != ex[arg].tags) ++argmax_bad;

        for (std::size_t nt = 1; nt <= n; ++nt) {
            if (nt < n) {
                const auto a = top_n_indices(s, nt);
                const auto b = top_n_indices(s, nt + 1);
                if (!std::equal(a.begin(), a.end(), b.begin())) ++prefix_bad;
            }
            for (std::size_t p = 1; p < nt; ++p) {
                const auto lo = estimate_ensemble(s, ex, {nt, p}).selected;
                const auto hi = estimate_ensemble(s, ex, {nt, p + 1}).selected;
                if (!std::includes(lo.begin(), lo.end(), hi.begin(), hi.end())) ++subset_bad;
            }
        }
    }
    std::ostringstream d;
    d << "500 fixtures; subset violations " << subset_bad << ", prefix violations " << prefix_bad
      << ", argmax mismatches " << argmax_bad;
    return {subset_bad + prefix_bad + argmax_bad == 0, d.str()};
}

// ---- 3, 4, 5 -----------------------------------------------------------------------

SimulationConfig simulated(std::uint64_t seed) {
    SimulationConfig cfg;
    cfg.shape.n_fonts = 300;
    cfg.shape.tag_vocab_size = 84;
    cfg.shape.tags_per_font = 4;
    cfg.corruption = {0.3, 0.1, seed};
    cfg.ensemble = {11, 3};
    return cfg;
}

Outcome comparison_direction() {
    double ef = 0, bf = 0, ep = 0, bp = 0, er = 0, br = 0;
    const int seeds = 10;
    for (int seed = 1; seed <= seeds; ++seed) {
        const auto r = run_simulation(simulated(seed));
        ef += r.comparison.ensemble.macro_f1;
        bf += r.comparison.baseline.macro_f1;
        ep += r.comparison.ensemble.macro_precision;
        bp += r.comparison.baseline.macro_precision;
        er += r.comparison.ensemble.macro_recall;
        br += r.comparison.baseline.macro_recall;
    }
    ef /= seeds, bf /= seeds, ep /= seeds, bp /= seeds, er /= seeds, br /= seeds;
    const bool ok = ef > bf && bf > 0 && ef > 0 && ep > bp;
    return {ok, fmt("ensemble F1 %.4f P %.4f vs baseline F1 %.4f P %.4f", ef, ep, bf, bp) +
                    fmt("; recall %.4f vs %.4f", er, br)};
}

Outcome sweep_shape() {
    const auto r = run_simulation(simulated(1));
    const auto exemplars = r.model.exemplars();
    const auto vocab = r.model.vocabulary();
    std::vector<ScoreVector> rows;
    std::vector<TagSet> truth;
    for (const auto& q : r.queries) {
        rows.push_back(nearest_exemplar_scores(q.feature, r.model.font_centers, r.params.temperature));
        truth.push_back(q.true_tags);
    }
    std::vector<std::size_t> ns;
    for (std::size_t n = 1; n <= 21; ++n) ns.push_back(n);
    const auto res = sweep(rows, truth, exemplars, vocab, ns, {1, 2, 3, 5});

    // "Large" n_tilde: the upper three quarters of the grid.
    constexpr std::size_t kLarge = 5;
    std::vector<double> p1(22, -1.0);
    double max_f1 = 0.0;
    for (const auto& g : res.grid) {
        if (g.p == 1) p1[g.n_tilde] = g.macro_f1;
        max_f1 = std::max(max_f1, g.macro_f1);
    }
    std::size_t rises = 0;
    for (std::size_t n = kLarge; n < 21; ++n) rises += p1[n + 1] > p1[n] ? 1 : 0;
    bool higher_p_at_max = false;
    for (const auto& g : res.grid)
        if (g.p > 1 && g.n_tilde > 1 && g.macro_f1 == max_f1) higher_p_at_max = true;
    std::ostringstream d;
    d << "p=1 F1 " << fmt("%.4f", p1[kLarge]) << " at n_tilde=" << kLarge << " -> "
      << fmt("%.4f", p1[21]) << " at 21 with " << rises << " increases; best n_tilde="
      << res.best.n_tilde << " p=" << res.best.p << fmt(" F1 %.4f", res.best.macro_f1);
    return {rises == 0 && higher_p_at_max, d.str()};
}

Outcome stability() {
    const auto r = run_simulation(simulated(1));
    Rng rng(2024);
    const auto s = measure_stability(r.model, 0, 100, r.sigma, r.params, rng);
    // Context only: the same measurement averaged over every font.
    double all_e = 0, all_b = 0;
    for (std::size_t f = 0; f < r.model.n_fonts(); ++f) {
        const auto t = measure_stability(r.model, f, 20, r.sigma, r.params, rng);
        all_e += t.ensemble;
        all_b += t.baseline;
    }
    all_e /= r.model.n_fonts();
    all_b /= r.model.n_fonts();
    return {s.ensemble >= 0.8 && s.ensemble >= s.baseline,
            fmt("font 0, sigma %.4g: ensemble Jaccard %.4f, baseline %.4f (min 0.8)", r.sigma,
                s.ensemble, s.baseline) +
                fmt("; all-font mean %.4f vs %.4f", all_e, all_b)};
}

// ---- 6 ---------------------------------------------------------------------------

Outcome normalization_invariants() {
    std::mt19937_64 gen(606);
    double col_err = 0, mean_err = 0, var_err = 0;
    std::size_t multiset_bad = 0, flat_bad = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t rows = 2 + gen() % 30, cols = 2 + gen() % 12;
        Matrix raw(rows, std::vector<double>(cols, 0.0));
        for (std::size_t k = 1; k < rows; ++k)
            for (auto& v : raw[k]) v = static_cast<double>(gen() % 20);
        for (std::size_t g = 0; g < cols; ++g) raw[1 + gen() % (rows - 1)][g] += 1.0;
        // Row 0 follows the other rows' genre totals, so its share is flat.
        for (std::size_t g = 0; g < cols; ++g)
            for (std::size_t k = 1; k < rows; ++k) raw[0][g] += raw[k][g];

        const auto n = normalize(raw);
        for (std::size_t g = 0; g < cols; ++g) {
            double s = 0;
            for (std::size_t k = 0; k < rows; ++k) s += n.per_genre[k][g];
            col_err = std::max(col_err, std::abs(s - 1.0));
        }
        if (std::any_of(n.zscored[0].begin(), n.zscored[0].end(), [](double v) { return v != 0.0; }))
            ++flat_bad;
        for (std::size_t k = 1; k < rows; ++k) {
            const auto& z = n.zscored[k];
            if (std::all_of(z.begin(), z.end(), [](double v) { return v == 0.0; })) continue;
            double m = 0, var = 0;
            for (double v : z) m += v;
            m /= cols;
            for (double v : z) var += (v - m) * (v - m);
            var /= cols;
            mean_err = std::max(mean_err, std::abs(m));
            var_err = std::max(var_err, std::abs(var - 1.0));
        }
        const auto order = bicluster_order(n.zscored);
        std::vector<double> before, after;
        for (const auto& r : n.zscored) before.insert(before.end(), r.begin(), r.end());
        for (auto r : order.rows)
            for (auto c : order.cols) after.push_back(n.zscored[r][c]);
        std::sort(before.begin(), before.end());
        std::sort(after.begin(), after.end());
        if (before != after) ++multiset_bad;
    }
    const bool ok = col_err <= 1e-9 && mean_err <= 1e-9 && var_err <= 1e-6 && multiset_bad == 0 &&
                    flat_bad == 0;
    std::ostringstream d;
    d << fmt("column sum err %.3g, row mean err %.3g, row var err %.3g", col_err, mean_err, var_err)
      << ", multiset mismatches " << multiset_bad << ", non-zero flat rows " << flat_bad;
    return {ok, d.str()};
}

// ---- 7 ---------------------------------------------------------------------------

Outcome class_weights() {
    std::mt19937_64 gen(707);
    std::size_t bad = 0;
    for (int i = 0; i < 10000; ++i) {
        const std::uint64_t m = 1 + gen() % 5000000;
        const std::uint64_t mk = 1 + gen() % m;
        if (class_weight(m, mk) != static_cast<double>(m - mk) / static_cast<double>(mk)) ++bad;
        if (class_weight(m, m) != 0.0) ++bad;
        const std::uint64_t q = gen() % 1000;
        if (class_weight(mk * (q + 1), mk) != static_cast<double>(q)) ++bad;
    }
    bool zero_rejected = false;
    try {
        class_weight(10, 0);
    } catch (const InvalidArgument&) {
        zero_rejected = true;
    }
    return {bad == 0 && zero_rejected,
            std::to_string(bad) + " mismatches over 30000 checks; M_k=0 rejected: " +
                (zero_rejected ? "yes" : "no")};
}

// ---- 8 ---------------------------------------------------------------------------

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(FONTIMP_CLI) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string tree_bytes(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::string all;
    for (const auto& f : files) all += fs::relative(f, dir).string() + '\n' + io::read_file(f);
    return all;
}

Outcome cli_determinism() {
    const fs::path root = fs::temp_directory_path() / "fontimp_acceptance_cli";
    fs::remove_all(root);
    fs::create_directories(root);
    const auto in = root / "inputs";
    fs::create_directories(in);

    // Shared inputs come from one simulated corpus plus a small genre corpus.
    if (run_cli("simulate --n-fonts 120 --vocab-size 30 --seed 3 --out-dir " + (in / "sim").string(),
                root / "log.txt") != 0)
        return {false, "could not build inputs"};
    {
        std::mt19937_64 gen(808);
        const auto vocab = TagVocabulary::load(in / "sim" / "vocab.csv");
        const char* genres[] = {"Mystery", "Romance", "Horror, Gothic", "Poetry"};
        std::string lines;
        for (int i = 0; i < 80; ++i) {
            nlohmann::json item;
            item["item_id"] = "b" + std::to_string(i);
            item["genre"] = genres[gen() % 4];
            nlohmann::json words = nlohmann::json::array();
            for (int w = 0; w < 3; ++w) {
                nlohmann::json tags = nlohmann::json::array();
                for (const auto& t : vocab.tags())
                    if (gen() % 9 == 0) tags.push_back(t);
                words.push_back(tags);
            }
            item["words"] = words;
            lines += item.dump() + '\n';
        }
        io::write_file(in / "corpus.jsonl", lines);
    }
    const std::string sim = (in / "sim").string();
    auto write_config = [&](const std::string& name, const nlohmann::json& body) {
        nlohmann::json cfg = body;
        cfg["format_version"] = 1;
        cfg["rng"] = "mt19937_64";
        io::write_file(in / name, cfg.dump());
        return (in / name).string();
    };
    struct Case {
        std::string name;
        std::string config;
        std::string outputs;  // argument template; OUT is replaced per run
    };
    const std::vector<Case> cases{
        {"vocab",
         write_config("vocab.json", {{"records", sim + "/exemplars.csv"}, {"top_n", 40}, {"min_count", 2}}),
         "--out OUT/vocab.csv"},
        {"estimate",
         write_config("estimate.json", {{"vocab", sim + "/vocab.csv"},
                                        {"exemplars", sim + "/exemplars.csv"},
                                        {"features", sim + "/features.csv"},
                                        {"queries", sim + "/queries.csv"},
                                        {"temperature", 0.05},
                                        {"n_tilde", 11},
                                        {"p", 3}}),
         "--out OUT/est"},
        {"eval",
         write_config("eval.json", {{"vocab", sim + "/vocab.csv"},
                                    {"predictions", sim + "/exemplars.csv"},
                                    {"truth", sim + "/exemplar_truth.csv"}}),
         "--out OUT/report.csv --table OUT/report.txt"},
        {"sweep",
         write_config("sweep.json", {{"vocab", sim + "/vocab.csv"},
                                     {"exemplars", sim + "/exemplars.csv"},
                                     {"features", sim + "/features.csv"},
                                     {"queries", sim + "/queries.csv"},
                                     {"temperature", 0.05},
                                     {"truth", sim + "/query_truth.csv"},
                                     {"n_tilde_range", "1:15"},
                                     {"p_range", "1,2,3"}}),
         "--out OUT/grid.csv --best OUT/best.json"},
        {"simulate",
         write_config("simulate.json", {{"seed", 7}, {"n_fonts", 150}, {"vocab_size", 40}}),
         "--out-dir OUT"},
        {"correlate",
         write_config("correlate.json",
                      {{"corpus", (in / "corpus.jsonl").string()}, {"vocab", sim + "/vocab.csv"}}),
         "--out-dir OUT"},
    };
    std::vector<std::string> bad;
    for (const auto& c : cases) {
        std::string trees[2];
        for (int run = 0; run < 2; ++run) {
            const auto out = root / (c.name + std::to_string(run));
            fs::create_directories(out);
            std::string args = c.outputs;
            for (auto pos = args.find("OUT"); pos != std::string::npos; pos = args.find("OUT"))
                args.replace(pos, 3, out.string());
            if (run_cli(c.name + " --config " + c.config + " " + args, root / "log.txt") != 0) {
                bad.push_back(c.name + " (exit status)");
                break;
            }
            trees[run] = tree_bytes(out);
        }
        if (trees[0].empty() || trees[0] != trees[1]) bad.push_back(c.name);
    }
    fs::remove_all(root);
    return {bad.empty(), bad.empty() ? "6 subcommands byte-identical across two runs"
                                     : "differs: " + io::join(bad, ", ")};
}

} // namespace

int main() {
    criterion(1, "metric oracle equivalence", 5, metric_oracle);
    criterion(2, "ensemble algebra", 5, ensemble_algebra);
    criterion(3, "simulated comparison direction", 60, comparison_direction);
    criterion(4, "sweep shape", 120, sweep_shape);
    criterion(5, "selection stability", 30, stability);
    criterion(6, "normalization invariants", 5, normalization_invariants);
    criterion(7, "class weight", 0, class_weights);
    criterion(8, "CLI determinism", 0, cli_determinism);
    std::printf("%d of 8 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
