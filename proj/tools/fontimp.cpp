// fontimp: command-line front end.
//
//   fontimp vocab      build the tag vocabulary from tag records
//   fontimp estimate   predict tags for query samples
//   fontimp eval       macro precision / recall / F1 of predictions
//   fontimp sweep      grid search over (n_tilde, p)
//   fontimp simulate   synthetic corpus + ensemble-vs-baseline comparison
//   fontimp correlate  genre x impression matrix and heatmap
//
// Every subcommand accepts `--config <file.json>`: an object with
// "format_version": 1, an optional "rng": "mt19937_64", and option names
// (dashes or underscores) as keys. Explicit flags override config values.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fontimp/fontimp.hpp"

namespace fs = std::filesystem;
using namespace fontimp;

namespace {

constexpr int kConfigFormatVersion = 1;

/// Files are staged in memory and written together; on any failure every file
/// written so far is removed.
class OutputSet {
public:
    void add(fs::path path, std::string content) {
        files_.emplace_back(std::move(path), std::move(content));
    }

    void commit() {
        std::vector<fs::path> written;
        try {
            for (const auto& [path, content] : files_) {
                if (path.has_parent_path()) {
                    fs::create_directories(path.parent_path());
                }
                auto tmp = path;
                tmp += ".partial";
                written.push_back(tmp);
                io::write_file(tmp, content);
            }
            for (const auto& [path, content] : files_) {
                auto tmp = path;
                tmp += ".partial";
                fs::rename(tmp, path);
                written.push_back(path);
            }
        } catch (...) {
            std::error_code ec;
            for (const auto& p : written) {
                fs::remove(p, ec);
            }
            throw;
        }
    }

private:
    std::vector<std::pair<fs::path, std::string>> files_;
};

std::vector<std::size_t> parse_range(const std::string& text, const char* what) {
    std::vector<std::size_t> out;
    for (const auto& part : io::split(text)) {
        const auto colon = part.find(':');
        if (colon == std::string::npos) {
            const auto v = io::parse_int(part, what);
            if (v < 1) {
                throw InvalidArgument(std::string(what) + ": values must be positive");
            }
            out.push_back(static_cast<std::size_t>(v));
            continue;
        }
        const auto lo = io::parse_int(part.substr(0, colon), what);
        const auto hi = io::parse_int(part.substr(colon + 1), what);
        if (lo < 1 || hi < lo) {
            throw InvalidArgument(std::string(what) + ": invalid range '" + part + "'");
        }
        for (auto v = lo; v <= hi; ++v) {
            out.push_back(static_cast<std::size_t>(v));
        }
    }
    if (out.empty()) {
        throw InvalidArgument(std::string(what) + ": empty range");
    }
    return out;
}

MergeRules load_rules(const std::string& path) {
    return path.empty() ? MergeRules{} : MergeRules::load(path);
}

/// Tag sets keyed by id, in file order. Ids must be unique.
std::pair<std::vector<std::string>, std::vector<TagSet>> load_tag_sets(const std::string& path,
                                                                       const MergeRules& rules,
                                                                       const TagVocabulary& vocab) {
    std::vector<std::string> ids;
    std::vector<TagSet> sets;
    std::set<std::string> seen;
    for (const auto& rec : load_tag_records(path)) {
        if (!seen.insert(rec.font_id).second) {
            throw ParseError(path + ": duplicate id '" + rec.font_id + "'");
        }
        TagSet tags;
        for (const auto& t : rec.tags) {
            for (auto& c : rules.apply(normalize_tag(t))) {
                if (!vocab.contains(c)) {
                    throw ParseError(path + ": '" + rec.font_id + "' has out-of-vocabulary tag '" +
                                     c + "'");
                }
                tags.insert(std::move(c));
            }
        }
        ids.push_back(rec.font_id);
        sets.push_back(std::move(tags));
    }
    return {std::move(ids), std::move(sets)};
}

/// Ground truth reordered to match `ids`.
std::vector<TagSet> align_truth(const std::vector<std::string>& ids, const std::string& path,
                                const MergeRules& rules, const TagVocabulary& vocab) {
    auto [truth_ids, truth] = load_tag_sets(path, rules, vocab);
    if (truth_ids.size() != ids.size()) {
        throw InvalidArgument("mismatched lengths: " + std::to_string(ids.size()) + " samples vs " +
                              std::to_string(truth_ids.size()) + " ground-truth records");
    }
    std::map<std::string, std::size_t> where;
    for (std::size_t i = 0; i < truth_ids.size(); ++i) {
        where[truth_ids[i]] = i;
    }
    std::vector<TagSet> out;
    for (const auto& id : ids) {
        auto it = where.find(id);
        if (it == where.end()) {
            throw InvalidArgument("no ground truth for sample '" + id + "'");
        }
        out.push_back(truth[it->second]);
    }
    return out;
}

struct Backend {
    std::string scores;
    std::string features;
    std::string queries;
    double temperature = 1.0;

    void add_options(CLI::App* app) {
        app->add_option("--scores", scores, "score matrix: sample_id then one column per exemplar")
            ->check(CLI::ExistingFile);
        app->add_option("--features", features, "exemplar feature store: font_id, values...")
            ->check(CLI::ExistingFile);
        app->add_option("--queries", queries, "query feature rows: sample_id, values...")
            ->check(CLI::ExistingFile);
        app->add_option("--temperature", temperature, "softmax temperature for feature scoring")
            ->check(CLI::PositiveNumber);
    }

    ScoreMatrix load(const ExemplarSet& exemplars) const {
        if (!scores.empty() == !features.empty()) {
            throw InvalidArgument("give exactly one of --scores or --features");
        }
        if (!scores.empty()) {
            return load_score_matrix(scores, exemplars);
        }
        if (queries.empty()) {
            throw InvalidArgument("--features requires --queries");
        }
        const auto ex_features = FeatureStore::load(features).aligned_to(exemplars);
        const auto q = FeatureStore::load(queries);
        ScoreMatrix m;
        for (std::size_t i = 0; i < q.ids.size(); ++i) {
            m.sample_ids.push_back(q.ids[i]);
            m.rows.push_back(nearest_exemplar_scores(q.features[i], ex_features, temperature));
        }
        return m;
    }
};

// ---- vocab --------------------------------------------------------------------------

struct VocabArgs {
    std::string records;
    std::string rules;
    std::size_t top_n = 100;
    std::size_t min_count = 24;
    std::string out;
};

void run_vocab(const VocabArgs& a) {
    const auto records = load_tag_records(a.records);
    const auto rules = load_rules(a.rules);
    const auto vocab = build_vocabulary(records, rules, a.top_n, a.min_count);
    std::size_t dropped = 0;
    for (const auto& r : records) {
        canonicalize(r.tags, rules, vocab, &dropped);
    }
    OutputSet out;
    out.add(a.out, vocab.to_text());
    out.commit();
    std::cout << "vocabulary: " << vocab.size() << " tags from " << records.size() << " records\n";
    if (dropped > 0) {
        std::cerr << "warning: " << dropped << " raw tag occurrences are outside the vocabulary\n";
    }
}

// ---- estimate -----------------------------------------------------------------------

struct EstimateArgs {
    std::string vocab;
    std::string rules;
    std::string exemplars;
    std::string method = "ensemble";
    Backend backend;
    std::string tag_scores;
    std::size_t n_tilde = 11;
    std::size_t p = 3;
    double theta = 0.1;
    std::string out;
};

void run_estimate(const EstimateArgs& a) {
    const auto vocab = TagVocabulary::load(a.vocab);
    const auto rules = load_rules(a.rules);
    OutputSet out;
    std::string selected_text;
    std::string json_text;
    if (a.method == "ensemble") {
        if (a.exemplars.empty()) {
            throw InvalidArgument("--exemplars is required for the ensemble method");
        }
        std::size_t dropped = 0;
        const auto exemplars = load_exemplars(load_tag_records(a.exemplars), rules, vocab, &dropped);
        const auto matrix = a.backend.load(exemplars);
        const EnsembleParams params{a.n_tilde, a.p};
        params.validate(exemplars.size());
        std::string counts_text;
        for (std::size_t i = 0; i < matrix.rows.size(); ++i) {
            const auto est = estimate_ensemble(matrix.rows[i], exemplars, params);
            counts_text += format_count_line(matrix.sample_ids[i], est) + '\n';
            selected_text += format_tag_sets({matrix.sample_ids[i]}, {est.selected});
            json_text += estimate_to_json(matrix.sample_ids[i], est).dump() + '\n';
        }
        out.add(a.out + ".counts.csv", counts_text);
        if (dropped > 0) {
            std::cerr << "warning: " << dropped << " exemplar tags are outside the vocabulary\n";
        }
    } else if (a.method == "multilabel") {
        if (a.tag_scores.empty()) {
            throw InvalidArgument("--tag-scores is required for the multilabel method");
        }
        const auto m = io::read_labeled_matrix(a.tag_scores);
        MultiLabelParams params;
        params.theta = a.theta;
        for (std::size_t i = 0; i < m.row_labels.size(); ++i) {
            std::map<std::string, double> scores;
            for (std::size_t j = 0; j < m.col_labels.size(); ++j) {
                scores[normalize_tag(m.col_labels[j])] = m.values[i][j];
            }
            const auto selected = estimate_multilabel(scores, vocab, params);
            selected_text += format_tag_sets({m.row_labels[i]}, {selected});
            nlohmann::ordered_json j;
            j["sample_id"] = m.row_labels[i];
            j["selected"] = std::vector<std::string>(selected.begin(), selected.end());
            json_text += j.dump() + '\n';
        }
    } else {
        throw InvalidArgument("unknown method '" + a.method + "'");
    }
    out.add(a.out + ".selected.csv", selected_text);
    out.add(a.out + ".jsonl", json_text);
    out.commit();
}

// ---- eval ---------------------------------------------------------------------------

struct EvalArgs {
    std::string vocab;
    std::string rules;
    std::string predictions;
    std::string truth;
    std::string out;
    std::string table;
};

void run_eval(const EvalArgs& a) {
    const auto vocab = TagVocabulary::load(a.vocab);
    const auto rules = load_rules(a.rules);
    auto [ids, predictions] = load_tag_sets(a.predictions, rules, vocab);
    const auto truth = align_truth(ids, a.truth, rules, vocab);
    const auto report = evaluate(predictions, truth, vocab);
    OutputSet out;
    out.add(a.out, report.to_csv());
    if (!a.table.empty()) {
        out.add(a.table, report.to_table());
    }
    out.commit();
    std::printf("macro precision %.4f  recall %.4f  f1 %.4f  (%zu samples, %zu tags)\n",
                report.macro_precision, report.macro_recall, report.macro_f1, report.n_samples,
                vocab.size());
}

// ---- sweep --------------------------------------------------------------------------

struct SweepArgs {
    std::string vocab;
    std::string rules;
    std::string exemplars;
    Backend backend;
    std::string truth;
    std::string n_tilde_range = "1:21";
    std::string p_range = "1,2,3,5";
    std::string out;
    std::string best;
};

void run_sweep(const SweepArgs& a) {
    const auto ns = parse_range(a.n_tilde_range, "--n-tilde-range");
    const auto ps = parse_range(a.p_range, "--p-range");
    const auto vocab = TagVocabulary::load(a.vocab);
    const auto rules = load_rules(a.rules);
    const auto exemplars = load_exemplars(load_tag_records(a.exemplars), rules, vocab);
    const auto matrix = a.backend.load(exemplars);
    const auto truth = align_truth(matrix.sample_ids, a.truth, rules, vocab);
    const auto result = sweep(matrix.rows, truth, exemplars, vocab, ns, ps);
    nlohmann::ordered_json best;
    best["n_tilde"] = result.best.n_tilde;
    best["p"] = result.best.p;
    best["macro_f1"] = result.best.macro_f1;
    OutputSet out;
    out.add(a.out, result.to_csv());
    if (!a.best.empty()) {
        out.add(a.best, best.dump(2) + '\n');
    }
    out.commit();
    std::printf("best n_tilde=%zu p=%zu macro_f1=%.4f\n", result.best.n_tilde, result.best.p,
                result.best.macro_f1);
}

// ---- simulate -----------------------------------------------------------------------

struct SimulateArgs {
    SimulationConfig cfg;
    std::string out_dir;
};

std::string comparison_csv(const Comparison& c) {
    std::string s = "method,precision,recall,f1\n";
    auto row = [&](const char* name, const EvalReport& r) {
        s += std::string(name) + ',' + io::format_double(r.macro_precision) + ',' +
             io::format_double(r.macro_recall) + ',' + io::format_double(r.macro_f1) + '\n';
    };
    row("ensemble", c.ensemble);
    row("multilabel", c.baseline);
    return s;
}

void run_simulate(const SimulateArgs& a) {
    const auto r = run_simulation(a.cfg);
    const fs::path dir = a.out_dir;
    fs::create_directories(dir);

    // Corpus files are written to a scratch directory first so they commit with
    // the reports.
    const fs::path scratch = dir / ".corpus.partial";
    fs::create_directories(scratch);
    OutputSet out;
    try {
        export_corpus(r.model, r.queries, scratch);
        for (const auto& entry : fs::directory_iterator(scratch)) {
            out.add(dir / entry.path().filename(), io::read_file(entry.path()));
        }
        fs::remove_all(scratch);
    } catch (...) {
        std::error_code ec;
        fs::remove_all(scratch, ec);
        throw;
    }

    nlohmann::ordered_json meta;
    meta["format_version"] = kConfigFormatVersion;
    meta["rng"] = Rng::kAlgorithm;
    meta["seed"] = a.cfg.corruption.seed;
    meta["n_fonts"] = a.cfg.shape.n_fonts;
    meta["dim"] = a.cfg.shape.feature_dim;
    meta["vocab_size"] = a.cfg.shape.tag_vocab_size;
    meta["tags_per_font"] = a.cfg.shape.tags_per_font;
    meta["miss_rate"] = a.cfg.corruption.miss_rate;
    meta["noise_rate"] = a.cfg.corruption.noise_rate;
    meta["sigma"] = r.sigma;
    meta["temperature"] = r.params.temperature;
    meta["top1_accuracy"] = r.top1_accuracy;
    meta["n_tilde"] = a.cfg.ensemble.n_tilde;
    meta["p"] = a.cfg.ensemble.p;
    meta["theta"] = a.cfg.theta;
    out.add(dir / "simulation.json", meta.dump(2) + '\n');
    out.add(dir / "comparison.csv", comparison_csv(r.comparison));
    out.add(dir / "ensemble_report.csv", r.comparison.ensemble.to_csv());
    out.add(dir / "multilabel_report.csv", r.comparison.baseline.to_csv());
    out.commit();
    std::printf("sigma %.6g  top-1 accuracy %.4f\n", r.sigma, r.top1_accuracy);
    std::printf("ensemble   precision %.4f  recall %.4f  f1 %.4f\n",
                r.comparison.ensemble.macro_precision, r.comparison.ensemble.macro_recall,
                r.comparison.ensemble.macro_f1);
    std::printf("multilabel precision %.4f  recall %.4f  f1 %.4f\n",
                r.comparison.baseline.macro_precision, r.comparison.baseline.macro_recall,
                r.comparison.baseline.macro_f1);
}

// ---- correlate ----------------------------------------------------------------------

struct CorrelateArgs {
    std::string corpus;
    std::string vocab;
    std::string genres;
    std::string normalization = "column";
    std::string out_dir;
};

void run_correlate(const CorrelateArgs& a) {
    const auto items = load_corpus(a.corpus);
    if (items.empty()) {
        throw InvalidArgument(a.corpus + ": corpus is empty");
    }
    const auto vocab = TagVocabulary::load(a.vocab);
    const auto genres = a.genres.empty() ? genres_of(items) : io::read_lines(a.genres);
    const auto mode = a.normalization == "items" ? GenreNormalization::ItemCount
                                                 : GenreNormalization::ColumnSum;
    const auto matrix = correlate(items, vocab, genres, mode);
    const auto ordered = matrix.ordered();
    const fs::path dir = a.out_dir;
    OutputSet out;
    out.add(dir / "matrix.tsv", io::format_labeled_matrix(ordered, '\t'));
    out.add(dir / "heatmap.svg", render_heatmap_svg(ordered));
    out.add(dir / "tags.txt", io::join(ordered.row_labels, "\n") + "\n");
    out.add(dir / "genres.txt", io::join(ordered.col_labels, "\n") + "\n");
    out.commit();
    std::cout << "correlated " << items.size() << " items over " << genres.size() << " genres and "
              << vocab.size() << " tags\n";
}

// ---- config -------------------------------------------------------------------------

/// Expands `--config <file>` into flags placed before the explicit ones.
std::vector<std::string> expand_config(CLI::App& app, const std::vector<std::string>& args) {
    std::vector<std::string> explicit_args;
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            config_path = args[++i];
        } else if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
        } else {
            explicit_args.push_back(args[i]);
        }
    }
    if (config_path.empty() || explicit_args.empty()) {
        return explicit_args;
    }
    CLI::App* sub = nullptr;
    try {
        sub = app.get_subcommand(explicit_args.front());
    } catch (const CLI::OptionNotFound&) {
        throw InvalidArgument("--config needs a subcommand");
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(io::read_file(config_path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(config_path + ": " + e.what());
    }
    if (!doc.is_object()) {
        throw ParseError(config_path + ": expected an object");
    }
    if (!doc.contains("format_version") || doc["format_version"] != kConfigFormatVersion) {
        throw ParseError(config_path + ": format_version must be " +
                         std::to_string(kConfigFormatVersion));
    }
    std::vector<std::string> out{explicit_args.front()};
    for (const auto& [key, value] : doc.items()) {
        if (key == "format_version") {
            continue;
        }
        if (key == "rng") {
            if (value != Rng::kAlgorithm) {
                throw ParseError(config_path + ": unsupported rng '" + value.dump() + "'");
            }
            continue;
        }
        std::string flag = "--" + key;
        std::replace(flag.begin() + 2, flag.end(), '_', '-');
        if (sub->get_option_no_throw(flag) == nullptr) {
            throw ParseError(config_path + ": unknown key '" + key + "' for '" +
                             explicit_args.front() + "'");
        }
        std::string text;
        if (value.is_string()) {
            text = value.get<std::string>();
        } else if (value.is_array()) {
            std::vector<std::string> parts;
            for (const auto& v : value) {
                parts.push_back(v.is_string() ? v.get<std::string>() : v.dump());
            }
            text = io::join(parts, ",");
        } else {
            text = value.dump();
        }
        out.push_back(flag);
        out.push_back(text);
    }
    out.insert(out.end(), explicit_args.begin() + 1, explicit_args.end());
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exemplar-based impression-tag estimation toolkit", "fontimp"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    VocabArgs vocab_args;
    auto* vocab_cmd = app.add_subcommand("vocab", "build the canonical tag vocabulary");
    vocab_cmd->add_option("--records", vocab_args.records, "tag records (csv or jsonl)")
        ->required()
        ->check(CLI::ExistingFile);
    vocab_cmd->add_option("--rules", vocab_args.rules, "merge rules (json)")->check(CLI::ExistingFile);
    vocab_cmd->add_option("--top-n", vocab_args.top_n, "keep the N most frequent raw tags")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    vocab_cmd->add_option("--min-count", vocab_args.min_count, "minimum fonts per tag")
        ->capture_default_str();
    vocab_cmd->add_option("--out", vocab_args.out, "output vocabulary (tag,count)")->required();

    EstimateArgs est_args;
    auto* est_cmd = app.add_subcommand("estimate", "estimate impression tags for query samples");
    est_cmd->add_option("--vocab", est_args.vocab)->required()->check(CLI::ExistingFile);
    est_cmd->add_option("--rules", est_args.rules)->check(CLI::ExistingFile);
    est_cmd->add_option("--exemplars", est_args.exemplars, "exemplar tag records")
        ->check(CLI::ExistingFile);
    est_cmd->add_option("--method", est_args.method)
        ->capture_default_str()
        ->check(CLI::IsMember({"ensemble", "multilabel"}));
    est_args.backend.add_options(est_cmd);
    est_cmd->add_option("--tag-scores", est_args.tag_scores, "per-tag score matrix (multilabel)")
        ->check(CLI::ExistingFile);
    est_cmd->add_option("--n-tilde", est_args.n_tilde)->capture_default_str();
    est_cmd->add_option("--p", est_args.p)->capture_default_str();
    est_cmd->add_option("--theta", est_args.theta)->capture_default_str()->check(CLI::Range(0.0, 1.0));
    est_cmd->add_option("--out", est_args.out, "output prefix")->required();

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "macro-averaged evaluation");
    eval_cmd->add_option("--vocab", eval_args.vocab)->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--rules", eval_args.rules)->check(CLI::ExistingFile);
    eval_cmd->add_option("--predictions", eval_args.predictions, "sample_id, tags...")
        ->required()
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--truth", eval_args.truth, "sample_id, tags...")
        ->required()
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--out", eval_args.out, "per-tag report (csv)")->required();
    eval_cmd->add_option("--table", eval_args.table, "human-readable report");

    SweepArgs sweep_args;
    auto* sweep_cmd = app.add_subcommand("sweep", "grid search over n_tilde and p");
    sweep_cmd->add_option("--vocab", sweep_args.vocab)->required()->check(CLI::ExistingFile);
    sweep_cmd->add_option("--rules", sweep_args.rules)->check(CLI::ExistingFile);
    sweep_cmd->add_option("--exemplars", sweep_args.exemplars)->required()->check(CLI::ExistingFile);
    sweep_args.backend.add_options(sweep_cmd);
    sweep_cmd->add_option("--truth", sweep_args.truth)->required()->check(CLI::ExistingFile);
    sweep_cmd->add_option("--n-tilde-range", sweep_args.n_tilde_range, "e.g. 1:21 or 1,3,5")
        ->capture_default_str();
    sweep_cmd->add_option("--p-range", sweep_args.p_range)->capture_default_str();
    sweep_cmd->add_option("--out", sweep_args.out, "grid (csv)")->required();
    sweep_cmd->add_option("--best", sweep_args.best, "best parameters (json)");

    SimulateArgs sim_args;
    auto& cfg = sim_args.cfg;
    auto* sim_cmd = app.add_subcommand("simulate", "synthetic robustness comparison");
    sim_cmd->add_option("--seed", cfg.corruption.seed)->capture_default_str();
    sim_cmd->add_option("--n-fonts", cfg.shape.n_fonts)->capture_default_str()->check(CLI::PositiveNumber);
    sim_cmd->add_option("--dim", cfg.shape.feature_dim)->capture_default_str()->check(CLI::PositiveNumber);
    sim_cmd->add_option("--vocab-size", cfg.shape.tag_vocab_size)->capture_default_str()->check(CLI::PositiveNumber);
    sim_cmd->add_option("--tags-per-font", cfg.shape.tags_per_font)->capture_default_str()->check(CLI::PositiveNumber);
    sim_cmd->add_option("--family-size", cfg.shape.family_size)->capture_default_str()->check(CLI::PositiveNumber);
    sim_cmd->add_option("--family-spread", cfg.shape.family_spread)->capture_default_str()->check(CLI::NonNegativeNumber);
    sim_cmd->add_option("--miss-rate", cfg.corruption.miss_rate)->capture_default_str()->check(CLI::Range(0.0, 1.0));
    sim_cmd->add_option("--noise-rate", cfg.corruption.noise_rate)->capture_default_str()->check(CLI::Range(0.0, 1.0));
    sim_cmd->add_option("--target-accuracy", cfg.target_accuracy)->capture_default_str();
    sim_cmd->add_option("--queries-per-font", cfg.queries_per_font)->capture_default_str()->check(CLI::PositiveNumber);
    sim_cmd->add_option("--temperature-scale", cfg.temperature_scale)->capture_default_str()->check(CLI::PositiveNumber);
    sim_cmd->add_option("--n-tilde", cfg.ensemble.n_tilde)->capture_default_str();
    sim_cmd->add_option("--p", cfg.ensemble.p)->capture_default_str();
    sim_cmd->add_option("--theta", cfg.theta)->capture_default_str()->check(CLI::Range(0.0, 1.0));
    sim_cmd->add_option("--out-dir", sim_args.out_dir)->required();

    CorrelateArgs corr_args;
    auto* corr_cmd = app.add_subcommand("correlate", "genre x impression correlation heatmap");
    corr_cmd->add_option("--corpus", corr_args.corpus, "jsonl items")->required()->check(CLI::ExistingFile);
    corr_cmd->add_option("--vocab", corr_args.vocab)->required()->check(CLI::ExistingFile);
    corr_cmd->add_option("--genres", corr_args.genres, "declared genres, one per line")
        ->check(CLI::ExistingFile);
    corr_cmd->add_option("--normalize", corr_args.normalization, "column | items")
        ->capture_default_str()
        ->check(CLI::IsMember({"column", "items"}));
    corr_cmd->add_option("--out-dir", corr_args.out_dir)->required();

    for (auto* sub : {vocab_cmd, est_cmd, eval_cmd, sweep_cmd, sim_cmd, corr_cmd}) {
        // Consumed by expand_config; declared so it shows in --help.
        sub->add_option("--config", "versioned json config");
    }

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        args = expand_config(app, args);
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (*vocab_cmd) {
            run_vocab(vocab_args);
        } else if (*est_cmd) {
            run_estimate(est_args);
        } else if (*eval_cmd) {
            run_eval(eval_args);
        } else if (*sweep_cmd) {
            run_sweep(sweep_args);
        } else if (*sim_cmd) {
            run_simulate(sim_args);
        } else if (*corr_cmd) {
            run_correlate(corr_args);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
