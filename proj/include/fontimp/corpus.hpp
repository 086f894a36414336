#pragma once

// Genre-vs-impression correlation analysis: per-item OR accumulation,
// two-step normalization, hierarchical-clustering order and heatmap output.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "fontimp/error.hpp"
#include "fontimp/exemplar.hpp"
#include "fontimp/io.hpp"
#include "fontimp/vocab.hpp"

namespace fontimp {

using Matrix = std::vector<std::vector<double>>;

struct CorpusItem {
    std::string item_id;
    std::string genre;
    std::vector<TagSet> word_estimates;
};

/// K x G tag occurrence counts plus the number of items seen per genre.
struct GenreCounts {
    Matrix raw;
    std::vector<std::size_t> items_per_genre;
};

/// Each item contributes 1 to (tag, genre) for every tag in the union of its
/// word-level tag sets.
inline GenreCounts accumulate(const std::vector<CorpusItem>& items, const TagVocabulary& vocab,
                              const std::vector<std::string>& genres) {
    if (genres.empty()) {
        throw InvalidArgument("accumulate: no genres declared");
    }
    std::unordered_map<std::string, std::size_t> genre_index;
    for (std::size_t g = 0; g < genres.size(); ++g) {
        if (!genre_index.emplace(genres[g], g).second) {
            throw InvalidArgument("accumulate: duplicate genre '" + genres[g] + "'");
        }
    }
    GenreCounts counts;
    counts.raw.assign(vocab.size(), std::vector<double>(genres.size(), 0.0));
    counts.items_per_genre.assign(genres.size(), 0);
    for (const auto& item : items) {
        auto g = genre_index.find(item.genre);
        if (g == genre_index.end()) {
            throw InvalidArgument("item '" + item.item_id + "' has unknown genre '" + item.genre + "'");
        }
        ++counts.items_per_genre[g->second];
        TagSet merged;
        for (const auto& word : item.word_estimates) {
            merged.insert(word.begin(), word.end());
        }
        for (const auto& tag : merged) {
            if (!vocab.contains(tag)) {
                throw InvalidArgument("item '" + item.item_id + "' has out-of-vocabulary tag '" +
                                      tag + "'");
            }
            counts.raw[vocab.index_of(tag)][g->second] += 1.0;
        }
    }
    return counts;
}

enum class GenreNormalization {
    ColumnSum,   ///< divide each genre column by its total tag occurrences
    ItemCount,   ///< divide each genre column by its number of items
};

struct NormalizedCounts {
    Matrix per_genre;
    Matrix zscored;
};

/// Step 1 scales each genre column (all-zero columns stay zero). Step 2
/// standardizes each tag row with the population variance; constant rows
/// become all zeros.
inline NormalizedCounts normalize(const Matrix& raw,
                                  GenreNormalization mode = GenreNormalization::ColumnSum,
                                  const std::vector<std::size_t>& items_per_genre = {}) {
    const std::size_t rows = raw.size();
    const std::size_t cols = rows == 0 ? 0 : raw[0].size();
    if (mode == GenreNormalization::ItemCount && items_per_genre.size() != cols) {
        throw InvalidArgument("normalize: item counts required for every genre");
    }
    NormalizedCounts out;
    out.per_genre = raw;
    for (std::size_t g = 0; g < cols; ++g) {
        double denom = 0.0;
        if (mode == GenreNormalization::ColumnSum) {
            for (std::size_t k = 0; k < rows; ++k) {
                if (raw[k].size() != cols || raw[k][g] < 0.0 || !std::isfinite(raw[k][g])) {
                    throw InvalidArgument("normalize: counts must be finite and nonnegative");
                }
                denom += raw[k][g];
            }
        } else {
            denom = static_cast<double>(items_per_genre[g]);
        }
        for (std::size_t k = 0; k < rows; ++k) {
            out.per_genre[k][g] = denom > 0.0 ? raw[k][g] / denom : 0.0;
        }
    }
    out.zscored = out.per_genre;
    for (auto& row : out.zscored) {
        if (row.empty()) {
            continue;
        }
        const double n = static_cast<double>(row.size());
        const double mean = std::accumulate(row.begin(), row.end(), 0.0) / n;
        double var = 0.0;
        for (double v : row) {
            var += (v - mean) * (v - mean);
        }
        var /= n;
        // Relative test: a row equal up to rounding is constant.
        const bool constant =
            var <= 1e-24 * std::max(1.0, mean * mean) ||
            std::all_of(row.begin(), row.end(), [&](double v) { return v == row[0]; });
        const double sd = std::sqrt(var);
        for (auto& v : row) {
            v = constant ? 0.0 : (v - mean) / sd;
        }
    }
    return out;
}

namespace detail {

struct DendrogramNode {
    std::vector<std::size_t> leaves;  // in display order
    std::vector<double> centroid;
    std::size_t min_leaf = 0;
};

/// True when `a` should be displayed before `b`: lexicographically smaller
/// centroid, then smaller original index. Depends on content, not input order,
/// except for exact ties.
inline bool display_before(const DendrogramNode& a, const DendrogramNode& b) {
    if (a.centroid != b.centroid) {
        return a.centroid < b.centroid;
    }
    return a.min_leaf < b.min_leaf;
}

} // namespace detail

/// Leaf order of an average-linkage agglomerative clustering of `points`
/// (Euclidean distance). The closest pair merges first, ties to the lowest
/// pair of active slots.
inline std::vector<std::size_t> hierarchical_leaf_order(const Matrix& points) {
    const std::size_t n = points.size();
    std::vector<detail::DendrogramNode> nodes(n);
    for (std::size_t i = 0; i < n; ++i) {
        nodes[i] = {{i}, points[i], i};
    }
    Matrix dist(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            dist[i][j] = dist[j][i] = euclidean_distance(points[i], points[j]);
        }
    }
    std::vector<bool> active(n, true);
    for (std::size_t merges = 1; merges < n; ++merges) {
        std::size_t bi = 0;
        std::size_t bj = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i]) {
                continue;
            }
            for (std::size_t j = i + 1; j < n; ++j) {
                if (active[j] && dist[i][j] < best) {
                    best = dist[i][j];
                    bi = i;
                    bj = j;
                }
            }
        }
        auto& a = nodes[bi];
        auto& b = nodes[bj];
        const double na = static_cast<double>(a.leaves.size());
        const double nb = static_cast<double>(b.leaves.size());
        for (std::size_t k = 0; k < n; ++k) {
            if (active[k] && k != bi && k != bj) {
                dist[bi][k] = dist[k][bi] = (na * dist[bi][k] + nb * dist[bj][k]) / (na + nb);
            }
        }
        detail::DendrogramNode merged;
        const bool a_first = detail::display_before(a, b);
        const auto& first = a_first ? a : b;
        const auto& second = a_first ? b : a;
        merged.leaves = first.leaves;
        merged.leaves.insert(merged.leaves.end(), second.leaves.begin(), second.leaves.end());
        merged.centroid.resize(a.centroid.size());
        for (std::size_t d = 0; d < merged.centroid.size(); ++d) {
            merged.centroid[d] = (na * a.centroid[d] + nb * b.centroid[d]) / (na + nb);
        }
        merged.min_leaf = std::min(a.min_leaf, b.min_leaf);
        nodes[bi] = std::move(merged);
        active[bj] = false;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (active[i]) {
            return nodes[i].leaves;
        }
    }
    return {};
}

struct BiclusterOrder {
    std::vector<std::size_t> rows;
    std::vector<std::size_t> cols;
};

/// Rows and columns clustered independently so similar ones sit next to each other.
inline BiclusterOrder bicluster_order(const Matrix& m) {
    BiclusterOrder order;
    order.rows = hierarchical_leaf_order(m);
    const std::size_t cols = m.empty() ? 0 : m[0].size();
    Matrix transposed(cols, std::vector<double>(m.size()));
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            transposed[j][i] = m[i][j];
        }
    }
    order.cols = hierarchical_leaf_order(transposed);
    return order;
}

struct GenreImpressionMatrix {
    std::vector<std::string> tags;
    std::vector<std::string> genres;
    Matrix raw;
    Matrix per_genre;
    Matrix zscored;
    std::vector<std::size_t> row_order;
    std::vector<std::size_t> col_order;

    /// z-scores with rows and columns in display order.
    io::LabeledMatrix ordered() const {
        io::LabeledMatrix out;
        out.corner = "tag";
        for (auto c : col_order) {
            out.col_labels.push_back(genres[c]);
        }
        for (auto r : row_order) {
            out.row_labels.push_back(tags[r]);
            std::vector<double> row;
            for (auto c : col_order) {
                row.push_back(zscored[r][c]);
            }
            out.values.push_back(std::move(row));
        }
        return out;
    }
};

inline GenreImpressionMatrix correlate(const std::vector<CorpusItem>& items,
                                       const TagVocabulary& vocab,
                                       const std::vector<std::string>& genres,
                                       GenreNormalization mode = GenreNormalization::ColumnSum) {
    auto counts = accumulate(items, vocab, genres);
    auto norm = normalize(counts.raw, mode, counts.items_per_genre);
    auto order = bicluster_order(norm.zscored);
    return {vocab.tags(),
            genres,
            std::move(counts.raw),
            std::move(norm.per_genre),
            std::move(norm.zscored),
            std::move(order.rows),
            std::move(order.cols)};
}

// ---- heatmap -------------------------------------------------------------------------

struct Rgb {
    int r = 255;
    int g = 255;
    int b = 255;

    std::string hex() const {
        char buf[8];
        std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
        return buf;
    }
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Diverging scale: -scale is pure blue, 0 white, +scale pure red.
inline Rgb diverging_color(double value, double scale) {
    if (!(scale > 0.0)) {
        return {};
    }
    const double s = std::clamp(value / scale, -1.0, 1.0);
    const int fade = static_cast<int>(std::lround(255.0 * (1.0 - std::abs(s))));
    if (s > 0.0) {
        return {255, fade, fade};
    }
    if (s < 0.0) {
        return {fade, fade, 255};
    }
    return {};
}

namespace detail {

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

} // namespace detail

/// SVG heatmap of `m` (rows are tags, columns genres). The color scale is
/// symmetric around 0 with endpoints at the largest absolute value.
inline std::string render_heatmap_svg(const io::LabeledMatrix& m) {
    constexpr int cell = 12;
    constexpr int left = 140;
    constexpr int top = 160;
    double scale = 0.0;
    for (const auto& row : m.values) {
        for (double v : row) {
            scale = std::max(scale, std::abs(v));
        }
    }
    const int width = left + cell * static_cast<int>(m.col_labels.size()) + 10;
    const int height = top + cell * static_cast<int>(m.row_labels.size()) + 10;
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" font-family=\"sans-serif\" font-size=\"9\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    for (std::size_t c = 0; c < m.col_labels.size(); ++c) {
        const int x = left + cell * static_cast<int>(c) + cell / 2 + 3;
        svg << "<text transform=\"translate(" << x << ',' << top - 4
            << ") rotate(-60)\">" << detail::xml_escape(m.col_labels[c]) << "</text>\n";
    }
    for (std::size_t r = 0; r < m.row_labels.size(); ++r) {
        const int y = top + cell * static_cast<int>(r);
        svg << "<text x=\"" << left - 4 << "\" y=\"" << y + cell - 3
            << "\" text-anchor=\"end\">" << detail::xml_escape(m.row_labels[r]) << "</text>\n";
        for (std::size_t c = 0; c < m.values[r].size(); ++c) {
            svg << "<rect class=\"cell\" x=\"" << left + cell * static_cast<int>(c) << "\" y=\"" << y
                << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\""
                << diverging_color(m.values[r][c], scale).hex() << "\"/>\n";
        }
    }
    svg << "</svg>\n";
    return svg.str();
}

/// Writes `<dir>/matrix.tsv` (ordered z-scores, tab-separated), `heatmap.svg`,
/// `tags.txt` and `genres.txt` (display order, one per line).
inline void emit_heatmap(const GenreImpressionMatrix& matrix, const std::filesystem::path& dir) {
    const auto ordered = matrix.ordered();
    io::write_file(dir / "matrix.tsv", io::format_labeled_matrix(ordered, '\t'));
    io::write_file(dir / "heatmap.svg", render_heatmap_svg(ordered));
    io::write_file(dir / "tags.txt", io::join(ordered.row_labels, "\n") + "\n");
    io::write_file(dir / "genres.txt", io::join(ordered.col_labels, "\n") + "\n");
}

// ---- corpus files ----------------------------------------------------------------------

/// Line-delimited `{"item_id": ..., "genre": ..., "words": [[tag, ...], ...]}`.
inline std::vector<CorpusItem> parse_corpus(const std::vector<std::string>& lines,
                                            std::string_view context) {
    std::vector<CorpusItem> items;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto where = std::string(context) + ": line " + std::to_string(i + 1);
        CorpusItem item;
        try {
            const auto obj = nlohmann::json::parse(lines[i]);
            if (!obj.is_object()) {
                throw ParseError(where + ": expected an object");
            }
            for (const auto& [key, value] : obj.items()) {
                if (key == "item_id") {
                    item.item_id = value.get<std::string>();
                } else if (key == "genre") {
                    item.genre = value.get<std::string>();
                } else if (key == "words") {
                    for (const auto& word : value) {
                        TagSet tags;
                        for (const auto& t : word) {
                            auto n = normalize_tag(t.get<std::string>());
                            if (!n.empty()) {
                                tags.insert(std::move(n));
                            }
                        }
                        item.word_estimates.push_back(std::move(tags));
                    }
                } else {
                    throw ParseError(where + ": unknown field '" + key + "'");
                }
            }
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(where + ": " + e.what());
        }
        if (item.item_id.empty() || item.genre.empty()) {
            throw ParseError(where + ": item_id and genre are required");
        }
        items.push_back(std::move(item));
    }
    return items;
}

inline std::vector<CorpusItem> load_corpus(const std::filesystem::path& path) {
    return parse_corpus(io::read_lines(path), path.string());
}

/// Genres in first-seen order are not stable across shuffled inputs, so
/// undeclared genre lists are sorted.
inline std::vector<std::string> genres_of(const std::vector<CorpusItem>& items) {
    std::set<std::string> g;
    for (const auto& item : items) {
        g.insert(item.genre);
    }
    return {g.begin(), g.end()};
}

} // namespace fontimp
