#include "wavblur/patterns.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "wavblur/errors.hpp"
#include "wavblur/parallel.hpp"

namespace wavblur {

namespace {

struct Token {
    std::string text;
    int column;  // 1-based position in the source line
};

std::vector<Token> tokenize(const std::string& line) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i >= line.size()) break;
        std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        tokens.push_back({line.substr(start, i - start), static_cast<int>(start) + 1});
    }
    return tokens;
}

long parse_int(const Token& tok, int line_no, const char* what) {
    const char* s = tok.text.c_str();
    char* end = nullptr;
    long value = std::strtol(s, &end, 10);
    if (end == s || *end != '\0')
        throw ParseError(std::string("expected an integer ") + what + ", got '" + tok.text + "'",
                          line_no, tok.column);
    return value;
}

char parse_orientation(const Token& tok, int line_no) {
    if (tok.text == "all") return '*';
    if (tok.text.size() == 1 && std::string("lhvd").find(tok.text[0]) != std::string::npos)
        return tok.text[0];
    throw ParseError("unknown orientation '" + tok.text + "' (want l, h, v, d or all)",
                     line_no, tok.column);
}

}  // namespace

NeighborhoodSpec parse_neighborhood(const std::string& text) {
    NeighborhoodSpec spec;
    std::vector<NeighborhoodEntry>* section = &spec.global;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::vector<Token> toks = tokenize(line);
        if (toks.empty()) continue;

        if (toks[0].text[0] == '[') {
            // "[band j o]" opens a per-band section.
            if (toks.size() != 3 || toks[0].text != "[band" || toks[2].text.size() != 2 ||
                toks[2].text[1] != ']')
                throw ParseError("malformed section header (want [band <level> <orientation>])",
                                 line_no, toks[0].column);
            long level = parse_int(toks[1], line_no, "band level");
            if (level < 1)
                throw ParseError("band level must be at least 1", line_no, toks[1].column);
            char orient = toks[2].text[0];
            if (std::string("lhvd").find(orient) == std::string::npos)
                throw ParseError(std::string("unknown band orientation '") + orient + "'",
                                 line_no, toks[2].column);
            section = &spec.per_band[{static_cast<int>(level), orient}];
            continue;
        }

        if (toks.size() != 4)
            throw ParseError("expected <scale> <orientation> <dy> <dx>", line_no,
                             toks.size() > 4 ? toks[4].column : toks[0].column);

        NeighborhoodEntry entry;
        const Token& st = toks[0];
        if (st.text == "same") {
            entry.scale_kind = NeighborhoodEntry::Scale::same;
        } else if (st.text == "+1" || st.text == "-1") {
            entry.scale_kind = NeighborhoodEntry::Scale::relative;
            entry.scale = st.text == "+1" ? 1 : -1;
        } else {
            long level = parse_int(st, line_no, "scale");
            if (level < 1)
                throw ParseError("absolute scale must be a positive level", line_no, st.column);
            entry.scale_kind = NeighborhoodEntry::Scale::absolute;
            entry.scale = static_cast<int>(level);
        }
        entry.orientation = parse_orientation(toks[1], line_no);
        entry.dy = static_cast<int>(parse_int(toks[2], line_no, "dy"));
        entry.dx = static_cast<int>(parse_int(toks[3], line_no, "dx"));
        section->push_back(entry);
    }
    return spec;
}

NeighborhoodSpec load_neighborhood(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_neighborhood(buffer.str());
}

bool PatternMask::contains(std::uint64_t row, std::uint64_t col) const {
    auto begin = cols.begin() + static_cast<std::ptrdiff_t>(row_offsets[row]);
    auto end = cols.begin() + static_cast<std::ptrdiff_t>(row_offsets[row + 1]);
    return std::binary_search(begin, end, col);
}

namespace {

// Position mapping between levels: halve (floor) per step toward coarser,
// double per step toward finer. Level 1 is the finest.
int map_position(int p, int from_level, int to_level) {
    if (to_level > from_level) return p >> (to_level - from_level);
    if (to_level < from_level) return p << (from_level - to_level);
    return p;
}

int wrap(int p, int extent) {
    p %= extent;
    return p < 0 ? p + extent : p;
}

}  // namespace

PatternMask generate_mask(const NeighborhoodSpec& spec, int height, int width,
                          const WaveletFamily& family, int levels) {
    const std::vector<Band> bands = layout_2d(height, width, levels);
    const std::size_t dim = static_cast<std::size_t>(height) * width;
    (void)family;

    std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs;
    pairs.reserve(dim * 4);
    for (std::size_t i = 0; i < dim; ++i) pairs.push_back({i, i});  // implicit self link

    for (const Band& sb : bands) {
        std::vector<NeighborhoodEntry> entries = spec.global;
        auto scoped = spec.per_band.find({sb.level, orientation_code(sb.orient)});
        if (scoped != spec.per_band.end())
            entries.insert(entries.end(), scoped->second.begin(), scoped->second.end());

        for (const NeighborhoodEntry& entry : entries) {
            int jt;
            switch (entry.scale_kind) {
                case NeighborhoodEntry::Scale::same:
                    jt = sb.level;
                    break;
                case NeighborhoodEntry::Scale::absolute:
                    jt = entry.scale;
                    if (jt < 1 || jt > levels)
                        throw GeometryError("neighbourhood references level " +
                                            std::to_string(jt) + " outside the transform depth");
                    break;
                case NeighborhoodEntry::Scale::relative:
                    // +1 steps finer (smaller level number). Walking off either
                    // end just means the source band has no such neighbour.
                    jt = sb.level - entry.scale;
                    if (jt < 1 || jt > levels) continue;
                    break;
            }

            std::vector<Orientation> targets;
            if (entry.orientation == '*') {
                if (jt == levels) targets.push_back(Orientation::approx);
                targets.insert(targets.end(), {Orientation::horizontal, Orientation::vertical,
                                               Orientation::diagonal});
            } else if (entry.orientation == 'l') {
                if (jt != levels)
                    throw GeometryError("approx-band selector at level " + std::to_string(jt) +
                                        " but the approx band lives at level " +
                                        std::to_string(levels));
                targets.push_back(Orientation::approx);
            } else {
                targets.push_back(orientation_from_code(entry.orientation, false));
            }

            for (Orientation ot : targets) {
                const Band* tb = nullptr;
                for (const Band& b : bands)
                    if (b.level == jt && b.orient == ot) tb = &b;
                if (!tb) continue;
                if (std::abs(entry.dy) >= tb->rows || std::abs(entry.dx) >= tb->cols)
                    throw GeometryError("translation (" + std::to_string(entry.dy) + ", " +
                                        std::to_string(entry.dx) +
                                        ") exceeds the target sub-band extent");
                for (int py = 0; py < sb.rows; ++py) {
                    for (int px = 0; px < sb.cols; ++px) {
                        int ty = wrap(map_position(py, sb.level, jt) + entry.dy, tb->rows);
                        int tx = wrap(map_position(px, sb.level, jt) + entry.dx, tb->cols);
                        std::uint64_t r = sb.offset + static_cast<std::size_t>(py) * sb.cols + px;
                        std::uint64_t c =
                            tb->offset + static_cast<std::size_t>(ty) * tb->cols + tx;
                        pairs.push_back({r, c});
                        pairs.push_back({c, r});  // closed under transposition
                    }
                }
            }
        }
    }

    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

    PatternMask mask;
    mask.dim = dim;
    mask.row_offsets.assign(dim + 1, 0);
    mask.cols.resize(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        ++mask.row_offsets[pairs[i].first + 1];
        mask.cols[i] = pairs[i].second;
    }
    for (std::size_t r = 0; r < dim; ++r) mask.row_offsets[r + 1] += mask.row_offsets[r];
    return mask;
}

SparseTheta build_theta_masked(const KernelSpec& spec, const PatternMask& mask,
                               const WaveletFamily& family, int levels) {
    validate_kernel(spec);
    const int n = spec.n;
    const std::size_t dim = static_cast<std::size_t>(n) * n;
    if (mask.dim != dim)
        throw GeometryError("mask dimension does not match the kernel size");

    // By mask symmetry, row c of the mask lists exactly the rows of column c.
    struct Column {
        std::vector<std::uint64_t> rows;
        std::vector<double> values;
    };
    std::vector<Column> columns(dim);
    parallel_for(dim, [&](std::size_t c) {
        SubbandIndex idx = index_from_flat(c, n, n, levels);
        Image atom = synthesize_atom(idx, n, n, family, levels);
        WaveletCoeffs col = forward(apply_exact(spec, atom), family, levels);
        Column& out = columns[c];
        for (std::uint64_t i = mask.row_offsets[c]; i < mask.row_offsets[c + 1]; ++i) {
            std::uint64_t r = mask.cols[i];
            double v = col.flat[r];
            if (std::fabs(v) >= kThetaFloor) {
                out.rows.push_back(r);
                out.values.push_back(v);
            }
        }
    });

    SparseTheta theta;
    theta.dim = dim;
    theta.meta = ThetaMeta{family.name, levels, spec.id(), "pattern"};
    theta.row_offsets.assign(dim + 1, 0);
    for (const Column& col : columns)
        for (std::uint64_t r : col.rows) ++theta.row_offsets[r + 1];
    for (std::size_t r = 0; r < dim; ++r) theta.row_offsets[r + 1] += theta.row_offsets[r];
    theta.cols.resize(theta.row_offsets[dim]);
    theta.values.resize(theta.row_offsets[dim]);
    std::vector<std::uint64_t> cursor(theta.row_offsets.begin(), theta.row_offsets.end() - 1);
    for (std::size_t c = 0; c < dim; ++c) {
        for (std::size_t i = 0; i < columns[c].rows.size(); ++i) {
            std::uint64_t r = columns[c].rows[i];
            theta.cols[cursor[r]] = c;
            theta.values[cursor[r]] = columns[c].values[i];
            ++cursor[r];
        }
    }
    return theta;
}

}  // namespace wavblur
