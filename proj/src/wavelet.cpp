#include "wavblur/wavelet.hpp"

#include <algorithm>
#include <cmath>

#include "wavblur/errors.hpp"
#include "wavblur/perf.hpp"

namespace wavblur {

std::vector<double> WaveletFamily::highpass() const {
    int L = support_length();
    std::vector<double> g(L);
    for (int n = 0; n < L; ++n) {
        double sign = (n % 2 == 0) ? 1.0 : -1.0;
        g[n] = sign * lowpass[L - 1 - n];
    }
    return g;
}

WaveletFamily wavelet_family(const std::string& name) {
    WaveletFamily f;
    f.name = name;
    if (name == "haar") {
        double s = 1.0 / std::sqrt(2.0);
        f.lowpass = {s, s};
        f.vanishing_moments = 1;
    } else if (name == "db2") {
        double r3 = std::sqrt(3.0);
        double z = 4.0 * std::sqrt(2.0);
        f.lowpass = {(1 + r3) / z, (3 + r3) / z, (3 - r3) / z, (1 - r3) / z};
        f.vanishing_moments = 2;
    } else if (name == "db3") {
        double r10 = std::sqrt(10.0);
        double q = std::sqrt(5.0 + 2.0 * r10);
        double z = 16.0 * std::sqrt(2.0);
        f.lowpass = {(1 + r10 + q) / z,       (5 + r10 + 3 * q) / z,
                     (10 - 2 * r10 + 2 * q) / z, (10 - 2 * r10 - 2 * q) / z,
                     (5 + r10 - 3 * q) / z,   (1 + r10 - q) / z};
        f.vanishing_moments = 3;
    } else {
        throw FormatError("unknown wavelet family: " + name);
    }
    return f;
}

int default_levels(int n) {
    int j = 0;
    while ((n >> j) > 8) ++j;
    return std::max(1, j);
}

char orientation_code(Orientation o) {
    switch (o) {
        case Orientation::approx: return 'l';
        case Orientation::horizontal: return 'h';
        case Orientation::vertical: return 'v';
        case Orientation::diagonal: return 'd';
        case Orientation::detail: return 'd';
    }
    return '?';
}

Orientation orientation_from_code(char c, bool one_d) {
    if (one_d) {
        if (c == 'l') return Orientation::approx;
        if (c == 'd') return Orientation::detail;
    } else {
        if (c == 'l') return Orientation::approx;
        if (c == 'h') return Orientation::horizontal;
        if (c == 'v') return Orientation::vertical;
        if (c == 'd') return Orientation::diagonal;
    }
    throw FormatError(std::string("unknown orientation code: ") + c);
}

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void check_levels(int n, int levels, int support) {
    if (levels < 1) throw LevelError("decomposition depth must be at least 1");
    if (!is_power_of_two(n)) throw DimensionError("length must be a power of two");
    if ((n >> levels) << levels != n || (n >> levels) < 1)
        throw LevelError("2^levels must divide the signal length");
    // The periodic filter bank stays orthonormal only while the filter fits
    // inside the signal it analyzes.
    if ((n >> (levels - 1)) < support)
        throw LevelError("signal too short for this filter at the requested depth");
}

// lo[k] = sum_n h[n] x[(2k+n) mod m], hi likewise with g. m must be even.
void analysis_pass(const double* x, int m, const std::vector<double>& h,
                   const std::vector<double>& g, double* lo, double* hi) {
    int L = static_cast<int>(h.size());
    int half = m / 2;
    for (int k = 0; k < half; ++k) {
        double a = 0.0, d = 0.0;
        int base = 2 * k;
        for (int n = 0; n < L; ++n) {
            double xv = x[(base + n) % m];
            a += h[n] * xv;
            d += g[n] * xv;
        }
        lo[k] = a;
        hi[k] = d;
    }
    perf::count_madds(static_cast<std::uint64_t>(m) * L);
}

// Exact transpose of analysis_pass.
void synthesis_pass(const double* lo, const double* hi, int m,
                    const std::vector<double>& h, const std::vector<double>& g,
                    double* x) {
    int L = static_cast<int>(h.size());
    int half = m / 2;
    std::fill(x, x + m, 0.0);
    for (int k = 0; k < half; ++k) {
        int base = 2 * k;
        for (int n = 0; n < L; ++n) {
            x[(base + n) % m] += h[n] * lo[k] + g[n] * hi[k];
        }
    }
    perf::count_madds(static_cast<std::uint64_t>(m) * L);
}

}  // namespace

// ---------- layouts ----------

std::vector<Band> layout_2d(int height, int width, int levels) {
    std::vector<Band> bands;
    std::size_t off = 0;
    int hr = height >> levels, wc = width >> levels;
    bands.push_back({levels, Orientation::approx, off, hr, wc});
    off += static_cast<std::size_t>(hr) * wc;
    for (int j = levels; j >= 1; --j) {
        int r = height >> j, c = width >> j;
        for (Orientation o : {Orientation::horizontal, Orientation::vertical,
                              Orientation::diagonal}) {
            bands.push_back({j, o, off, r, c});
            off += static_cast<std::size_t>(r) * c;
        }
    }
    return bands;
}

std::vector<Band> layout_1d(int n, int levels) {
    std::vector<Band> bands;
    std::size_t off = 0;
    bands.push_back({levels, Orientation::approx, off, n >> levels, 1});
    off += static_cast<std::size_t>(n >> levels);
    for (int j = levels; j >= 1; --j) {
        bands.push_back({j, Orientation::detail, off, n >> j, 1});
        off += static_cast<std::size_t>(n >> j);
    }
    return bands;
}

std::size_t flat_index(const SubbandIndex& idx, int height, int width, int levels) {
    for (const Band& b : layout_2d(height, width, levels)) {
        if (b.level == idx.level && b.orient == idx.orient) {
            if (idx.row < 0 || idx.row >= b.rows || idx.col < 0 || idx.col >= b.cols)
                throw IndexError("sub-band position out of range");
            return b.offset + static_cast<std::size_t>(idx.row) * b.cols + idx.col;
        }
    }
    throw IndexError("no such sub-band: level " + std::to_string(idx.level));
}

SubbandIndex index_from_flat(std::size_t flat, int height, int width, int levels) {
    for (const Band& b : layout_2d(height, width, levels)) {
        std::size_t size = static_cast<std::size_t>(b.rows) * b.cols;
        if (flat >= b.offset && flat < b.offset + size) {
            std::size_t rel = flat - b.offset;
            return {b.level, b.orient, static_cast<int>(rel / b.cols),
                    static_cast<int>(rel % b.cols)};
        }
    }
    throw IndexError("flat coefficient index out of range");
}

// ---------- 1D transform ----------

std::vector<double> forward_1d(const std::vector<double>& signal,
                               const WaveletFamily& family, int levels) {
    int n = static_cast<int>(signal.size());
    check_levels(n, levels, family.support_length());
    std::vector<double> g = family.highpass();
    std::vector<double> out(signal.size());
    std::vector<double> cur = signal, lo(n / 2), hi(n / 2);
    int m = n;
    for (int j = 1; j <= levels; ++j) {
        analysis_pass(cur.data(), m, family.lowpass, g, lo.data(), hi.data());
        // detail(j) occupies [n/2^j, n/2^(j-1)) in the flat layout
        std::copy(hi.begin(), hi.begin() + m / 2, out.begin() + (n >> j));
        cur.assign(lo.begin(), lo.begin() + m / 2);
        m /= 2;
    }
    std::copy(cur.begin(), cur.end(), out.begin());
    return out;
}

std::vector<double> inverse_1d(const std::vector<double>& coeffs,
                               const WaveletFamily& family, int levels) {
    int n = static_cast<int>(coeffs.size());
    check_levels(n, levels, family.support_length());
    std::vector<double> g = family.highpass();
    std::vector<double> cur(coeffs.begin(), coeffs.begin() + (n >> levels));
    std::vector<double> x;
    for (int j = levels; j >= 1; --j) {
        int m = n >> (j - 1);
        x.resize(m);
        synthesis_pass(cur.data(), coeffs.data() + (n >> j), m, family.lowpass, g, x.data());
        cur = x;
    }
    return cur;
}

// ---------- 2D transform ----------

namespace {

// One separable analysis level on the m x m top-left block of work (stride
// w): each row is filtered along the horizontal axis, then each column along
// the vertical axis. Quadrants afterwards: top-left approx, top-right
// highpass horizontal only, bottom-left highpass vertical only, bottom-right
// highpass both. Bands are named by the axis carrying the highpass filter.
void analyze_block(std::vector<double>& work, int w, int m,
                   const std::vector<double>& h, const std::vector<double>& g) {
    int half = m / 2;
    std::vector<double> row(m), lo(half), hi(half);
    for (int r = 0; r < m; ++r) {
        double* base = work.data() + static_cast<std::size_t>(r) * w;
        std::copy(base, base + m, row.begin());
        analysis_pass(row.data(), m, h, g, lo.data(), hi.data());
        std::copy(lo.begin(), lo.end(), base);
        std::copy(hi.begin(), hi.end(), base + half);
    }
    std::vector<double> col(m);
    for (int c = 0; c < m; ++c) {
        for (int r = 0; r < m; ++r) col[r] = work[static_cast<std::size_t>(r) * w + c];
        analysis_pass(col.data(), m, h, g, lo.data(), hi.data());
        for (int r = 0; r < half; ++r) {
            work[static_cast<std::size_t>(r) * w + c] = lo[r];
            work[static_cast<std::size_t>(r + half) * w + c] = hi[r];
        }
    }
}

void synthesize_block(std::vector<double>& work, int w, int m,
                      const std::vector<double>& h, const std::vector<double>& g) {
    int half = m / 2;
    std::vector<double> col(m), lo(half), hi(half);
    for (int c = 0; c < m; ++c) {
        for (int r = 0; r < half; ++r) {
            lo[r] = work[static_cast<std::size_t>(r) * w + c];
            hi[r] = work[static_cast<std::size_t>(r + half) * w + c];
        }
        synthesis_pass(lo.data(), hi.data(), m, h, g, col.data());
        for (int r = 0; r < m; ++r) work[static_cast<std::size_t>(r) * w + c] = col[r];
    }
    std::vector<double> row(m);
    for (int r = 0; r < m; ++r) {
        double* base = work.data() + static_cast<std::size_t>(r) * w;
        std::copy(base, base + half, lo.begin());
        std::copy(base + half, base + m, hi.begin());
        synthesis_pass(lo.data(), hi.data(), m, h, g, row.data());
        std::copy(row.begin(), row.end(), base);
    }
}

const Band& find_band(const std::vector<Band>& bands, int level, Orientation o) {
    for (const Band& b : bands)
        if (b.level == level && b.orient == o) return b;
    throw IndexError("no such sub-band");
}

}  // namespace

WaveletCoeffs forward(const Image& img, const WaveletFamily& family, int levels) {
    if (img.height != img.width)
        throw DimensionError("the 2D transform expects square images");
    check_levels(img.width, levels, family.support_length());
    std::vector<double> g = family.highpass();
    const std::vector<Band> bands = layout_2d(img.height, img.width, levels);

    WaveletCoeffs out;
    out.levels = levels;
    out.height = img.height;
    out.width = img.width;
    out.flat.resize(img.pixel_count());

    std::vector<double> work = img.data;
    int w = img.width;
    int m = img.width;  // side of the block still being decomposed
    for (int j = 1; j <= levels; ++j) {
        analyze_block(work, w, m, family.lowpass, g);
        int half = m / 2;
        const Band& bh = find_band(bands, j, Orientation::horizontal);
        const Band& bv = find_band(bands, j, Orientation::vertical);
        const Band& bd = find_band(bands, j, Orientation::diagonal);
        for (int r = 0; r < half; ++r) {
            for (int c = 0; c < half; ++c) {
                double tr = work[static_cast<std::size_t>(r) * w + c + half];
                double bl = work[static_cast<std::size_t>(r + half) * w + c];
                double br = work[static_cast<std::size_t>(r + half) * w + c + half];
                out.flat[bh.offset + static_cast<std::size_t>(r) * bh.cols + c] = tr;
                out.flat[bv.offset + static_cast<std::size_t>(r) * bv.cols + c] = bl;
                out.flat[bd.offset + static_cast<std::size_t>(r) * bd.cols + c] = br;
            }
        }
        m /= 2;
    }
    const Band& ba = find_band(bands, levels, Orientation::approx);
    for (int r = 0; r < ba.rows; ++r)
        for (int c = 0; c < ba.cols; ++c)
            out.flat[ba.offset + static_cast<std::size_t>(r) * ba.cols + c] =
                work[static_cast<std::size_t>(r) * w + c];
    return out;
}

Image inverse(const WaveletCoeffs& coeffs, const WaveletFamily& family) {
    int height = coeffs.height, width = coeffs.width, levels = coeffs.levels;
    if (height != width) throw ShapeError("the 2D transform expects square images");
    if (coeffs.flat.size() != static_cast<std::size_t>(height) * width)
        throw ShapeError("coefficient vector length does not match the declared shape");
    check_levels(width, levels, family.support_length());
    std::vector<double> g = family.highpass();
    const std::vector<Band> bands = layout_2d(height, width, levels);

    std::vector<double> work(coeffs.flat.size(), 0.0);
    int w = width;
    const Band& ba = find_band(bands, levels, Orientation::approx);
    for (int r = 0; r < ba.rows; ++r)
        for (int c = 0; c < ba.cols; ++c)
            work[static_cast<std::size_t>(r) * w + c] =
                coeffs.flat[ba.offset + static_cast<std::size_t>(r) * ba.cols + c];

    for (int j = levels; j >= 1; --j) {
        int half = width >> j;
        const Band& bh = find_band(bands, j, Orientation::horizontal);
        const Band& bv = find_band(bands, j, Orientation::vertical);
        const Band& bd = find_band(bands, j, Orientation::diagonal);
        for (int r = 0; r < half; ++r) {
            for (int c = 0; c < half; ++c) {
                work[static_cast<std::size_t>(r) * w + c + half] =
                    coeffs.flat[bh.offset + static_cast<std::size_t>(r) * bh.cols + c];
                work[static_cast<std::size_t>(r + half) * w + c] =
                    coeffs.flat[bv.offset + static_cast<std::size_t>(r) * bv.cols + c];
                work[static_cast<std::size_t>(r + half) * w + c + half] =
                    coeffs.flat[bd.offset + static_cast<std::size_t>(r) * bd.cols + c];
            }
        }
        synthesize_block(work, w, 2 * half, family.lowpass, g);
    }
    return Image(height, width, std::move(work));
}

Image synthesize_atom(const SubbandIndex& idx, int height, int width,
                      const WaveletFamily& family, int levels) {
    WaveletCoeffs coeffs;
    coeffs.levels = levels;
    coeffs.height = height;
    coeffs.width = width;
    coeffs.flat.assign(static_cast<std::size_t>(height) * width, 0.0);
    coeffs.flat[flat_index(idx, height, width, levels)] = 1.0;
    return inverse(coeffs, family);
}

SupportBox support_box(const SubbandIndex& idx, const WaveletFamily& family) {
    if (idx.level < 1) throw IndexError("sub-band level must be at least 1");
    long scale = 1L << idx.level;
    long len = (family.support_length() - 1) * scale + 1;
    return {scale * idx.row, len, scale * idx.col, len};
}

long circular_box_distance(long start_a, long len_a, long start_b, long len_b, long n) {
    // Minimal gap between [start_a, start_a+len_a-1] and the three unwrapped
    // copies of the second interval.
    long a0 = start_a, a1 = start_a + len_a - 1;
    long best = n;
    for (long shift : {-n, 0L, n}) {
        long b0 = start_b + shift, b1 = start_b + shift + len_b - 1;
        long gap = 0;
        if (b0 > a1) gap = b0 - a1;
        else if (a0 > b1) gap = a0 - b1;
        best = std::min(best, gap);
    }
    return best;
}

}  // namespace wavblur
