#pragma once

#include <string>
#include <vector>

#include "wavblur/image.hpp"

namespace wavblur {

// Orthonormal compactly supported wavelet filters in closed form.
// The highpass is derived by the quadrature-mirror rule
// g[n] = (-1)^n h[L-1-n], so only the lowpass is stored.
struct WaveletFamily {
    std::string name;
    std::vector<double> lowpass;
    int vanishing_moments = 0;

    int support_length() const { return static_cast<int>(lowpass.size()); }
    std::vector<double> highpass() const;
};

// Known names: "haar" (M=1), "db2" (M=2), "db3" (M=3).
WaveletFamily wavelet_family(const std::string& name);

// Deepest decomposition that keeps an 8x8 coarse block, at least 1.
int default_levels(int n);

enum class Orientation { approx, horizontal, vertical, diagonal, detail };

char orientation_code(Orientation o);            // 'l','h','v','d'; 1D detail also maps to 'd'
Orientation orientation_from_code(char c, bool one_d);

// Position of one coefficient: level j in {1..J} with 1 the finest,
// orientation, and integer coordinates inside the sub-band (col is 0 in 1D).
struct SubbandIndex {
    int level = 0;
    Orientation orient = Orientation::approx;
    int row = 0;
    int col = 0;
};

// One sub-band inside the canonical flat coefficient vector.
struct Band {
    int level;
    Orientation orient;
    std::size_t offset;  // start inside the flat vector
    int rows;
    int cols;            // 1 in 1D
};

// Canonical flat ordering: coarsest first; at each level the order is
// l (level J only), h, v, d in 2D and approx then detail in 1D; positions are
// row-major inside a band. This ordering fixes what a row or column of the
// wavelet-domain operator matrix means.
std::vector<Band> layout_2d(int height, int width, int levels);
std::vector<Band> layout_1d(int n, int levels);

std::size_t flat_index(const SubbandIndex& idx, int height, int width, int levels);
SubbandIndex index_from_flat(std::size_t flat, int height, int width, int levels);

// Multilevel transform coefficients in the canonical flat ordering.
struct WaveletCoeffs {
    int levels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> flat;

    const std::vector<Band> bands() const { return layout_2d(height, width, levels); }
};

// Periodic (circular) filter-bank cascade; exactly orthonormal, so energy is
// preserved and the inverse is the transpose. Requires 2^levels to divide
// each dimension and the coarsest filtered length to cover the filter.
WaveletCoeffs forward(const Image& img, const WaveletFamily& family, int levels);
Image inverse(const WaveletCoeffs& coeffs, const WaveletFamily& family);

// 1D variants operating on plain vectors in the canonical 1D layout.
std::vector<double> forward_1d(const std::vector<double>& signal,
                               const WaveletFamily& family, int levels);
std::vector<double> inverse_1d(const std::vector<double>& coeffs,
                               const WaveletFamily& family, int levels);

// Inverse of the indicator coefficient vector: the basis atom itself.
// Unit norm, compactly supported up to periodic wrap.
Image synthesize_atom(const SubbandIndex& idx, int height, int width,
                      const WaveletFamily& family, int levels);

// Axis-aligned box guaranteed to contain an atom's support before periodic
// wrapping: per axis, start = 2^level * position and
// length = (support_length - 1) * 2^level + 1.
struct SupportBox {
    long row_start;
    long row_len;
    long col_start;
    long col_len;
};

SupportBox support_box(const SubbandIndex& idx, const WaveletFamily& family);

// Distance between two wrapped intervals on a circle of size n; 0 when they
// overlap. Used for coefficient decay checks.
long circular_box_distance(long start_a, long len_a, long start_b, long len_b, long n);

}  // namespace wavblur
