#pragma once

#include <string>
#include <vector>

#include "wavblur/image.hpp"

namespace wavblur {

enum class KernelKind {
    gaussian_vertical_variance,  // variance interpolated linearly top to bottom
    gaussian_constant,           // single sigma everywhere (0 = identity)
    custom_tabulated,            // sampled PSF grid, nearest-anchor lookup
};

// One tabulated PSF: square stencil of half-width radius, row-major weights.
struct PsfStencil {
    int radius = 0;
    std::vector<double> weights;  // (2*radius+1)^2 entries
};

// Spatially varying blur described by a per-location PSF. The blur acts on an
// n x n image (or length-n signal in the 1D analogue). PSFs are truncated at
// truncation * local sigma (Euclidean cutoff) and at the image border; each
// output row of the operator is renormalized to unit mass, so constants map
// to constants.
struct KernelSpec {
    KernelKind kind = KernelKind::gaussian_vertical_variance;
    int n = 0;
    double sigma_min = 0.0;
    double sigma_max = 0.0;
    double truncation = 4.0;

    // custom_tabulated only: anchors_per_side^2 stencils, row-major over the
    // anchor grid; each output pixel uses the nearest anchor's stencil.
    int anchors_per_side = 0;
    std::vector<PsfStencil> stencils;

    // Short identifier stored in operator metadata.
    std::string id() const;
};

// Enforces the documented invariants (positive sigmas except the
// gaussian_constant sigma = 0 identity case, truncation >= 3, sane sizes).
void validate_kernel(const KernelSpec& spec);

// Local PSF standard deviation at a given output row (or 1D position):
// sigma(r)^2 interpolates linearly between sigma_min^2 and sigma_max^2.
double sigma_at(const KernelSpec& spec, int row);

// K(x, y): weight the blur at output pixel x gives to input pixel y,
// including the unit-mass normalization of row x. Zero outside the truncation
// radius. Coordinates must lie in [0, n)^2.
double kernel_eval(const KernelSpec& spec, int x_row, int x_col, int y_row, int y_col);

// (Hu)(x) = sum_y K(x, y) u(y) over the truncated support. Linear; constants
// map to constants.
Image apply_exact(const KernelSpec& spec, const Image& img);

// Transpose of apply_exact: <Hu, w> = <u, H^T w>.
Image apply_exact_adjoint(const KernelSpec& spec, const Image& img);

// 1D analogue acting on length-n signals, same sigma profile along the
// coordinate. Used by the coefficient-decay verification.
double kernel_eval_1d(const KernelSpec& spec, int x, int y);
std::vector<double> apply_exact_1d(const KernelSpec& spec, const std::vector<double>& signal);

// Key-value text form (kind, sigma_min, sigma_max, truncation, N; a single
// "sigma" key is accepted for gaussian_constant). custom_tabulated kernels
// have no text form.
KernelSpec parse_kernel(const std::string& text);
KernelSpec load_kernel(const std::string& path);
std::string format_kernel(const KernelSpec& spec);
void save_kernel(const KernelSpec& spec, const std::string& path);

// The compact reference kernel used by tests and the demo pipeline:
// n = 64, sigma 0.8 -> 3.0, truncation 4.
KernelSpec desk_kernel();

// Builds a custom_tabulated kernel by sampling another kernel's PSFs on an
// anchors_per_side grid.
KernelSpec tabulate_kernel(const KernelSpec& source, int anchors_per_side);

}  // namespace wavblur
