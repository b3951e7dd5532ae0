#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wavblur/image.hpp"
#include "wavblur/kernel.hpp"
#include "wavblur/wavelet.hpp"

namespace wavblur {

// Magnitudes below this are treated as exact zeros when assembling sparse
// operators; keeps "full" matrices genuinely sparse where the kernel
// truncation forces zeros.
inline constexpr double kThetaFloor = 1e-14;

struct ThetaMeta {
    std::string family;     // wavelet family name
    int levels = 0;
    std::string kernel_id;  // source kernel identifier
    std::string budget;     // "full", "k=<n>", or "" when unknown (after load)
};

// Blur operator expressed in the orthonormal wavelet basis, compressed sparse
// row, rows and columns both in the canonical flat coefficient ordering.
// Immutable after construction.
struct SparseTheta {
    std::size_t dim = 0;
    std::vector<std::uint64_t> row_offsets;  // dim + 1
    std::vector<std::uint64_t> cols;         // strictly increasing per row
    std::vector<double> values;              // all nonzero
    ThetaMeta meta;

    std::size_t nnz() const { return values.size(); }
};

// Column c equals forward(apply_exact(atom c)); entries below kThetaFloor are
// dropped. The result represents the blur exactly on the basis span.
SparseTheta build_theta(const KernelSpec& spec, const WaveletFamily& family, int levels);

// 1D analogue over length-n signals (rows/cols in the 1D canonical layout).
SparseTheta build_theta_1d(const KernelSpec& spec, const WaveletFamily& family, int levels);

// Keeps the k * dim largest-magnitude entries. Ties at the cutoff magnitude
// are broken by (row, col) lexicographic order, smallest kept first, so the
// output is bit-reproducible. Budgets beyond nnz return the input unchanged.
SparseTheta threshold_theta(const SparseTheta& theta, std::uint64_t k);

// Same selection for several budgets in one pass over the magnitudes.
std::vector<SparseTheta> threshold_theta_multi(const SparseTheta& theta,
                                               const std::vector<std::uint64_t>& ks);

// inverse(Theta * forward(img)): two transforms plus one sparse matvec.
Image apply_theta(const SparseTheta& theta, const Image& img,
                  const WaveletFamily& family, int levels);

// Transpose counterpart, same cost.
Image apply_theta_adjoint(const SparseTheta& theta, const Image& img,
                          const WaveletFamily& family, int levels);

// Max over trials of |Hu - approx(u)| / |Hu| for seeded unit-norm Gaussian
// images u. Deterministic given the seed.
double operator_error(const SparseTheta& theta, const KernelSpec& spec,
                      int trials, std::uint64_t seed);

// Decay of wavelet coefficients of the blur with distance between atom
// supports. For every same-or-cross-scale detail pair with positive support
// distance, bound_factor is
//   min(|I|/|I'|, |I'|/|I|)^(1/2) * (min(|I|, |I'|) / dist)^(M+1)
// with |I| the support-box length. fitted_c = max |theta| / bound_factor, so
// |theta| <= fitted_c * bound_factor holds for every recorded pair.
struct DecayRecord {
    std::uint64_t row = 0;
    std::uint64_t col = 0;
    double magnitude = 0.0;
    double bound_factor = 0.0;
    double ratio = 0.0;  // magnitude / bound_factor
};

struct DecayReport {
    std::vector<DecayRecord> records;
    double fitted_c = 0.0;
    std::uint64_t violations = 0;  // pairs with magnitude > fitted_c * bound_factor
    // Least-squares slope of log(envelope magnitude) against log(dist/|I|)
    // over finest-level detail pairs, envelope = max magnitude per distance.
    // Polynomial decay of order M+1 shows as slope <= -(M+1).
    double slope = 0.0;
    std::uint64_t far_pairs = 0;       // same-scale pairs separated beyond kernel reach
    std::uint64_t far_nonzero = 0;     // those with |theta| above the floor (expect 0)
};

// Builds the full 1D operator matrix and measures the decay above.
// Throws DegenerateError when no pair has positive support distance.
DecayReport verify_decay_1d(const KernelSpec& spec, const WaveletFamily& family, int levels);

// Binary container: magic "WBTH", version, dim, nnz, levels, family, kernel
// id, CSR arrays, trailing CRC32. Little-endian. Round trips are lossless.
void save_theta(const SparseTheta& theta, const std::string& path);
SparseTheta load_theta(const std::string& path);

}  // namespace wavblur
