#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "wavblur/kernel.hpp"
#include "wavblur/theta.hpp"
#include "wavblur/wavelet.hpp"

namespace wavblur {

// One column of a neighbourhood description: which coefficients around a
// source coefficient are linked to it. The scale selector picks the target
// level, the orientation selector picks bands there ('*' = every band present
// at that level), and (dy, dx) shift the mapped position inside the target
// band.
struct NeighborhoodEntry {
    enum class Scale { absolute, relative, same };
    Scale scale_kind = Scale::same;
    int scale = 0;  // level j for absolute, delta in {-1, +1} for relative
    char orientation = '*';  // 'l','h','v','d' or '*'
    int dy = 0;
    int dx = 0;
};

// Entries may be global or scoped to a source band via "[band j o]" sections.
// The self link (same scale, same orientation, no shift) is always implied.
struct NeighborhoodSpec {
    std::vector<NeighborhoodEntry> global;
    std::map<std::pair<int, char>, std::vector<NeighborhoodEntry>> per_band;
};

// Grammar, one entry per line:
//   <scale> <orientation> <dy> <dx>
// scale: integer level, "same", "+1" (finer by one), or "-1" (coarser by one)
// orientation: l | h | v | d | all
// '#' starts a comment; "[band j o]" opens a per-band section.
NeighborhoodSpec parse_neighborhood(const std::string& text);
NeighborhoodSpec load_neighborhood(const std::string& path);

// Boolean sparse support in the same compressed-row layout and canonical
// ordering as SparseTheta.
struct PatternMask {
    std::size_t dim = 0;
    std::vector<std::uint64_t> row_offsets;
    std::vector<std::uint64_t> cols;

    std::size_t nnz() const { return cols.size(); }
    bool contains(std::uint64_t row, std::uint64_t col) const;
};

// Expands the neighbourhood around every coefficient. Positions crossing
// scales map by halving (floor) toward coarser levels and doubling toward
// finer ones, shifts wrap periodically inside the target band, and the result
// is symmetrized so the masked operator class is closed under transposition.
PatternMask generate_mask(const NeighborhoodSpec& spec, int height, int width,
                          const WaveletFamily& family, int levels);

// Computes only the operator entries inside the mask; values match the
// corresponding entries of the full matrix.
SparseTheta build_theta_masked(const KernelSpec& spec, const PatternMask& mask,
                               const WaveletFamily& family, int levels);

}  // namespace wavblur
