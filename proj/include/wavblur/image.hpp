#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace wavblur {

// Grayscale image with intensities nominally in [0,1], row-major storage.
// Values may leave [0,1] during processing (noise is not clamped); clamping
// happens only at save time.
struct Image {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Image() = default;
    Image(int h, int w);                             // zero-filled
    Image(int h, int w, std::vector<double> values); // takes ownership

    double& at(int row, int col) { return data[static_cast<std::size_t>(row) * width + col]; }
    double at(int row, int col) const { return data[static_cast<std::size_t>(row) * width + col]; }
    std::size_t pixel_count() const { return data.size(); }

    bool same_shape(const Image& other) const {
        return height == other.height && width == other.width;
    }
};

// Additive white Gaussian noise, reproducible from the seed.
struct NoiseModel {
    double sigma = 0.0;
    std::uint64_t seed = 0;
};

enum class ImageFormat { pgm, png };

// Deduces pgm/png from the file extension; defaults to pgm.
ImageFormat format_from_path(const std::string& path);

// 8-bit grayscale only; samples map linearly to [0,1]. Dimensions must be
// powers of two (the transforms downstream require it).
Image load_image(const std::string& path, ImageFormat format);
Image load_image(const std::string& path);

// Clamps to [0,1] and quantizes round-half-up to 8 bits.
void save_image(const Image& img, const std::string& path, ImageFormat format);
void save_image(const Image& img, const std::string& path);

// img + iid N(0, sigma^2) samples; the stream is fixed by the seed and stable
// across platforms (own Gaussian sampler, not the library one). Not clamped.
Image add_noise(const Image& img, const NoiseModel& noise);

// 20*log10(|ref| / |cand - ref|); +infinity when cand equals ref exactly.
double snr_db(const Image& candidate, const Image& reference);

// Deterministic synthetic grayscale scene (gradient, disks, bars, a smooth
// bump) used by tests and the demo pipeline. n must be a power of two.
Image synthetic_scene(int n);

// Euclidean norm and difference helpers shared across modules.
double norm2(const std::vector<double>& v);
double norm2_diff(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace wavblur
