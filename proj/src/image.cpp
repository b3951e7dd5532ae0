#include "wavblur/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "wavblur/errors.hpp"

namespace wavblur {

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void require_power_of_two(int h, int w) {
    if (!is_power_of_two(h) || !is_power_of_two(w))
        throw DimensionError("image dimensions must be powers of two, got " +
                             std::to_string(w) + "x" + std::to_string(h));
}

}  // namespace

Image::Image(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w, 0.0) {
    if (h <= 0 || w <= 0) throw DimensionError("image dimensions must be positive");
}

Image::Image(int h, int w, std::vector<double> values)
    : height(h), width(w), data(std::move(values)) {
    if (h <= 0 || w <= 0) throw DimensionError("image dimensions must be positive");
    if (data.size() != static_cast<std::size_t>(h) * w)
        throw DimensionError("pixel buffer size does not match dimensions");
}

ImageFormat format_from_path(const std::string& path) {
    std::size_t dot = path.find_last_of('.');
    if (dot != std::string::npos) {
        std::string ext = path.substr(dot + 1);
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (ext == "png") return ImageFormat::png;
    }
    return ImageFormat::pgm;
}

// ---------- PGM (binary P5, maxval 255) ----------

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string pgm_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {}
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

Image load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    if (pgm_token(in) != "P5") throw FormatError(path + ": not a binary PGM (P5)");
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(pgm_token(in));
        h = std::stoi(pgm_token(in));
        maxval = std::stoi(pgm_token(in));
    } catch (const std::exception&) {
        throw FormatError(path + ": malformed PGM header");
    }
    if (maxval != 255) throw FormatError(path + ": only maxval 255 supported");
    if (w <= 0 || h <= 0) throw FormatError(path + ": bad dimensions");
    require_power_of_two(h, w);
    std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size())
        throw FormatError(path + ": truncated pixel data");
    Image img(h, w);
    for (std::size_t i = 0; i < raw.size(); ++i) img.data[i] = raw[i] / 255.0;
    return img;
}

std::vector<unsigned char> quantize(const Image& img) {
    std::vector<unsigned char> raw(img.pixel_count());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        double x = img.data[i];
        if (!std::isfinite(x)) throw FormatError("non-finite pixel value at save time");
        x = std::clamp(x, 0.0, 1.0);
        raw[i] = static_cast<unsigned char>(std::floor(255.0 * x + 0.5));
    }
    return raw;
}

void save_pgm(const Image& img, const std::string& path) {
    std::vector<unsigned char> raw = quantize(img);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw IoError("write failed for " + path);
}

// ---------- PNG (8-bit grayscale) ----------

void png_error_to_exception(png_structp png, png_const_charp msg) {
    (void)msg;
    longjmp(png_jmpbuf(png), 1);
}

Image load_png_file(const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw IoError("cannot open " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                             png_error_to_exception, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw IoError("libpng initialization failed");
    }
    std::vector<unsigned char> raw;
    std::vector<png_bytep> rows;
    int w = 0, h = 0;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw FormatError(path + ": not a decodable PNG");
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    w = static_cast<int>(png_get_image_width(png, info));
    h = static_cast<int>(png_get_image_height(png, info));
    int depth = png_get_bit_depth(png, info);
    int color = png_get_color_type(png, info);
    if (color != PNG_COLOR_TYPE_GRAY || depth != 8) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw FormatError(path + ": only 8-bit grayscale PNG supported");
    }
    raw.resize(static_cast<std::size_t>(w) * h);
    rows.resize(h);
    for (int r = 0; r < h; ++r) rows[r] = raw.data() + static_cast<std::size_t>(r) * w;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);

    require_power_of_two(h, w);
    Image img(h, w);
    for (std::size_t i = 0; i < raw.size(); ++i) img.data[i] = raw[i] / 255.0;
    return img;
}

void save_png_file(const Image& img, const std::string& path) {
    std::vector<unsigned char> raw = quantize(img);
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw IoError("cannot write " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                              png_error_to_exception, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw IoError("libpng initialization failed");
    }
    std::vector<png_bytep> rows(img.height);
    for (int r = 0; r < img.height; ++r)
        rows[r] = raw.data() + static_cast<std::size_t>(r) * img.width;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw IoError("PNG write failed for " + path);
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    if (std::fclose(fp) != 0) throw IoError("close failed for " + path);
}

}  // namespace

Image load_image(const std::string& path, ImageFormat format) {
    Image img = (format == ImageFormat::pgm) ? load_pgm(path) : load_png_file(path);
    for (double x : img.data)
        if (!std::isfinite(x)) throw FormatError(path + ": non-finite pixel value");
    return img;
}

Image load_image(const std::string& path) { return load_image(path, format_from_path(path)); }

void save_image(const Image& img, const std::string& path, ImageFormat format) {
    if (format == ImageFormat::pgm)
        save_pgm(img, path);
    else
        save_png_file(img, path);
}

void save_image(const Image& img, const std::string& path) {
    save_image(img, path, format_from_path(path));
}

// ---------- noise ----------

namespace {

// Gaussian sampler with a stream that depends only on the seed, not on the
// standard library's normal_distribution implementation. Draws 53-bit
// uniforms from mt19937_64 and applies the polar-free trig transform.
class StableGaussian {
public:
    explicit StableGaussian(std::uint64_t seed) : rng_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    // In (0,1): (k + 0.5) * 2^-53 over the top 53 bits, never exactly 0 or 1.
    double uniform01() {
        std::uint64_t bits = rng_() >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1p-53;
    }

    std::mt19937_64 rng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace

Image add_noise(const Image& img, const NoiseModel& noise) {
    if (noise.sigma < 0.0) throw DomainError("noise sigma must be nonnegative");
    Image out = img;
    if (noise.sigma == 0.0) return out;
    StableGaussian gauss(noise.seed);
    for (double& x : out.data) x += noise.sigma * gauss.next();
    return out;
}

// ---------- metrics ----------

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double norm2_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

double snr_db(const Image& candidate, const Image& reference) {
    if (!candidate.same_shape(reference))
        throw DimensionError("snr_db requires images of the same shape");
    double err = norm2_diff(candidate.data, reference.data);
    if (err == 0.0) return std::numeric_limits<double>::infinity();
    return 20.0 * std::log10(norm2(reference.data) / err);
}

// ---------- synthetic scene ----------

Image synthetic_scene(int n) {
    require_power_of_two(n, n);
    Image img(n, n);
    double nd = n;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double x = 0.2 + 0.3 * (i + j) / (2.0 * nd);
            double di = i - 0.35 * nd, dj = j - 0.38 * nd;
            if (di * di + dj * dj <= 0.28 * nd * 0.28 * nd) x = 0.85;
            if (i >= 0.55 * nd && i < 0.80 * nd && j >= 0.15 * nd && j < 0.45 * nd) x = 0.10;
            double si = i - 0.70 * nd, sj = j - 0.72 * nd;
            if (si * si + sj * sj <= 0.06 * nd * 0.06 * nd) x = 0.95;
            double bi = i - 0.25 * nd, bj = j - 0.75 * nd;
            x += 0.25 * std::exp(-(bi * bi + bj * bj) / (2.0 * 0.10 * nd * 0.10 * nd));
            img.at(i, j) = x;
        }
    }
    // Three thin vertical bars of alternating brightness.
    for (int b = 0; b < 3; ++b) {
        int c0 = static_cast<int>(0.86 * nd) + 3 * b;
        double val = (b % 2 == 0) ? 0.75 : 0.30;
        for (int i = static_cast<int>(0.15 * nd); i < static_cast<int>(0.45 * nd); ++i)
            for (int j = c0; j < std::min(c0 + 2, n); ++j) img.at(i, j) = val;
    }
    for (double& x : img.data) x = std::clamp(x, 0.0, 1.0);
    return img;
}

}  // namespace wavblur
