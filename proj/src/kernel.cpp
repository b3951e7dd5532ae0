#include "wavblur/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "wavblur/errors.hpp"
#include "wavblur/kv.hpp"
#include "wavblur/parallel.hpp"
#include "wavblur/perf.hpp"

namespace wavblur {

namespace {

bool is_delta(const KernelSpec& spec) {
    return spec.kind == KernelKind::gaussian_constant && spec.sigma_min == 0.0;
}

// Unnormalized separable Gaussian taps exp(-d^2 / (2 sigma^2)) for
// d = 0..radius, with radius = floor(truncation * sigma).
struct RowTaps {
    int radius = 0;
    double inv_two_sigma2 = 0.0;
    double cutoff2 = 0.0;  // (truncation * sigma)^2, Euclidean cutoff
    std::vector<double> t;
};

RowTaps make_taps(double sigma, double truncation) {
    RowTaps taps;
    taps.radius = static_cast<int>(std::floor(truncation * sigma));
    taps.inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
    double cut = truncation * sigma;
    taps.cutoff2 = cut * cut;
    taps.t.resize(taps.radius + 1);
    for (int d = 0; d <= taps.radius; ++d)
        taps.t[d] = std::exp(-static_cast<double>(d) * d * taps.inv_two_sigma2);
    return taps;
}

void check_coords_2d(const KernelSpec& spec, int xr, int xc, int yr, int yc) {
    if (xr < 0 || xr >= spec.n || xc < 0 || xc >= spec.n || yr < 0 || yr >= spec.n ||
        yc < 0 || yc >= spec.n)
        throw DomainError("kernel coordinates outside the image domain");
}

const PsfStencil& nearest_stencil(const KernelSpec& spec, int xr, int xc) {
    // Anchors sit at the centers of an anchors_per_side grid of equal cells.
    int g = spec.anchors_per_side;
    double cell = static_cast<double>(spec.n) / g;
    int ar = std::min(g - 1, static_cast<int>(xr / cell));
    int ac = std::min(g - 1, static_cast<int>(xc / cell));
    return spec.stencils[static_cast<std::size_t>(ar) * g + ac];
}

}  // namespace

std::string KernelSpec::id() const {
    std::ostringstream out;
    switch (kind) {
        case KernelKind::gaussian_vertical_variance:
            out << "gaussian_vertical_variance n=" << n << " sigma=" << sigma_min << ".."
                << sigma_max << " trunc=" << truncation;
            break;
        case KernelKind::gaussian_constant:
            out << "gaussian_constant n=" << n << " sigma=" << sigma_min
                << " trunc=" << truncation;
            break;
        case KernelKind::custom_tabulated:
            out << "custom_tabulated n=" << n << " anchors=" << anchors_per_side;
            break;
    }
    return out.str();
}

void validate_kernel(const KernelSpec& spec) {
    if (spec.n < 1) throw DimensionError("kernel size must be positive");
    if (spec.kind == KernelKind::custom_tabulated) {
        if (spec.anchors_per_side < 1) throw DomainError("tabulated kernel needs anchors");
        if (spec.stencils.size() !=
            static_cast<std::size_t>(spec.anchors_per_side) * spec.anchors_per_side)
            throw DomainError("tabulated kernel stencil count does not match the grid");
        for (const PsfStencil& s : spec.stencils) {
            std::size_t side = 2 * static_cast<std::size_t>(s.radius) + 1;
            if (s.weights.size() != side * side)
                throw DomainError("stencil weight count does not match its radius");
        }
        return;
    }
    if (is_delta(spec)) return;  // sigma 0: analytic identity kernel
    if (!(spec.sigma_min > 0.0) || !(spec.sigma_min <= spec.sigma_max))
        throw DomainError("kernel needs 0 < sigma_min <= sigma_max");
    if (spec.truncation < 3.0)
        throw DomainError("truncation radius must be at least 3 sigmas");
}

double sigma_at(const KernelSpec& spec, int row) {
    if (spec.kind == KernelKind::gaussian_constant) return spec.sigma_min;
    if (spec.n == 1) return spec.sigma_min;
    double t = static_cast<double>(row) / (spec.n - 1);
    double var = spec.sigma_min * spec.sigma_min +
                 (spec.sigma_max * spec.sigma_max - spec.sigma_min * spec.sigma_min) * t;
    return std::sqrt(var);
}

// ---------- 2D evaluation ----------

double kernel_eval(const KernelSpec& spec, int x_row, int x_col, int y_row, int y_col) {
    check_coords_2d(spec, x_row, x_col, y_row, y_col);
    if (is_delta(spec)) return (x_row == y_row && x_col == y_col) ? 1.0 : 0.0;

    if (spec.kind == KernelKind::custom_tabulated) {
        const PsfStencil& st = nearest_stencil(spec, x_row, x_col);
        int dy = y_row - x_row, dx = y_col - x_col;
        if (std::abs(dy) > st.radius || std::abs(dx) > st.radius) return 0.0;
        int side = 2 * st.radius + 1;
        double w = st.weights[static_cast<std::size_t>(dy + st.radius) * side + (dx + st.radius)];
        // Normalize over the in-image part of the stencil.
        double mass = 0.0;
        for (int ry = -st.radius; ry <= st.radius; ++ry) {
            int yr = x_row + ry;
            if (yr < 0 || yr >= spec.n) continue;
            for (int rx = -st.radius; rx <= st.radius; ++rx) {
                int yc = x_col + rx;
                if (yc < 0 || yc >= spec.n) continue;
                mass += st.weights[static_cast<std::size_t>(ry + st.radius) * side +
                                   (rx + st.radius)];
            }
        }
        return mass > 0.0 ? w / mass : 0.0;
    }

    RowTaps taps = make_taps(sigma_at(spec, x_row), spec.truncation);
    int dy = y_row - x_row, dx = y_col - x_col;
    double d2 = static_cast<double>(dy) * dy + static_cast<double>(dx) * dx;
    if (d2 > taps.cutoff2) return 0.0;
    double mass = 0.0;
    for (int ry = -taps.radius; ry <= taps.radius; ++ry) {
        int yr = x_row + ry;
        if (yr < 0 || yr >= spec.n) continue;
        for (int rx = -taps.radius; rx <= taps.radius; ++rx) {
            int yc = x_col + rx;
            if (yc < 0 || yc >= spec.n) continue;
            if (static_cast<double>(ry) * ry + static_cast<double>(rx) * rx > taps.cutoff2)
                continue;
            mass += taps.t[std::abs(ry)] * taps.t[std::abs(rx)];
        }
    }
    return taps.t[std::abs(dy)] * taps.t[std::abs(dx)] / mass;
}

Image apply_exact(const KernelSpec& spec, const Image& img) {
    validate_kernel(spec);
    if (img.height != spec.n || img.width != spec.n)
        throw DimensionError("image size does not match the kernel's domain");
    if (is_delta(spec)) return img;

    Image out(spec.n, spec.n);
    const int n = spec.n;

    if (spec.kind == KernelKind::custom_tabulated) {
        parallel_for(static_cast<std::size_t>(n), [&](std::size_t row) {
            int xr = static_cast<int>(row);
            for (int xc = 0; xc < n; ++xc) {
                const PsfStencil& st = nearest_stencil(spec, xr, xc);
                int side = 2 * st.radius + 1;
                double acc = 0.0, mass = 0.0;
                for (int ry = -st.radius; ry <= st.radius; ++ry) {
                    int yr = xr + ry;
                    if (yr < 0 || yr >= n) continue;
                    for (int rx = -st.radius; rx <= st.radius; ++rx) {
                        int yc = xc + rx;
                        if (yc < 0 || yc >= n) continue;
                        double w = st.weights[static_cast<std::size_t>(ry + st.radius) * side +
                                              (rx + st.radius)];
                        acc += w * img.at(yr, yc);
                        mass += w;
                    }
                }
                out.at(xr, xc) = mass > 0.0 ? acc / mass : 0.0;
            }
        });
        return out;
    }

    // One tap table per output row; the PSF varies only with the row.
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t row) {
        int xr = static_cast<int>(row);
        RowTaps taps = make_taps(sigma_at(spec, xr), spec.truncation);
        int rad = taps.radius;
        std::uint64_t madds = 0;
        for (int xc = 0; xc < n; ++xc) {
            double acc = 0.0, mass = 0.0;
            for (int ry = -rad; ry <= rad; ++ry) {
                int yr = xr + ry;
                if (yr < 0 || yr >= n) continue;
                double ty = taps.t[std::abs(ry)];
                double ry2 = static_cast<double>(ry) * ry;
                for (int rx = -rad; rx <= rad; ++rx) {
                    int yc = xc + rx;
                    if (yc < 0 || yc >= n) continue;
                    if (ry2 + static_cast<double>(rx) * rx > taps.cutoff2) continue;
                    double w = ty * taps.t[std::abs(rx)];
                    acc += w * img.at(yr, yc);
                    mass += w;
                    madds += 2;
                }
            }
            out.at(xr, xc) = acc / mass;
        }
        perf::count_madds(madds);
    });
    return out;
}

Image apply_exact_adjoint(const KernelSpec& spec, const Image& img) {
    validate_kernel(spec);
    if (img.height != spec.n || img.width != spec.n)
        throw DimensionError("image size does not match the kernel's domain");
    if (is_delta(spec)) return img;

    const int n = spec.n;
    // (H^T w)(y) = sum_x K(x, y) w(x). Accumulate per input row to keep the
    // output writes disjoint: output row yr receives from source rows xr with
    // |yr - xr| <= radius(xr).
    // Precompute per-row normalizer maps once (K includes them).
    std::vector<RowTaps> taps(n);
    int max_rad = 0;
    for (int r = 0; r < n; ++r) {
        taps[r] = spec.kind == KernelKind::custom_tabulated
                      ? RowTaps{}
                      : make_taps(sigma_at(spec, r), spec.truncation);
        max_rad = std::max(max_rad, taps[r].radius);
    }

    if (spec.kind == KernelKind::custom_tabulated) {
        // Small-scale utility path: fall back to explicit kernel evaluation.
        Image out(n, n);
        for (int yr = 0; yr < n; ++yr)
            for (int yc = 0; yc < n; ++yc) {
                double acc = 0.0;
                for (int xr = 0; xr < n; ++xr)
                    for (int xc = 0; xc < n; ++xc)
                        acc += kernel_eval(spec, xr, xc, yr, yc) * img.at(xr, xc);
                out.at(yr, yc) = acc;
            }
        return out;
    }

    // Normalizer of every source pixel, computed once (depends on border
    // clipping around that pixel).
    Image mass(n, n);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t row) {
        int xr = static_cast<int>(row);
        const RowTaps& tp = taps[xr];
        for (int xc = 0; xc < n; ++xc) {
            double m = 0.0;
            for (int ry = -tp.radius; ry <= tp.radius; ++ry) {
                int yr = xr + ry;
                if (yr < 0 || yr >= n) continue;
                double ry2 = static_cast<double>(ry) * ry;
                for (int rx = -tp.radius; rx <= tp.radius; ++rx) {
                    int yc = xc + rx;
                    if (yc < 0 || yc >= n) continue;
                    if (ry2 + static_cast<double>(rx) * rx > tp.cutoff2) continue;
                    m += tp.t[std::abs(ry)] * tp.t[std::abs(rx)];
                }
            }
            mass.at(xr, xc) = m;
        }
    });

    Image out(n, n);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t orow) {
        int yr = static_cast<int>(orow);
        std::uint64_t madds = 0;
        for (int xr = std::max(0, yr - max_rad); xr < std::min(n, yr + max_rad + 1); ++xr) {
            const RowTaps& tp = taps[xr];
            int ry = yr - xr;
            if (std::abs(ry) > tp.radius) continue;
            double ty = tp.t[std::abs(ry)];
            double ry2 = static_cast<double>(ry) * ry;
            for (int xc = 0; xc < n; ++xc) {
                double w_row = img.at(xr, xc) / mass.at(xr, xc);
                for (int rx = -tp.radius; rx <= tp.radius; ++rx) {
                    int yc = xc + rx;
                    if (yc < 0 || yc >= n) continue;
                    if (ry2 + static_cast<double>(rx) * rx > tp.cutoff2) continue;
                    out.at(yr, yc) += ty * tp.t[std::abs(rx)] * w_row;
                    ++madds;
                }
            }
        }
        perf::count_madds(madds);
    });
    return out;
}

// ---------- 1D analogue ----------

double kernel_eval_1d(const KernelSpec& spec, int x, int y) {
    if (x < 0 || x >= spec.n || y < 0 || y >= spec.n)
        throw DomainError("kernel coordinates outside the signal domain");
    if (is_delta(spec)) return x == y ? 1.0 : 0.0;
    if (spec.kind == KernelKind::custom_tabulated)
        throw DomainError("tabulated kernels have no 1D analogue");
    RowTaps taps = make_taps(sigma_at(spec, x), spec.truncation);
    if (std::abs(y - x) > taps.radius) return 0.0;
    double mass = 0.0;
    for (int r = -taps.radius; r <= taps.radius; ++r) {
        int yy = x + r;
        if (yy < 0 || yy >= spec.n) continue;
        mass += taps.t[std::abs(r)];
    }
    return taps.t[std::abs(y - x)] / mass;
}

std::vector<double> apply_exact_1d(const KernelSpec& spec, const std::vector<double>& signal) {
    validate_kernel(spec);
    if (static_cast<int>(signal.size()) != spec.n)
        throw DimensionError("signal length does not match the kernel's domain");
    if (is_delta(spec)) return signal;
    if (spec.kind == KernelKind::custom_tabulated)
        throw DomainError("tabulated kernels have no 1D analogue");
    const int n = spec.n;
    std::vector<double> out(signal.size(), 0.0);
    for (int x = 0; x < n; ++x) {
        RowTaps taps = make_taps(sigma_at(spec, x), spec.truncation);
        double acc = 0.0, mass = 0.0;
        for (int r = -taps.radius; r <= taps.radius; ++r) {
            int y = x + r;
            if (y < 0 || y >= n) continue;
            double w = taps.t[std::abs(r)];
            acc += w * signal[y];
            mass += w;
        }
        out[x] = acc / mass;
        perf::count_madds(2 * taps.radius + 1);
    }
    return out;
}

// ---------- serialization ----------

KernelSpec parse_kernel(const std::string& text) {
    KvMap kv = parse_kv(text);
    KernelSpec spec;
    std::string kind = kv_string(kv, "kind");
    if (kind == "gaussian_vertical_variance") {
        spec.kind = KernelKind::gaussian_vertical_variance;
        spec.sigma_min = kv_double(kv, "sigma_min");
        spec.sigma_max = kv_double(kv, "sigma_max");
    } else if (kind == "gaussian_constant") {
        spec.kind = KernelKind::gaussian_constant;
        double sigma = kv_has(kv, "sigma") ? kv_double(kv, "sigma") : kv_double(kv, "sigma_min");
        spec.sigma_min = spec.sigma_max = sigma;
    } else {
        throw FormatError("unknown or non-serializable kernel kind: " + kind);
    }
    spec.n = static_cast<int>(kv_long(kv, "N"));
    if (kv_has(kv, "truncation")) spec.truncation = kv_double(kv, "truncation");
    validate_kernel(spec);
    return spec;
}

KernelSpec load_kernel(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_kernel(buf.str());
}

std::string format_kernel(const KernelSpec& spec) {
    KvMap kv;
    switch (spec.kind) {
        case KernelKind::gaussian_vertical_variance:
            kv["kind"] = "gaussian_vertical_variance";
            break;
        case KernelKind::gaussian_constant:
            kv["kind"] = "gaussian_constant";
            break;
        case KernelKind::custom_tabulated:
            throw FormatError("tabulated kernels have no text form");
    }
    std::ostringstream smin, smax, trunc;
    smin.precision(17);
    smax.precision(17);
    trunc.precision(17);
    smin << spec.sigma_min;
    smax << spec.sigma_max;
    trunc << spec.truncation;
    kv["sigma_min"] = smin.str();
    kv["sigma_max"] = smax.str();
    kv["truncation"] = trunc.str();
    kv["N"] = std::to_string(spec.n);
    return format_kv(kv);
}

void save_kernel(const KernelSpec& spec, const std::string& path) {
    std::string text = format_kernel(spec);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    if (!out) throw IoError("write failed for " + path);
}

KernelSpec desk_kernel() {
    KernelSpec spec;
    spec.kind = KernelKind::gaussian_vertical_variance;
    spec.n = 64;
    spec.sigma_min = 0.8;
    spec.sigma_max = 3.0;
    spec.truncation = 4.0;
    return spec;
}

KernelSpec tabulate_kernel(const KernelSpec& source, int anchors_per_side) {
    validate_kernel(source);
    if (source.kind == KernelKind::custom_tabulated)
        throw DomainError("source kernel is already tabulated");
    if (anchors_per_side < 1) throw DomainError("need at least one anchor per side");
    KernelSpec spec;
    spec.kind = KernelKind::custom_tabulated;
    spec.n = source.n;
    spec.truncation = source.truncation;
    spec.anchors_per_side = anchors_per_side;
    double cell = static_cast<double>(source.n) / anchors_per_side;
    for (int ar = 0; ar < anchors_per_side; ++ar) {
        int row = std::min(source.n - 1, static_cast<int>((ar + 0.5) * cell));
        RowTaps taps = make_taps(sigma_at(source, row), source.truncation);
        PsfStencil st;
        st.radius = taps.radius;
        int side = 2 * taps.radius + 1;
        st.weights.assign(static_cast<std::size_t>(side) * side, 0.0);
        for (int dy = -taps.radius; dy <= taps.radius; ++dy)
            for (int dx = -taps.radius; dx <= taps.radius; ++dx) {
                if (static_cast<double>(dy) * dy + static_cast<double>(dx) * dx >
                    taps.cutoff2)
                    continue;
                st.weights[static_cast<std::size_t>(dy + taps.radius) * side +
                           (dx + taps.radius)] = taps.t[std::abs(dy)] * taps.t[std::abs(dx)];
            }
        for (int ac = 0; ac < anchors_per_side; ++ac) spec.stencils.push_back(st);
    }
    validate_kernel(spec);
    return spec;
}

}  // namespace wavblur
