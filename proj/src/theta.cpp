#include "wavblur/theta.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>

#include "wavblur/errors.hpp"
#include "wavblur/parallel.hpp"
#include "wavblur/perf.hpp"

namespace wavblur {

namespace {

// Shared column-wise builder for the full and masked constructions. Columns
// are independent; each worker fills its own slot and the CSR assembly runs
// serially in index order, so the result does not depend on scheduling.
struct ColumnEntries {
    std::vector<std::uint64_t> rows;
    std::vector<double> values;
};

SparseTheta assemble_from_columns(std::size_t dim, std::vector<ColumnEntries>& columns,
                                  ThetaMeta meta) {
    SparseTheta theta;
    theta.dim = dim;
    theta.meta = std::move(meta);
    std::vector<std::uint64_t> row_counts(dim, 0);
    std::size_t nnz = 0;
    for (const ColumnEntries& col : columns) {
        for (std::uint64_t r : col.rows) ++row_counts[r];
        nnz += col.rows.size();
    }
    theta.row_offsets.assign(dim + 1, 0);
    for (std::size_t r = 0; r < dim; ++r)
        theta.row_offsets[r + 1] = theta.row_offsets[r] + row_counts[r];
    theta.cols.resize(nnz);
    theta.values.resize(nnz);
    std::vector<std::uint64_t> cursor(theta.row_offsets.begin(), theta.row_offsets.end() - 1);
    // Visiting columns in increasing order keeps each row's columns sorted.
    for (std::size_t c = 0; c < columns.size(); ++c) {
        const ColumnEntries& col = columns[c];
        for (std::size_t i = 0; i < col.rows.size(); ++i) {
            std::uint64_t r = col.rows[i];
            theta.cols[cursor[r]] = c;
            theta.values[cursor[r]] = col.values[i];
            ++cursor[r];
        }
        // Free as we go; full columns of a desk-size build are sizable.
        ColumnEntries().rows.swap(columns[c].rows);
        ColumnEntries().values.swap(columns[c].values);
    }
    return theta;
}

void check_meta(const SparseTheta& theta, const WaveletFamily& family, int levels) {
    if (!theta.meta.family.empty() && theta.meta.family != family.name)
        throw MetaMismatch("operator was built with wavelet family " + theta.meta.family +
                           ", not " + family.name);
    if (theta.meta.levels != 0 && theta.meta.levels != levels)
        throw MetaMismatch("operator was built with " + std::to_string(theta.meta.levels) +
                           " levels, not " + std::to_string(levels));
}

int side_from_dim(std::size_t dim) {
    int n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(dim))));
    if (static_cast<std::size_t>(n) * n != dim)
        throw DimensionError("operator dimension is not a square pixel count");
    return n;
}

}  // namespace

SparseTheta build_theta(const KernelSpec& spec, const WaveletFamily& family, int levels) {
    validate_kernel(spec);
    const int n = spec.n;
    const std::size_t dim = static_cast<std::size_t>(n) * n;
    std::vector<ColumnEntries> columns(dim);
    parallel_for(dim, [&](std::size_t c) {
        SubbandIndex idx = index_from_flat(c, n, n, levels);
        Image atom = synthesize_atom(idx, n, n, family, levels);
        WaveletCoeffs col = forward(apply_exact(spec, atom), family, levels);
        ColumnEntries& out = columns[c];
        for (std::size_t r = 0; r < col.flat.size(); ++r) {
            if (std::fabs(col.flat[r]) >= kThetaFloor) {
                out.rows.push_back(r);
                out.values.push_back(col.flat[r]);
            }
        }
    });
    return assemble_from_columns(dim, columns,
                                 ThetaMeta{family.name, levels, spec.id(), "full"});
}

SparseTheta build_theta_1d(const KernelSpec& spec, const WaveletFamily& family, int levels) {
    validate_kernel(spec);
    const int n = spec.n;
    const std::size_t dim = static_cast<std::size_t>(n);
    std::vector<ColumnEntries> columns(dim);
    parallel_for(dim, [&](std::size_t c) {
        std::vector<double> e(dim, 0.0);
        e[c] = 1.0;
        std::vector<double> atom = inverse_1d(e, family, levels);
        std::vector<double> col = forward_1d(apply_exact_1d(spec, atom), family, levels);
        ColumnEntries& out = columns[c];
        for (std::size_t r = 0; r < col.size(); ++r) {
            if (std::fabs(col[r]) >= kThetaFloor) {
                out.rows.push_back(r);
                out.values.push_back(col[r]);
            }
        }
    });
    return assemble_from_columns(dim, columns,
                                 ThetaMeta{family.name, levels, spec.id() + " 1d", "full"});
}

// ---------- thresholding ----------

namespace {

// Keeps entries with magnitude above cutoff, plus the first tie_budget
// entries equal to cutoff in CSR scan order (which is exactly (row, col)
// lexicographic order).
SparseTheta filter_by_cutoff(const SparseTheta& theta, double cutoff,
                             std::uint64_t tie_budget, std::string budget_label) {
    SparseTheta out;
    out.dim = theta.dim;
    out.meta = theta.meta;
    out.meta.budget = std::move(budget_label);
    out.row_offsets.assign(theta.dim + 1, 0);
    std::uint64_t ties_taken = 0;
    for (std::size_t r = 0; r < theta.dim; ++r) {
        for (std::uint64_t i = theta.row_offsets[r]; i < theta.row_offsets[r + 1]; ++i) {
            double mag = std::fabs(theta.values[i]);
            bool keep = mag > cutoff;
            if (!keep && mag == cutoff && ties_taken < tie_budget) {
                keep = true;
                ++ties_taken;
            }
            if (keep) {
                out.cols.push_back(theta.cols[i]);
                out.values.push_back(theta.values[i]);
            }
        }
        out.row_offsets[r + 1] = out.cols.size();
    }
    return out;
}

}  // namespace

SparseTheta threshold_theta(const SparseTheta& theta, std::uint64_t k) {
    if (k < 1) throw DomainError("entry budget must be at least 1");
    std::uint64_t target = k * theta.dim;
    std::string label = "k=" + std::to_string(k);
    if (theta.nnz() <= target) {
        SparseTheta out = theta;
        out.meta.budget = label;
        return out;
    }
    std::vector<double> mags(theta.values.size());
    for (std::size_t i = 0; i < mags.size(); ++i) mags[i] = std::fabs(theta.values[i]);
    std::nth_element(mags.begin(), mags.begin() + (target - 1), mags.end(),
                     std::greater<double>());
    double cutoff = mags[target - 1];
    std::uint64_t above = 0;
    for (double v : theta.values)
        if (std::fabs(v) > cutoff) ++above;
    return filter_by_cutoff(theta, cutoff, target - above, label);
}

std::vector<SparseTheta> threshold_theta_multi(const SparseTheta& theta,
                                               const std::vector<std::uint64_t>& ks) {
    // One sorted magnitude array serves every budget.
    std::vector<double> mags(theta.values.size());
    for (std::size_t i = 0; i < mags.size(); ++i) mags[i] = std::fabs(theta.values[i]);
    std::sort(mags.begin(), mags.end(), std::greater<double>());
    std::vector<SparseTheta> out;
    out.reserve(ks.size());
    for (std::uint64_t k : ks) {
        if (k < 1) throw DomainError("entry budget must be at least 1");
        std::uint64_t target = k * theta.dim;
        std::string label = "k=" + std::to_string(k);
        if (theta.nnz() <= target) {
            SparseTheta copy = theta;
            copy.meta.budget = label;
            out.push_back(std::move(copy));
            continue;
        }
        double cutoff = mags[target - 1];
        std::uint64_t above =
            std::lower_bound(mags.begin(), mags.end(), cutoff, std::greater<double>()) -
            mags.begin();
        out.push_back(filter_by_cutoff(theta, cutoff, target - above, label));
    }
    return out;
}

// ---------- application ----------

namespace {

std::vector<double> spmv(const SparseTheta& theta, const std::vector<double>& x) {
    std::vector<double> y(theta.dim, 0.0);
    for (std::size_t r = 0; r < theta.dim; ++r) {
        double acc = 0.0;
        for (std::uint64_t i = theta.row_offsets[r]; i < theta.row_offsets[r + 1]; ++i)
            acc += theta.values[i] * x[theta.cols[i]];
        y[r] = acc;
    }
    perf::count_madds(theta.nnz());
    return y;
}

std::vector<double> spmv_transpose(const SparseTheta& theta, const std::vector<double>& x) {
    std::vector<double> y(theta.dim, 0.0);
    for (std::size_t r = 0; r < theta.dim; ++r) {
        double xr = x[r];
        if (xr == 0.0) continue;
        for (std::uint64_t i = theta.row_offsets[r]; i < theta.row_offsets[r + 1]; ++i)
            y[theta.cols[i]] += theta.values[i] * xr;
    }
    perf::count_madds(theta.nnz());
    return y;
}

}  // namespace

Image apply_theta(const SparseTheta& theta, const Image& img, const WaveletFamily& family,
                  int levels) {
    if (img.pixel_count() != theta.dim)
        throw DimensionError("image pixel count does not match the operator dimension");
    check_meta(theta, family, levels);
    WaveletCoeffs coeffs = forward(img, family, levels);
    coeffs.flat = spmv(theta, coeffs.flat);
    return inverse(coeffs, family);
}

Image apply_theta_adjoint(const SparseTheta& theta, const Image& img,
                          const WaveletFamily& family, int levels) {
    if (img.pixel_count() != theta.dim)
        throw DimensionError("image pixel count does not match the operator dimension");
    check_meta(theta, family, levels);
    WaveletCoeffs coeffs = forward(img, family, levels);
    coeffs.flat = spmv_transpose(theta, coeffs.flat);
    return inverse(coeffs, family);
}

double operator_error(const SparseTheta& theta, const KernelSpec& spec, int trials,
                      std::uint64_t seed) {
    if (trials < 1) throw DomainError("need at least one trial");
    if (theta.meta.family.empty() || theta.meta.levels == 0)
        throw MetaMismatch("operator metadata lacks the wavelet family or depth");
    WaveletFamily family = wavelet_family(theta.meta.family);
    int levels = theta.meta.levels;
    int n = side_from_dim(theta.dim);
    if (n != spec.n) throw DimensionError("kernel size does not match the operator");
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        Image u = add_noise(Image(n, n), NoiseModel{1.0, seed + static_cast<std::uint64_t>(t)});
        double nu = norm2(u.data);
        for (double& x : u.data) x /= nu;
        Image exact = apply_exact(spec, u);
        Image approx = apply_theta(theta, u, family, levels);
        double denom = norm2(exact.data);
        double err = norm2_diff(exact.data, approx.data) / denom;
        worst = std::max(worst, err);
    }
    return worst;
}

// ---------- decay measurement ----------

DecayReport verify_decay_1d(const KernelSpec& spec, const WaveletFamily& family, int levels) {
    validate_kernel(spec);
    if (spec.kind == KernelKind::custom_tabulated)
        throw DomainError("tabulated kernels have no 1D analogue");
    const int n = spec.n;
    SparseTheta theta = build_theta_1d(spec, family, levels);

    // Dense magnitude lookup for pair sweeps.
    std::vector<double> dense(static_cast<std::size_t>(n) * n, 0.0);
    for (std::size_t r = 0; r < theta.dim; ++r)
        for (std::uint64_t i = theta.row_offsets[r]; i < theta.row_offsets[r + 1]; ++i)
            dense[r * theta.dim + theta.cols[i]] = theta.values[i];

    const std::vector<Band> bands = layout_1d(n, levels);
    struct Info {
        int level;
        bool detail;
        long start;
        long len;
    };
    std::vector<Info> info(n);
    for (const Band& b : bands) {
        for (int p = 0; p < b.rows; ++p) {
            long scale = 1L << b.level;
            long len = (family.support_length() - 1) * scale + 1;
            info[b.offset + p] = {b.level, b.orient != Orientation::approx, scale * p, len};
        }
    }

    // The blur reaches at most this many pixels from a source; box distance
    // beyond it forces exact zeros.
    long reach = static_cast<long>(std::floor(spec.truncation * sigma_at(spec, n - 1)));

    DecayReport report;
    const int M = family.vanishing_moments;
    // Envelope of |theta| per (level, distance) over same-scale detail pairs.
    std::map<std::pair<int, long>, double> envelope;
    for (int r = 0; r < n; ++r) {
        if (!info[r].detail) continue;
        for (int c = 0; c < n; ++c) {
            if (!info[c].detail) continue;
            long d = circular_box_distance(info[r].start, info[r].len, info[c].start,
                                           info[c].len, n);
            if (d <= 0) continue;
            double mag = std::fabs(dense[static_cast<std::size_t>(r) * n + c]);
            double li = static_cast<double>(info[r].len);
            double lj = static_cast<double>(info[c].len);
            double ratio_len = std::min(li / lj, lj / li);
            double bound = std::sqrt(ratio_len) *
                           std::pow(std::min(li, lj) / static_cast<double>(d), M + 1);
            report.records.push_back(
                {static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(c), mag, bound,
                 mag / bound});
            if (info[r].level == info[c].level) {
                if (d > reach) {
                    ++report.far_pairs;
                    if (mag >= kThetaFloor) ++report.far_nonzero;
                } else if (mag >= kThetaFloor) {
                    auto key = std::make_pair(info[r].level, d);
                    auto it = envelope.find(key);
                    if (it == envelope.end() || it->second < mag) envelope[key] = mag;
                }
            }
        }
    }
    if (report.records.empty())
        throw DegenerateError("no separated coefficient pairs; signal too short");

    for (const DecayRecord& rec : report.records)
        report.fitted_c = std::max(report.fitted_c, rec.ratio);
    // Compare the stored ratios rather than re-multiplying, so the pair that
    // defines fitted_c cannot trip the count through rounding.
    for (const DecayRecord& rec : report.records)
        if (rec.ratio > report.fitted_c) ++report.violations;

    // Slope of the finest-level envelope: log(max |theta|) against
    // log(dist / support length). The finest level has the widest usable
    // distance range; coarser levels barely separate before diagonals vanish
    // under the kernel truncation, so they would only blur the fit.
    std::vector<std::pair<double, double>> pts;
    for (const auto& [key, mag] : envelope) {
        if (key.first != 1) continue;
        double li = static_cast<double>(family.support_length() - 1) * 2 + 1;
        pts.push_back({std::log(static_cast<double>(key.second) / li), std::log(mag)});
    }
    if (pts.size() < 2)
        throw DegenerateError("not enough separated finest-level pairs for a decay fit");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [x, y] : pts) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double m = pts.size();
    report.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    return report;
}

// ---------- serialization ----------

namespace {

constexpr char kMagic[4] = {'W', 'B', 'T', 'H'};
constexpr std::uint32_t kVersion = 1;

class CrcWriter {
public:
    explicit CrcWriter(const std::string& path) : out_(path, std::ios::binary), path_(path) {
        if (!out_) throw IoError("cannot write " + path);
    }

    void write(const void* data, std::size_t size) {
        out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
        if (!out_) throw IoError("write failed for " + path_);
        crc_ = crc32(crc_, static_cast<const Bytef*>(data), static_cast<uInt>(size));
    }

    template <typename T>
    void write_pod(T value) {
        write(&value, sizeof(T));
    }

    void finish() {
        std::uint32_t crc = static_cast<std::uint32_t>(crc_);
        out_.write(reinterpret_cast<const char*>(&crc), sizeof(crc));
        out_.close();
        if (!out_) throw IoError("write failed for " + path_);
    }

private:
    std::ofstream out_;
    std::string path_;
    uLong crc_ = crc32(0L, Z_NULL, 0);
};

class CrcReader {
public:
    explicit CrcReader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw IoError("cannot open " + path);
    }

    void read(void* data, std::size_t size) {
        in_.read(static_cast<char*>(data), static_cast<std::streamsize>(size));
        if (static_cast<std::size_t>(in_.gcount()) != size)
            throw FormatError(path_ + ": truncated operator file");
        crc_ = crc32(crc_, static_cast<const Bytef*>(data), static_cast<uInt>(size));
    }

    template <typename T>
    T read_pod() {
        T value;
        read(&value, sizeof(T));
        return value;
    }

    void check_crc() {
        std::uint32_t stored;
        in_.read(reinterpret_cast<char*>(&stored), sizeof(stored));
        if (static_cast<std::size_t>(in_.gcount()) != sizeof(stored))
            throw FormatError(path_ + ": truncated operator file");
        if (stored != static_cast<std::uint32_t>(crc_))
            throw ChecksumError(path_ + ": checksum mismatch");
        // Trailing garbage also counts as a malformed file.
        char extra;
        if (in_.read(&extra, 1))
            throw FormatError(path_ + ": trailing bytes after checksum");
    }

private:
    std::ifstream in_;
    std::string path_;
    uLong crc_ = crc32(0L, Z_NULL, 0);
};

}  // namespace

void save_theta(const SparseTheta& theta, const std::string& path) {
    CrcWriter w(path);
    w.write(kMagic, sizeof(kMagic));
    w.write_pod<std::uint32_t>(kVersion);
    w.write_pod<std::uint64_t>(theta.dim);
    w.write_pod<std::uint64_t>(theta.nnz());
    w.write_pod<std::uint32_t>(static_cast<std::uint32_t>(theta.meta.levels));
    w.write_pod<std::uint32_t>(static_cast<std::uint32_t>(theta.meta.family.size()));
    w.write(theta.meta.family.data(), theta.meta.family.size());
    w.write_pod<std::uint32_t>(static_cast<std::uint32_t>(theta.meta.kernel_id.size()));
    w.write(theta.meta.kernel_id.data(), theta.meta.kernel_id.size());
    w.write(theta.row_offsets.data(), theta.row_offsets.size() * sizeof(std::uint64_t));
    w.write(theta.cols.data(), theta.cols.size() * sizeof(std::uint64_t));
    w.write(theta.values.data(), theta.values.size() * sizeof(double));
    w.finish();
}

SparseTheta load_theta(const std::string& path) {
    CrcReader r(path);
    char magic[4];
    r.read(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw FormatError(path + ": not an operator file (bad magic)");
    std::uint32_t version = r.read_pod<std::uint32_t>();
    if (version != kVersion)
        throw FormatError(path + ": unsupported version " + std::to_string(version));
    SparseTheta theta;
    theta.dim = r.read_pod<std::uint64_t>();
    std::uint64_t nnz = r.read_pod<std::uint64_t>();
    theta.meta.levels = static_cast<int>(r.read_pod<std::uint32_t>());
    std::uint32_t flen = r.read_pod<std::uint32_t>();
    if (flen > 4096) throw FormatError(path + ": implausible family name length");
    theta.meta.family.resize(flen);
    if (flen) r.read(theta.meta.family.data(), flen);
    std::uint32_t klen = r.read_pod<std::uint32_t>();
    if (klen > 65536) throw FormatError(path + ": implausible kernel id length");
    theta.meta.kernel_id.resize(klen);
    if (klen) r.read(theta.meta.kernel_id.data(), klen);
    theta.row_offsets.resize(theta.dim + 1);
    r.read(theta.row_offsets.data(), theta.row_offsets.size() * sizeof(std::uint64_t));
    theta.cols.resize(nnz);
    r.read(theta.cols.data(), nnz * sizeof(std::uint64_t));
    theta.values.resize(nnz);
    r.read(theta.values.data(), nnz * sizeof(double));
    r.check_crc();
    if (theta.row_offsets.front() != 0 || theta.row_offsets.back() != nnz)
        throw FormatError(path + ": inconsistent row offsets");
    return theta;
}

}  // namespace wavblur
