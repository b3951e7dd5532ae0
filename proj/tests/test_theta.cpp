#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "test_utils.hpp"
#include "wavblur/errors.hpp"
#include "wavblur/image.hpp"
#include "wavblur/kernel.hpp"
#include "wavblur/theta.hpp"
#include "wavblur/wavelet.hpp"

using namespace wavblur;
using testutil::ScratchDir;

namespace {

KernelSpec small_kernel(int n, double lo, double hi, double truncation = 3.0) {
    KernelSpec spec;
    spec.kind = KernelKind::gaussian_vertical_variance;
    spec.n = n;
    spec.sigma_min = lo;
    spec.sigma_max = hi;
    spec.truncation = truncation;
    return spec;
}

// Brute-force wavelet-domain operator: conjugate the dense blur matrix with
// the dense analysis matrix. This is the construction spelled out as linear
// algebra, with no sparsity or atom shortcuts, and is the oracle for
// build_theta.
Eigen::MatrixXd dense_theta_reference(const KernelSpec& spec, const WaveletFamily& family,
                                      int levels) {
    Eigen::MatrixXd h = testutil::dense_blur_matrix(spec);
    Eigen::MatrixXd w = testutil::dense_analysis_matrix(spec.n, family, levels);
    return w * h * w.transpose();
}

std::vector<std::tuple<std::uint64_t, std::uint64_t, double>> entries_of(const SparseTheta& t) {
    std::vector<std::tuple<std::uint64_t, std::uint64_t, double>> out;
    for (std::size_t r = 0; r < t.dim; ++r)
        for (std::uint64_t i = t.row_offsets[r]; i < t.row_offsets[r + 1]; ++i)
            out.emplace_back(r, t.cols[i], t.values[i]);
    return out;
}

}  // namespace

TEST_CASE("the wavelet-domain operator matches its dense conjugation") {
    struct Case {
        const char* family;
        int n;
        int levels;
    };
    for (const Case& tc : {Case{"haar", 8, 3}, Case{"db2", 16, 2}}) {
        WaveletFamily fam = wavelet_family(tc.family);
        KernelSpec spec = small_kernel(tc.n, 0.5, 1.0);
        Eigen::MatrixXd ref = dense_theta_reference(spec, fam, tc.levels);

        SparseTheta theta = build_theta(spec, fam, tc.levels);
        REQUIRE(theta.dim == static_cast<std::size_t>(tc.n) * tc.n);
        Eigen::MatrixXd got = testutil::dense_from_csr(theta);

        double worst = (got - ref).cwiseAbs().maxCoeff();
        CHECK(worst < 1e-12);

        // metadata describes the construction
        CHECK(theta.meta.family == tc.family);
        CHECK(theta.meta.levels == tc.levels);
        CHECK(theta.meta.kernel_id == spec.id());
        CHECK(theta.meta.budget == "full");

        // CSR structure is well formed: sorted strictly increasing columns
        for (std::size_t r = 0; r < theta.dim; ++r)
            for (std::uint64_t i = theta.row_offsets[r] + 1; i < theta.row_offsets[r + 1]; ++i)
                CHECK(theta.cols[i - 1] < theta.cols[i]);
        for (double v : theta.values) CHECK(std::fabs(v) >= kThetaFloor);
    }
}

TEST_CASE("the 1D operator matches its dense conjugation") {
    WaveletFamily fam = wavelet_family("haar");
    KernelSpec spec = small_kernel(16, 0.5, 1.2);
    Eigen::MatrixXd h = testutil::dense_blur_matrix_1d(spec);
    Eigen::MatrixXd w = testutil::dense_analysis_matrix_1d(16, fam, 2);
    Eigen::MatrixXd ref = w * h * w.transpose();

    SparseTheta theta = build_theta_1d(spec, fam, 2);
    REQUIRE(theta.dim == 16);
    Eigen::MatrixXd got = testutil::dense_from_csr(theta);
    CHECK((got - ref).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("the identity kernel produces the identity operator") {
    KernelSpec id;
    id.kind = KernelKind::gaussian_constant;
    id.n = 16;
    id.sigma_min = id.sigma_max = 0.0;
    WaveletFamily fam = wavelet_family("db2");
    SparseTheta theta = build_theta(id, fam, 2);
    REQUIRE(theta.nnz() == theta.dim);
    for (std::size_t r = 0; r < theta.dim; ++r) {
        CHECK(theta.row_offsets[r] == r);
        CHECK(theta.cols[r] == r);
        CHECK(theta.values[r] == doctest::Approx(1.0).epsilon(1e-12));
    }
}

// Applying the sparse operator through the transforms is the same map as the
// pixel-space blur, for the full (unthresholded) matrix.
TEST_CASE("apply through the operator reproduces the exact blur") {
    const int n = 32;
    KernelSpec spec = small_kernel(n, 0.6, 1.5, 4.0);
    WaveletFamily fam = wavelet_family("db2");
    SparseTheta theta = build_theta(spec, fam, 2);

    for (std::uint64_t seed : {401u, 402u, 403u, 404u, 405u}) {
        Image img = testutil::random_image(n, n, seed);
        Image via_theta = apply_theta(theta, img, fam, 2);
        Image direct = apply_exact(spec, img);
        CHECK(norm2_diff(via_theta.data, direct.data) / norm2(direct.data) < 1e-9);

        Image via_adj = apply_theta_adjoint(theta, img, fam, 2);
        Image direct_adj = apply_exact_adjoint(spec, img);
        CHECK(norm2_diff(via_adj.data, direct_adj.data) / norm2(direct_adj.data) < 1e-9);
    }
}

TEST_CASE("operator application validates geometry and metadata") {
    KernelSpec spec = small_kernel(16, 0.5, 1.0);
    WaveletFamily db2 = wavelet_family("db2");
    WaveletFamily haar = wavelet_family("haar");
    SparseTheta theta = build_theta(spec, db2, 2);

    Image wrong_size(8, 8);
    CHECK_THROWS_AS(apply_theta(theta, wrong_size, db2, 2), DimensionError);

    Image img = testutil::random_image(16, 16, 406);
    CHECK_THROWS_AS(apply_theta(theta, img, haar, 2), MetaMismatch);
    CHECK_THROWS_AS(apply_theta(theta, img, db2, 1), MetaMismatch);
    CHECK_NOTHROW(apply_theta(theta, img, db2, 2));
}

TEST_CASE("thresholding keeps exactly the largest k*dim magnitudes") {
    KernelSpec spec = small_kernel(16, 0.6, 1.2, 4.0);
    WaveletFamily fam = wavelet_family("db2");
    SparseTheta full = build_theta(spec, fam, 2);
    REQUIRE(full.nnz() > 4 * full.dim);

    std::vector<double> mags;
    for (double v : full.values) mags.push_back(std::fabs(v));
    std::sort(mags.begin(), mags.end(), std::greater<double>());

    for (std::uint64_t k : {1u, 2u, 4u}) {
        SparseTheta cut = threshold_theta(full, k);
        CHECK(cut.nnz() == k * full.dim);
        CHECK(cut.meta.budget == "k=" + std::to_string(k));
        CHECK(cut.dim == full.dim);

        // kept magnitudes dominate dropped ones
        double kept_min = 1e300;
        for (double v : cut.values) kept_min = std::min(kept_min, std::fabs(v));
        double dropped_max = mags[k * full.dim];  // largest magnitude outside the budget
        CHECK(kept_min >= dropped_max);

        // kept entries carry the same values as the full matrix
        Eigen::MatrixXd dense_full = testutil::dense_from_csr(full);
        for (auto [r, c, v] : entries_of(cut))
            CHECK(v == dense_full(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
    }

    // nested budgets nest as entry sets
    SparseTheta k2 = threshold_theta(full, 2);
    SparseTheta k4 = threshold_theta(full, 4);
    auto small_entries = entries_of(k2);
    auto big_entries = entries_of(k4);
    for (const auto& e : small_entries)
        CHECK(std::find(big_entries.begin(), big_entries.end(), e) != big_entries.end());

    // a budget at or above the existing nnz returns everything
    SparseTheta all = threshold_theta(full, full.nnz() / full.dim + 1);
    CHECK(all.nnz() == full.nnz());

    CHECK_THROWS_AS(threshold_theta(full, 0), DomainError);
}

// Ties at the cutoff magnitude are resolved by scan order, so a matrix of
// identical magnitudes keeps its lexicographically first entries.
TEST_CASE("threshold ties break deterministically in scan order") {
    SparseTheta flat;
    flat.dim = 4;
    flat.row_offsets = {0, 4, 8, 12, 16};
    for (std::uint64_t r = 0; r < 4; ++r)
        for (std::uint64_t c = 0; c < 4; ++c) {
            flat.cols.push_back(c);
            flat.values.push_back((r + c) % 2 == 0 ? 0.5 : -0.5);
        }
    flat.meta = ThetaMeta{"db2", 1, "synthetic", "full"};

    SparseTheta cut = threshold_theta(flat, 1);  // budget 4 of 16 equal magnitudes
    REQUIRE(cut.nnz() == 4);
    CHECK(cut.row_offsets == std::vector<std::uint64_t>({0, 4, 4, 4, 4}));
    CHECK(cut.cols == std::vector<std::uint64_t>({0, 1, 2, 3}));

    SparseTheta cut2 = threshold_theta(flat, 2);  // first two full rows
    CHECK(cut2.row_offsets == std::vector<std::uint64_t>({0, 4, 8, 8, 8}));
}

TEST_CASE("multi-budget thresholding equals one-at-a-time calls") {
    KernelSpec spec = small_kernel(16, 0.6, 1.2, 4.0);
    WaveletFamily fam = wavelet_family("db2");
    SparseTheta full = build_theta(spec, fam, 2);

    std::vector<std::uint64_t> ks{1, 3, 7};
    std::vector<SparseTheta> multi = threshold_theta_multi(full, ks);
    REQUIRE(multi.size() == ks.size());
    for (std::size_t i = 0; i < ks.size(); ++i) {
        SparseTheta single = threshold_theta(full, ks[i]);
        CHECK(multi[i].row_offsets == single.row_offsets);
        CHECK(multi[i].cols == single.cols);
        CHECK(multi[i].values == single.values);
        CHECK(multi[i].meta.budget == single.meta.budget);
    }
}

TEST_CASE("rebuilding the operator is bit-reproducible") {
    KernelSpec spec = small_kernel(16, 0.5, 1.0);
    WaveletFamily fam = wavelet_family("db2");
    SparseTheta a = build_theta(spec, fam, 2);
    SparseTheta b = build_theta(spec, fam, 2);
    CHECK(a.row_offsets == b.row_offsets);
    CHECK(a.cols == b.cols);
    CHECK(a.values == b.values);
}

TEST_CASE("operator error is zero for the full matrix and reproducible") {
    KernelSpec spec = small_kernel(16, 0.6, 1.2, 4.0);
    WaveletFamily fam = wavelet_family("db2");
    SparseTheta full = build_theta(spec, fam, 2);

    double e_full = operator_error(full, spec, 5, 900);
    CHECK(e_full < 1e-9);

    SparseTheta k1 = threshold_theta(full, 1);
    double e1a = operator_error(k1, spec, 5, 900);
    double e1b = operator_error(k1, spec, 5, 900);
    CHECK(e1a == e1b);
    CHECK(e1a > e_full);

    // more budget, less error (small slack for the random probes)
    SparseTheta k4 = threshold_theta(full, 4);
    SparseTheta k16 = threshold_theta(full, 16);
    double e4 = operator_error(k4, spec, 5, 900);
    double e16 = operator_error(k16, spec, 5, 900);
    CHECK(e4 <= e1a * 1.05);
    CHECK(e16 <= e4 * 1.05);
}

TEST_CASE("operator files round trip losslessly") {
    ScratchDir dir("theta_io");
    KernelSpec spec = small_kernel(16, 0.5, 1.0);
    WaveletFamily fam = wavelet_family("db2");
    SparseTheta theta = build_theta(spec, fam, 2);
    const std::string path = dir.file("op.wbth");
    save_theta(theta, path);

    SparseTheta back = load_theta(path);
    CHECK(back.dim == theta.dim);
    CHECK(back.row_offsets == theta.row_offsets);
    CHECK(back.cols == theta.cols);
    CHECK(back.values == theta.values);
    CHECK(back.meta.family == theta.meta.family);
    CHECK(back.meta.levels == theta.meta.levels);
    CHECK(back.meta.kernel_id == theta.meta.kernel_id);

    // saving twice produces byte-identical files
    save_theta(theta, dir.file("op2.wbth"));
    CHECK(testutil::read_file(path) == testutil::read_file(dir.file("op2.wbth")));
}

// The container layout is pinned: magic, version, dim, and a trailing CRC32
// over everything before it, all little-endian.
TEST_CASE("operator file header and checksum are pinned") {
    ScratchDir dir("theta_fmt");
    KernelSpec spec = small_kernel(8, 0.5, 1.0);
    WaveletFamily fam = wavelet_family("haar");
    SparseTheta theta = build_theta(spec, fam, 2);
    const std::string path = dir.file("op.wbth");
    save_theta(theta, path);

    std::string bytes = testutil::read_file(path);
    REQUIRE(bytes.size() > 24);
    CHECK(bytes.compare(0, 4, "WBTH") == 0);

    auto read_u32 = [&](std::size_t off) {
        std::uint32_t v;
        std::memcpy(&v, bytes.data() + off, 4);
        return v;
    };
    auto read_u64 = [&](std::size_t off) {
        std::uint64_t v;
        std::memcpy(&v, bytes.data() + off, 8);
        return v;
    };
    CHECK(read_u32(4) == 1);                  // version
    CHECK(read_u64(8) == theta.dim);
    CHECK(read_u64(16) == theta.nnz());

    std::uint32_t stored = read_u32(bytes.size() - 4);
    std::uint32_t computed = static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()),
                static_cast<uInt>(bytes.size() - 4)));
    CHECK(stored == computed);
}

TEST_CASE("corrupted operator files are rejected") {
    ScratchDir dir("theta_bad");
    KernelSpec spec = small_kernel(8, 0.5, 1.0);
    WaveletFamily fam = wavelet_family("haar");
    SparseTheta theta = build_theta(spec, fam, 2);
    const std::string path = dir.file("op.wbth");
    save_theta(theta, path);
    const std::string good = testutil::read_file(path);

    CHECK_THROWS_AS(load_theta(dir.file("absent.wbth")), IoError);

    // flipped payload byte: checksum catches it
    std::string flipped = good;
    flipped[flipped.size() / 2] = static_cast<char>(flipped[flipped.size() / 2] ^ 0x5a);
    testutil::write_file(dir.file("flip.wbth"), flipped);
    CHECK_THROWS_AS(load_theta(dir.file("flip.wbth")), ChecksumError);

    // truncation: structural failure before the checksum
    testutil::write_file(dir.file("trunc.wbth"), good.substr(0, good.size() - 10));
    CHECK_THROWS_AS(load_theta(dir.file("trunc.wbth")), FormatError);

    // trailing garbage after the checksum
    testutil::write_file(dir.file("tail.wbth"), good + "x");
    CHECK_THROWS_AS(load_theta(dir.file("tail.wbth")), FormatError);

    // foreign magic
    std::string magic = good;
    magic[0] = 'X';
    testutil::write_file(dir.file("magic.wbth"), magic);
    CHECK_THROWS_AS(load_theta(dir.file("magic.wbth")), FormatError);
}

// The decay report is the sparsity rationale: magnitudes fall polynomially
// with support distance, far same-scale pairs are exactly zero, and the
// fitted constant really bounds every recorded pair.
TEST_CASE("decay verification reports sane statistics") {
    KernelSpec spec = small_kernel(64, 0.8, 3.0, 4.0);
    WaveletFamily fam = wavelet_family("haar");
    DecayReport report = verify_decay_1d(spec, fam, 3);

    CHECK(!report.records.empty());
    CHECK(report.fitted_c > 0.0);
    CHECK(report.violations == 0);
    for (const DecayRecord& rec : report.records) {
        CHECK(rec.bound_factor > 0.0);
        CHECK(rec.magnitude <= report.fitted_c * rec.bound_factor * (1 + 1e-12));
        CHECK(rec.ratio == doctest::Approx(rec.magnitude / rec.bound_factor).epsilon(1e-12));
    }

    CHECK(report.far_pairs > 0);
    CHECK(report.far_nonzero == 0);
    CHECK(report.slope < 0.0);
}

TEST_CASE("decay verification rejects degenerate setups") {
    // db2 atoms at n = 8 cover almost the whole circle: no positive distances
    KernelSpec tiny = small_kernel(8, 0.5, 0.8);
    CHECK_THROWS_AS(verify_decay_1d(tiny, wavelet_family("db2"), 1), DegenerateError);

    // tabulated kernels have no 1D form
    KernelSpec desk = desk_kernel();
    KernelSpec tab = tabulate_kernel(desk, 8);
    CHECK_THROWS_AS(verify_decay_1d(tab, wavelet_family("haar"), 3), DomainError);
}
