#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "reference_tv.hpp"
#include "test_utils.hpp"
#include "wavblur/errors.hpp"
#include "wavblur/image.hpp"
#include "wavblur/kernel.hpp"
#include "wavblur/restore.hpp"
#include "wavblur/theta.hpp"
#include "wavblur/wavelet.hpp"

using namespace wavblur;

namespace {

KernelSpec small_kernel(int n, double lo, double hi) {
    KernelSpec spec;
    spec.kind = KernelKind::gaussian_vertical_variance;
    spec.n = n;
    spec.sigma_min = lo;
    spec.sigma_max = hi;
    spec.truncation = 4.0;
    return spec;
}

SparseTheta identity_theta(int n, const char* family, int levels) {
    KernelSpec id;
    id.kind = KernelKind::gaussian_constant;
    id.n = n;
    id.sigma_min = id.sigma_max = 0.0;
    return build_theta(id, wavelet_family(family), levels);
}

SparseTheta zero_theta(std::size_t dim) {
    SparseTheta t;
    t.dim = dim;
    t.row_offsets.assign(dim + 1, 0);
    t.meta = ThetaMeta{"db2", 2, "hand-built zero", "full"};
    return t;
}

}  // namespace

// The TV functional restated from its definition, with explicit wrap
// indices. Library results must match to machine precision.
static double tv_reference(const Image& img) {
    double tv = 0.0;
    for (int i = 0; i < img.height; ++i)
        for (int j = 0; j < img.width; ++j) {
            double dx = img.at(i, (j + 1) % img.width) - img.at(i, j);
            double dy = img.at((i + 1) % img.height, j) - img.at(i, j);
            tv += std::sqrt(dx * dx + dy * dy);
        }
    return tv;
}

TEST_CASE("total variation matches the definition") {
    Image flat(16, 16, std::vector<double>(256, 0.42));
    CHECK(tv_value(flat) == 0.0);

    // one vertical edge plus its periodic wrap: 2 jumps of height 1 per row
    Image split(64, 64);
    for (int r = 0; r < 64; ++r)
        for (int c = 0; c < 32; ++c) split.at(r, c) = 1.0;
    CHECK(tv_value(split) == doctest::Approx(128.0).epsilon(1e-13));

    Image rnd = testutil::random_image(16, 16, 501);
    CHECK(tv_value(rnd) == doctest::Approx(tv_reference(rnd)).epsilon(1e-13));
}

TEST_CASE("operator norm estimates are calibrated and reproducible") {
    WaveletFamily db2 = wavelet_family("db2");

    SparseTheta id = identity_theta(16, "db2", 2);
    double est_id = estimate_operator_norm(id, db2, 2, 30);
    CHECK(est_id == doctest::Approx(1.05).epsilon(0.01));

    SparseTheta zero = zero_theta(256);
    CHECK(estimate_operator_norm(zero, db2, 2, 30) == 0.0);

    KernelSpec spec = small_kernel(16, 0.6, 1.2);
    SparseTheta full = build_theta(spec, db2, 2);
    double est = estimate_operator_norm(full, db2, 2, 50);
    double est_again = estimate_operator_norm(full, db2, 2, 50);
    CHECK(est == est_again);

    Eigen::MatrixXd h = testutil::dense_blur_matrix(spec);
    double smax = h.jacobiSvd().singularValues()(0);
    CHECK(est >= 0.9 * smax);         // the power iteration found the top
    CHECK(est <= 1.051 * smax);       // and the inflation stays at 5%
}

TEST_CASE("an identity operator with no noise returns the data") {
    const int n = 16;
    SparseTheta id = identity_theta(n, "db2", 2);
    Image v = synthetic_scene(n);

    SolverConfig cfg;
    cfg.max_iters = 20000;
    cfg.tol = 1e-5;
    cfg.sigma_noise = 0.0;
    RestoreResult res = restore(v, id, cfg);

    CHECK(norm2_diff(res.image.data, v.data) / norm2(v.data) < 1e-4);
    CHECK(res.tv == doctest::Approx(tv_value(res.image)).epsilon(1e-12));
}

TEST_CASE("solver inputs are validated") {
    SparseTheta id = identity_theta(16, "db2", 2);
    Image v = synthetic_scene(16);

    SolverConfig bad_sigma;
    bad_sigma.sigma_noise = -0.1;
    CHECK_THROWS_AS(restore(v, id, bad_sigma), DomainError);

    Image wrong(8, 8);
    CHECK_THROWS_AS(restore(wrong, id, SolverConfig{}), DimensionError);

    SparseTheta anonymous = id;
    anonymous.meta.family.clear();
    CHECK_THROWS_AS(restore(v, anonymous, SolverConfig{}), MetaMismatch);
}

// The reported residual, TV, and convergence flag must be facts about the
// returned image, not solver bookkeeping.
TEST_CASE("reported diagnostics match the returned image") {
    const int n = 16;
    KernelSpec spec = small_kernel(n, 0.6, 1.2);
    WaveletFamily db2 = wavelet_family("db2");
    SparseTheta full = build_theta(spec, db2, 2);

    Image clean = synthetic_scene(n);
    Image degraded = add_noise(apply_exact(spec, clean), NoiseModel{0.02, 55});

    SolverConfig cfg;
    cfg.max_iters = 1500;
    cfg.sigma_noise = 0.02;
    RestoreResult res = restore(degraded, full, cfg);

    Image au = apply_theta(full, res.image, db2, 2);
    double resid = norm2_diff(au.data, degraded.data);
    CHECK(res.residual == doctest::Approx(resid).epsilon(1e-9));
    CHECK(res.tv == doctest::Approx(tv_value(res.image)).epsilon(1e-12));
    CHECK(res.iterations >= 1);
    CHECK(res.iterations <= cfg.max_iters);

    const double eps = cfg.sigma_noise * std::sqrt(static_cast<double>(clean.pixel_count()));
    if (res.converged)
        CHECK(res.residual * res.residual <= eps * eps * (1.0 + cfg.tol) * (1.0 + 1e-12));
}

// The iteration is a saddle-point method, so the objective is not monotone
// along the run; what longer budgets must do is close in on the limit value.
TEST_CASE("longer runs approach the converged objective") {
    const int n = 16;
    KernelSpec spec = small_kernel(n, 0.6, 1.2);
    SparseTheta full = build_theta(spec, wavelet_family("db2"), 2);
    Image degraded = add_noise(apply_exact(spec, synthetic_scene(n)), NoiseModel{0.02, 56});

    auto run = [&](int iters) {
        SolverConfig cfg;
        cfg.max_iters = iters;
        cfg.tol = 1e-9;  // keep iterating, do not stop early
        cfg.sigma_noise = 0.02;
        return restore(degraded, full, cfg).tv;
    };
    const double tv_limit = run(20000);
    std::vector<double> gaps;
    for (int iters : {300, 600, 1200, 2400}) gaps.push_back(std::fabs(run(iters) - tv_limit));
    for (std::size_t i = 1; i < gaps.size(); ++i) CHECK(gaps[i] <= gaps[i - 1] + 0.01 * tv_limit);
    CHECK(gaps.back() <= 0.05 * tv_limit);
}

// A zero operator cannot reach the noise ball of any nonzero image; the
// solver must keep iterating but flag the plateau.
TEST_CASE("unreachable constraints raise the infeasibility flag") {
    const int n = 16;
    SparseTheta zero = zero_theta(static_cast<std::size_t>(n) * n);
    Image v = synthetic_scene(n);

    SolverConfig cfg;
    cfg.max_iters = 400;
    cfg.sigma_noise = 0.02;
    RestoreResult res = restore(v, zero, cfg);
    CHECK(res.infeasible_warning);
    CHECK(!res.converged);
    CHECK(res.iterations == cfg.max_iters);
    CHECK(res.residual == doctest::Approx(norm2(v.data)).epsilon(1e-12));
}

// Head-to-head against the projected-subgradient reference on a dense
// restatement of the same problem: both are feasible, and the objectives
// agree within one percent.
TEST_CASE("the solver matches the reference objective at small size") {
    const int n = 16;
    const double sigma_noise = 0.02;
    KernelSpec spec = small_kernel(n, 0.6, 1.2);
    WaveletFamily db2 = wavelet_family("db2");
    SparseTheta full = build_theta(spec, db2, 2);

    Image clean = synthetic_scene(n);
    Image degraded = add_noise(apply_exact(spec, clean), NoiseModel{sigma_noise, 55});
    const double eps = sigma_noise * std::sqrt(static_cast<double>(clean.pixel_count()));

    SolverConfig cfg;
    cfg.max_iters = 8000;
    cfg.tol = 1e-7;  // run essentially to the iteration cap
    cfg.sigma_noise = sigma_noise;
    RestoreResult res = restore(degraded, full, cfg);

    Eigen::MatrixXd h = testutil::dense_blur_matrix(spec);
    Eigen::VectorXd v = testutil::to_eigen(degraded.data);
    refsolver::ReferenceResult ref = refsolver::solve_reference(h, v, eps, n, 20000);

    // both ended up feasible
    CHECK((h * testutil::to_eigen(res.image.data) - v).norm() <= eps * 1.005);
    CHECK((h * ref.u - v).norm() <= eps * (1.0 + 1e-9));

    CHECK(res.tv == doctest::Approx(ref.tv).epsilon(0.01));

    // and the restoration beats the degraded input against the truth
    CHECK(snr_db(res.image, clean) > snr_db(degraded, clean));
}
