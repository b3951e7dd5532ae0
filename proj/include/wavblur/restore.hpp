#pragma once

#include <cstdint>

#include "wavblur/image.hpp"
#include "wavblur/theta.hpp"
#include "wavblur/wavelet.hpp"

namespace wavblur {

// Configuration of the constrained TV restoration solver.
struct SolverConfig {
    int max_iters = 2000;
    double tol = 1e-3;           // relative-change and residual tolerance
    double sigma_noise = 0.0;    // noise standard deviation (intensity units)
    // 0 means estimate by power iteration; otherwise taken as a trusted upper
    // bound on the blur operator norm.
    double operator_norm_estimate = 0.0;
    int norm_iters = 30;         // power-iteration count when estimating
};

struct RestoreResult {
    Image image;
    int iterations = 0;
    double residual = 0.0;        // |Au - v|_2 at the last iterate
    double tv = 0.0;
    bool converged = false;
    // Raised when the residual plateaus above the constraint radius: the
    // noise ball does not intersect the operator's reachable set.
    bool infeasible_warning = false;
};

// Isotropic total variation: sum over pixels of the Euclidean norm of the
// forward-difference gradient with periodic wrap (consistent with the
// transform's boundary rule).
double tv_value(const Image& img);

// Solves  min TV(u)  subject to  |Au - v|_2 <= sigma_noise * sqrt(n)
// where A = inverse-transform * Theta * forward-transform and n is the pixel
// count. First-order primal-dual iteration with two dual blocks (gradient,
// fidelity ball); fixed steps tau = kappa = 1 / sqrt(8 + |A|^2).
// Deterministic for fixed inputs. The wavelet family and depth come from
// theta.meta.
RestoreResult restore(const Image& v, const SparseTheta& theta, const SolverConfig& cfg);

// Power iteration on A^T A; returns the square-root estimate inflated by 5%
// as a safe upper bound for the step-size rule.
double estimate_operator_norm(const SparseTheta& theta, const WaveletFamily& family,
                              int levels, int iters);

}  // namespace wavblur
