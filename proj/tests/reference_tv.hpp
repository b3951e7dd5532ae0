#pragma once

// Reference solver for  min TV(u)  s.t.  |A u - v|_2 <= eps  on small dense
// problems, used to cross-check the production solver. Projected subgradient
// with a Polyak-style step and an adaptive optimum estimate: slow, simple,
// and sharing no code with the solver under test.
//
// The projection onto the constraint ball is exact. With the eigensystem
// A^T A = Q diag(d) Q^T precomputed, the KKT solution of
//   min |w - z|^2  s.t.  |A w - v|^2 = eps^2
// is w(lam) = Q diag(1/(1 + lam d)) Q^T (z + lam A^T v), and the residual is
// monotone in lam, so a bisection on lam finds the feasible boundary point.

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace refsolver {

// Isotropic total variation with periodic forward differences, restated from
// the definition.
inline double tv_of(const Eigen::VectorXd& u, int side) {
    double tv = 0.0;
    for (int i = 0; i < side; ++i)
        for (int j = 0; j < side; ++j) {
            double here = u(i * side + j);
            double right = u(i * side + (j + 1) % side);
            double down = u(((i + 1) % side) * side + j);
            double dx = right - here;
            double dy = down - here;
            tv += std::sqrt(dx * dx + dy * dy);
        }
    return tv;
}

// One subgradient of the TV above at u (zero where the gradient vanishes).
inline Eigen::VectorXd tv_subgradient(const Eigen::VectorXd& u, int side) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(u.size());
    for (int i = 0; i < side; ++i)
        for (int j = 0; j < side; ++j) {
            int here = i * side + j;
            int right = i * side + (j + 1) % side;
            int down = ((i + 1) % side) * side + j;
            double dx = u(right) - u(here);
            double dy = u(down) - u(here);
            double m = std::sqrt(dx * dx + dy * dy);
            if (m <= 0.0) continue;
            g(here) += (-dx - dy) / m;
            g(right) += dx / m;
            g(down) += dy / m;
        }
    return g;
}

class BallProjector {
public:
    BallProjector(const Eigen::MatrixXd& a, const Eigen::VectorXd& v, double eps)
        : a_(a), v_(v), eps_(eps) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.transpose() * a);
        q_ = es.eigenvectors();
        d_ = es.eigenvalues().cwiseMax(0.0);
        atv_ = a.transpose() * v;
        btilde_ = q_.transpose() * atv_;
        v2_ = v.squaredNorm();
    }

    Eigen::VectorXd project(const Eigen::VectorXd& z) const {
        if ((a_ * z - v_).norm() <= eps_) return z;
        Eigen::VectorXd zt = q_.transpose() * z;

        // residual^2 as a function of lam, evaluated in the eigenbasis
        auto resid2 = [&](double lam) {
            double r = v2_;
            for (int i = 0; i < zt.size(); ++i) {
                double w = (zt(i) + lam * btilde_(i)) / (1.0 + lam * d_(i));
                r += d_(i) * w * w - 2.0 * btilde_(i) * w;
            }
            return r;
        };

        double lo = 0.0, hi = 1.0;
        while (resid2(hi) > eps_ * eps_ && hi < 1e18) hi *= 2.0;
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            if (resid2(mid) > eps_ * eps_) lo = mid;
            else hi = mid;
        }
        double lam = hi;
        Eigen::VectorXd wt(zt.size());
        for (int i = 0; i < zt.size(); ++i)
            wt(i) = (zt(i) + lam * btilde_(i)) / (1.0 + lam * d_(i));
        return q_ * wt;
    }

private:
    Eigen::MatrixXd a_;
    Eigen::VectorXd v_;
    double eps_;
    Eigen::MatrixXd q_;
    Eigen::VectorXd d_;
    Eigen::VectorXd atv_;
    Eigen::VectorXd btilde_;
    double v2_ = 0.0;
};

struct ReferenceResult {
    Eigen::VectorXd u;
    double tv = 0.0;
};

// Polyak steps with a shrinking gap estimate: the step targets
// best - delta, and delta halves whenever a stretch of iterations brings no
// improvement. Every iterate is projected back into the ball, so the best
// value seen is always feasible.
inline ReferenceResult solve_reference(const Eigen::MatrixXd& a, const Eigen::VectorXd& v,
                                       double eps, int side, int iters) {
    BallProjector proj(a, v, eps);
    Eigen::VectorXd u = proj.project(v);
    Eigen::VectorXd best_u = u;
    double best = tv_of(u, side);

    double delta = std::max(1e-6, 0.05 * best);
    int since_improvement = 0;
    for (int t = 0; t < iters; ++t) {
        Eigen::VectorXd g = tv_subgradient(u, side);
        double gn2 = g.squaredNorm();
        if (gn2 <= 1e-30) break;
        double tv = tv_of(u, side);
        double step = (tv - (best - delta)) / gn2;
        if (step <= 0.0) step = delta / gn2;
        u = proj.project(u - step * g);

        double tv_now = tv_of(u, side);
        if (tv_now < best - 1e-12) {
            best = tv_now;
            best_u = u;
            since_improvement = 0;
        } else if (++since_improvement >= 400) {
            delta = std::max(1e-7, 0.5 * delta);
            since_improvement = 0;
            u = best_u;  // restart from the incumbent with a finer step
        }
    }
    return {best_u, best};
}

}  // namespace refsolver
