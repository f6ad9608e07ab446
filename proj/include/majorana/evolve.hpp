#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <Eigen/Sparse>

#include "model.hpp"
#include "skewlin.hpp"

namespace majorana {

using SparseC = Eigen::SparseMatrix<cplx>;

enum class Integrator { irk4, krylov };

struct PropagatorConfig {
    Integrator method = Integrator::irk4;
    double dt = 0.01;
    int krylov_dim = 30;
    int krylov_order = 4; // 2: midpoint exponential, 4: two-exponential commutator-free
    double fixed_point_tol = 1e-12;
    int fixed_point_max_iter = 50;
    int reunitarize_every = 0; // 0 = never
};

inline void validate(const PropagatorConfig& c) {
    if (!(c.dt > 0)) throw ValidationError("propagator dt must be positive");
    if (c.krylov_dim < 2) throw ValidationError("Krylov subspace dimension must be at least 2");
    if (c.krylov_order != 2 && c.krylov_order != 4) throw ValidationError("krylov_order must be 2 or 4");
    if (c.fixed_point_max_iter < 1) throw ValidationError("fixed-point iteration cap must be positive");
}

// Time-dependent 2N x 2N BdG matrix.
using Drive = std::function<SparseC(double)>;

inline Drive make_drive(const Geometry& g, const KitaevParams& p, const BraidSchedule& s) {
    auto sp = std::make_shared<SparseBdG>(g, p);
    auto sched = std::make_shared<BraidSchedule>(s);
    auto mu = std::make_shared<VectorR>();
    return [sp, sched, mu](double t) {
        mu_at(*sched, t, *mu);
        return SparseC(sp->at(*mu));
    };
}

inline Drive frozen_drive(const BdGOperator& op) {
    const SparseC m = op.full().sparseView();
    return [m](double) { return m; };
}

namespace detail {

// One 2-stage Gauss-Legendre step for Y' = -i h(t) Y.
inline MatrixC gauss_legendre_step(const Drive& drive, double t, double dt, const MatrixC& y,
                                   const PropagatorConfig& cfg) {
    static const double s3 = std::sqrt(3.0);
    const double c1 = 0.5 - s3 / 6, c2 = 0.5 + s3 / 6;
    const double a11 = 0.25, a12 = 0.25 - s3 / 6, a21 = 0.25 + s3 / 6, a22 = 0.25;
    const SparseC h1 = drive(t + c1 * dt), h2 = drive(t + c2 * dt);
    const cplx mi(0, -1);
    MatrixC k1 = mi * (h1 * y), k2 = mi * (h2 * y);
    const double scale = std::max(k1.norm() + k2.norm(), 1e-300);
    for (int it = 1;; ++it) {
        MatrixC n1 = mi * (h1 * (y + dt * (a11 * k1 + a12 * k2)));
        MatrixC n2 = mi * (h2 * (y + dt * (a21 * k1 + a22 * k2)));
        const double change = (n1 - k1).norm() + (n2 - k2).norm();
        k1.swap(n1);
        k2.swap(n2);
        if (!std::isfinite(change)) throw NumericalError("irk4: non-finite stage values");
        if (change <= cfg.fixed_point_tol * scale) break;
        if (it >= cfg.fixed_point_max_iter) {
            std::ostringstream os;
            os << "irk4: fixed-point iteration did not converge in " << it
               << " iterations at t = " << t << " (relative change " << change / scale << ")";
            throw NumericalError(os.str());
        }
    }
    return y + 0.5 * dt * (k1 + k2);
}

// exp(-i dt h) y by Arnoldi with full orthogonalization; the subspace grows
// until the a-posteriori residual estimate drops below tol.
inline VectorC krylov_apply(const SparseC& h, double dt, const VectorC& y, int mdim,
                            double tol = 1e-13) {
    const double beta = y.norm();
    if (beta == 0.0) return y;
    const Eigen::Index n = y.size();
    const int m = static_cast<int>(std::min<Eigen::Index>(mdim, n));
    MatrixC q(n, m + 1);
    MatrixC hs = MatrixC::Zero(m + 1, m);
    q.col(0) = y / beta;
    auto small_exp = [&](int k) {
        const MatrixC hm = hs.topLeftCorner(k, k);
        Eigen::SelfAdjointEigenSolver<MatrixC> es(0.5 * (hm + hm.adjoint()));
        const VectorC ph = (es.eigenvalues() * cplx(0, -dt)).array().exp();
        return VectorC(es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().row(0).adjoint());
    };
    for (int j = 0; j < m; ++j) {
        VectorC w = h * q.col(j);
        for (int pass = 0; pass < 2; ++pass)
            for (int i = 0; i <= j; ++i) {
                const cplx c = q.col(i).dot(w);
                hs(i, j) += c;
                w -= c * q.col(i);
            }
        const double nrm = w.norm();
        if (!std::isfinite(nrm)) throw NumericalError("krylov: Arnoldi breakdown (non-finite)");
        hs(j + 1, j) = nrm;
        if (nrm <= 1e-13 * beta) return beta * (q.leftCols(j + 1) * small_exp(j + 1));
        q.col(j + 1) = w / nrm;
        if (j >= 3) {
            const VectorC coef = small_exp(j + 1);
            if (nrm * std::abs(coef(j)) <= tol) return beta * (q.leftCols(j + 1) * coef);
        }
    }
    const VectorC coef = small_exp(m);
    const double err = hs(m, m - 1).real() * std::abs(coef(m - 1));
    if (m < n && err > 1e-10) {
        std::ostringstream os;
        os << "krylov: subspace dimension " << m << " too small for dt = " << dt
           << " (residual estimate " << err << ")";
        throw NumericalError(os.str());
    }
    return beta * (q.leftCols(m) * coef);
}

} // namespace detail

// Advance (U; V) from frame.time to frame.time + dt.
inline BogoliubovFrame step(const BogoliubovFrame& frame, const Drive& drive, double dt,
                            const PropagatorConfig& cfg) {
    const MatrixC y = frame.stacked();
    MatrixC out;
    if (cfg.method == Integrator::irk4) {
        out = detail::gauss_legendre_step(drive, frame.time, dt, y, cfg);
    } else if (cfg.krylov_order == 2) {
        const SparseC hm = drive(frame.time + 0.5 * dt);
        out.resize(y.rows(), y.cols());
        for (Eigen::Index c = 0; c < y.cols(); ++c)
            out.col(c) = detail::krylov_apply(hm, dt, y.col(c), cfg.krylov_dim);
    } else {
        static const double s3 = std::sqrt(3.0);
        const double a1 = (3.0 - 2.0 * s3) / 12.0, a2 = (3.0 + 2.0 * s3) / 12.0;
        const SparseC h1 = drive(frame.time + (0.5 - s3 / 6) * dt);
        const SparseC h2 = drive(frame.time + (0.5 + s3 / 6) * dt);
        const SparseC first = a2 * h1 + a1 * h2, second = a1 * h1 + a2 * h2;
        out.resize(y.rows(), y.cols());
        for (Eigen::Index c = 0; c < y.cols(); ++c)
            out.col(c) = detail::krylov_apply(second, dt, detail::krylov_apply(first, dt, y.col(c), cfg.krylov_dim),
                                              cfg.krylov_dim);
    }
    BogoliubovFrame next = BogoliubovFrame::from_stacked(out, frame.time + dt);
    next.energies = frame.energies;
    return next;
}

inline double unitarity_drift(const BogoliubovFrame& f) { return check_unitarity(f.u, f.v).max(); }

// Polar projection of W = [[U, V*], [V, U*]]; returns the correction norm.
inline double reunitarize(BogoliubovFrame& f) {
    const Eigen::Index n = f.u.rows();
    const MatrixC w = bogoliubov_w(f.u, f.v);
    Eigen::JacobiSVD<MatrixC> svd(w, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const MatrixC p = svd.matrixU() * svd.matrixV().adjoint();
    const MatrixC u = p.topLeftCorner(n, n), v = p.bottomLeftCorner(n, n);
    const double corr = std::sqrt((u - f.u).squaredNorm() + (v - f.v).squaredNorm());
    f.u = u;
    f.v = v;
    return corr;
}

struct PropagationLog {
    long steps = 0;
    std::vector<double> corrections;
    double max_drift = 0.0;
};

// Integrates to t_end with step sizes adjusted so every checkpoint is hit
// exactly. on_step sees every accepted frame (after optional
// re-unitarization); on_checkpoint sees the frames at the checkpoint times.
inline BogoliubovFrame propagate(BogoliubovFrame frame, const Drive& drive, double t_end,
                                 const PropagatorConfig& cfg, std::vector<double> checkpoints,
                                 const std::function<void(const BogoliubovFrame&)>& on_checkpoint = {},
                                 const std::function<void(const BogoliubovFrame&)>& on_step = {},
                                 PropagationLog* log = nullptr) {
    validate(cfg);
    checkpoints.push_back(t_end);
    std::sort(checkpoints.begin(), checkpoints.end());
    const double eps = 1e-12 * std::max(1.0, std::abs(t_end));
    long count = 0;
    if (on_checkpoint && !checkpoints.empty() && std::abs(checkpoints.front() - frame.time) <= eps)
        on_checkpoint(frame);
    double last = frame.time;
    for (double target : checkpoints) {
        if (target <= last + eps) continue;
        const double span = target - frame.time;
        const long n = std::max(1L, static_cast<long>(std::ceil(span / cfg.dt - 1e-9)));
        const double h = span / static_cast<double>(n);
        const double t0 = frame.time;
        for (long k = 0; k < n; ++k) {
            frame = step(frame, drive, h, cfg);
            frame.time = (k + 1 == n) ? target : t0 + static_cast<double>(k + 1) * h;
            ++count;
            if (cfg.reunitarize_every > 0 && count % cfg.reunitarize_every == 0) {
                const double c = reunitarize(frame);
                if (log) log->corrections.push_back(c);
            }
            if (on_step) on_step(frame);
        }
        if (log) log->max_drift = std::max(log->max_drift, unitarity_drift(frame));
        if (on_checkpoint) on_checkpoint(frame);
        last = target;
    }
    if (log) log->steps += count;
    return frame;
}

} // namespace majorana
