#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "core.hpp"

namespace majorana {

inline constexpr double default_eps_skew = 1e-10;
inline constexpr double default_tol_occ = 1e-8;

template <class Derived>
void require_skew(const Eigen::MatrixBase<Derived>& a, double eps = default_eps_skew) {
    if (a.rows() != a.cols())
        throw ValidationError("skew matrix must be square");
    if (a.size() == 0) return;
    const double scale = a.cwiseAbs().maxCoeff();
    if (scale == 0.0) return;
    const double err = (a + a.transpose()).cwiseAbs().maxCoeff();
    if (err > eps * scale) {
        std::ostringstream os;
        os << "matrix is not skew-symmetric: max|A+A^T| = " << err << " vs max|A| = " << scale;
        throw ValidationError(os.str());
    }
}

// Parlett-Reid elimination with pivoting. The input is copied.
template <class Scalar>
Scalar pfaffian(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> a,
                double eps = default_eps_skew) {
    require_skew(a, eps);
    const Eigen::Index n = a.rows();
    if (n % 2 != 0) throw LogicError("odd-dimensional Pfaffian");
    Scalar result(1);
    for (Eigen::Index k = 0; k + 1 < n; k += 2) {
        Eigen::Index kp = k + 1;
        a.col(k).segment(k + 1, n - k - 1).cwiseAbs().maxCoeff(&kp);
        kp += k + 1;
        if (kp != k + 1) {
            a.row(k + 1).swap(a.row(kp));
            a.col(k + 1).swap(a.col(kp));
            result = -result;
        }
        const Scalar piv = a(k, k + 1);
        if (piv == Scalar(0)) return Scalar(0);
        result *= piv;
        const Eigen::Index rest = n - k - 2;
        if (rest > 0) {
            const auto tau = (a.row(k).tail(rest) / piv).eval();
            const auto col = a.col(k + 1).tail(rest).eval();
            // rank-2 skew update of the trailing block
            a.bottomRightCorner(rest, rest).noalias() +=
                tau.transpose() * col.transpose() - col * tau;
        }
    }
    return result;
}

inline cplx pfaffian(const MatrixC& a) { return pfaffian<cplx>(MatrixC(a)); }

struct YoulaForm {
    MatrixC q;
    std::vector<double> sigma; // one per 2x2 block, descending
};

// Q^T A Q = blockdiag(sigma_j [[0,1],[-1,0]], 0...).
inline YoulaForm youla_canonical(const MatrixC& a, double eps = default_eps_skew) {
    require_skew(a, eps);
    const Eigen::Index n = a.rows();
    YoulaForm out;
    out.q = MatrixC::Zero(n, n);
    if (n == 0) return out;
    const double norm = a.norm();
    const double zero_tol = 1e-13 * std::max(norm, 1e-300);

    Eigen::SelfAdjointEigenSolver<MatrixC> es(a.adjoint() * a);
    if (es.info() != Eigen::Success) throw NumericalError("youla_canonical: eigensolver failed");
    const MatrixC& x = es.eigenvectors();
    const VectorR& lam = es.eigenvalues();

    Eigen::Index filled = 0;
    auto project_out = [&](VectorC v) {
        for (int pass = 0; pass < 2; ++pass)
            for (Eigen::Index j = 0; j < filled; ++j)
                v -= out.q.col(j) * out.q.col(j).dot(v);
        return v;
    };

    for (Eigen::Index i = n - 1; i >= 0 && filled + 1 < n; --i) {
        const double sig = std::sqrt(std::max(lam(i), 0.0));
        if (sig <= zero_tol) break;
        VectorC q1 = project_out(x.col(i));
        const double r = q1.norm();
        if (r < 0.5) continue;
        q1 /= r;
        const VectorC aq = a * q1;
        const double s = aq.norm();
        if (s <= zero_tol) continue;
        out.q.col(filled++) = q1;
        VectorC q2 = project_out(-aq.conjugate() / s);
        q2.normalize();
        out.q.col(filled++) = q2;
        out.sigma.push_back((q1.transpose() * a * q2).value().real());
    }
    // zero space: orthonormal completion
    for (Eigen::Index i = 0; i < n && filled < n; ++i) {
        VectorC v = project_out(x.col(i));
        const double r = v.norm();
        if (r < 0.5) continue;
        out.q.col(filled++) = v / r;
    }
    for (Eigen::Index i = 0; i < n && filled < n; ++i) {
        VectorC v = project_out(VectorC::Unit(n, i));
        const double r = v.norm();
        if (r < 1e-3) continue;
        out.q.col(filled++) = v / r;
    }
    while (out.sigma.size() < static_cast<size_t>(n / 2)) out.sigma.push_back(0.0);
    std::stable_sort(out.sigma.begin(), out.sigma.end(), std::greater<>());
    return out;
}

inline MatrixC youla_block_matrix(const std::vector<double>& sigma, Eigen::Index n) {
    MatrixC m = MatrixC::Zero(n, n);
    for (size_t j = 0; j < sigma.size(); ++j) {
        const auto k = static_cast<Eigen::Index>(2 * j);
        if (k + 1 >= n) break;
        m(k, k + 1) = sigma[j];
        m(k + 1, k) = -sigma[j];
    }
    return m;
}

struct UnitarityResidual {
    double r1 = 0.0; // |U^dag U + V^dag V - I|_F
    double r2 = 0.0; // |U^T V + V^T U|_F
    double max() const { return std::max(r1, r2); }
};

inline UnitarityResidual check_unitarity(const MatrixC& u, const MatrixC& v) {
    if (u.rows() != v.rows() || u.cols() != v.cols())
        throw ValidationError("check_unitarity: U and V shapes differ");
    UnitarityResidual r;
    r.r1 = (u.adjoint() * u + v.adjoint() * v - MatrixC::Identity(u.cols(), u.cols())).norm();
    r.r2 = (u.transpose() * v + v.transpose() * u).norm();
    return r;
}

// U = C Ubar D^dag, V = C^* Vbar D^dag. Columns of C and D are ordered
// E block, then the paired modes as consecutive (k, kbar), then O block.
struct BlochMessiahForm {
    MatrixC c, d;
    std::vector<int> empty;
    std::vector<std::pair<int, int>> pairs;
    std::vector<double> u, v; // per pair
    std::vector<int> occupied;
    double residual_u = 0.0, residual_v = 0.0;

    Eigen::Index size() const { return c.cols(); }

    MatrixR ubar() const {
        MatrixR m = MatrixR::Zero(size(), size());
        for (int k : empty) m(k, k) = 1.0;
        for (size_t p = 0; p < pairs.size(); ++p) {
            m(pairs[p].first, pairs[p].first) = u[p];
            m(pairs[p].second, pairs[p].second) = u[p];
        }
        return m;
    }

    MatrixR vbar() const {
        MatrixR m = MatrixR::Zero(size(), size());
        for (size_t p = 0; p < pairs.size(); ++p) {
            m(pairs[p].first, pairs[p].second) = v[p];
            m(pairs[p].second, pairs[p].first) = -v[p];
        }
        for (int k : occupied) m(k, k) = 1.0;
        return m;
    }

    // log of the normalization prod v_k^2
    double log_norm() const {
        double s = 0.0;
        for (double x : v) s += 2.0 * std::log(x);
        return s;
    }
};

inline BlochMessiahForm bloch_messiah(const MatrixC& u, const MatrixC& v,
                                      double tol_occ = default_tol_occ) {
    const auto res = check_unitarity(u, v);
    if (res.max() > 1e-8) {
        std::ostringstream os;
        os << "bloch_messiah: Bogoliubov unitarity violated, residuals " << res.r1 << ", " << res.r2;
        throw ValidationError(os.str());
    }
    const Eigen::Index n = u.rows();
    BlochMessiahForm bm;
    if (n == 0) return bm;

    Eigen::JacobiSVD<MatrixC> svd(u, Eigen::ComputeFullU | Eigen::ComputeFullV);
    bm.c = svd.matrixU();
    bm.d = svd.matrixV();
    const VectorR s = svd.singularValues();

    std::vector<std::pair<Eigen::Index, Eigen::Index>> clusters;
    for (Eigen::Index i = 0; i < n;) {
        Eigen::Index j = i + 1;
        while (j < n && s(j - 1) - s(j) <= 1e-8 * s(j - 1) + 1e-14) ++j;
        clusters.emplace_back(i, j);
        i = j;
    }

    const MatrixC vbar_raw = bm.c.transpose() * v * bm.d;
    for (auto [b, e] : clusters) {
        const Eigen::Index m = e - b;
        const double mean = s.segment(b, m).mean();
        if (mean >= 1.0 - tol_occ) {
            for (Eigen::Index k = b; k < e; ++k) bm.empty.push_back(static_cast<int>(k));
        } else if (mean <= tol_occ) {
            // Vbar block is unitary; absorb it into D so the block becomes identity
            const MatrixC w = vbar_raw.block(b, b, m, m);
            Eigen::JacobiSVD<MatrixC> ws(w, Eigen::ComputeFullU | Eigen::ComputeFullV);
            const MatrixC polar = ws.matrixU() * ws.matrixV().adjoint();
            bm.d.middleCols(b, m) = (bm.d.middleCols(b, m) * polar.adjoint()).eval();
            for (Eigen::Index k = b; k < e; ++k) bm.occupied.push_back(static_cast<int>(k));
        } else {
            if (m % 2 != 0) {
                std::ostringstream os;
                os << "bloch_messiah: odd paired cluster of size " << m << " at u = " << mean;
                throw LogicError(os.str());
            }
            const MatrixC blk = vbar_raw.block(b, b, m, m);
            const MatrixC skew = 0.5 * (blk - blk.transpose());
            const YoulaForm yf = youla_canonical(skew, 1e-6);
            bm.c.middleCols(b, m) = (bm.c.middleCols(b, m) * yf.q).eval();
            bm.d.middleCols(b, m) = (bm.d.middleCols(b, m) * yf.q).eval();
            for (Eigen::Index j = 0; j < m / 2; ++j) {
                const double sig = yf.sigma[static_cast<size_t>(j)];
                if (sig <= 0.0) throw LogicError("bloch_messiah: degenerate paired block");
                const double r = std::hypot(mean, sig);
                bm.pairs.emplace_back(static_cast<int>(b + 2 * j), static_cast<int>(b + 2 * j + 1));
                bm.u.push_back(mean / r);
                bm.v.push_back(sig / r);
            }
        }
    }
    // Ubar positive: the SVD already gives C^dag U D = diag(s) >= 0, and the
    // Youla rotations act identically on C and D inside each cluster.
    const MatrixC ub = bm.ubar().cast<cplx>();
    const MatrixC vb = bm.vbar().cast<cplx>();
    bm.residual_u = (u - bm.c * ub * bm.d.adjoint()).norm();
    bm.residual_v = (v - bm.c.conjugate() * vb * bm.d.adjoint()).norm();
    return bm;
}

} // namespace majorana
