#pragma once

// Exact many-body reference in the 2^N occupation-number basis.
// Basis state s has site i occupied iff bit i of s is set; c_i^dag acting on s
// picks up (-1)^(number of occupied sites below i).

#include <bit>
#include <cstdint>
#include <functional>
#include <memory>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <Eigen/Sparse>

#include "ladder.hpp"
#include "model.hpp"
#include "skewlin.hpp"

namespace majorana {

using FockVector = VectorC;
using FockOperator = Eigen::SparseMatrix<cplx>;

inline constexpr int fock_default_cap = 14;
inline constexpr int fock_large_cap = 16;

inline void check_fock_size(Eigen::Index sites, bool allow_large = false) {
    const int cap = allow_large ? fock_large_cap : fock_default_cap;
    if (sites > cap) {
        std::ostringstream os;
        os << "oracle: " << sites << " sites exceeds the Fock-space cap of " << cap;
        if (!allow_large) os << " (enable the large-system opt-in for up to " << fock_large_cap << ")";
        throw ValidationError(os.str());
    }
}

namespace fock {

inline int sign_below(std::uint64_t s, int i) {
    return (std::popcount(s & ((std::uint64_t{1} << i) - 1)) & 1) ? -1 : 1;
}

// Returns 0 when the result vanishes, otherwise the sign; s is updated.
inline int create(std::uint64_t& s, int i) {
    const std::uint64_t bit = std::uint64_t{1} << i;
    if (s & bit) return 0;
    const int sg = sign_below(s, i);
    s |= bit;
    return sg;
}

inline int annihilate(std::uint64_t& s, int i) {
    const std::uint64_t bit = std::uint64_t{1} << i;
    if (!(s & bit)) return 0;
    const int sg = sign_below(s, i);
    s &= ~bit;
    return sg;
}

inline int sites_of(const FockVector& v) {
    const auto dim = static_cast<std::uint64_t>(v.size());
    if (dim == 0 || (dim & (dim - 1)) != 0) throw ValidationError("oracle: Fock vector length is not a power of two");
    return std::countr_zero(dim);
}

} // namespace fock

inline FockVector fock_vacuum(int sites, bool allow_large = false) {
    check_fock_size(sites, allow_large);
    FockVector v = FockVector::Zero(Eigen::Index{1} << sites);
    v(0) = 1.0;
    return v;
}

inline FockVector fock_apply(const LadderOp& op, const FockVector& psi) {
    const int n = fock::sites_of(psi);
    if (op.alpha.size() != n || op.beta.size() != n) throw ValidationError("oracle: operator and state sizes differ");
    FockVector out = FockVector::Zero(psi.size());
    for (std::uint64_t s = 0; s < static_cast<std::uint64_t>(psi.size()); ++s) {
        const cplx a = psi(static_cast<Eigen::Index>(s));
        if (a == cplx(0)) continue;
        for (int i = 0; i < n; ++i) {
            std::uint64_t t = s;
            if (op.alpha(i) != cplx(0)) {
                if (int sg = fock::annihilate(t, i))
                    out(static_cast<Eigen::Index>(t)) += static_cast<double>(sg) * op.alpha(i) * a;
                t = s;
            }
            if (op.beta(i) != cplx(0)) {
                if (int sg = fock::create(t, i))
                    out(static_cast<Eigen::Index>(t)) += static_cast<double>(sg) * op.beta(i) * a;
            }
        }
    }
    return out;
}

// <a| o_1 o_2 ... o_k |b>
inline cplx fock_overlap(const FockVector& a, const std::vector<LadderOp>& ops, const FockVector& b) {
    FockVector v = b;
    for (auto it = ops.rbegin(); it != ops.rend(); ++it) v = fock_apply(*it, v);
    return a.dot(v);
}

// H = 1/2 Psi^dag h Psi in normal order plus the constant -Tr(H)/2.
inline FockOperator fock_hamiltonian(const BdGOperator& op, bool allow_large = false) {
    const int n = static_cast<int>(op.size());
    check_fock_size(n, allow_large);
    const std::uint64_t dim = std::uint64_t{1} << n;
    const double offset = -0.5 * op.h.diagonal().real().sum();
    std::vector<Eigen::Triplet<cplx>> trip;
    for (std::uint64_t s = 0; s < dim; ++s) {
        const auto col = static_cast<Eigen::Index>(s);
        cplx diag = offset;
        for (int i = 0; i < n; ++i)
            if (s >> i & 1) diag += op.h(i, i);
        trip.emplace_back(col, col, diag);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (i != j && op.h(i, j) != cplx(0)) {
                    std::uint64_t t = s;
                    int sg = fock::annihilate(t, j);
                    if (sg) sg *= fock::create(t, i);
                    if (sg) trip.emplace_back(static_cast<Eigen::Index>(t), col, static_cast<double>(sg) * op.h(i, j));
                }
                if (i < j && op.delta(i, j) != cplx(0)) {
                    std::uint64_t t = s;
                    int sg = fock::create(t, j);
                    if (sg) sg *= fock::create(t, i);
                    if (sg) trip.emplace_back(static_cast<Eigen::Index>(t), col, static_cast<double>(sg) * op.delta(i, j));
                    t = s;
                    sg = fock::annihilate(t, j);
                    if (sg) sg *= fock::annihilate(t, i);
                    if (sg)
                        trip.emplace_back(static_cast<Eigen::Index>(t), col,
                                          -static_cast<double>(sg) * std::conj(op.delta(i, j)));
                }
            }
    }
    FockOperator m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    m.setFromTriplets(trip.begin(), trip.end());
    m.makeCompressed();
    return m;
}

inline double condition_number(const MatrixC& a) {
    if (a.size() == 0) return 1.0;
    const VectorR s = Eigen::JacobiSVD<MatrixC>(a).singularValues();
    return s(s.size() - 1) > 0 ? s(0) / s(s.size() - 1) : std::numeric_limits<double>::infinity();
}

// exp(1/2 sum Z_ij c_i^dag c_j^dag)|0>, Z = (V U^-1)^*, normalized.
inline FockVector thouless_state(const MatrixC& u, const MatrixC& v, bool allow_large = false,
                                 double max_condition = 1e10) {
    const int n = static_cast<int>(u.rows());
    check_fock_size(n, allow_large);
    const double cond = condition_number(u);
    if (!(cond <= max_condition)) {
        std::ostringstream os;
        os << "thouless_state: U is singular (condition number " << cond
           << "); use product_state_vacuum instead";
        throw ValidationError(os.str());
    }
    MatrixC z = (v * u.inverse()).conjugate();
    z = (0.5 * (z - z.transpose())).eval();
    FockVector term = fock_vacuum(n, allow_large);
    FockVector sum = term;
    for (int k = 1; 2 * k <= n; ++k) {
        FockVector next = FockVector::Zero(term.size());
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                if (z(i, j) == cplx(0)) continue;
                next += z(i, j) * fock_apply(cdag_op(n, i), fock_apply(cdag_op(n, j), term));
            }
        term = next / static_cast<double>(k);
        sum += term;
    }
    return sum / sum.norm();
}

// prod_P (u_k + v_k cbar_k^dag cbar_kbar^dag) prod_O cbar_k^dag |0>,
// with cbar_k^dag = sum_i C_ik c_i^dag.
inline FockVector product_state_vacuum(const BlochMessiahForm& bm, bool allow_large = false) {
    const int n = static_cast<int>(bm.c.rows());
    FockVector psi = fock_vacuum(n, allow_large);
    auto cbar_dag = [&](int k) { return LadderOp{VectorC::Zero(n), bm.c.col(k)}; };
    for (auto it = bm.occupied.rbegin(); it != bm.occupied.rend(); ++it) psi = fock_apply(cbar_dag(*it), psi);
    for (size_t p = 0; p < bm.pairs.size(); ++p) {
        const auto [k, kb] = bm.pairs[p];
        psi = (bm.u[p] * psi + bm.v[p] * fock_apply(cbar_dag(k), fock_apply(cbar_dag(kb), psi))).eval();
    }
    return psi / psi.norm();
}

// d_{n1}^dag d_{n2}^dag ... psi for the listed modes of a frame (ascending).
inline FockVector fock_excite(const BogoliubovFrame& f, const std::vector<int>& modes, FockVector psi) {
    for (auto it = modes.rbegin(); it != modes.rend(); ++it) psi = fock_apply(ddag_op(f.u, f.v, *it), psi);
    return psi;
}

// Time-dependent many-body Hamiltonian: a fixed hopping/pairing part plus
// number operators weighted by the chemical potential, sum_i -mu_i (n_i - 1/2).
class FockDrive {
public:
    using MuFunction = std::function<void(double, VectorR&)>;

    FockDrive(const Geometry& g, const KitaevParams& p, MuFunction mu, bool allow_large = false)
        : n_(g.size()), mu_(std::move(mu)) {
        check_fock_size(n_, allow_large);
        fixed_ = fock_hamiltonian(assemble_bdg(g, p, VectorR::Zero(n_)), allow_large);
        const Eigen::Index dim = Eigen::Index{1} << n_;
        occ_.resize(dim, n_);
        for (Eigen::Index s = 0; s < dim; ++s)
            for (int i = 0; i < n_; ++i) occ_(s, i) = (s >> i & 1) ? 0.5 : -0.5;
    }

    int sites() const { return n_; }
    const FockOperator& fixed() const { return fixed_; }

    VectorR mu(double t) const {
        VectorR m(n_);
        mu_(t, m);
        return m;
    }

    VectorR number_diagonal(const VectorR& mu) const { return -(occ_ * mu); }

    FockOperator at(double t) const {
        FockOperator m = fixed_;
        const VectorR d = number_diagonal(mu(t));
        for (Eigen::Index s = 0; s < d.size(); ++s) m.coeffRef(s, s) += d(s);
        return m;
    }

private:
    int n_;
    MuFunction mu_;
    FockOperator fixed_;
    MatrixR occ_;
};

inline FockDrive make_fock_drive(const Geometry& g, const KitaevParams& p, const BraidSchedule& s,
                                 bool allow_large = false) {
    auto sched = std::make_shared<BraidSchedule>(s);
    return FockDrive(g, p, [sched](double t, VectorR& out) { mu_at(*sched, t, out); }, allow_large);
}

namespace detail {

// exp(-i dt (scale*F + diag(d))) psi by Lanczos with full reorthogonalization.
inline FockVector lanczos_apply(const FockOperator& f, double scale, const VectorR& d, double dt,
                                const FockVector& psi, int mdim, double tol = 1e-13) {
    const double beta0 = psi.norm();
    if (beta0 == 0.0) return psi;
    const Eigen::Index n = psi.size();
    const int m = static_cast<int>(std::min<Eigen::Index>(mdim, n));
    MatrixC q(n, m + 1);
    VectorR alpha = VectorR::Zero(m), beta = VectorR::Zero(m);
    q.col(0) = psi / beta0;
    auto coef = [&](int k) {
        Eigen::SelfAdjointEigenSolver<MatrixR> es;
        es.computeFromTridiagonal(alpha.head(k), beta.head(k - 1));
        const VectorC ph = (es.eigenvalues() * cplx(0, -dt)).array().exp();
        return VectorC(es.eigenvectors().cast<cplx>() * ph.asDiagonal() *
                       es.eigenvectors().row(0).transpose().cast<cplx>());
    };
    for (int j = 0; j < m; ++j) {
        VectorC w = scale * (f * q.col(j)) + d.cwiseProduct(q.col(j)).eval();
        alpha(j) = q.col(j).dot(w).real();
        for (int pass = 0; pass < 2; ++pass)
            for (int i = 0; i <= j; ++i) w -= q.col(i).dot(w) * q.col(i);
        const double nrm = w.norm();
        if (!std::isfinite(nrm)) throw NumericalError("lanczos: breakdown (non-finite vector)");
        beta(j) = nrm;
        if (nrm <= 1e-13 * beta0) return beta0 * (q.leftCols(j + 1) * coef(j + 1));
        q.col(j + 1) = w / nrm;
        if (j >= 3) {
            const VectorC c = coef(j + 1);
            if (nrm * std::abs(c(j)) <= tol) return beta0 * (q.leftCols(j + 1) * c);
        }
    }
    const VectorC c = coef(m);
    const double err = beta(m - 1) * std::abs(c(m - 1));
    if (m < n && err > 1e-10) {
        std::ostringstream os;
        os << "lanczos: subspace dimension " << m << " too small for dt = " << dt << " (residual estimate " << err
           << ")";
        throw NumericalError(os.str());
    }
    return beta0 * (q.leftCols(m) * c);
}

} // namespace detail

struct FockEvolveConfig {
    double dt = 0.01;
    int krylov_dim = 30;
};

// One fourth-order commutator-free step (two exponentials at the Gauss points).
inline FockVector fock_step(const FockDrive& drive, double t, double dt, const FockVector& psi,
                            const FockEvolveConfig& cfg) {
    static const double s3 = std::sqrt(3.0);
    const double a1 = (3.0 - 2.0 * s3) / 12.0, a2 = (3.0 + 2.0 * s3) / 12.0;
    const VectorR m1 = drive.mu(t + (0.5 - s3 / 6) * dt), m2 = drive.mu(t + (0.5 + s3 / 6) * dt);
    const VectorR d1 = drive.number_diagonal(a2 * m1 + a1 * m2);
    const VectorR d2 = drive.number_diagonal(a1 * m1 + a2 * m2);
    const FockVector half = detail::lanczos_apply(drive.fixed(), 0.5, d1, dt, psi, cfg.krylov_dim);
    return detail::lanczos_apply(drive.fixed(), 0.5, d2, dt, half, cfg.krylov_dim);
}

// Evolves psi from t0 to t_end, hitting every checkpoint exactly.
inline FockVector evolve_fock(FockVector psi, const FockDrive& drive, double t0, double t_end,
                              const FockEvolveConfig& cfg, std::vector<double> checkpoints = {},
                              const std::function<void(double, const FockVector&)>& on_checkpoint = {}) {
    if (!(cfg.dt > 0)) throw ValidationError("evolve_fock: dt must be positive");
    if (psi.size() != (Eigen::Index{1} << drive.sites())) throw ValidationError("evolve_fock: state size mismatch");
    checkpoints.push_back(t_end);
    std::sort(checkpoints.begin(), checkpoints.end());
    const double eps = 1e-12 * std::max(1.0, std::abs(t_end));
    if (on_checkpoint && std::abs(checkpoints.front() - t0) <= eps) on_checkpoint(t0, psi);
    double t = t0;
    for (double target : checkpoints) {
        if (target <= t + eps) continue;
        const double span = target - t;
        const long n = std::max(1L, static_cast<long>(std::ceil(span / cfg.dt - 1e-9)));
        const double h = span / static_cast<double>(n);
        const double start = t;
        for (long k = 0; k < n; ++k) psi = fock_step(drive, start + static_cast<double>(k) * h, h, psi, cfg);
        t = target;
        if (on_checkpoint) on_checkpoint(t, psi);
    }
    return psi;
}

} // namespace majorana
