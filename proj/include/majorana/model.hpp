#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>

#include "core.hpp"

namespace majorana {

enum class Orientation { horizontal, vertical };

struct Site {
    int x = 0, y = 0;
};

// j is the +x (horizontal) or +y (vertical) neighbour of i.
struct Bond {
    int i = 0, j = 0;
    Orientation orientation = Orientation::horizontal;
};

struct Geometry {
    std::string kind;
    int leg_length = 0;
    std::vector<Site> sites;
    std::vector<Bond> bonds;
    std::vector<int> junctions;
    // named site sequences; arms are listed starting next to their junction
    std::map<std::string, std::vector<int>> arms;

    int size() const { return static_cast<int>(sites.size()); }

    int index_at(int x, int y) const {
        for (int k = 0; k < size(); ++k)
            if (sites[k].x == x && sites[k].y == y) return k;
        return -1;
    }

    const std::vector<int>& arm(const std::string& name) const {
        auto it = arms.find(name);
        if (it == arms.end()) throw ValidationError("geometry has no arm named '" + name + "'");
        return it->second;
    }
};

namespace detail {

inline void connect_neighbours(Geometry& g) {
    g.bonds.clear();
    for (int i = 0; i < g.size(); ++i) {
        const int jh = g.index_at(g.sites[i].x + 1, g.sites[i].y);
        if (jh >= 0) g.bonds.push_back({i, jh, Orientation::horizontal});
        const int jv = g.index_at(g.sites[i].x, g.sites[i].y + 1);
        if (jv >= 0) g.bonds.push_back({i, jv, Orientation::vertical});
    }
}

inline std::vector<int> index_range(int first, int count, int stride = 1) {
    std::vector<int> v(static_cast<size_t>(count));
    for (int k = 0; k < count; ++k) v[static_cast<size_t>(k)] = first + k * stride;
    return v;
}

} // namespace detail

inline Geometry chain(int length) {
    if (length < 2) throw ValidationError("chain length must be at least 2");
    Geometry g;
    g.kind = "chain";
    g.leg_length = length;
    for (int x = 0; x < length; ++x) g.sites.push_back({x, 0});
    g.arms["rail"] = detail::index_range(0, length);
    detail::connect_neighbours(g);
    return g;
}

// Rail x = -L..L at y = 0, then the vertical leg y = -L..-1 below x = 0.
inline Geometry t_junction(int leg) {
    if (leg < 2) throw ValidationError("T-junction leg length must be at least 2");
    Geometry g;
    g.kind = "t_junction";
    g.leg_length = leg;
    for (int x = -leg; x <= leg; ++x) g.sites.push_back({x, 0});
    for (int y = -leg; y <= -1; ++y) g.sites.push_back({0, y});
    g.junctions = {leg};
    g.arms["J"] = {leg};
    g.arms["left"] = detail::index_range(leg - 1, leg, -1);
    g.arms["right"] = detail::index_range(leg + 1, leg);
    g.arms["down"] = detail::index_range(3 * leg, leg, -1);
    g.arms["rail"] = detail::index_range(0, 2 * leg + 1);
    detail::connect_neighbours(g);
    return g;
}

// Comb: rail S1 J1 S2 J2 ... S_{n+1} with every rail segment of length L and a
// vertical leg of length L hanging below each junction.
inline Geometry multi_t(int leg, int n_legs) {
    if (leg < 2) throw ValidationError("multi-T leg length must be at least 2");
    if (n_legs < 1) throw ValidationError("multi-T needs at least one vertical leg");
    Geometry g;
    g.kind = "multi_t";
    g.leg_length = leg;
    const int rail = (n_legs + 1) * leg + n_legs;
    for (int x = 0; x < rail; ++x) g.sites.push_back({x, 0});
    for (int j = 1; j <= n_legs; ++j) {
        const int jx = j * (leg + 1) - 1;
        g.junctions.push_back(jx);
        g.arms["J" + std::to_string(j)] = {jx};
        std::vector<int> legsites;
        for (int y = -leg; y <= -1; ++y) {
            legsites.push_back(g.size());
            g.sites.push_back({jx, y});
        }
        std::reverse(legsites.begin(), legsites.end());
        g.arms["V" + std::to_string(j)] = legsites;
    }
    g.arms["S1"] = detail::index_range(leg - 1, leg, -1);
    for (int s = 2; s <= n_legs; ++s) g.arms["S" + std::to_string(s)] = detail::index_range((s - 1) * (leg + 1), leg);
    g.arms["S" + std::to_string(n_legs + 1)] = detail::index_range(n_legs * (leg + 1), leg);
    g.arms["rail"] = detail::index_range(0, rail);
    detail::connect_neighbours(g);
    return g;
}

struct KitaevParams {
    double t = 1.0;
    double delta = 1.0;
    double phi_h = 0.0;
    double phi_v = pi / 2;
    double mu_topo = -0.05;
    double mu_triv = -4.0;

    bool topological(double mu) const { return std::abs(mu) < 2.0 * std::abs(t); }
};

struct BdGOperator {
    MatrixC h;     // N x N Hermitian
    MatrixC delta; // N x N skew

    Eigen::Index size() const { return h.rows(); }

    MatrixC full() const {
        const Eigen::Index n = size();
        MatrixC m(2 * n, 2 * n);
        m << h, delta, -delta.conjugate(), -h.conjugate();
        return m;
    }
};

inline cplx pairing_amplitude(const Bond& b, const KitaevParams& p) {
    const double phi = b.orientation == Orientation::horizontal ? p.phi_h : p.phi_v;
    return p.delta * std::polar(1.0, phi);
}

inline BdGOperator assemble_bdg(const Geometry& g, const KitaevParams& p, const VectorR& mu) {
    const int n = g.size();
    if (mu.size() != n) throw ValidationError("assemble_bdg: mu has wrong length");
    BdGOperator op{MatrixC::Zero(n, n), MatrixC::Zero(n, n)};
    for (int i = 0; i < n; ++i) op.h(i, i) = -mu(i);
    for (const Bond& b : g.bonds) {
        op.h(b.i, b.j) = op.h(b.j, b.i) = -p.t;
        const cplx d = pairing_amplitude(b, p);
        op.delta(b.i, b.j) = d;
        op.delta(b.j, b.i) = -d;
    }
    return op;
}

// Sparse 2N x 2N BdG matrix with a fixed off-diagonal part and a diagonal that
// is refreshed from mu on every call.
class SparseBdG {
public:
    SparseBdG(const Geometry& g, const KitaevParams& p) : n_(g.size()) {
        std::vector<Eigen::Triplet<cplx>> trip;
        for (int i = 0; i < 2 * n_; ++i) trip.emplace_back(i, i, 0.0);
        for (const Bond& b : g.bonds) {
            const cplx d = pairing_amplitude(b, p);
            trip.emplace_back(b.i, b.j, -p.t);
            trip.emplace_back(b.j, b.i, -p.t);
            trip.emplace_back(n_ + b.i, n_ + b.j, p.t);
            trip.emplace_back(n_ + b.j, n_ + b.i, p.t);
            trip.emplace_back(b.i, n_ + b.j, d);
            trip.emplace_back(b.j, n_ + b.i, -d);
            trip.emplace_back(n_ + b.i, b.j, -std::conj(d));
            trip.emplace_back(n_ + b.j, b.i, std::conj(d));
        }
        m_.resize(2 * n_, 2 * n_);
        m_.setFromTriplets(trip.begin(), trip.end());
        m_.makeCompressed();
    }

    const Eigen::SparseMatrix<cplx>& at(const VectorR& mu) {
        for (int i = 0; i < n_; ++i) {
            m_.coeffRef(i, i) = -mu(i);
            m_.coeffRef(n_ + i, n_ + i) = mu(i);
        }
        return m_;
    }

    int sites() const { return n_; }

private:
    int n_;
    Eigen::SparseMatrix<cplx> m_;
};

struct BogoliubovFrame {
    MatrixC u, v;
    VectorR energies; // meaningful for the diagonalized t = 0 frame
    double time = 0.0;

    Eigen::Index modes() const { return u.cols(); }
    MatrixC stacked() const {
        MatrixC w(2 * u.rows(), u.cols());
        w << u, v;
        return w;
    }
    static BogoliubovFrame from_stacked(const MatrixC& w, double t) {
        const Eigen::Index n = w.rows() / 2;
        BogoliubovFrame f;
        f.u = w.topRows(n);
        f.v = w.bottomRows(n);
        f.time = t;
        return f;
    }
};

// Site coordinates and topological-component labels (-1 = none) used to
// localize and pair Majorana zero modes.
struct ZeroModeGauge {
    std::vector<Site> positions;
    std::vector<int> component;
};

inline ZeroModeGauge zero_mode_gauge(const Geometry& g, const KitaevParams& p, const VectorR& mu) {
    ZeroModeGauge z;
    z.positions = g.sites;
    z.component.assign(static_cast<size_t>(g.size()), -1);
    std::vector<int> parent(static_cast<size_t>(g.size()));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    for (const Bond& b : g.bonds)
        if (p.topological(mu(b.i)) && p.topological(mu(b.j))) parent[find(b.i)] = find(b.j);
    std::map<int, int> label;
    for (int i = 0; i < g.size(); ++i) {
        if (!p.topological(mu(i))) continue;
        const int r = find(i);
        auto [it, fresh] = label.emplace(r, static_cast<int>(label.size()));
        z.component[static_cast<size_t>(i)] = it->second;
    }
    return z;
}

namespace detail {

// (u; v) -> (v^*; u^*)
inline VectorC ph_partner(const VectorC& w) {
    const Eigen::Index n = w.size() / 2;
    VectorC p(w.size());
    p << w.tail(n).conjugate(), w.head(n).conjugate();
    return p;
}

inline std::pair<double, double> centre(const VectorC& g, const std::vector<Site>& pos) {
    const Eigen::Index n = g.size() / 2;
    double wsum = 0, cx = 0, cy = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w = std::norm(g(i)) + std::norm(g(n + i));
        wsum += w;
        cx += w * pos[static_cast<size_t>(i)].x;
        cy += w * pos[static_cast<size_t>(i)].y;
    }
    return {cx / wsum, cy / wsum};
}

} // namespace detail

// Columns: zero modes first (gauge fixed, ordered by left Majorana position),
// then the gapped modes by ascending energy.
inline BogoliubovFrame diagonalize(const BdGOperator& op, double zero_tol,
                                   const ZeroModeGauge* gauge = nullptr) {
    const Eigen::Index n = op.size();
    const MatrixC h = op.full();
    Eigen::SelfAdjointEigenSolver<MatrixC> es(h);
    if (es.info() != Eigen::Success) throw NumericalError("diagonalize: eigensolver failed");
    const VectorR& e = es.eigenvalues();
    const MatrixC& x = es.eigenvectors();

    std::vector<Eigen::Index> zero, pos;
    for (Eigen::Index i = 0; i < 2 * n; ++i) {
        if (std::abs(e(i)) < zero_tol) zero.push_back(i);
        else if (e(i) > 0) pos.push_back(i);
    }
    if (zero.size() % 2 != 0 || static_cast<Eigen::Index>(pos.size() + zero.size() / 2) != n) {
        std::ostringstream os;
        os << "diagonalize: zero_tol " << zero_tol << " splits a particle-hole pair ("
           << zero.size() << " near-zero eigenvalues)";
        throw NumericalError(os.str());
    }
    const Eigen::Index m = static_cast<Eigen::Index>(zero.size()) / 2;

    std::vector<Site> positions;
    std::vector<int> component;
    if (gauge) {
        positions = gauge->positions;
        component = gauge->component;
    } else {
        for (Eigen::Index i = 0; i < n; ++i) positions.push_back({static_cast<int>(i), 0});
        component.assign(static_cast<size_t>(n), 0);
    }

    std::vector<VectorC> dvecs;
    if (m > 0) {
        // real basis of the particle-hole invariant (Majorana) subspace
        const Eigen::Index dim = 2 * n;
        MatrixR realrep(2 * dim, 4 * m);
        Eigen::Index c = 0;
        for (Eigen::Index k : zero) {
            const VectorC xk = x.col(k);
            const VectorC pk = detail::ph_partner(xk);
            for (const VectorC& g : {VectorC(xk + pk), VectorC(cplx(0, 1) * (xk - pk))}) {
                realrep.col(c).head(dim) = g.real();
                realrep.col(c).tail(dim) = g.imag();
                ++c;
            }
        }
        Eigen::JacobiSVD<MatrixR> svd(realrep, Eigen::ComputeThinU);
        const MatrixR basis = svd.matrixU().leftCols(2 * m);
        MatrixC g(dim, 2 * m);
        for (Eigen::Index j = 0; j < 2 * m; ++j)
            g.col(j) = basis.col(j).head(dim).cast<cplx>() + cplx(0, 1) * basis.col(j).tail(dim).cast<cplx>();

        // localize with a generic linear position functional
        VectorR xpos(dim);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& s = positions[static_cast<size_t>(i)];
            xpos(i) = xpos(n + i) = s.x + 0.37 * s.y;
        }
        const MatrixR proj = (g.adjoint() * xpos.asDiagonal() * g).real();
        Eigen::SelfAdjointEigenSolver<MatrixR> loc(0.5 * (proj + proj.transpose()));
        const MatrixC majo = g * loc.eigenvectors().cast<cplx>();

        struct Majo {
            VectorC g;
            std::pair<double, double> at;
            int comp;
        };
        std::map<int, std::vector<Majo>> bycomp;
        for (Eigen::Index j = 0; j < 2 * m; ++j) {
            VectorC gj = majo.col(j);
            Eigen::Index imax = 0;
            gj.head(n).cwiseAbs().maxCoeff(&imax);
            const cplx lead = gj(imax);
            if (lead.real() + lead.imag() < 0) gj = -gj;
            std::map<int, double> weight;
            for (Eigen::Index i = 0; i < n; ++i)
                weight[component[static_cast<size_t>(i)]] += std::norm(gj(i)) + std::norm(gj(n + i));
            int best = -1;
            double bw = -1;
            for (auto [cid, w] : weight)
                if (cid >= 0 && w > bw) {
                    bw = w;
                    best = cid;
                }
            bycomp[best].push_back({gj, detail::centre(gj, positions), best});
        }
        std::vector<std::pair<std::pair<double, double>, VectorC>> zm;
        for (auto& [cid, list] : bycomp) {
            if (list.size() % 2 != 0 || cid < 0) {
                std::ostringstream os;
                os << "diagonalize: Majorana zero modes do not pair up by topological region ("
                   << list.size() << " in region " << cid << ")";
                throw NumericalError(os.str());
            }
            std::sort(list.begin(), list.end(), [](const Majo& a, const Majo& b) { return a.at < b.at; });
            for (size_t k = 0; k + 1 < list.size(); k += 2)
                zm.emplace_back(list[k].at, (list[k].g + cplx(0, 1) * list[k + 1].g) / std::sqrt(2.0));
        }
        std::sort(zm.begin(), zm.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        for (auto& z : zm) dvecs.push_back(z.second);
    }

    BogoliubovFrame f;
    f.u.resize(n, n);
    f.v.resize(n, n);
    f.energies.resize(n);
    Eigen::Index col = 0;
    for (const VectorC& w : dvecs) {
        f.u.col(col) = w.head(n);
        f.v.col(col) = w.tail(n);
        f.energies(col) = (w.adjoint() * h * w).value().real();
        ++col;
    }
    for (Eigen::Index k : pos) {
        f.u.col(col) = x.col(k).head(n);
        f.v.col(col) = x.col(k).tail(n);
        f.energies(col) = e(k);
        ++col;
    }
    return f;
}

// Block matrix W = [[U, V^*], [V, U^*]] of the Bogoliubov transformation.
inline MatrixC bogoliubov_w(const MatrixC& u, const MatrixC& v) {
    const Eigen::Index n = u.rows();
    MatrixC w(2 * n, 2 * n);
    w << u, v.conjugate(), v, u.conjugate();
    return w;
}

// ---------------------------------------------------------------- schedules

enum class RampProfile { half_cosine, smoothstep, linear };

inline double profile_value(RampProfile p, double tau) {
    tau = std::clamp(tau, 0.0, 1.0);
    switch (p) {
    case RampProfile::half_cosine: return 0.5 * (1.0 - std::cos(pi * tau));
    case RampProfile::smoothstep: return tau * tau * (3.0 - 2.0 * tau);
    case RampProfile::linear: return tau;
    }
    return tau;
}

inline RampProfile parse_profile(const std::string& s) {
    if (s == "half_cosine") return RampProfile::half_cosine;
    if (s == "smoothstep") return RampProfile::smoothstep;
    if (s == "linear") return RampProfile::linear;
    throw ValidationError("unknown ramp profile '" + s + "'");
}

struct Move {
    std::vector<int> sites; // in ramp order
    double target = 0.0;
};

struct Ramp {
    double onset = 0.0, duration = 0.0, start = 0.0, end = 0.0;
};

struct BraidSchedule {
    VectorR initial, final;
    std::vector<std::vector<Ramp>> ramps; // per site, by onset
    double total_time = 0.0;
    double alpha = 0.0;
    RampProfile profile = RampProfile::half_cosine;
    std::vector<double> move_boundaries; // includes 0 and T
    std::vector<double> checkpoints;

    int sites() const { return static_cast<int>(initial.size()); }
    int moves() const { return static_cast<int>(move_boundaries.size()) - 1; }
};

inline BraidSchedule compile_braid(const VectorR& initial, const std::vector<Move>& moves,
                                   double total_time, double alpha,
                                   RampProfile profile = RampProfile::half_cosine) {
    if (!(total_time > 0)) throw ValidationError("braid time T must be positive");
    if (alpha < 0 || alpha > 1) throw ValidationError("delay coefficient alpha must lie in [0, 1]");
    const int n = static_cast<int>(initial.size());
    BraidSchedule s;
    s.initial = initial;
    s.final = initial;
    s.ramps.resize(static_cast<size_t>(n));
    s.total_time = total_time;
    s.alpha = alpha;
    s.profile = profile;
    const int nm = static_cast<int>(moves.size());
    const double tm = nm > 0 ? total_time / nm : total_time;
    s.move_boundaries.push_back(0.0);
    for (int k = 0; k < nm; ++k) {
        const Move& mv = moves[static_cast<size_t>(k)];
        const int cnt = static_cast<int>(mv.sites.size());
        if (cnt == 0) throw ValidationError("move " + std::to_string(k) + " has no sites");
        std::vector<int> seen = mv.sites;
        std::sort(seen.begin(), seen.end());
        if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
            throw ValidationError("move " + std::to_string(k) + " ramps a site twice at once");
        const double w = tm / (1.0 + alpha * (cnt - 1));
        for (int q = 0; q < cnt; ++q) {
            const int site = mv.sites[static_cast<size_t>(q)];
            if (site < 0 || site >= n) throw ValidationError("move " + std::to_string(k) + " names a site out of range");
            Ramp r;
            r.onset = k * tm + q * alpha * w;
            r.duration = w;
            r.start = s.final(site);
            r.end = mv.target;
            s.ramps[static_cast<size_t>(site)].push_back(r);
            s.final(site) = mv.target;
        }
        s.move_boundaries.push_back(k + 1 == nm ? total_time : (k + 1) * tm);
    }
    if (nm == 0) s.move_boundaries.push_back(total_time);
    s.checkpoints = s.move_boundaries;
    s.checkpoints.push_back(0.5 * total_time);
    std::sort(s.checkpoints.begin(), s.checkpoints.end());
    s.checkpoints.erase(std::unique(s.checkpoints.begin(), s.checkpoints.end(),
                                    [&](double a, double b) { return std::abs(a - b) <= 1e-12 * total_time; }),
                        s.checkpoints.end());
    return s;
}

inline void mu_at(const BraidSchedule& s, double t, VectorR& out) {
    const double tol = 1e-12 * s.total_time;
    if (t < -tol || t > s.total_time + tol) {
        std::ostringstream os;
        os << "mu_at: time " << t << " outside [0, " << s.total_time << "]";
        throw ValidationError(os.str());
    }
    out.resize(s.sites());
    for (int i = 0; i < s.sites(); ++i) {
        double val = s.initial(i);
        for (const Ramp& r : s.ramps[static_cast<size_t>(i)]) {
            if (t >= r.onset + r.duration) {
                val = r.end;
                continue;
            }
            if (t > r.onset) val = r.start + (r.end - r.start) * profile_value(s.profile, (t - r.onset) / r.duration);
            break;
        }
        out(i) = val;
    }
}

inline VectorR mu_at(const BraidSchedule& s, double t) {
    VectorR out;
    mu_at(s, t, out);
    return out;
}

} // namespace majorana
