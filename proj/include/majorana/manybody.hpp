#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "evolve.hpp"
#include "ladder.hpp"
#include "model.hpp"
#include "skewlin.hpp"

namespace majorana {

enum class PhaseRule { exact, projection };

inline PhaseRule parse_phase_rule(const std::string& s) {
    if (s == "exact") return PhaseRule::exact;
    if (s == "projection") return PhaseRule::projection;
    throw ValidationError("unknown phase rule '" + s + "' (expected exact or projection)");
}

// The time-evolved vacuum e^{i phi} |0~(t)>, where |0~> is the product state
// built from the Bloch-Messiah form of the frame:
//   |0~> = N^{-1/2} prod_{(k,kbar)} dbar_k dbar_kbar prod_{k in O} dbar_k |0_c>.
struct VacuumRep {
    BogoliubovFrame frame;
    BlochMessiahForm bm;
    MatrixC cu, cv; // C Ubar, C Vbar
    double phi = 0.0;

    double time() const { return frame.time; }
    int sites() const { return static_cast<int>(frame.u.rows()); }
    double normalization() const { return std::exp(bm.log_norm()); }
    int barred_count() const { return static_cast<int>(2 * bm.pairs.size() + bm.occupied.size()); }

    // dbar operators in ket order, paired ones scaled by v_k^{-1/2}
    std::vector<LadderOp> barred() const {
        std::vector<LadderOp> out;
        out.reserve(static_cast<size_t>(barred_count()));
        for (size_t p = 0; p < bm.pairs.size(); ++p) {
            const double s = 1.0 / std::sqrt(bm.v[p]);
            for (int k : {bm.pairs[p].first, bm.pairs[p].second})
                out.push_back(LadderOp{s * cu.col(k).conjugate(), s * cv.col(k)});
        }
        for (int k : bm.occupied) out.push_back(LadderOp{cu.col(k).conjugate(), cv.col(k)});
        return out;
    }
};

inline VacuumRep vacuum_rep(const BogoliubovFrame& frame, double tol_occ = default_tol_occ) {
    VacuumRep r;
    r.frame = frame;
    r.bm = bloch_messiah(frame.u, frame.v, tol_occ);
    r.cu = r.bm.c * r.bm.ubar().cast<cplx>();
    r.cv = r.bm.c * r.bm.vbar().cast<cplx>();
    return r;
}

struct OccupationState {
    std::shared_ptr<const VacuumRep> vac;
    std::vector<int> modes; // occupied quasiparticles, ascending

    OccupationState() = default;
    OccupationState(std::shared_ptr<const VacuumRep> v, std::vector<int> m = {}) : vac(std::move(v)), modes(std::move(m)) {
        if (!vac) throw ValidationError("occupation state without a vacuum");
        std::sort(modes.begin(), modes.end());
        if (std::adjacent_find(modes.begin(), modes.end()) != modes.end())
            throw ValidationError("occupation state lists a mode twice");
        for (int k : modes)
            if (k < 0 || k >= vac->frame.modes()) throw ValidationError("occupation state mode out of range");
    }

    int excitations() const { return static_cast<int>(modes.size()); }
};

// Contraction <0_c| a_i b_j |0_c> for whole families of operators.
enum class OpKind { d, ddag, dbar, dbardag };

inline std::pair<MatrixC, MatrixC> coefficients(OpKind kind, const VacuumRep& r) {
    switch (kind) {
    case OpKind::d: return {r.frame.u.conjugate(), r.frame.v.conjugate()};
    case OpKind::ddag: return {r.frame.v, r.frame.u};
    case OpKind::dbar: return {r.cu.conjugate(), r.cv};
    case OpKind::dbardag: return {r.cv.conjugate(), r.cu};
    }
    throw LogicError("unknown operator kind");
}

inline MatrixC contraction(OpKind a, const VacuumRep& ra, OpKind b, const VacuumRep& rb) {
    if (ra.sites() != rb.sites()) throw ValidationError("contraction: frames have different sizes");
    return coefficients(a, ra).first.transpose() * coefficients(b, rb).second;
}

inline LadderOp quasi(const BogoliubovFrame& f, int n, bool dagger) {
    if (n < 0 || n >= f.modes()) throw ValidationError("quasiparticle index out of range");
    return dagger ? ddag_op(f.u, f.v, n) : d_op(f.u, f.v, n);
}

namespace detail {

inline cplx wick_pfaffian(const std::vector<LadderOp>& seq) {
    const Eigen::Index m = static_cast<Eigen::Index>(seq.size());
    if (m == 0) return 1.0;
    if (m % 2 != 0) return 0.0;
    const Eigen::Index n = seq.front().alpha.size();
    MatrixC a(n, m), b(n, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const LadderOp& op = seq[static_cast<size_t>(j)];
        if (op.alpha.size() != n || op.beta.size() != n) throw ValidationError("amplitude: operator size mismatch");
        a.col(j) = op.alpha;
        b.col(j) = op.beta;
    }
    const MatrixC full = a.transpose() * b;
    MatrixC skew = MatrixC::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = i + 1; j < m; ++j) {
            skew(i, j) = full(i, j);
            skew(j, i) = -full(i, j);
        }
    return pfaffian(skew);
}

inline double reversal_sign(long n) { return (n * (n - 1) / 2) % 2 ? -1.0 : 1.0; }

} // namespace detail

// <bra| o_1 ... o_k |ket> for linear operators o_i; with_phase = false drops
// e^{i(phi_ket - phi_bra)}.
inline cplx amplitude(const OccupationState& bra, const std::vector<LadderOp>& ops, const OccupationState& ket,
                      bool with_phase = true) {
    const VacuumRep& vb = *bra.vac;
    const VacuumRep& vk = *ket.vac;
    if (vb.sites() != vk.sites()) throw ValidationError("amplitude: bra and ket have different sizes");
    std::vector<LadderOp> seq;
    for (const LadderOp& op : vb.barred()) seq.push_back(op.adjoint());
    for (int n : bra.modes) seq.push_back(quasi(vb.frame, n, false));
    seq.insert(seq.end(), ops.begin(), ops.end());
    for (int n : ket.modes) seq.push_back(quasi(vk.frame, n, true));
    for (const LadderOp& op : vk.barred()) seq.push_back(op);
    if (seq.size() % 2 != 0) return 0.0;
    const double sign = detail::reversal_sign(vb.barred_count()) * detail::reversal_sign(bra.excitations());
    cplx out = sign * detail::wick_pfaffian(seq);
    if (with_phase) out *= std::polar(1.0, vk.phi - vb.phi);
    return out;
}

inline cplx fidelity(const OccupationState& reference, const OccupationState& evolved) {
    return amplitude(reference, {}, evolved);
}

// <P_i> = <n| 1 - 2 d_i^dag(0) d_i(0) |n>
inline double parity(const OccupationState& state, const BogoliubovFrame& initial, int mode) {
    const cplx occ = amplitude(state, {quasi(initial, mode, true), quasi(initial, mode, false)}, state);
    return 1.0 - 2.0 * occ.real();
}

// <H> in the vacuum of the frame: 1/2 Tr(Y^dag h Y), Y = [V^*; U^*].
inline double vacuum_energy(const BogoliubovFrame& f, const SparseC& h) {
    MatrixC y(2 * f.u.rows(), f.u.cols());
    y << f.v.conjugate(), f.u.conjugate();
    return 0.5 * (y.adjoint() * (h * y)).trace().real();
}

// Vacuum-to-vacuum amplitude <psi(t)|psi(t+dt)> of the exact Gaussian step,
// conj(sqrt(det(U^dag U' + V^dag V'))), with the square-root branch nearest
// the dynamical factor e^{-i e0 dt}.
inline cplx step_loschmidt(const BogoliubovFrame& a, const BogoliubovFrame& b, double e0) {
    const cplx det = (a.u.adjoint() * b.u + a.v.adjoint() * b.v).determinant();
    cplx r = std::conj(std::sqrt(det));
    if ((r * std::polar(1.0, e0 * (b.time - a.time))).real() < 0) r = -r;
    return r;
}

// Advances the tracked phase from prev to the frame at the next step; h_mid is
// the BdG matrix at the step midpoint.
inline VacuumRep vacuum_rep(const BogoliubovFrame& frame, const VacuumRep& prev, const SparseC& h_mid,
                            PhaseRule rule = PhaseRule::exact, double tol_occ = default_tol_occ) {
    VacuumRep r = vacuum_rep(frame, tol_occ);
    auto pa = std::make_shared<const VacuumRep>(prev);
    auto pb = std::make_shared<const VacuumRep>(r);
    const cplx raw = amplitude(OccupationState(pa), {}, OccupationState(pb), false);
    if (std::abs(raw) < 0.5) {
        std::ostringstream os;
        os << "phase tracking: overlap of consecutive vacua " << std::abs(raw) << " at t = " << frame.time
           << " is below 0.5; reduce dt";
        throw NumericalError(os.str());
    }
    const double dt = frame.time - prev.time();
    if (rule == PhaseRule::exact) {
        const cplx step = step_loschmidt(prev.frame, frame, vacuum_energy(prev.frame, h_mid));
        r.phi = prev.phi + std::arg(step) - std::arg(raw);
    } else {
        const double e0 = 0.5 * (vacuum_energy(prev.frame, h_mid) + vacuum_energy(frame, h_mid));
        r.phi = prev.phi - e0 * dt - std::arg(raw);
    }
    r.phi = std::remainder(r.phi, 2 * pi);
    return r;
}

// Keeps the current vacuum of a trajectory; feed it every accepted frame.
class VacuumTracker {
public:
    VacuumTracker(const BogoliubovFrame& initial, Drive drive, PhaseRule rule = PhaseRule::exact)
        : drive_(std::move(drive)), rule_(rule), current_(std::make_shared<const VacuumRep>(vacuum_rep(initial))) {}

    void advance(const BogoliubovFrame& f) {
        const SparseC h = drive_(0.5 * (current_->time() + f.time));
        current_ = std::make_shared<const VacuumRep>(vacuum_rep(f, *current_, h, rule_));
    }

    std::shared_ptr<const VacuumRep> current() const { return current_; }

private:
    Drive drive_;
    PhaseRule rule_;
    std::shared_ptr<const VacuumRep> current_;
};

// Running sum of arg<psi(t_j)|psi(t_j+1)> over consecutive integrator steps.
class PhaseConnection {
public:
    void add(cplx step_overlap, double t) {
        if (std::abs(step_overlap) < 0.5) {
            std::ostringstream os;
            os << "geometric phase: step overlap " << std::abs(step_overlap) << " at t = " << t
               << " is below 0.5; time grid too coarse";
            throw NumericalError(os.str());
        }
        value_ += std::arg(step_overlap);
    }
    double value() const { return value_; }

private:
    double value_ = 0.0;
};

// phi_g(t_k) = arg<psi|psi(t_k)> - connection(t_k), unwrapped along k.
inline std::vector<double> geometric_phase(const std::vector<cplx>& overlaps, const std::vector<double>& connection) {
    if (overlaps.size() != connection.size()) throw ValidationError("geometric_phase: series lengths differ");
    std::vector<double> out(overlaps.size());
    for (size_t k = 0; k < overlaps.size(); ++k) {
        const double g = std::arg(overlaps[k]) - connection[k];
        out[k] = k == 0 ? std::remainder(g, 2 * pi) : out[k - 1] + std::remainder(g - out[k - 1], 2 * pi);
    }
    return out;
}

// Continuous version of a phase series given modulo 2 pi.
inline std::vector<double> unwrap(const std::vector<double>& phases) {
    std::vector<double> out(phases.size());
    for (size_t k = 0; k < phases.size(); ++k)
        out[k] = k == 0 ? std::remainder(phases[k], 2 * pi) : out[k - 1] + std::remainder(phases[k] - out[k - 1], 2 * pi);
    return out;
}

// Physical zero-mode occupations (bit j = zero mode j occupied) to logical basis states.
struct SectorMap {
    int zero_modes = 2;
    std::map<unsigned, unsigned> physical_to_logical;
    int logical_states() const { return static_cast<int>(physical_to_logical.size()); }
};

// Two MZM pairs: even {00, 11} or odd {10, 01} sector, first listed state is logical 0.
inline SectorMap two_pair_sector(bool odd) {
    SectorMap m;
    m.zero_modes = 2;
    if (odd) m.physical_to_logical = {{0b01u, 0u}, {0b10u, 1u}};
    else m.physical_to_logical = {{0b00u, 0u}, {0b11u, 1u}};
    return m;
}

// Three MZM pairs (target, control): |t c>_L -> occupations (t, t xor c, c).
inline SectorMap cnot_sector() {
    SectorMap m;
    m.zero_modes = 3;
    for (unsigned t = 0; t < 2; ++t)
        for (unsigned c = 0; c < 2; ++c) {
            const unsigned phys = t | ((t ^ c) << 1) | (c << 2);
            m.physical_to_logical[phys] = (t << 1) | c;
        }
    return m;
}

struct LogicalAmplitudes {
    VectorC amplitudes;
    double leakage = 0.0; // total probability outside the sector
    bool leaked = false;  // some outside amplitude exceeded the threshold
};

// physical(b) is the amplitude on the zero-mode occupation pattern b.
inline LogicalAmplitudes logical_map(const VectorC& physical, const SectorMap& map, double threshold = 1e-6) {
    if (physical.size() != (Eigen::Index{1} << map.zero_modes))
        throw ValidationError("logical_map: expected one amplitude per zero-mode occupation pattern");
    LogicalAmplitudes out;
    out.amplitudes = VectorC::Zero(map.logical_states());
    for (Eigen::Index b = 0; b < physical.size(); ++b) {
        const auto it = map.physical_to_logical.find(static_cast<unsigned>(b));
        if (it != map.physical_to_logical.end()) {
            out.amplitudes(it->second) = physical(b);
        } else {
            out.leakage += std::norm(physical(b));
            if (std::abs(physical(b)) > threshold) out.leaked = true;
        }
    }
    return out;
}

// Zero-mode indices listed in a pattern, e.g. bits 0b101 -> {0, 2}.
inline std::vector<int> occupied_modes(unsigned bits, int zero_modes) {
    std::vector<int> out;
    for (int j = 0; j < zero_modes; ++j)
        if (bits >> j & 1u) out.push_back(j);
    return out;
}

inline std::string pattern_label(unsigned bits, int zero_modes) {
    std::string s;
    for (int j = 0; j < zero_modes; ++j) s += (bits >> j & 1u) ? '1' : '0';
    return s;
}

} // namespace majorana
