#include <gtest/gtest.h>

#include "majorana/manybody.hpp"
#include "majorana/oracle.hpp"
#include "test_support.hpp"

using namespace majorana;
using testsupport::evolve_frozen;
using testsupport::ground_frame;

namespace {

std::shared_ptr<const VacuumRep> rep(const BogoliubovFrame& f) { return std::make_shared<const VacuumRep>(vacuum_rep(f)); }

FockVector excite(const BogoliubovFrame& f, const std::vector<int>& modes, FockVector psi) {
    for (auto it = modes.rbegin(); it != modes.rend(); ++it) psi = fock_apply(ddag_op(f.u, f.v, *it), psi);
    return psi;
}

FockVector evolve_fock_frozen(const FockOperator& h, const FockVector& psi, double t) {
    Eigen::SelfAdjointEigenSolver<MatrixC> es{MatrixC(h)};
    return es.eigenvectors() * ((es.eigenvalues() * cplx(0, -t)).array().exp() * (es.eigenvectors().adjoint() * psi).array()).matrix();
}

// Frozen-Hamiltonian trajectory with phase tracking over `steps` equal steps.
std::shared_ptr<const VacuumRep> track(const BogoliubovFrame& f0, const MatrixC& h, double t, int steps,
                                       PhaseRule rule = PhaseRule::exact) {
    const SparseC hs = h.sparseView();
    VacuumRep r = vacuum_rep(f0);
    for (int k = 1; k <= steps; ++k) {
        const BogoliubovFrame f = evolve_frozen(f0, h, t * k / steps);
        r = vacuum_rep(f, r, hs, rule);
    }
    return std::make_shared<const VacuumRep>(r);
}

std::vector<int> random_modes(std::mt19937_64& rng, int n) {
    std::vector<int> out;
    for (int k = 0; k < n; ++k)
        if (rng() % 3 == 0) out.push_back(k);
    return out;
}

} // namespace

TEST(Vacuum, InitialConvention) {
    std::mt19937_64 rng(1);
    const auto [u, v] = testsupport::random_bogoliubov(rng, 5);
    BogoliubovFrame f;
    f.u = u;
    f.v = v;
    const auto r = rep(f);
    EXPECT_EQ(r->phi, 0.0);
    EXPECT_GT(r->normalization(), 0.0);
    EXPECT_LE(r->normalization(), 1.0);
    EXPECT_NEAR(std::abs(fidelity(OccupationState(r), OccupationState(r)) - 1.0), 0.0, 1e-10);
}

TEST(Amplitude, OrthonormalExcitations) {
    std::mt19937_64 rng(2);
    const BogoliubovFrame f = ground_frame(testsupport::random_partitioned_bdg(rng, 6));
    const auto r = rep(f);
    EXPECT_FALSE(r->bm.empty.empty() && r->bm.occupied.empty());
    const std::vector<std::vector<int>> states{{}, {0}, {2}, {0, 3}, {1, 4, 5}, {0, 1, 2, 3, 4, 5}};
    for (size_t a = 0; a < states.size(); ++a)
        for (size_t b = 0; b < states.size(); ++b) {
            const cplx x = amplitude(OccupationState(r, states[a]), {}, OccupationState(r, states[b]));
            EXPECT_NEAR(std::abs(x - (a == b ? 1.0 : 0.0)), 0.0, 1e-10) << a << " " << b;
        }
}

TEST(Amplitude, OddOperatorCountIsExactZero) {
    std::mt19937_64 rng(3);
    const BogoliubovFrame f = ground_frame(testsupport::random_partitioned_bdg(rng, 4));
    const auto r = rep(f);
    EXPECT_EQ(amplitude(OccupationState(r), {c_op(4, 1)}, OccupationState(r, {0, 1})), cplx(0));
}

TEST(Amplitude, MatchesFockOracleAfterQuench) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 2 + trial % 6;
        const BdGOperator op0 = testsupport::random_partitioned_bdg(rng, n);
        const BdGOperator op1 = {testsupport::random_hermitian(rng, n), testsupport::random_skew(rng, n)};
        const BogoliubovFrame f0 = ground_frame(op0);
        const double t = 0.2 + 0.1 * (trial % 5);
        const auto r0 = rep(f0);
        const auto rt = track(f0, op1.full(), t, 8);
        const std::vector<int> na = random_modes(rng, n), nb = random_modes(rng, n);
        std::vector<LadderOp> ops;
        const int len = static_cast<int>(rng() % 5);
        for (int k = 0; k < len; ++k) ops.push_back(testsupport::random_ladder(rng, n));
        if ((na.size() + nb.size() + ops.size()) % 2 != 0) ops.push_back(c_op(n, static_cast<int>(rng() % n)));

        const FockVector psi0 = product_state_vacuum(r0->bm);
        const FockVector bra = excite(f0, na, psi0);
        const FockVector ket = evolve_fock_frozen(fock_hamiltonian(op1), excite(f0, nb, psi0), t);
        const cplx expect = fock_overlap(bra, ops, ket);
        const cplx got = amplitude(OccupationState(r0, na), ops, OccupationState(rt, nb));
        EXPECT_NEAR(std::abs(got - expect), 0.0, 1e-8) << "trial " << trial << " n " << n;
    }
}

TEST(Amplitude, CorrelatorAgainstOracleOnKitaevChain) {
    KitaevParams p;
    const Geometry g = chain(4);
    VectorR mu0(4), mu1(4);
    mu0 << 0.3, -0.2, 0.1, 0.4;
    mu1 << -1.0, 0.5, 0.2, -0.3;
    const BdGOperator op0 = assemble_bdg(g, p, mu0), op1 = assemble_bdg(g, p, mu1);
    const BogoliubovFrame f0 = diagonalize(op0, 1e-9);
    const auto r0 = rep(f0);
    const auto rt = track(f0, op1.full(), 1.5, 20);
    const FockVector psi0 = product_state_vacuum(r0->bm);
    const FockOperator h1 = fock_hamiltonian(op1);
    for (std::vector<int> modes : {std::vector<int>{}, {1}, {0, 2}})
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                const FockVector ket = evolve_fock_frozen(h1, excite(f0, modes, psi0), 1.5);
                const cplx expect = fock_overlap(excite(f0, modes, psi0), {cdag_op(4, i), c_op(4, j)}, ket);
                const cplx got = amplitude(OccupationState(r0, modes), {cdag_op(4, i), c_op(4, j)}, OccupationState(rt, modes));
                EXPECT_NEAR(std::abs(got - expect), 0.0, 1e-8);
            }
}

TEST(Amplitude, Hermiticity) {
    std::mt19937_64 rng(5);
    const int n = 5;
    const BdGOperator op = testsupport::random_partitioned_bdg(rng, n);
    const BogoliubovFrame f0 = ground_frame(op);
    const auto r0 = rep(f0);
    const auto rt2 = track(f0, BdGOperator{testsupport::random_hermitian(rng, n), testsupport::random_skew(rng, n)}.full(), 0.7, 6);
    std::vector<LadderOp> ops{testsupport::random_ladder(rng, n), testsupport::random_ladder(rng, n),
                              testsupport::random_ladder(rng, n)};
    std::vector<LadderOp> rev;
    for (auto it = ops.rbegin(); it != ops.rend(); ++it) rev.push_back(it->adjoint());
    const OccupationState a(r0, {1, 3}), b(rt2, {0, 2, 4, 1});
    EXPECT_NEAR(std::abs(amplitude(a, ops, b) - std::conj(amplitude(b, rev, a))), 0.0, 1e-10);
}

TEST(Contraction, TableIdentities) {
    std::mt19937_64 rng(6);
    const int n = 5;
    const BdGOperator op = testsupport::random_partitioned_bdg(rng, n);
    const BogoliubovFrame f0 = ground_frame(op);
    const MatrixC h1 = BdGOperator{testsupport::random_hermitian(rng, n), testsupport::random_skew(rng, n)}.full();
    const BogoliubovFrame ft = evolve_frozen(f0, h1, 0.9);
    const VacuumRep a = vacuum_rep(f0), b = vacuum_rep(ft);
    const MatrixC id = MatrixC::Identity(n, n);
    // equal-time anticommutator {d_m, d_n^dag} = <d_m d_n^dag> + <d_n^dag d_m>
    EXPECT_LT((contraction(OpKind::d, a, OpKind::ddag, a) + contraction(OpKind::ddag, a, OpKind::d, a).transpose() - id).norm(), 1e-12);
    EXPECT_LT((contraction(OpKind::d, b, OpKind::ddag, b) + contraction(OpKind::ddag, b, OpKind::d, b).transpose() - id).norm(), 1e-8);
    const MatrixC dd = contraction(OpKind::d, a, OpKind::d, a);
    EXPECT_LT((dd + dd.transpose()).norm(), 1e-12);
    EXPECT_LT((dd - f0.u.adjoint() * f0.v.conjugate()).norm(), 1e-12);
    EXPECT_LT((contraction(OpKind::d, a, OpKind::ddag, b) - f0.u.adjoint() * ft.u).norm(), 1e-12);
    EXPECT_LT((contraction(OpKind::ddag, a, OpKind::ddag, b) - f0.v.transpose() * ft.u).norm(), 1e-12);
    const MatrixC ub_a = a.bm.ubar().cast<cplx>(), ub_b = b.bm.ubar().cast<cplx>();
    EXPECT_LT((contraction(OpKind::dbar, a, OpKind::dbardag, b) - ub_a * a.bm.c.adjoint() * b.bm.c * ub_b).norm(), 1e-12);
    // dbar are rotations of d: dbar = sum_n D^*_nk d_n
    EXPECT_LT((contraction(OpKind::dbar, a, OpKind::dbardag, b) -
               a.bm.d.adjoint() * contraction(OpKind::d, a, OpKind::ddag, b) * b.bm.d)
                  .norm(),
              1e-10);
    // against the generic pair contraction of two linear operators
    for (OpKind ka : {OpKind::d, OpKind::ddag, OpKind::dbar, OpKind::dbardag})
        for (OpKind kb : {OpKind::d, OpKind::ddag, OpKind::dbar, OpKind::dbardag}) {
            const MatrixC m = contraction(ka, a, kb, b);
            const auto [aa, ab] = coefficients(ka, a);
            const auto [ba, bb] = coefficients(kb, b);
            const FockVector vac = fock_vacuum(n);
            const cplx direct = fock_overlap(vac, {LadderOp{aa.col(1), ab.col(1)}, LadderOp{ba.col(3), bb.col(3)}}, vac);
            EXPECT_NEAR(std::abs(m(1, 3) - direct), 0.0, 1e-12);
        }
}

TEST(Phase, FrozenHamiltonianDynamicalPhase) {
    KitaevParams p;
    VectorR mu(4);
    mu << 0.3, -0.2, 0.1, 0.4;
    const BdGOperator op = assemble_bdg(chain(4), p, mu);
    const BogoliubovFrame f0 = diagonalize(op, 1e-9);
    const double tau = 2.5, e0 = -0.5 * f0.energies.sum();
    for (PhaseRule rule : {PhaseRule::exact, PhaseRule::projection}) {
        const auto rt = track(f0, op.full(), tau, 50, rule);
        // phi carries the decomposition gauge; with the raw overlap it is the dynamical phase
        const cplx raw = amplitude(OccupationState(rep(f0)), {}, OccupationState(rt), false);
        EXPECT_NEAR(std::remainder(rt->phi + std::arg(raw) + e0 * tau, 2 * pi), 0.0, 1e-9);
        const cplx ov = fidelity(OccupationState(rep(f0)), OccupationState(rt));
        EXPECT_NEAR(std::abs(ov - std::polar(1.0, -e0 * tau)), 0.0, 1e-9);
    }
}

TEST(Phase, ExactRuleIndependentOfStepCount) {
    std::mt19937_64 rng(8);
    const int n = 5;
    const BogoliubovFrame f0 = ground_frame(testsupport::random_partitioned_bdg(rng, n));
    const MatrixC h1 = BdGOperator{testsupport::random_hermitian(rng, n), testsupport::random_skew(rng, n)}.full();
    const cplx a = fidelity(OccupationState(rep(f0)), OccupationState(track(f0, h1, 1.0, 10)));
    const cplx b = fidelity(OccupationState(rep(f0)), OccupationState(track(f0, h1, 1.0, 40)));
    EXPECT_NEAR(std::abs(a - b), 0.0, 1e-10);
    const cplx c = fidelity(OccupationState(rep(f0)), OccupationState(track(f0, h1, 1.0, 400, PhaseRule::projection)));
    EXPECT_NEAR(std::abs(a - c), 0.0, 1e-3);
}

TEST(Phase, CoarseStepRejected) {
    std::mt19937_64 rng(9);
    const int n = 6;
    const BogoliubovFrame f0 = ground_frame(testsupport::random_partitioned_bdg(rng, n, 0.0));
    const BdGOperator op1{testsupport::random_hermitian(rng, n), testsupport::random_skew(rng, n)};
    BogoliubovFrame f1 = ground_frame(op1);
    f1.time = 0.01;
    const VacuumRep r0 = vacuum_rep(f0);
    EXPECT_THROW(vacuum_rep(f1, r0, SparseC(op1.full().sparseView())), NumericalError);
}

TEST(Parity, InitialValues) {
    KitaevParams p;
    const Geometry g = t_junction(2);
    const VectorR init = testsupport::zgate_initial(g, p.mu_topo, p.mu_triv);
    const ZeroModeGauge z = zero_mode_gauge(g, p, init);
    const BogoliubovFrame f = diagonalize(assemble_bdg(g, p, init), 1e-2, &z);
    const auto r = rep(f);
    EXPECT_NEAR(parity(OccupationState(r), f, 0), 1.0, 1e-10);
    EXPECT_NEAR(parity(OccupationState(r, {0}), f, 0), -1.0, 1e-10);
    EXPECT_NEAR(parity(OccupationState(r, {0}), f, 1), 1.0, 1e-10);
}

TEST(GeometricPhase, FrozenIsZeroAndCoarseGridRejected) {
    const double e = 0.8, dt = 0.05;
    std::vector<cplx> ov;
    std::vector<double> conn;
    PhaseConnection pc;
    for (int k = 0; k <= 200; ++k) {
        if (k > 0) pc.add(std::polar(1.0, -e * dt), k * dt);
        ov.push_back(std::polar(1.0, -e * k * dt));
        conn.push_back(pc.value());
    }
    for (double g : geometric_phase(ov, conn)) EXPECT_NEAR(g, 0.0, 1e-12);
    EXPECT_THROW(pc.add(0.3, 1.0), NumericalError);
}

TEST(GeometricPhase, UnwrapsContinuously) {
    std::vector<cplx> ov;
    for (int k = 0; k <= 100; ++k) ov.push_back(std::polar(1.0, 0.05 * k));
    const auto g = geometric_phase(ov, std::vector<double>(ov.size(), 0.0));
    EXPECT_NEAR(g.back(), 5.0, 1e-12);
    std::vector<double> raw;
    for (int k = 0; k <= 100; ++k) raw.push_back(std::remainder(-0.07 * k, 2 * pi));
    EXPECT_NEAR(unwrap(raw).back(), -7.0, 1e-12);
}

TEST(LogicalMap, SectorConventions) {
    VectorC phys = VectorC::Zero(4);
    phys(0b00) = 1.0;
    auto even = logical_map(phys, two_pair_sector(false));
    EXPECT_EQ(even.amplitudes(0), cplx(1));
    EXPECT_FALSE(even.leaked);
    phys.setZero();
    phys(0b01) = 1.0; // |10>: first pair occupied
    EXPECT_EQ(pattern_label(0b01, 2), "10");
    auto odd = logical_map(phys, two_pair_sector(true));
    EXPECT_EQ(odd.amplitudes(0), cplx(1));
    auto wrong = logical_map(phys, two_pair_sector(false));
    EXPECT_TRUE(wrong.leaked);
    EXPECT_NEAR(wrong.leakage, 1.0, 1e-15);
}

TEST(LogicalMap, CnotSector) {
    const SectorMap m = cnot_sector();
    EXPECT_EQ(m.logical_states(), 4);
    EXPECT_EQ(m.physical_to_logical.at(0b000), 0u);
    EXPECT_EQ(m.physical_to_logical.at(0b110), 1u); // |01>_L -> (0, 1, 1)
    EXPECT_EQ(m.physical_to_logical.at(0b011), 2u); // |10>_L -> (1, 1, 0)
    EXPECT_EQ(m.physical_to_logical.at(0b101), 3u); // |11>_L -> (1, 0, 1)
}
