#pragma once

#include <string>
#include <vector>

#include "manybody.hpp"
#include "model.hpp"

namespace majorana {

// Sites k = from..to (1-based, either direction) along a named arm.
inline std::vector<int> arm_range(const Geometry& g, const std::string& arm, int from, int to) {
    const std::vector<int>& a = g.arm(arm);
    const int n = static_cast<int>(a.size());
    if (from < 1 || from > n || to < 1 || to > n) {
        throw ValidationError("arm '" + arm + "' has " + std::to_string(n) + " sites; range " + std::to_string(from) +
                              ".." + std::to_string(to) + " is out of bounds");
    }
    std::vector<int> out;
    const int step = to >= from ? 1 : -1;
    for (int k = from;; k += step) {
        out.push_back(a[static_cast<size_t>(k - 1)]);
        if (k == to) break;
    }
    return out;
}

inline std::vector<int> concat(std::initializer_list<std::vector<int>> parts) {
    std::vector<int> out;
    for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

struct Protocol {
    Geometry geometry;
    VectorR initial;
    std::vector<Move> moves;
    SectorMap sector;
    std::vector<unsigned> default_states; // occupation patterns over zero modes
    unsigned scan_initial = 0, scan_final = 0;
};

// Single chain along the rail of a T-junction whose ends are exchanged through
// the vertical leg, twice.
inline Protocol z_protocol(int leg, const KitaevParams& p) {
    Protocol pr;
    pr.geometry = t_junction(leg);
    const Geometry& g = pr.geometry;
    const int L = leg;
    pr.initial = VectorR::Constant(g.size(), p.mu_topo);
    for (int s : g.arm("down")) pr.initial(s) = p.mu_triv;
    const std::vector<Move> ex{
        {arm_range(g, "left", L, 1), p.mu_triv},  {arm_range(g, "down", 1, L), p.mu_topo},
        {arm_range(g, "right", L, 1), p.mu_triv}, {arm_range(g, "left", 1, L), p.mu_topo},
        {arm_range(g, "down", L, 1), p.mu_triv},  {arm_range(g, "right", 1, L), p.mu_topo},
    };
    pr.moves = ex;
    pr.moves.insert(pr.moves.end(), ex.begin(), ex.end());
    pr.sector.zero_modes = 1;
    pr.sector.physical_to_logical = {{0u, 0u}, {1u, 1u}};
    pr.default_states = {0u, 1u};
    pr.scan_initial = pr.scan_final = 1u;
    return pr;
}

// Two chains at the rail ends; each exchange extends the left chain through the
// junction into the leg, then the right chain, and retracts both, so the inner
// Majoranas of the two chains swap places. Two exchanges.
inline Protocol x_protocol(int leg, int split, const KitaevParams& p) {
    if (split < 1 || split >= leg) throw ValidationError("x protocol: split must lie in 1..leg-1");
    Protocol pr;
    pr.geometry = t_junction(leg);
    const Geometry& g = pr.geometry;
    const int L = leg, b = split;
    pr.initial = VectorR::Constant(g.size(), p.mu_triv);
    for (int s : concat({arm_range(g, "left", b + 1, L), arm_range(g, "right", b + 1, L)})) pr.initial(s) = p.mu_topo;
    const std::vector<Move> ex{
        {concat({arm_range(g, "left", b, 1), g.arm("J"), arm_range(g, "down", 1, L)}), p.mu_topo},
        {arm_range(g, "right", b, 1), p.mu_topo},
        {arm_range(g, "left", 1, b), p.mu_triv},
        {concat({arm_range(g, "down", L, 1), g.arm("J"), arm_range(g, "right", 1, b)}), p.mu_triv},
    };
    pr.moves = ex;
    pr.moves.insert(pr.moves.end(), ex.begin(), ex.end());
    pr.sector = two_pair_sector(false);
    pr.default_states = {0b00u, 0b01u, 0b10u, 0b11u};
    pr.scan_initial = 0b01u; // |10>
    pr.scan_final = 0b10u;   // |01>
    return pr;
}

// Comb with two legs and three chains (target, middle, control ordered left to
// right). The first and second chains swap places through leg V1.
inline Protocol cnot_protocol(int leg, int chain, int offset, const KitaevParams& p) {
    const int L = leg, l = chain, m = offset;
    if (l < 1 || l >= L) throw ValidationError("cnot protocol: chain length must lie in 1..leg-1");
    if (m < 0 || m + l > L) throw ValidationError("cnot protocol: offset + chain length exceeds the segment");
    Protocol pr;
    pr.geometry = multi_t(leg, 2);
    const Geometry& g = pr.geometry;
    pr.initial = VectorR::Constant(g.size(), p.mu_triv);
    for (int s : concat({arm_range(g, "S1", L - l + 1, L), arm_range(g, "S2", m + 1, m + l), arm_range(g, "S3", L - l + 1, L)}))
        pr.initial(s) = p.mu_topo;
    const auto& J1 = g.arm("J1");
    pr.moves = {
        {concat({arm_range(g, "S1", L - l, 1), J1, arm_range(g, "V1", 1, L)}), p.mu_topo},
        {concat({arm_range(g, "S1", L, 1), J1, arm_range(g, "V1", 1, L - l)}), p.mu_triv},
    };
    if (m > 0) pr.moves.push_back({concat({arm_range(g, "S2", m, 1), J1, arm_range(g, "S1", 1, L)}), p.mu_topo});
    else pr.moves.push_back({concat({J1, arm_range(g, "S1", 1, L)}), p.mu_topo});
    pr.moves.push_back({concat({arm_range(g, "S2", m + l, 1), J1, arm_range(g, "S1", 1, L - l)}), p.mu_triv});
    pr.moves.push_back({concat({arm_range(g, "V1", L - l, 1), J1, arm_range(g, "S2", 1, m + l)}), p.mu_topo});
    if (m > 0) pr.moves.push_back({concat({arm_range(g, "V1", L, 1), J1, arm_range(g, "S2", 1, m)}), p.mu_triv});
    else pr.moves.push_back({concat({arm_range(g, "V1", L, 1), J1}), p.mu_triv});
    pr.sector = cnot_sector();
    for (const auto& [phys, logical] : pr.sector.physical_to_logical) pr.default_states.push_back(phys);
    pr.scan_initial = 0b110u; // |01>_L
    pr.scan_final = 0b101u;   // |11>_L
    return pr;
}

} // namespace majorana
