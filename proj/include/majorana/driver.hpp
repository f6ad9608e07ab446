#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <thread>

#include "config.hpp"
#include "manybody.hpp"
#include "oracle.hpp"

namespace majorana {

inline constexpr const char* version = "1.0.0";

// Rows of named columns sampled at increasing times (first column "time").
struct SeriesTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    int index(const std::string& name) const {
        const auto it = std::find(columns.begin(), columns.end(), name);
        if (it == columns.end()) throw ValidationError("no column named '" + name + "'");
        return static_cast<int>(it - columns.begin());
    }

    std::vector<double> column(const std::string& name) const {
        const int c = index(name);
        std::vector<double> out;
        for (const auto& r : rows) out.push_back(r[static_cast<size_t>(c)]);
        return out;
    }

    // value in the row whose time is closest to t
    double at(const std::string& name, double t) const {
        if (rows.empty()) throw ValidationError("empty series");
        size_t best = 0;
        for (size_t k = 1; k < rows.size(); ++k)
            if (std::abs(rows[k][0] - t) < std::abs(rows[best][0] - t)) best = k;
        return rows[best][static_cast<size_t>(index(name))];
    }

    void write_csv(const std::filesystem::path& path) const {
        std::ofstream out(path);
        if (!out) throw ValidationError("cannot write '" + path.string() + "'");
        for (size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
        out << "\n";
        char buf[32];
        for (const auto& r : rows) {
            for (size_t c = 0; c < r.size(); ++c) {
                std::snprintf(buf, sizeof buf, "%.12g", r[c]);
                out << (c ? "," : "") << buf;
            }
            out << "\n";
        }
    }
};

struct GateSetup {
    Protocol protocol;
    BraidSchedule schedule;
    BogoliubovFrame initial;
    int zero_modes = 0;
};

inline GateSetup prepare_gate(const RunConfig& c, double total_time, double alpha) {
    GateSetup s;
    s.protocol = build_protocol(c);
    const Geometry& g = s.protocol.geometry;
    s.schedule = compile_braid(s.protocol.initial, s.protocol.moves, total_time, alpha, c.profile);
    const ZeroModeGauge gauge = zero_mode_gauge(g, c.params, s.protocol.initial);
    s.initial = diagonalize(assemble_bdg(g, c.params, s.protocol.initial), c.zero_tol, &gauge);
    while (s.zero_modes < s.initial.modes() && std::abs(s.initial.energies(s.zero_modes)) < c.zero_tol) ++s.zero_modes;
    if (s.zero_modes != s.protocol.sector.zero_modes) {
        std::ostringstream os;
        os << "found " << s.zero_modes << " near-zero modes below zero_tol = " << c.zero_tol << ", the " << c.gate
           << " gate needs " << s.protocol.sector.zero_modes;
        throw ValidationError(os.str());
    }
    return s;
}

inline std::vector<unsigned> resolve_states(const RunConfig& c, const GateSetup& s) {
    if (c.states.empty()) return s.protocol.default_states;
    std::vector<unsigned> out;
    for (const std::string& p : c.states) out.push_back(parse_pattern(p, s.zero_modes));
    return out;
}

inline std::vector<double> sample_times(double total, int samples, const std::vector<double>& extra) {
    std::vector<double> t;
    for (int k = 0; k <= samples; ++k) t.push_back(total * k / samples);
    t.insert(t.end(), extra.begin(), extra.end());
    std::sort(t.begin(), t.end());
    std::vector<double> out;
    for (double x : t)
        if (out.empty() || x - out.back() > 1e-9 * total) out.push_back(x);
    return out;
}

inline int move_at(const BraidSchedule& s, double t) {
    int m = 0;
    for (size_t k = 1; k + 1 < s.move_boundaries.size(); ++k)
        if (t >= s.move_boundaries[k]) m = static_cast<int>(k);
    return m;
}

inline int popcount(unsigned b) { return std::popcount(b); }

struct GateResult {
    SeriesTable series;
    json summary;
};

inline GateResult run_gate(const RunConfig& c) {
    const auto wall0 = std::chrono::steady_clock::now();
    const GateSetup setup = prepare_gate(c, c.total_time, c.alpha);
    const Geometry& g = setup.protocol.geometry;
    const int nz = setup.zero_modes;
    const std::vector<unsigned> states = resolve_states(c, setup);
    const Drive drive = make_drive(g, c.params, setup.schedule);
    const auto r0 = std::make_shared<const VacuumRep>(vacuum_rep(setup.initial));
    const bool track = c.wants("phases") || c.wants("fidelity");
    const unsigned patterns = 1u << nz;
    auto label = [nz](unsigned b) { return pattern_label(b, nz); };

    GateResult res;
    SeriesTable& tab = res.series;
    tab.columns = {"time", "phi", "drift"};
    for (unsigned n : states) {
        const std::string ln = label(n);
        if (c.wants("fidelity"))
            for (const char* part : {"fid_re_", "fid_im_", "fid_prob_"}) tab.columns.push_back(part + ln);
        if (c.wants("transitions"))
            for (unsigned m = 0; m < patterns; ++m)
                if (popcount(m) % 2 == popcount(n) % 2) tab.columns.push_back("p_" + label(m) + "_" + ln);
        if (c.wants("total_probability")) tab.columns.push_back("total_" + ln);
        if (c.wants("parities"))
            for (int i = 0; i < nz; ++i) tab.columns.push_back("parity" + std::to_string(i) + "_" + ln);
        if (c.wants("phases")) tab.columns.push_back("gphase_" + ln);
    }
    if (c.wants("phases"))
        for (size_t k = 1; k < states.size(); ++k) tab.columns.push_back("braid_" + label(states[k]));

    std::optional<VacuumTracker> tracker;
    if (track) tracker.emplace(setup.initial, drive, c.phase_rule);
    std::vector<PhaseConnection> conn(states.size());
    std::vector<std::vector<cplx>> fid_series(states.size());
    std::vector<std::vector<double>> conn_series(states.size());
    std::vector<std::vector<cplx>> final_amps(states.size(), std::vector<cplx>(patterns));
    std::vector<std::vector<double>> final_parity(states.size(), std::vector<double>(static_cast<size_t>(nz)));
    double max_drift = 0.0;
    double last_time = 0.0;

    auto on_step = [&](const BogoliubovFrame& f) {
        last_time = f.time;
        if (!track) return;
        const auto prev = tracker->current();
        tracker->advance(f);
        if (!c.wants("phases")) return;
        const auto cur = tracker->current();
        for (size_t s = 0; s < states.size(); ++s) {
            const auto modes = occupied_modes(states[s], nz);
            conn[s].add(amplitude(OccupationState(prev, modes), {}, OccupationState(cur, modes)), f.time);
        }
    };
    auto on_sample = [&](const BogoliubovFrame& f) {
        const auto vac = track ? tracker->current() : std::make_shared<const VacuumRep>(vacuum_rep(f));
        const double drift = unitarity_drift(f);
        max_drift = std::max(max_drift, drift);
        std::vector<double> row{f.time, vac->phi, drift};
        for (size_t s = 0; s < states.size(); ++s) {
            const unsigned n = states[s];
            const OccupationState evolved(vac, occupied_modes(n, nz));
            std::vector<cplx> amp(patterns, 0.0);
            for (unsigned m = 0; m < patterns; ++m)
                if (popcount(m) % 2 == popcount(n) % 2) amp[m] = amplitude(OccupationState(r0, occupied_modes(m, nz)), {}, evolved);
            if (c.wants("fidelity")) {
                row.push_back(amp[n].real());
                row.push_back(amp[n].imag());
                row.push_back(std::norm(amp[n]));
            }
            if (c.wants("transitions"))
                for (unsigned m = 0; m < patterns; ++m)
                    if (popcount(m) % 2 == popcount(n) % 2) row.push_back(std::norm(amp[m]));
            if (c.wants("total_probability")) {
                double tot = 0.0;
                for (const cplx& a : amp) tot += std::norm(a);
                row.push_back(tot);
            }
            std::vector<double> par;
            if (c.wants("parities"))
                for (int i = 0; i < nz; ++i) {
                    par.push_back(parity(evolved, setup.initial, i));
                    row.push_back(par.back());
                }
            if (c.wants("phases")) {
                fid_series[s].push_back(amp[n]);
                conn_series[s].push_back(conn[s].value());
                row.push_back(0.0); // filled after the run
            }
            final_amps[s] = amp;
            if (!par.empty()) final_parity[s] = par;
        }
        if (c.wants("phases"))
            for (size_t k = 1; k < states.size(); ++k) row.push_back(0.0);
        tab.rows.push_back(std::move(row));
    };

    PropagationLog log;
    const std::vector<double> samples = sample_times(c.total_time, c.samples, setup.schedule.checkpoints);
    try {
        propagate(setup.initial, drive, c.total_time, c.propagator, samples, on_sample, on_step, &log);
    } catch (const std::exception& e) {
        std::ostringstream os;
        os << "run '" << c.name << "' failed near t = " << last_time << " (move " << move_at(setup.schedule, last_time)
           << "): " << e.what();
        throw NumericalError(os.str());
    }

    std::vector<std::vector<double>> gphase(states.size());
    if (c.wants("phases")) {
        for (size_t s = 0; s < states.size(); ++s) {
            gphase[s] = geometric_phase(fid_series[s], conn_series[s]);
            const int col = tab.index("gphase_" + label(states[s]));
            for (size_t k = 0; k < tab.rows.size(); ++k) tab.rows[k][static_cast<size_t>(col)] = gphase[s][k];
        }
        for (size_t s = 1; s < states.size(); ++s) {
            std::vector<double> diff(tab.rows.size());
            for (size_t k = 0; k < diff.size(); ++k) diff[k] = gphase[s][k] - gphase[0][k];
            diff = unwrap(diff);
            const int col = tab.index("braid_" + label(states[s]));
            for (size_t k = 0; k < tab.rows.size(); ++k) tab.rows[k][static_cast<size_t>(col)] = diff[k];
        }
    }

    json& sm = res.summary;
    sm["name"] = c.name;
    sm["gate"] = c.gate;
    sm["sites"] = g.size();
    sm["T"] = c.total_time;
    sm["alpha"] = c.alpha;
    sm["zero_modes"] = nz;
    std::vector<double> ez;
    for (int i = 0; i < nz; ++i) ez.push_back(setup.initial.energies(i));
    sm["zero_mode_energies"] = ez;
    sm["gap"] = nz < setup.initial.modes() ? setup.initial.energies(nz) : 0.0;
    sm["steps"] = log.steps;
    sm["max_unitarity_drift"] = max_drift;
    std::vector<std::string> labels;
    for (unsigned n : states) labels.push_back(label(n));
    sm["states"] = labels;
    json gate = json::object(), logical = json::object(), warnings = json::array();
    for (size_t s = 0; s < states.size(); ++s) {
        json col = json::object();
        VectorC phys(patterns);
        for (unsigned m = 0; m < patterns; ++m) {
            phys(m) = final_amps[s][m];
            col[label(m)] = {final_amps[s][m].real(), final_amps[s][m].imag()};
        }
        gate[labels[s]] = col;
        const LogicalAmplitudes la = logical_map(phys, setup.protocol.sector);
        json lj;
        std::vector<double> probs;
        for (Eigen::Index k = 0; k < la.amplitudes.size(); ++k) probs.push_back(std::norm(la.amplitudes(k)));
        lj["probabilities"] = probs;
        lj["leakage"] = la.leakage;
        const auto in_sector = setup.protocol.sector.physical_to_logical.find(states[s]);
        if (in_sector != setup.protocol.sector.physical_to_logical.end()) lj["logical_index"] = in_sector->second;
        logical[labels[s]] = lj;
        if (la.leaked && in_sector != setup.protocol.sector.physical_to_logical.end())
            warnings.push_back("state " + labels[s] + ": amplitude outside the logical sector (leakage " +
                               std::to_string(la.leakage) + ")");
        if (c.wants("parities")) sm["final_parities"][labels[s]] = final_parity[s];
    }
    sm["final_amplitudes"] = gate;
    sm["logical"] = logical;
    sm["warnings"] = warnings;
    if (c.wants("phases")) {
        for (size_t s = 1; s < states.size(); ++s) {
            const std::string col = "braid_" + labels[s];
            sm["braiding_phase"][labels[s]] = {{"half", tab.at(col, 0.5 * c.total_time)}, {"end", tab.at(col, c.total_time)}};
        }
    }
    sm["runtime_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    return res;
}

inline json metadata(const RunConfig& c, const json& summary, const std::string& kind) {
    json m;
    m["kind"] = kind;
    m["version"] = version;
    m["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                 std::to_string(EIGEN_MINOR_VERSION);
    m["config"] = c.raw;
    m["summary"] = summary;
    return m;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    out << j.dump(2) << "\n";
}

inline std::filesystem::path write_gate(const RunConfig& c, const GateResult& r, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path base = std::filesystem::path(dir) / c.name;
    r.series.write_csv(base.string() + ".csv");
    write_json(base.string() + ".meta.json", metadata(c, r.summary, "run"));
    return base;
}

struct ScanPoint {
    double total_time = 0, alpha = 0;
    double probability = std::numeric_limits<double>::quiet_NaN();
    std::string error;
};

inline double endpoint_probability(const RunConfig& c, double total_time, double alpha, unsigned initial_bits,
                                   unsigned final_bits, const GateSetup* prepared = nullptr) {
    const GateSetup setup = prepared ? *prepared : prepare_gate(c, total_time, alpha);
    const Drive drive = make_drive(setup.protocol.geometry, c.params, setup.schedule);
    const BogoliubovFrame f = propagate(setup.initial, drive, total_time, c.propagator, {});
    const auto r0 = std::make_shared<const VacuumRep>(vacuum_rep(setup.initial));
    const auto rt = std::make_shared<const VacuumRep>(vacuum_rep(f));
    return std::norm(amplitude(OccupationState(r0, occupied_modes(final_bits, setup.zero_modes)), {},
                               OccupationState(rt, occupied_modes(initial_bits, setup.zero_modes))));
}

// Grid points in row-major order (T outer, alpha inner); results do not depend on jobs.
inline std::vector<ScanPoint> run_scan(const RunConfig& c, int jobs = 1) {
    if (c.scan.times.empty() || c.scan.alphas.empty()) throw ConfigError("config field 'scan': grid must not be empty");
    const GateSetup probe = prepare_gate(c, c.scan.times.front(), c.scan.alphas.front());
    const unsigned ini = c.scan.initial.empty() ? probe.protocol.scan_initial : parse_pattern(c.scan.initial, probe.zero_modes);
    const unsigned fin = c.scan.final.empty() ? probe.protocol.scan_final : parse_pattern(c.scan.final, probe.zero_modes);
    std::vector<ScanPoint> pts;
    for (double t : c.scan.times)
        for (double a : c.scan.alphas) pts.push_back({t, a});
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t k = next++; k < pts.size(); k = next++) {
            try {
                pts[k].probability = endpoint_probability(c, pts[k].total_time, pts[k].alpha, ini, fin);
            } catch (const std::exception& e) {
                pts[k].error = e.what();
            }
        }
    };
    const int n = std::max(1, std::min<int>(jobs, static_cast<int>(pts.size())));
    std::vector<std::thread> pool;
    for (int j = 1; j < n; ++j) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return pts;
}

inline std::filesystem::path write_scan(const RunConfig& c, const std::vector<ScanPoint>& pts, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path base = std::filesystem::path(dir) / c.name;
    std::ofstream out(base.string() + ".grid.csv");
    if (!out) throw ValidationError("cannot write grid file in '" + dir + "'");
    out << "T,alpha,probability,status\n";
    char buf[96];
    json failures = json::array();
    for (const ScanPoint& p : pts) {
        std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,", p.total_time, p.alpha, p.probability);
        out << buf << (p.error.empty() ? "ok" : "error") << "\n";
        if (!p.error.empty()) failures.push_back({{"T", p.total_time}, {"alpha", p.alpha}, {"error", p.error}});
    }
    json summary;
    summary["points"] = pts.size();
    summary["failures"] = failures;
    write_json(base.string() + ".meta.json", metadata(c, summary, "scan"));
    return base;
}

struct BenchResult {
    SeriesTable series;
    json summary;
    double max_probability_deviation = 0, max_phase_deviation = 0, max_amplitude_deviation = 0;
};

// TDP and exact Fock-space evolution on the same schedule; overlaps <m|n(t)>
// with the t = 0 ground states for every requested initial state n.
inline BenchResult run_benchmark(const RunConfig& c) {
    const auto wall0 = std::chrono::steady_clock::now();
    const GateSetup setup = prepare_gate(c, c.total_time, c.alpha);
    const Geometry& g = setup.protocol.geometry;
    check_fock_size(g.size(), c.opt_in_large);
    const int nz = setup.zero_modes;
    const unsigned patterns = 1u << nz;
    const std::vector<unsigned> states = resolve_states(c, setup);
    const std::vector<double> samples = sample_times(c.total_time, c.samples, setup.schedule.checkpoints);
    auto label = [nz](unsigned b) { return pattern_label(b, nz); };
    std::vector<std::pair<unsigned, unsigned>> pairs; // (m, n)
    for (unsigned n : states)
        for (unsigned m = 0; m < patterns; ++m)
            if (popcount(m) % 2 == popcount(n) % 2) pairs.emplace_back(m, n);

    const Drive drive = make_drive(g, c.params, setup.schedule);
    const auto r0 = std::make_shared<const VacuumRep>(vacuum_rep(setup.initial));
    VacuumTracker tracker(setup.initial, drive, c.phase_rule);
    std::vector<std::vector<cplx>> tdp;
    propagate(setup.initial, drive, c.total_time, c.propagator, samples,
              [&](const BogoliubovFrame&) {
                  std::vector<cplx> row;
                  for (auto [m, n] : pairs)
                      row.push_back(amplitude(OccupationState(r0, occupied_modes(m, nz)), {},
                                              OccupationState(tracker.current(), occupied_modes(n, nz))));
                  tdp.push_back(row);
              },
              [&](const BogoliubovFrame& f) { tracker.advance(f); });
    const double tdp_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();

    const FockDrive fd = make_fock_drive(g, c.params, setup.schedule, c.opt_in_large);
    const FockVector vac = product_state_vacuum(r0->bm, c.opt_in_large);
    std::vector<FockVector> basis(patterns);
    for (unsigned m = 0; m < patterns; ++m) basis[m] = fock_excite(setup.initial, occupied_modes(m, nz), vac);
    std::vector<std::vector<cplx>> ed(samples.size(), std::vector<cplx>(pairs.size()));
    FockEvolveConfig fc;
    fc.dt = c.bench.ed_dt;
    fc.krylov_dim = c.bench.krylov_dim;
    for (unsigned n : states) {
        size_t k = 0;
        evolve_fock(basis[n], fd, 0.0, c.total_time, fc, samples, [&](double, const FockVector& psi) {
            for (size_t p = 0; p < pairs.size(); ++p)
                if (pairs[p].second == n) ed[k][p] = basis[pairs[p].first].dot(psi);
            ++k;
        });
    }

    BenchResult res;
    res.series.columns = {"time"};
    for (auto [m, n] : pairs)
        for (const char* src : {"tdp", "ed"})
            for (const char* part : {"_re_", "_im_"})
                res.series.columns.push_back(std::string(src) + part + label(m) + "_" + label(n));
    for (size_t k = 0; k < samples.size(); ++k) {
        std::vector<double> row{samples[k]};
        for (size_t p = 0; p < pairs.size(); ++p) {
            const cplx a = tdp[k][p], b = ed[k][p];
            row.insert(row.end(), {a.real(), a.imag(), b.real(), b.imag()});
            res.max_amplitude_deviation = std::max(res.max_amplitude_deviation, std::abs(a - b));
            res.max_probability_deviation = std::max(res.max_probability_deviation, std::abs(std::norm(a) - std::norm(b)));
            if (std::abs(a) >= 0.05 && std::abs(b) >= 0.05)
                res.max_phase_deviation =
                    std::max(res.max_phase_deviation, std::abs(std::remainder(std::arg(a) - std::arg(b), 2 * pi)));
        }
        res.series.rows.push_back(std::move(row));
    }
    res.summary["name"] = c.name;
    res.summary["sites"] = g.size();
    res.summary["fock_dimension"] = std::size_t{1} << g.size();
    res.summary["max_probability_deviation"] = res.max_probability_deviation;
    res.summary["max_amplitude_deviation"] = res.max_amplitude_deviation;
    res.summary["max_phase_deviation"] = res.max_phase_deviation;
    res.summary["phase_compared_above_modulus"] = 0.05;
    res.summary["tdp_runtime_s"] = tdp_time;
    res.summary["runtime_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    return res;
}

inline std::filesystem::path write_benchmark(const RunConfig& c, const BenchResult& r, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path base = std::filesystem::path(dir) / c.name;
    r.series.write_csv(base.string() + ".bench.csv");
    write_json(base.string() + ".meta.json", metadata(c, r.summary, "bench"));
    return base;
}

// Randomized property suites: Pfaffian identity, Bloch-Messiah reconstruction,
// and amplitude engine against the Fock-space oracle after random quenches.
inline json run_validation(std::uint64_t seed, int cases) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    auto random_c = [&](int r, int col) {
        MatrixC m(r, col);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < col; ++j) m(i, j) = cplx(gauss(rng), gauss(rng));
        return m;
    };
    json rep;
    double pf_err = 0;
    for (int k = 0; k < 200; ++k) {
        const int n = 2 * (1 + k % 10);
        const MatrixC a0 = random_c(n, n), a = a0 - a0.transpose();
        const cplx pf = pfaffian(a), det = a.determinant();
        pf_err = std::max(pf_err, std::abs(pf * pf - det) / std::abs(det));
    }
    rep["pfaffian_det_max_rel_error"] = pf_err;

    double bm_res = 0, uv_err = 0;
    for (int k = 0; k < 50; ++k) {
        const int n = 2 + k % 9;
        const MatrixC h0 = random_c(n, n), d0 = random_c(n, n);
        const BdGOperator op{0.5 * (h0 + h0.adjoint()), d0 - d0.transpose()};
        const BogoliubovFrame f = diagonalize(op, 1e-12);
        const BlochMessiahForm bm = bloch_messiah(f.u, f.v);
        bm_res = std::max({bm_res, bm.residual_u, bm.residual_v});
        for (size_t p = 0; p < bm.u.size(); ++p) uv_err = std::max(uv_err, std::abs(bm.u[p] * bm.u[p] + bm.v[p] * bm.v[p] - 1));
    }
    rep["bloch_messiah_max_residual"] = bm_res;
    rep["uv_normalization_max_error"] = uv_err;

    double amp_err = 0;
    for (int k = 0; k < cases; ++k) {
        const int kind = static_cast<int>(rng() % 3);
        const Geometry g = kind == 2 ? t_junction(2) : chain(2 + static_cast<int>(rng() % 7));
        const int n = g.size();
        KitaevParams p;
        p.t = 0.5 + uni(rng);
        p.delta = 0.3 + 1.2 * uni(rng);
        p.phi_h = 2 * pi * uni(rng);
        p.phi_v = 2 * pi * uni(rng);
        VectorR mu0(n), mu1(n);
        for (int i = 0; i < n; ++i) {
            mu0(i) = 6 * uni(rng) - 3;
            mu1(i) = 6 * uni(rng) - 3;
        }
        const BogoliubovFrame f0 = diagonalize(assemble_bdg(g, p, mu0), 1e-12);
        const BdGOperator op1 = assemble_bdg(g, p, mu1);
        const double t = 0.2 + 1.8 * uni(rng);
        Eigen::SelfAdjointEigenSolver<MatrixC> es(op1.full());
        const SparseC h1 = op1.full().sparseView();
        const int steps = 4 + static_cast<int>(std::ceil(4 * t * es.eigenvalues().cwiseAbs().maxCoeff()));
        auto r0 = std::make_shared<const VacuumRep>(vacuum_rep(f0));
        VacuumRep cur = *r0;
        BogoliubovFrame ft;
        for (int s = 1; s <= steps; ++s) {
            const double ts = t * s / steps;
            const MatrixC prop = es.eigenvectors() * (es.eigenvalues() * cplx(0, -ts)).array().exp().matrix().asDiagonal() *
                                 es.eigenvectors().adjoint();
            ft = BogoliubovFrame::from_stacked(prop * f0.stacked(), ts);
            cur = vacuum_rep(ft, cur, h1);
        }
        auto rt = std::make_shared<const VacuumRep>(cur);
        std::vector<int> na, nb;
        for (int i = 0; i < n; ++i) {
            if (uni(rng) < 0.3) na.push_back(i);
            if (uni(rng) < 0.3) nb.push_back(i);
        }
        std::vector<LadderOp> ops;
        const int len = static_cast<int>(rng() % 5);
        for (int o = 0; o < len; ++o) {
            const int i = static_cast<int>(rng() % static_cast<unsigned>(n));
            switch (rng() % 6) {
            case 0: ops.push_back(c_op(n, i)); break;
            case 1: ops.push_back(cdag_op(n, i)); break;
            case 2: ops.push_back(quasi(f0, i, false)); break;
            case 3: ops.push_back(quasi(f0, i, true)); break;
            case 4: ops.push_back(quasi(ft, i, false)); break;
            default: ops.push_back(quasi(ft, i, true)); break;
            }
        }
        const FockVector psi0 = product_state_vacuum(r0->bm);
        const FockOperator hf = fock_hamiltonian(op1);
        Eigen::SelfAdjointEigenSolver<MatrixC> fs{MatrixC(hf)};
        const FockVector ket0 = fock_excite(f0, nb, psi0);
        const FockVector ket = fs.eigenvectors() *
                               ((fs.eigenvalues() * cplx(0, -t)).array().exp() * (fs.eigenvectors().adjoint() * ket0).array()).matrix();
        const cplx expect = fock_overlap(fock_excite(f0, na, psi0), ops, ket);
        const cplx got = amplitude(OccupationState(r0, na), ops, OccupationState(rt, nb));
        amp_err = std::max(amp_err, std::abs(got - expect));
    }
    rep["amplitude_cases"] = cases;
    rep["amplitude_max_abs_error"] = amp_err;
    rep["seed"] = seed;
    const bool ok = pf_err <= 1e-10 && bm_res <= 1e-10 && uv_err <= 1e-12 && amp_err <= 1e-8;
    rep["ok"] = ok;
    return rep;
}

} // namespace majorana
