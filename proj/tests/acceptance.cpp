#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <thread>

#include "majorana/driver.hpp"

using namespace majorana;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void check(bool ok, const std::string& what) {
        pass = pass && ok;
        detail += (detail.empty() ? "" : "; ") + what + (ok ? "" : " [violated]");
    }
};

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

RunConfig config(const std::string& name) { return load_config(std::string(MAJORANA_CONFIG_DIR) + "/" + name + ".json"); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void check_runtime(Outcome& o, double seconds, double limit) {
    o.check(seconds < limit, "runtime " + fmt("%.1f", seconds) + " s < " + fmt("%.0f", limit) + " s");
}

double column_at(const SeriesTable& s, const std::string& col, double t) { return s.at(col, t); }

Outcome linear_algebra() {
    const auto t0 = std::chrono::steady_clock::now();
    const json r = run_validation(1, 0);
    Outcome o;
    const double pf = r["pfaffian_det_max_rel_error"], bm = r["bloch_messiah_max_residual"], uv = r["uv_normalization_max_error"];
    o.check(pf <= 1e-10, "pf^2 vs det rel " + fmt("%.2e", pf) + " <= 1e-10");
    o.check(bm <= 1e-10, "Bloch-Messiah residual " + fmt("%.2e", bm) + " <= 1e-10");
    o.check(uv <= 1e-12, "u^2+v^2-1 " + fmt("%.2e", uv) + " <= 1e-12");
    check_runtime(o, seconds_since(t0), 10);
    return o;
}

Outcome oracle_equivalence() {
    const auto t0 = std::chrono::steady_clock::now();
    const BenchResult b = run_benchmark(config("zgate_bench"));
    Outcome o;
    o.check(b.max_probability_deviation <= 1e-4, "max probability deviation " + fmt("%.2e", b.max_probability_deviation) + " <= 1e-4");
    o.check(b.max_phase_deviation <= 1e-3, "max phase deviation " + fmt("%.2e", b.max_phase_deviation) + " rad <= 1e-3");
    check_runtime(o, seconds_since(t0), 300);
    return o;
}

Outcome z_gate() {
    const auto t0 = std::chrono::steady_clock::now();
    const RunConfig c = config("zgate");
    const GateResult r = run_gate(c);
    Outcome o;
    const double half = r.summary["braiding_phase"]["1"]["half"], end = r.summary["braiding_phase"]["1"]["end"];
    const double fid = column_at(r.series, "fid_prob_1", c.total_time);
    o.check(std::abs(half - pi / 2) <= 0.01, "braiding phase at T/2 " + fmt("%.5f", half) + " = pi/2 +- 0.01");
    o.check(std::abs(end - pi) <= 0.01, "braiding phase at T " + fmt("%.5f", end) + " = pi +- 0.01");
    o.check(fid >= 0.999, "|<1|1(T)>|^2 " + fmt("%.6f", fid) + " >= 0.999");
    check_runtime(o, seconds_since(t0), 900);
    return o;
}

Outcome x_gate() {
    const auto t0 = std::chrono::steady_clock::now();
    const RunConfig c = config("xgate");
    const GateResult r = run_gate(c);
    const SeriesTable& s = r.series;
    const double T = c.total_time;
    Outcome o;
    const std::vector<std::pair<std::string, std::string>> flips{{"00", "11"}, {"11", "00"}, {"10", "01"}, {"01", "10"}};
    double mid_dev = 0, end_min = 1, same_max = 0, parity_dev = 0, total_dev = 0;
    for (const auto& [n, m] : flips) {
        mid_dev = std::max(mid_dev, std::abs(column_at(s, "p_" + m + "_" + n, T / 2) - 0.5));
        end_min = std::min(end_min, column_at(s, "p_" + m + "_" + n, T));
        same_max = std::max(same_max, column_at(s, "p_" + n + "_" + n, T));
        for (int i = 0; i < 2; ++i) {
            const std::string col = "parity" + std::to_string(i) + "_" + n;
            parity_dev = std::max(parity_dev, std::abs(column_at(s, col, T) + column_at(s, col, 0.0)));
        }
        for (double t : {0.0, T / 2, T}) total_dev = std::max(total_dev, std::abs(column_at(s, "total_" + n, t) - 1.0));
    }
    o.check(mid_dev <= 0.02, "mid-braid transitions within " + fmt("%.4f", mid_dev) + " of 1/2 (<= 0.02)");
    o.check(end_min >= 0.99, "end transition min " + fmt("%.5f", end_min) + " >= 0.99");
    o.check(same_max <= 0.01, "end same-state max " + fmt("%.5f", same_max) + " <= 0.01");
    o.check(parity_dev <= 0.02, "max |P(T)+P(0)| " + fmt("%.5f", parity_dev) + " <= 0.02");
    o.check(total_dev <= 1e-3, "total probability at 0, T/2, T within " + fmt("%.2e", total_dev) + " of 1 (<= 1e-3)");
    check_runtime(o, seconds_since(t0), 1200);
    return o;
}

Outcome adiabaticity_scan() {
    const RunConfig c = config("xscan");
    const auto pts = run_scan(c, static_cast<int>(std::max(1u, std::thread::hardware_concurrency())));
    Outcome o;
    const double tmax = *std::max_element(c.scan.times.begin(), c.scan.times.end());
    double row_min = 1, small_min = 1;
    std::string row;
    int errors = 0;
    for (const ScanPoint& p : pts) {
        if (!p.error.empty()) ++errors;
        if (p.total_time == tmax) {
            row_min = std::min(row_min, p.probability);
            row += (row.empty() ? "" : " ") + fmt("%.4f", p.probability);
        } else {
            small_min = std::min(small_min, p.probability);
        }
    }
    o.check(errors == 0, std::to_string(errors) + " failed grid points");
    o.check(row_min >= 0.99, "largest-T row (T = " + fmt("%.0f", tmax) + ": " + row + ") min " + fmt("%.4f", row_min) + " >= 0.99");
    o.check(small_min < 0.9, "smallest probability below largest T " + fmt("%.4f", small_min) + " < 0.9");
    return o;
}

Outcome cnot_gate() {
    const auto t0 = std::chrono::steady_clock::now();
    RunConfig c = config("cnot");
    c.states = {"000", "011"}; // logical |00> and |01>
    c.observables = {"transitions"};
    const GateResult r = run_gate(c);
    Outcome o;
    const json& lg = r.summary["logical"];
    const double off = lg["000"]["probabilities"][0], on = lg["011"]["probabilities"][3];
    double leak = 0;
    for (const char* n : {"000", "011"}) {
        double inside = 0;
        for (double p : lg[n]["probabilities"]) inside += p;
        leak = std::max(leak, 1.0 - inside);
    }
    o.check(off >= 0.99, "|<00|00(T)>_log|^2 " + fmt("%.5f", off) + " >= 0.99");
    o.check(on >= 0.99, "|<11|01(T)>_log|^2 " + fmt("%.5f", on) + " >= 0.99");
    o.check(leak <= 1e-2, "leakage " + fmt("%.2e", leak) + " <= 1e-2");
    check_runtime(o, seconds_since(t0), 1800);
    return o;
}

Outcome amplitude_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    const json r = run_validation(2024, 500);
    Outcome o;
    const double err = r["amplitude_max_abs_error"];
    o.check(err <= 1e-8, "500 cases, max |amplitude - oracle| " + fmt("%.2e", err) + " <= 1e-8");
    check_runtime(o, seconds_since(t0), 300);
    return o;
}

Outcome integrator_order() {
    Outcome o;
    {
        RunConfig c = config("zgate_bench");
        const double T = 120;
        const GateSetup s = prepare_gate(c, T, c.alpha);
        const Drive d = make_drive(s.protocol.geometry, c.params, s.schedule);
        auto run = [&](double dt) {
            PropagatorConfig p = c.propagator;
            p.method = Integrator::irk4;
            p.dt = dt;
            return propagate(s.initial, d, T, p, {}).stacked();
        };
        const MatrixC f1 = run(0.2), f2 = run(0.1), f3 = run(0.05), f4 = run(0.025);
        const double e1 = (f1 - f2).norm(), e2 = (f2 - f3).norm(), e3 = (f3 - f4).norm();
        const double r1 = e1 / e2, r2 = e2 / e3;
        o.check(r1 >= 8 && r1 <= 32 && r2 >= 8 && r2 <= 32,
                "half-step error ratios " + fmt("%.2f", r1) + ", " + fmt("%.2f", r2) + " within 16 x/ 2");
    }
    {
        const RunConfig c = config("zgate");
        const GateSetup s = prepare_gate(c, c.total_time, c.alpha);
        const Drive d = make_drive(s.protocol.geometry, c.params, s.schedule);
        double drift = 0;
        propagate(s.initial, d, c.total_time, c.propagator, sample_times(c.total_time, 64, {}),
                  [&](const BogoliubovFrame& f) { drift = std::max(drift, unitarity_drift(f)); });
        o.check(drift <= 1e-8, "unitarity drift over the full Z braid " + fmt("%.2e", drift) + " <= 1e-8");
    }
    return o;
}

} // namespace

int main(int argc, char** argv) {
    const std::map<int, std::pair<std::string, std::function<Outcome()>>> criteria{
        {1, {"linear-algebra property suite", linear_algebra}},
        {2, {"oracle equivalence, L=3 Z gate", oracle_equivalence}},
        {3, {"Z gate braiding phase, L=5", z_gate}},
        {4, {"X gate, L=8", x_gate}},
        {5, {"adiabaticity scan, L=6", adiabaticity_scan}},
        {6, {"CNOT truth table, L=6", cnot_gate}},
        {7, {"amplitude engine randomized oracle suite", amplitude_oracle}},
        {8, {"integrator order and unitarity", integrator_order}},
    };
    std::vector<int> selected;
    for (int k = 1; k < argc; ++k) selected.push_back(std::atoi(argv[k]));
    if (selected.empty())
        for (const auto& [id, c] : criteria) selected.push_back(id);
    int failed = 0;
    for (int id : selected) {
        const auto it = criteria.find(id);
        if (it == criteria.end()) {
            std::cout << "FAIL criterion " << id << ": unknown criterion\n";
            ++failed;
            continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = it->second.second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("error: ") + e.what();
        }
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << it->second.first << ", "
                  << fmt("%.1f", seconds_since(t0)) << " s): " << o.detail << std::endl;
        if (!o.pass) ++failed;
    }
    return failed == 0 ? 0 : 1;
}
