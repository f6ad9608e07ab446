#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "evolve.hpp"
#include "manybody.hpp"
#include "protocols.hpp"

namespace majorana {

using json = nlohmann::json;

class ConfigError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

struct ScanSpec {
    std::vector<double> times, alphas;
    std::string initial, final; // patterns; empty = protocol default
};

struct BenchSpec {
    double ed_dt = 0.05;
    int krylov_dim = 30;
};

struct RunConfig {
    std::string name = "run";
    std::string geometry = "t_junction"; // chain, t_junction, multi_t
    int leg = 5;
    int legs = 2;
    KitaevParams params;
    std::string gate = "z"; // z, x, cnot, custom
    int split = 0;          // x: inner chain end; 0 = leg/2 + 1
    int chain = 0;          // cnot: chain length; 0 = leg/3
    int offset = -1;        // cnot: chain offset in S2; -1 = centred
    json custom_initial, custom_moves;
    std::string custom_sector = "even";
    double total_time = 960.0;
    double alpha = 0.025;
    RampProfile profile = RampProfile::half_cosine;
    PropagatorConfig propagator;
    PhaseRule phase_rule = PhaseRule::exact;
    double zero_tol = 1e-6;
    std::vector<std::string> states; // empty = protocol default
    std::vector<std::string> observables{"fidelity", "transitions", "parities", "phases", "total_probability"};
    int samples = 512;
    std::string output_dir = "out";
    std::uint64_t seed = 0;
    bool opt_in_large = false;
    int validate_cases = 500;
    ScanSpec scan;
    BenchSpec bench;
    json raw; // the parsed document, echoed into metadata

    bool wants(const std::string& obs) const {
        return std::find(observables.begin(), observables.end(), obs) != observables.end();
    }
};

namespace detail {

// Typed access to one JSON object with dotted-path diagnostics and unknown-key checks.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail("", "expected an object");
    }

    ~ObjectReader() noexcept(false) {
        if (std::uncaught_exceptions() > 0) return;
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) fail(it.key(), "unknown field");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    template <class T>
    void get(const std::string& key, T& out) {
        if (!has(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            fail(key, std::string("expected ") + type_name<T>() + ", got " + j_.at(key).type_name());
        }
    }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        throw ConfigError("config field '" + (key.empty() ? path_ : at(key)) + "': " + msg);
    }

private:
    template <class T>
    static const char* type_name() {
        if constexpr (std::is_same_v<T, bool>) return "boolean";
        else if constexpr (std::is_integral_v<T>) return "integer";
        else if constexpr (std::is_floating_point_v<T>) return "number";
        else if constexpr (std::is_same_v<T, std::string>) return "string";
        else return "array";
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline std::pair<int, int> line_col(const std::string& text, std::size_t byte) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

} // namespace detail

inline RunConfig parse_config(const std::string& text, const std::string& source = "<config>") {
    json j;
    try {
        j = json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        const auto [line, col] = detail::line_col(text, e.byte > 0 ? e.byte - 1 : 0);
        std::ostringstream os;
        os << source << ":" << line << ":" << col << ": parse error: " << e.what();
        throw ConfigError(os.str());
    }
    RunConfig c;
    c.raw = j;
    detail::ObjectReader r(j, "");
    r.get("name", c.name);
    if (r.has("geometry")) {
        detail::ObjectReader g(r.raw("geometry"), "geometry");
        g.get("kind", c.geometry);
        g.get("leg", c.leg);
        g.get("legs", c.legs);
        if (c.geometry != "chain" && c.geometry != "t_junction" && c.geometry != "multi_t")
            g.fail("kind", "expected chain, t_junction or multi_t, got '" + c.geometry + "'");
    }
    if (r.has("params")) {
        detail::ObjectReader p(r.raw("params"), "params");
        p.get("t", c.params.t);
        p.get("delta", c.params.delta);
        p.get("phi_h", c.params.phi_h);
        p.get("phi_v", c.params.phi_v);
        p.get("mu_topo", c.params.mu_topo);
        p.get("mu_triv", c.params.mu_triv);
    }
    r.get("gate", c.gate);
    if (c.gate != "z" && c.gate != "x" && c.gate != "cnot" && c.gate != "custom")
        r.fail("gate", "expected z, x, cnot or custom, got '" + c.gate + "'");
    if (r.has("protocol")) {
        detail::ObjectReader p(r.raw("protocol"), "protocol");
        p.get("split", c.split);
        p.get("chain", c.chain);
        p.get("offset", c.offset);
        if (p.has("initial")) c.custom_initial = p.raw("initial");
        if (p.has("moves")) c.custom_moves = p.raw("moves");
        p.get("sector", c.custom_sector);
    }
    if (r.has("schedule")) {
        detail::ObjectReader s(r.raw("schedule"), "schedule");
        s.get("T", c.total_time);
        s.get("alpha", c.alpha);
        std::string prof;
        s.get("profile", prof);
        if (!prof.empty()) {
            try {
                c.profile = parse_profile(prof);
            } catch (const ValidationError& e) {
                s.fail("profile", e.what());
            }
        }
        if (!(c.total_time > 0)) s.fail("T", "must be positive");
        if (c.alpha < 0 || c.alpha > 1) s.fail("alpha", "must lie in [0, 1]");
    }
    if (r.has("propagator")) {
        detail::ObjectReader p(r.raw("propagator"), "propagator");
        std::string method;
        p.get("method", method);
        if (!method.empty()) {
            if (method == "irk4") c.propagator.method = Integrator::irk4;
            else if (method == "krylov") c.propagator.method = Integrator::krylov;
            else p.fail("method", "expected irk4 or krylov, got '" + method + "'");
        }
        p.get("dt", c.propagator.dt);
        p.get("krylov_dim", c.propagator.krylov_dim);
        p.get("krylov_order", c.propagator.krylov_order);
        p.get("fixed_point_tol", c.propagator.fixed_point_tol);
        p.get("fixed_point_max_iter", c.propagator.fixed_point_max_iter);
        p.get("reunitarize_every", c.propagator.reunitarize_every);
        p.get("zero_tol", c.zero_tol);
        std::string rule;
        p.get("phase_rule", rule);
        if (!rule.empty()) {
            try {
                c.phase_rule = parse_phase_rule(rule);
            } catch (const ValidationError& e) {
                p.fail("phase_rule", e.what());
            }
        }
        try {
            validate(c.propagator);
        } catch (const ValidationError& e) {
            p.fail("", e.what());
        }
    }
    r.get("states", c.states);
    for (const std::string& s : c.states)
        if (s.empty() || s.find_first_not_of("01") != std::string::npos)
            r.fail("states", "patterns must be strings of 0 and 1, got '" + s + "'");
    r.get("observables", c.observables);
    static const std::set<std::string> known{"fidelity", "transitions", "parities", "phases", "total_probability"};
    if (c.observables.empty()) r.fail("observables", "list must not be empty");
    for (const std::string& o : c.observables)
        if (!known.count(o)) r.fail("observables", "unknown observable '" + o + "'");
    r.get("samples", c.samples);
    if (c.samples < 1) r.fail("samples", "must be positive");
    r.get("output", c.output_dir);
    r.get("seed", c.seed);
    r.get("opt_in_large", c.opt_in_large);
    r.get("validate_cases", c.validate_cases);
    if (r.has("scan")) {
        detail::ObjectReader s(r.raw("scan"), "scan");
        s.get("T", c.scan.times);
        s.get("alpha", c.scan.alphas);
        s.get("initial", c.scan.initial);
        s.get("final", c.scan.final);
        for (double t : c.scan.times)
            if (!(t > 0)) s.fail("T", "grid times must be positive");
        for (double a : c.scan.alphas)
            if (a < 0 || a > 1) s.fail("alpha", "grid values must lie in [0, 1]");
    }
    if (r.has("bench")) {
        detail::ObjectReader b(r.raw("bench"), "bench");
        b.get("ed_dt", c.bench.ed_dt);
        b.get("krylov_dim", c.bench.krylov_dim);
        if (!(c.bench.ed_dt > 0)) b.fail("ed_dt", "must be positive");
    }
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

inline unsigned parse_pattern(const std::string& s, int zero_modes) {
    if (static_cast<int>(s.size()) != zero_modes)
        throw ConfigError("pattern '" + s + "' must have one digit per zero mode (" + std::to_string(zero_modes) + ")");
    unsigned bits = 0;
    for (int j = 0; j < zero_modes; ++j) {
        const char ch = s[static_cast<size_t>(j)];
        if (ch != '0' && ch != '1') throw ConfigError("pattern '" + s + "' must contain only 0 and 1");
        if (ch == '1') bits |= 1u << j;
    }
    return bits;
}

namespace detail {

// One site list: integer site, [arm], [arm, from, to], or an array of those.
inline void append_sites(const Geometry& g, const json& j, std::vector<int>& out, const std::string& where) {
    try {
        if (j.is_number_integer()) {
            const int s = j.get<int>();
            if (s < 0 || s >= g.size()) throw ConfigError("site " + std::to_string(s) + " does not exist");
            out.push_back(s);
        } else if (j.is_array() && !j.empty() && j[0].is_string()) {
            const std::string arm = j[0].get<std::string>();
            if (j.size() == 1) {
                const auto& a = g.arm(arm);
                out.insert(out.end(), a.begin(), a.end());
            } else if (j.size() == 3 && j[1].is_number_integer() && j[2].is_number_integer()) {
                const auto r = arm_range(g, arm, j[1].get<int>(), j[2].get<int>());
                out.insert(out.end(), r.begin(), r.end());
            } else {
                throw ConfigError("arm ranges are [arm] or [arm, from, to]");
            }
        } else if (j.is_array()) {
            for (const json& e : j) append_sites(g, e, out, where);
        } else {
            throw ConfigError("expected a site index, [arm, from, to] or a list of those");
        }
    } catch (const ConfigError& e) {
        throw ConfigError("config field '" + where + "': " + e.what());
    } catch (const ValidationError& e) {
        throw ConfigError("config field '" + where + "': " + e.what());
    }
}

inline double parse_level(const json& j, const KitaevParams& p, const std::string& where) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string() && j.get<std::string>() == "topo") return p.mu_topo;
    if (j.is_string() && j.get<std::string>() == "triv") return p.mu_triv;
    throw ConfigError("config field '" + where + "': expected \"topo\", \"triv\" or a number");
}

} // namespace detail

inline Geometry build_geometry(const RunConfig& c) {
    if (c.geometry == "chain") return chain(c.leg);
    if (c.geometry == "t_junction") return t_junction(c.leg);
    return multi_t(c.leg, c.legs);
}

inline Protocol build_protocol(const RunConfig& c) {
    if (c.gate == "z") {
        if (c.geometry != "t_junction") throw ConfigError("config field 'geometry.kind': the z gate needs a t_junction");
        return z_protocol(c.leg, c.params);
    }
    if (c.gate == "x") {
        if (c.geometry != "t_junction") throw ConfigError("config field 'geometry.kind': the x gate needs a t_junction");
        return x_protocol(c.leg, c.split > 0 ? c.split : c.leg / 2 + 1, c.params);
    }
    if (c.gate == "cnot") {
        if (c.geometry != "multi_t" || c.legs != 2)
            throw ConfigError("config field 'geometry': the cnot gate needs a multi_t with 2 legs");
        const int l = c.chain > 0 ? c.chain : std::max(1, c.leg / 3);
        return cnot_protocol(c.leg, l, c.offset >= 0 ? c.offset : (c.leg - l) / 2, c.params);
    }
    Protocol pr;
    pr.geometry = build_geometry(c);
    const Geometry& g = pr.geometry;
    pr.initial = VectorR::Constant(g.size(), c.params.mu_triv);
    if (!c.custom_initial.is_null()) {
        if (!c.custom_initial.is_object()) throw ConfigError("config field 'protocol.initial': expected an object");
        detail::ObjectReader r(c.custom_initial, "protocol.initial");
        if (r.has("background")) pr.initial.setConstant(detail::parse_level(r.raw("background"), c.params, r.at("background")));
        if (r.has("topo")) {
            std::vector<int> s;
            detail::append_sites(g, r.raw("topo"), s, r.at("topo"));
            for (int i : s) pr.initial(i) = c.params.mu_topo;
        }
        if (r.has("triv")) {
            std::vector<int> s;
            detail::append_sites(g, r.raw("triv"), s, r.at("triv"));
            for (int i : s) pr.initial(i) = c.params.mu_triv;
        }
    }
    if (!c.custom_moves.is_array() || c.custom_moves.empty())
        throw ConfigError("config field 'protocol.moves': a custom gate needs a non-empty move list");
    for (size_t m = 0; m < c.custom_moves.size(); ++m) {
        const std::string where = "protocol.moves[" + std::to_string(m) + "]";
        detail::ObjectReader r(c.custom_moves[m], where);
        if (!r.has("sites") || !r.has("target")) r.fail("", "a move needs sites and target");
        Move mv;
        detail::append_sites(g, r.raw("sites"), mv.sites, r.at("sites"));
        mv.target = detail::parse_level(r.raw("target"), c.params, r.at("target"));
        pr.moves.push_back(mv);
    }
    if (c.custom_sector == "even") pr.sector = two_pair_sector(false);
    else if (c.custom_sector == "odd") pr.sector = two_pair_sector(true);
    else if (c.custom_sector == "cnot") pr.sector = cnot_sector();
    else if (c.custom_sector == "single") pr.sector = z_protocol(2, c.params).sector;
    else throw ConfigError("config field 'protocol.sector': expected even, odd, cnot or single");
    for (const auto& [phys, logical] : pr.sector.physical_to_logical) pr.default_states.push_back(phys);
    pr.scan_initial = pr.default_states.front();
    pr.scan_final = pr.default_states.back();
    return pr;
}

} // namespace majorana
