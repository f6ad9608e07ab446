#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "majorana/driver.hpp"

using namespace majorana;

namespace {

struct Options {
    std::string config;
    std::optional<std::string> output;
    std::optional<std::uint64_t> seed;
    std::optional<int> cases;
    int jobs = 1;
    bool opt_in_large = false;
};

RunConfig load(const Options& o) {
    RunConfig c = load_config(o.config);
    if (o.output) c.output_dir = *o.output;
    if (o.seed) c.seed = *o.seed;
    if (o.opt_in_large) c.opt_in_large = true;
    return c;
}

int report_error(const std::string& command, const std::string& kind, const std::string& message) {
    json e{{"status", "error"}, {"command", command}, {"kind", kind}, {"message", message}};
    std::cerr << e.dump() << "\n";
    return kind == "config" ? 2 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-dependent Majorana braiding simulator"};
    app.set_version_flag("--version", std::string(version));
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* opt = sub->add_option("-c,--config", o.config, "JSON run configuration");
        if (config_required) opt->required();
        sub->add_option("-o,--output", o.output, "output directory (overrides the config)");
        sub->add_flag("--opt-in-large", o.opt_in_large, "allow Fock-space oracles up to 16 sites");
    };
    CLI::App* run = app.add_subcommand("run", "simulate a gate and write time series plus metadata");
    add_common(run, true);
    CLI::App* scan = app.add_subcommand("scan", "endpoint probability over a (T, alpha) grid");
    add_common(scan, true);
    scan->add_option("-j,--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
    CLI::App* bench = app.add_subcommand("bench", "compare against exact Fock-space evolution");
    add_common(bench, true);
    CLI::App* validate = app.add_subcommand("validate", "randomized checks of the linear algebra and amplitudes");
    add_common(validate, false);
    validate->add_option("--seed", o.seed, "random seed");
    validate->add_option("--cases", o.cases, "number of random amplitude cases")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        if (command == "validate") {
            RunConfig c;
            if (!o.config.empty()) c = load(o);
            const std::uint64_t seed = o.seed ? *o.seed : c.seed;
            const int cases = o.cases ? *o.cases : c.validate_cases;
            const json rep = run_validation(seed, cases);
            std::cout << rep.dump(2) << "\n";
            return rep["ok"].get<bool>() ? 0 : 3;
        }
        const RunConfig c = load(o);
        json out{{"status", "ok"}, {"command", command}};
        if (command == "run") {
            const GateResult r = run_gate(c);
            const auto base = write_gate(c, r, c.output_dir);
            out["files"] = {base.string() + ".csv", base.string() + ".meta.json"};
            out["summary"] = r.summary;
        } else if (command == "scan") {
            const auto pts = run_scan(c, o.jobs);
            const auto base = write_scan(c, pts, c.output_dir);
            double best = 0;
            int failed = 0;
            for (const ScanPoint& p : pts) {
                if (!p.error.empty()) ++failed;
                else best = std::max(best, p.probability);
            }
            out["files"] = {base.string() + ".grid.csv", base.string() + ".meta.json"};
            out["points"] = pts.size();
            out["failed_points"] = failed;
            out["max_probability"] = best;
        } else {
            const BenchResult r = run_benchmark(c);
            const auto base = write_benchmark(c, r, c.output_dir);
            out["files"] = {base.string() + ".bench.csv", base.string() + ".meta.json"};
            out["summary"] = r.summary;
        }
        std::cout << out.dump(2) << "\n";
    } catch (const ConfigError& e) {
        return report_error(command, "config", e.what());
    } catch (const ValidationError& e) {
        return report_error(command, "validation", e.what());
    } catch (const NumericalError& e) {
        return report_error(command, "numerical", e.what());
    } catch (const std::exception& e) {
        return report_error(command, "internal", e.what());
    }
    return 0;
}
