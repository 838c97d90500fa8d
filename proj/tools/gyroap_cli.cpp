// Command-line front end: single runs, (eps, dt) error sweeps, slope fitting
// on emitted tables, and the invariant suite.
//
// Exit codes: 0 success, 2 configuration error, 3 a run or sweep cell failed,
// 4 a fitted rate missed its target or an invariant check failed.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gyroap/config.hpp"
#include "gyroap/invariants.hpp"
#include "gyroap/report.hpp"
#include "gyroap/sweep.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRunFailed = 3;
constexpr int kExitRates = 4;

gyroap::Comparison mode_from_cli(const std::string& s) {
    if (s == "convergence") return gyroap::Comparison::Convergence;
    if (s == "asymp-discrete") return gyroap::Comparison::AsympDiscrete;
    if (s == "asymp-continuous") return gyroap::Comparison::AsympContinuous;
    throw gyroap::ConfigError("unknown sweep mode \"" + s + "\"");
}

int cmd_simulate(const std::string& config_path, double eps, double dt,
                 const std::string& out) {
    using namespace gyroap;
    const SweepConfig cfg =
        config_path.empty() ? default_config() : load_config_file(config_path);
    if (!(eps > 0.0) || !std::isfinite(eps))
        throw ConfigError("--eps must be a positive finite real");
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw ConfigError("--dt must be a positive finite real");

    auto field = cfg.field.make();
    SchemeParams p;
    p.eps = eps;
    p.dt = dt;
    p.T = cfg.T;
    const ApTrajectory traj =
        ap_solve({cfg.x0, 0.5 * norm2(cfg.v0), cfg.v0, 0.0}, p, *field);
    const std::string text = per_step_csv_text(traj, eps, *field);
    if (out == "-") {
        std::fwrite(text.data(), 1, text.size(), stdout);
    } else {
        write_text_file(out, text);
        std::fprintf(stderr, "wrote %s (%zu steps)\n", out.c_str(), traj.steps());
    }
    return kExitOk;
}

int cmd_sweep(const std::string& mode_str, const std::string& config_path,
              const std::string& out_dir, int workers, bool with_steps) {
    using namespace gyroap;
    SweepConfig cfg =
        config_path.empty() ? default_config() : load_config_file(config_path);
    if (workers > 0) {
        cfg.parallel_workers = workers;
        validate_config(cfg);
    }
    const Comparison mode = mode_from_cli(mode_str);
    const SweepTable table = run_sweep(cfg, mode);
    emit_reports({table}, cfg, out_dir, with_steps);

    std::size_t failed = 0, skipped = 0;
    for (const SweepRow& r : table.rows) {
        if (r.status.rfind("failed:", 0) == 0) ++failed;
        if (r.status.rfind("skipped:", 0) == 0) ++skipped;
    }
    std::fprintf(stderr, "%s: %zu rows (%zu failed, %zu skipped) -> %s\n",
                 mode_token(mode), table.rows.size(), failed, skipped,
                 out_dir.c_str());
    return failed > 0 ? kExitRunFailed : kExitOk;
}

int cmd_rates(const std::string& in_dir, std::string out_path) {
    using namespace gyroap;
    const std::vector<ParsedRow> rows = collect_sweep_rows(in_dir);
    const std::vector<FitTarget> fits = analyze_rates(rows);
    const std::string report = rates_report_text(fits);
    if (out_path.empty())
        out_path = (std::filesystem::path(in_dir) / "rates.txt").string();
    write_text_file(out_path, report);
    std::fputs(report.c_str(), stdout);
    return count_rate_failures(fits) > 0 ? kExitRates : kExitOk;
}

int cmd_check() {
    using namespace gyroap;
    const std::vector<InvariantResult> results = run_invariant_checks();
    std::fputs(invariant_report_text(results).c_str(), stdout);
    return count_invariant_failures(results) > 0 ? kExitRates : kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"asymptotic-preserving particle pusher: runs, sweeps, rate fits"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand(
        "simulate", "integrate one trajectory and emit a per-step CSV");
    double eps = 0.0, dt = 0.0;
    std::string sim_config, sim_out = "-";
    sim->add_option("--eps", eps, "stiffness parameter")->required();
    sim->add_option("--dt", dt, "time step (must divide T)")->required();
    sim->add_option("--config", sim_config, "JSON config for T, x0, v0, field");
    sim->add_option("--out", sim_out, "output file, or '-' for stdout");

    auto* sw = app.add_subcommand("sweep", "run an (eps, dt) error sweep");
    std::string sw_mode, sw_config, sw_out;
    int sw_workers = 0;
    bool sw_steps = false;
    sw->add_option("--mode", sw_mode, "which comparand to sweep against")
        ->required()
        ->check(CLI::IsMember({"convergence", "asymp-discrete", "asymp-continuous"}));
    sw->add_option("--config", sw_config, "JSON sweep config");
    sw->add_option("--out", sw_out, "output directory")->required();
    sw->add_option("--workers", sw_workers, "worker threads (overrides config)")
        ->check(CLI::PositiveNumber);
    sw->add_flag("--steps", sw_steps, "also emit per-step error files");

    auto* rt = app.add_subcommand("rates",
                                  "fit slopes from previously emitted sweep CSVs");
    std::string rt_in, rt_out;
    rt->add_option("--in", rt_in, "directory holding sweep CSVs")->required();
    rt->add_option("--out", rt_out, "report file (default <in>/rates.txt)");

    auto* ck = app.add_subcommand("check", "run the invariant suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (sim->parsed()) return cmd_simulate(sim_config, eps, dt, sim_out);
        if (sw->parsed())
            return cmd_sweep(sw_mode, sw_config, sw_out, sw_workers, sw_steps);
        if (rt->parsed()) return cmd_rates(rt_in, rt_out);
        if (ck->parsed()) return cmd_check();
    } catch (const gyroap::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const gyroap::IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const gyroap::SimError& e) {
        std::cerr << "run failed: " << e.what() << '\n';
        return kExitRunFailed;
    }
    return kExitOk;
}
