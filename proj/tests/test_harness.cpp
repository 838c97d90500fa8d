#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include "gyroap/config.hpp"
#include "gyroap/invariants.hpp"
#include "gyroap/rate_fit.hpp"
#include "gyroap/report.hpp"
#include "gyroap/sweep.hpp"

using namespace gyroap;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() /
                       ("gyroap_ht_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int run_cli(const std::string& args) {
    const std::string cmd =
        std::string(GYROAP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int st = std::system(cmd.c_str());
    REQUIRE(st != -1);
    REQUIRE(WIFEXITED(st));
    return WEXITSTATUS(st);
}

} // namespace

TEST_CASE("regime classification follows the min-bound case split") {
    REQUIRE(classify_regime(0.1, 1e-4) == Regime::StiffResolved);
    REQUIRE(classify_regime(0.1, 0.01) == Regime::ApPlateau);
    REQUIRE(classify_regime(0.01, 0.5) == Regime::Coarse);
    // Boundaries belong to the better-resolved side.
    REQUIRE(classify_regime(0.5, 0.125) == Regime::StiffResolved);
    REQUIRE(classify_regime(0.25, 0.5) == Regime::ApPlateau);
    REQUIRE(std::string(regime_token(Regime::StiffResolved)) == "stiff-resolved");
    REQUIRE(std::string(regime_token(Regime::ApPlateau)) == "ap-plateau");
    REQUIRE(std::string(regime_token(Regime::Coarse)) == "coarse");
}

TEST_CASE("rate fit recovers exact power laws") {
    std::vector<RatePoint> pts;
    for (int k = 2; k <= 7; ++k) {
        const double p = std::ldexp(1.0, -k);
        pts.push_back({p, 3.0 * p * p});
    }
    RateFit f = fit_rate(pts);
    REQUIRE(f.slope == Approx(2.0).margin(1e-12));
    REQUIRE(f.r2 == Approx(1.0).margin(1e-12));
    REQUIRE(f.intercept == Approx(std::log10(3.0)).margin(1e-10));
    REQUIRE(f.n_used == 6);

    std::vector<RatePoint> flat;
    for (int k = 1; k <= 5; ++k) flat.push_back({std::ldexp(1.0, -k), 0.7});
    RateFit g = fit_rate(flat);
    REQUIRE(g.slope == Approx(0.0).margin(1e-12));
    REQUIRE(g.r2 == Approx(1.0).margin(1e-12));
}

TEST_CASE("rate fit rejects degenerate inputs and drops unusable points") {
    std::vector<RatePoint> two{{0.5, 1.0}, {0.25, 0.5}};
    REQUIRE_THROWS_AS(fit_rate(two), DegenerateFit);

    std::vector<RatePoint> same{{0.5, 1.0}, {0.5, 0.9}, {0.5, 1.1}};
    REQUIRE_THROWS_AS(fit_rate(same), DegenerateFit);

    // Nonpositive errors are dropped, not logged as -inf.
    std::vector<RatePoint> mixed;
    for (int k = 1; k <= 4; ++k) {
        const double p = std::ldexp(1.0, -k);
        mixed.push_back({p, p * p});
    }
    mixed.push_back({0.01, 0.0});
    RateFit f = fit_rate(mixed);
    REQUIRE(f.n_used == 4);
    REQUIRE(f.slope == Approx(2.0).margin(1e-12));
}

TEST_CASE("rate fit over an index window records the window") {
    std::vector<RatePoint> pts;
    for (int k = 0; k < 10; ++k) {
        const double p = std::ldexp(1.0, -k);
        // Slope 2 on the first half, slope 1 on the second.
        pts.push_back({p, (k < 5) ? p * p : 0.03125 * p});
    }
    RateFit head = fit_rate(pts, 0, 5);
    REQUIRE(head.slope == Approx(2.0).margin(1e-12));
    REQUIRE(head.window_begin == 0);
    REQUIRE(head.window_end == 5);
    RateFit tail = fit_rate(pts, 5, 10);
    REQUIRE(tail.slope == Approx(1.0).margin(1e-12));
    REQUIRE_THROWS_AS(fit_rate(pts, 7, 7), DegenerateFit);
    REQUIRE_THROWS_AS(fit_rate(pts, 5, 11), DegenerateFit);
}

TEST_CASE("config defaults") {
    SweepConfig c = parse_config_text("{}");
    REQUIRE(c.eps_grid.size() == 11);
    REQUIRE(c.eps_grid.front() == 1.0);
    REQUIRE(c.eps_grid.back() == Approx(std::ldexp(1.0, -10)));
    REQUIRE(c.dt_grid.size() == 11);
    REQUIRE(c.dt_grid.front() == Approx(std::ldexp(1.0, -4)));
    REQUIRE(c.dt_grid.back() == Approx(std::ldexp(1.0, -14)));
    REQUIRE(c.T == 1.0);
    REQUIRE(c.x0.x == 2.0);
    REQUIRE(c.x0.y == 2.0);
    REQUIRE(c.v0.x == 3.0);
    REQUIRE(c.v0.y == 3.0);
    REQUIRE(c.field.kind == FieldSpec::Kind::Disc);
    REQUIRE(c.comparisons.size() == 3);
    REQUIRE(c.variables.size() == 3);
    REQUIRE(c.parallel_workers == 1);
}

TEST_CASE("config validation rejects malformed documents") {
    REQUIRE_THROWS_AS(parse_config_text("[1,2]"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text("not json"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text(R"({"epsgrid":[1]})"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text(R"({"eps_grid":[]})"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text(R"({"eps_grid":[0.0]})"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text(R"({"dt_grid":[0.3]})"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text(R"({"T":-1})"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text(R"({"T":0})"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text(R"({"x0":[1]})"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text(R"({"x0":["a","b"]})"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text(R"({"parallel_workers":0})"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text(R"({"parallel_workers":1.5})"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text(R"({"parallel_workers":4096})"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text(R"({"comparisons":["conv"]})"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text(R"({"variables":["x"]})"), ConfigError);
}

TEST_CASE("field selector accepts names and structured form") {
    SweepConfig disc = parse_config_text(R"({"field":"disc"})");
    REQUIRE(disc.field.kind == FieldSpec::Kind::Disc);
    SweepConfig alias = parse_config_text(R"({"field":"paper"})");
    REQUIRE(alias.field.kind == FieldSpec::Kind::Disc);

    SweepConfig uni = parse_config_text(
        R"({"field":{"type":"uniform","b0":2.5,"phi":"quadratic"}})");
    REQUIRE(uni.field.kind == FieldSpec::Kind::Uniform);
    REQUIRE(uni.field.b0 == 2.5);
    REQUIRE(uni.field.phi == UniformField::Potential::Quadratic);

    REQUIRE_THROWS_AS(parse_config_text(R"({"field":"torus"})"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text(R"({"field":{"b0":1}})"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text(R"({"field":{"type":"disc","b0":2}})"),
                      ConfigError);
    REQUIRE_THROWS_AS(
        parse_config_text(R"({"field":{"type":"uniform","b0":-1}})"), ConfigError);
    REQUIRE_THROWS_AS(
        parse_config_text(R"({"field":{"type":"uniform","bogus":1}})"), ConfigError);
}

TEST_CASE("comparison and variable subsets are canonicalized") {
    SweepConfig c = parse_config_text(
        R"json({"comparisons":["asymptotic-discrete","convergence","convergence"],
            "variables":["w","(x,e)"]})json");
    REQUIRE(c.comparisons ==
            std::vector<Comparison>{Comparison::Convergence,
                                    Comparison::AsympDiscrete});
    REQUIRE(c.variables ==
            std::vector<VariableSet>{VariableSet::XE, VariableSet::W});
}

TEST_CASE("config round-trips through its JSON form") {
    SweepConfig c;
    c.eps_grid = {0.5, 0.125};
    c.dt_grid = {0.25, 0.0625};
    c.T = 2.0;
    c.x0 = {1.0, -1.0};
    c.v0 = {0.5, 0.25};
    c.field.kind = FieldSpec::Kind::Uniform;
    c.field.b0 = 2.5;
    c.field.phi = UniformField::Potential::Quadratic;
    c.comparisons = {Comparison::AsympContinuous};
    c.variables = {VariableSet::GC};
    c.parallel_workers = 4;

    SweepConfig back = parse_config_json(config_to_json(c));
    REQUIRE(back.eps_grid == c.eps_grid);
    REQUIRE(back.dt_grid == c.dt_grid);
    REQUIRE(back.T == c.T);
    REQUIRE(back.x0.x == c.x0.x);
    REQUIRE(back.v0.y == c.v0.y);
    REQUIRE(back.field.kind == c.field.kind);
    REQUIRE(back.field.b0 == c.field.b0);
    REQUIRE(back.field.phi == c.field.phi);
    REQUIRE(back.comparisons == c.comparisons);
    REQUIRE(back.variables == c.variables);
    REQUIRE(back.parallel_workers == 4);
}

TEST_CASE("uniform-field single-cell convergence sweep") {
    SweepConfig cfg = parse_config_text(
        R"({"eps_grid":[1.0],"dt_grid":[0.00390625],
            "field":{"type":"uniform","b0":1.0,"phi":"zero"},
            "comparisons":["convergence"]})");
    SweepTable t = run_convergence_sweep(cfg);
    REQUIRE(t.rows.size() == 3);
    REQUIRE(t.rows[0].variable_set == VariableSet::XE);
    REQUIRE(t.rows[1].variable_set == VariableSet::GC);
    REQUIRE(t.rows[2].variable_set == VariableSet::W);
    for (const SweepRow& r : t.rows) {
        REQUIRE(r.status == "ok");
        REQUIRE(r.lambda == Approx(0.00390625));
        REQUIRE(r.regime == Regime::StiffResolved);
        REQUIRE(r.max_fp_residual <= 1e-12);
        REQUIRE(r.per_step.size() == 256);
    }
    // Both sides rotate at constant speed: the speed error sits at rounding
    // floors while the position error reflects the phase difference.
    REQUIRE(t.rows[2].l1_error <= 1e-10);
    REQUIRE(t.rows[0].l1_error >= 1e-7);
    REQUIRE(t.rows[1].l1_error > 0.0);
}

TEST_CASE("empty comparison set yields an empty table and a header-only CSV") {
    SweepConfig cfg = parse_config_text(
        R"({"eps_grid":[0.5],"dt_grid":[0.0625],"comparisons":[]})");
    SweepTable t = run_convergence_sweep(cfg);
    REQUIRE(t.rows.empty());
    REQUIRE(sweep_csv_text(t) == std::string(kSweepCsvHeader) + "\n");
}

TEST_CASE("sweep output is identical across runs and worker counts") {
    const char* doc =
        R"({"eps_grid":[0.25,0.5],"dt_grid":[0.03125,0.015625],
            "comparisons":["convergence","asymptotic-discrete"]})";
    SweepConfig cfg1 = parse_config_text(doc);
    SweepConfig cfg4 = parse_config_text(doc);
    cfg4.parallel_workers = 4;

    const std::string conv1 = sweep_csv_text(run_convergence_sweep(cfg1));
    const std::string conv4 = sweep_csv_text(run_convergence_sweep(cfg4));
    REQUIRE(conv1 == conv4);
    const std::string conv1b = sweep_csv_text(run_convergence_sweep(cfg1));
    REQUIRE(conv1 == conv1b);

    const std::string disc1 =
        sweep_csv_text(run_asymptotic_sweep(cfg1, Comparison::AsympDiscrete));
    const std::string disc4 =
        sweep_csv_text(run_asymptotic_sweep(cfg4, Comparison::AsympDiscrete));
    REQUIRE(disc1 == disc4);

    // Rows are sorted ascending in (eps, dt); w rows appear only in the
    // convergence table.
    const std::vector<ParsedRow> rows = parse_sweep_csv_text(conv1, "mem");
    REQUIRE(rows.size() == 12);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        REQUIRE(rows[i].eps >= rows[i - 1].eps);
        if (rows[i].eps == rows[i - 1].eps) REQUIRE(rows[i].dt >= rows[i - 1].dt);
    }
    const std::vector<ParsedRow> drows = parse_sweep_csv_text(disc1, "mem");
    REQUIRE(drows.size() == 8);
    for (const ParsedRow& r : drows) REQUIRE(r.variable_set != "w");
}

TEST_CASE("emitted tables round-trip: regime labels and per-step means") {
    SweepConfig cfg = parse_config_text(
        R"({"eps_grid":[0.25,0.5],"dt_grid":[0.03125,0.015625],
            "comparisons":["convergence"]})");
    SweepTable t = run_convergence_sweep(cfg);
    const fs::path dir = fresh_dir("roundtrip");
    emit_reports({t}, cfg, dir, /*with_steps=*/true);

    const std::vector<ParsedRow> rows = parse_sweep_csv(dir / "convergence.csv");
    REQUIRE(rows.size() == t.rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const ParsedRow& r = rows[i];
        REQUIRE(r.regime == regime_token(classify_regime(r.eps, r.dt)));
        REQUIRE(r.comparand == "reference-stiff");
        REQUIRE(r.status == "ok");
        REQUIRE(r.lambda == Approx(r.dt / (r.eps * r.eps)).epsilon(1e-15));

        char name[32];
        std::snprintf(name, sizeof name, "row%04zu.csv", i);
        std::ifstream f(dir / "steps-convergence" / name);
        REQUIRE(f.good());
        std::string line;
        REQUIRE(std::getline(f, line));
        REQUIRE(line == "n,error");
        double sum = 0.0;
        std::size_t count = 0;
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            const auto comma = line.find(',');
            REQUIRE(comma != std::string::npos);
            sum += std::strtod(line.c_str() + comma + 1, nullptr);
            ++count;
        }
        REQUIRE(count == static_cast<std::size_t>(std::llround(1.0 / r.dt)));
        const double mean = sum / static_cast<double>(count);
        REQUIRE(mean == Approx(r.l1_error).margin(1e-12));
    }
    REQUIRE(fs::exists(dir / "manifest-convergence.json"));
    REQUIRE(fs::exists(dir / "rates.txt"));
    fs::remove_all(dir);
}

TEST_CASE("failing cells are isolated, not fatal") {
    SweepConfig cfg = parse_config_text(
        R"json({"T":10.0,"eps_grid":[1.0],"dt_grid":[1.0,10.0],
            "comparisons":["convergence"],"variables":["(x,e)","w"]})json");
    SweepTable t = run_convergence_sweep(cfg);
    REQUIRE(t.rows.size() == 4);
    REQUIRE(t.rows[0].status == "ok");
    REQUIRE(t.rows[1].status == "ok");
    REQUIRE(t.rows[2].status == "failed:fp-diverged");
    REQUIRE(t.rows[3].status == "failed:fp-diverged");
    REQUIRE(std::isnan(t.rows[2].l1_error));

    const std::string csv = sweep_csv_text(t);
    REQUIRE(csv.find("failed:fp-diverged") != std::string::npos);
    REQUIRE(csv.find("nan") != std::string::npos);
}

TEST_CASE("reference step budget marks cells skipped") {
    SweepConfig cfg = parse_config_text(
        R"json({"eps_grid":[9.5367431640625e-07],"dt_grid":[0.0625],
            "comparisons":["convergence"],"variables":["(x,e)"]})json");
    SweepTable t = run_convergence_sweep(cfg);
    REQUIRE(t.rows.size() == 1);
    REQUIRE(t.rows[0].status == "skipped:step-budget");
}

TEST_CASE("stiff-resolved errors decrease in eps at fixed dt") {
    SweepConfig cfg = parse_config_text(
        R"json({"eps_grid":[0.5,0.25,0.125,0.0625],"dt_grid":[6.103515625e-05],
            "comparisons":["convergence"],"variables":["(x,e)"]})json");
    SweepTable t = run_convergence_sweep(cfg);
    REQUIRE(t.rows.size() == 4);
    for (const SweepRow& r : t.rows) {
        REQUIRE(r.status == "ok");
        REQUIRE(r.regime == Regime::StiffResolved);
    }
    // Rows are sorted by ascending eps; the dt^2/eps^5 bound says error
    // shrinks as eps grows (20% noise allowance).
    for (std::size_t i = 1; i < t.rows.size(); ++i)
        REQUIRE(t.rows[i].l1_error <= 1.2 * t.rows[i - 1].l1_error);
}

TEST_CASE("synthetic rate analysis passes and fails as designed") {
    auto make_rows = [](double exponent) {
        std::vector<ParsedRow> rows;
        for (int k = 2; k <= 6; ++k) {
            ParsedRow r;
            r.eps = std::ldexp(1.0, -k);
            r.dt = std::ldexp(1.0, -8);
            r.lambda = r.dt / (r.eps * r.eps);
            r.regime = regime_token(classify_regime(r.eps, r.dt));
            r.variable_set = "(x,e)";
            r.comparand = "limit-scheme";
            r.l1_error = 0.37 * std::pow(r.eps, exponent);
            r.max_fp_residual = 1e-13;
            r.status = "ok";
            rows.push_back(r);
        }
        return rows;
    };

    const std::vector<FitTarget> good = analyze_rates(make_rows(1.0));
    REQUIRE(count_rate_failures(good) == 0);
    bool found = false;
    for (const FitTarget& f : good)
        if (f.attempted && f.comparand == "limit-scheme") {
            found = true;
            REQUIRE(f.fit.slope == Approx(1.0).margin(1e-10));
            REQUIRE(f.pass);
        }
    REQUIRE(found);
    REQUIRE(rates_report_text(good).find("[PASS]") != std::string::npos);

    const std::vector<FitTarget> bad = analyze_rates(make_rows(1.6));
    REQUIRE(count_rate_failures(bad) == 1);
    REQUIRE(rates_report_text(bad).find("[FAIL]") != std::string::npos);

    // Failed rows never enter a fit.
    auto broken = make_rows(1.0);
    for (ParsedRow& r : broken) r.status = "failed:fp-diverged";
    REQUIRE(analyze_rates(broken).empty());
}

TEST_CASE("invariant suite is green") {
    const std::vector<InvariantResult> rs = run_invariant_checks();
    REQUIRE(rs.size() >= 8);
    for (const InvariantResult& r : rs) {
        INFO(r.name << ": " << r.detail);
        REQUIRE(r.pass);
    }
    REQUIRE(count_invariant_failures(rs) == 0);
}

TEST_CASE("cli: check subcommand") { REQUIRE(run_cli("check") == 0); }

TEST_CASE("cli: simulate writes the per-step schema") {
    const fs::path dir = fresh_dir("sim");
    const fs::path out = dir / "steps.csv";
    REQUIRE(run_cli("simulate --eps 0.5 --dt 0.03125 --out " + out.string()) == 0);

    std::ifstream f(out);
    REQUIRE(f.good());
    std::string line;
    REQUIRE(std::getline(f, line));
    REQUIRE(line == kStepCsvHeader);
    std::size_t rows = 0;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::size_t commas = 0;
        for (char c : line)
            if (c == ',') ++commas;
        REQUIRE(commas == 11);
        ++rows;
    }
    REQUIRE(rows == 33);  // initial state plus 32 steps
    fs::remove_all(dir);
}

TEST_CASE("cli: bad invocations exit with the config code") {
    REQUIRE(run_cli("simulate --eps 0.5 --dt 0.3") == 2);   // dt does not divide T
    REQUIRE(run_cli("simulate --eps 0.5") == 2);            // missing --dt
    REQUIRE(run_cli("nonsense") == 2);
    REQUIRE(run_cli("") == 2);
    REQUIRE(run_cli("sweep --mode sideways --out /tmp/x") == 2);
    REQUIRE(run_cli("rates --in /nonexistent-dir-gyroap") == 2);
}

TEST_CASE("cli: sweep emits deterministic artifacts and exit codes") {
    const fs::path dir = fresh_dir("cli_sweep");
    const fs::path cfg_path = dir / "cfg.json";
    write_text_file(cfg_path,
                    R"({"eps_grid":[0.5],"dt_grid":[0.03125,0.015625],
                        "comparisons":["convergence","asymptotic-discrete"]})");

    const std::string base = "sweep --config " + cfg_path.string();
    REQUIRE(run_cli(base + " --mode convergence --out " + (dir / "a").string()) == 0);
    REQUIRE(run_cli(base + " --mode convergence --out " + (dir / "b").string() +
                    " --workers 4") == 0);
    const std::string csv_a = read_text_file(dir / "a" / "convergence.csv");
    const std::string csv_b = read_text_file(dir / "b" / "convergence.csv");
    REQUIRE(csv_a == csv_b);
    REQUIRE(csv_a.rfind(kSweepCsvHeader, 0) == 0);
    REQUIRE(fs::exists(dir / "a" / "manifest-convergence.json"));

    // Mode absent from the config's comparisons: header-only CSV, success.
    REQUIRE(run_cli(base + " --mode asymp-continuous --out " +
                    (dir / "c").string()) == 0);
    REQUIRE(read_text_file(dir / "c" / "asymp-continuous.csv") ==
            std::string(kSweepCsvHeader) + "\n");

    // rates over the emitted directory exits cleanly and writes a report.
    REQUIRE(run_cli(base + " --mode asymp-discrete --out " + (dir / "a").string()) == 0);
    REQUIRE(run_cli("rates --in " + (dir / "a").string()) == 0);
    const std::string report = read_text_file(dir / "a" / "rates.txt");
    REQUIRE(report.find("summary:") != std::string::npos);

    // A diverging cell surfaces as exit code 3.
    write_text_file(cfg_path,
                    R"({"T":10.0,"eps_grid":[1.0],"dt_grid":[10.0],
                        "comparisons":["convergence"]})");
    REQUIRE(run_cli(base + " --mode convergence --out " + (dir / "fail").string()) == 3);

    // Unknown key in the config file.
    write_text_file(cfg_path, R"({"bogus":1})");
    REQUIRE(run_cli(base + " --mode convergence --out " + (dir / "x").string()) == 2);
    fs::remove_all(dir);
}
