#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gyroap/config.hpp"
#include "gyroap/diagnostics.hpp"
#include "gyroap/rate_fit.hpp"
#include "gyroap/sweep.hpp"

namespace gyroap {

inline constexpr const char* kSweepCsvHeader =
    "eps,dt,lambda,regime,variable_set,comparand,l1_error,max_fp_residual,status";
inline constexpr const char* kStepCsvHeader =
    "n,t,x1,x2,e,w1,w2,xgc1,xgc2,egc,fp_iterations,fp_residual";
inline constexpr const char* kStepErrorCsvHeader = "n,error";

// All reals are emitted with 17 significant digits so emitted tables are
// bit-identical across runs and round-trip through strtod exactly.
inline std::string format_real(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17e", v);
    return buf;
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::string sweep_csv_text(const SweepTable& t) {
    std::string out = kSweepCsvHeader;
    out += '\n';
    for (const SweepRow& r : t.rows) {
        out += format_real(r.eps);
        out += ',';
        out += format_real(r.dt);
        out += ',';
        out += format_real(r.lambda);
        out += ',';
        out += regime_token(r.regime);
        out += ',';
        out += csv_escape(variable_token(r.variable_set));
        out += ',';
        out += comparand_token(r.comparison);
        out += ',';
        out += format_real(r.l1_error);
        out += ',';
        out += format_real(r.max_fp_residual);
        out += ',';
        out += r.status;
        out += '\n';
    }
    return out;
}

inline std::string per_step_csv_text(const ApTrajectory& traj, double eps,
                                     const FieldModel& f) {
    std::string out = kStepCsvHeader;
    out += '\n';
    for (std::size_t n = 0; n < traj.states.size(); ++n) {
        const AugmentedState& s = traj.states[n];
        const GuidingCenterState gc = guiding_center(s, eps, f);
        const int iters = (n == 0) ? 0 : traj.diags[n - 1].fp_iterations;
        const double res = (n == 0) ? 0.0 : traj.diags[n - 1].fp_residual;
        out += std::to_string(n);
        out += ',';
        out += format_real(s.t);
        out += ',';
        out += format_real(s.x.x);
        out += ',';
        out += format_real(s.x.y);
        out += ',';
        out += format_real(s.e);
        out += ',';
        out += format_real(s.w.x);
        out += ',';
        out += format_real(s.w.y);
        out += ',';
        out += format_real(gc.x_gc.x);
        out += ',';
        out += format_real(gc.x_gc.y);
        out += ',';
        out += format_real(gc.e_gc);
        out += ',';
        out += std::to_string(iters);
        out += ',';
        out += format_real(res);
        out += '\n';
    }
    return out;
}

inline std::string step_error_csv_text(const SweepRow& r) {
    std::string out = kStepErrorCsvHeader;
    out += '\n';
    for (std::size_t i = 0; i < r.per_step.size(); ++i) {
        out += std::to_string(i + 1);
        out += ',';
        out += format_real(r.per_step[i]);
        out += '\n';
    }
    return out;
}

inline void write_text_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + p.string());
    f << text;
    f.flush();
    if (!f) throw IoError("write failed: " + p.string());
}

inline std::string read_text_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw IoError("cannot read: " + p.string());
    std::ostringstream buf;
    buf << f.rdbuf();
    return buf.str();
}

// Run manifest: everything needed to reproduce the table, nothing volatile.
// Worker count is omitted on purpose — results are independent of it.
inline nlohmann::json manifest_json(const SweepConfig& cfg, Comparison mode) {
    const SchemeParams sp;
    const LimitSchemeParams lp;
    const RefSolverConfig rc;
    nlohmann::json m;
    m["mode"] = mode_token(mode);
    m["csv"] = std::string(mode_token(mode)) + ".csv";
    nlohmann::json jc = config_to_json(cfg);
    jc.erase("parallel_workers");
    m["config"] = jc;
    m["solver"]["scheme"] = {{"fp_tol", sp.fp_tol},
                             {"fp_tol_abs", sp.fp_tol_abs},
                             {"fp_max_iter", sp.fp_max_iter},
                             {"inner_max_iter", sp.inner_max_iter}};
    m["solver"]["limit_scheme"] = {{"fp_tol", lp.fp_tol},
                                   {"fp_tol_abs", lp.fp_tol_abs},
                                   {"fp_max_iter", lp.fp_max_iter}};
    m["solver"]["reference"] = {{"points_per_gyroperiod", rc.points_per_gyroperiod},
                                {"max_steps", rc.max_steps},
                                {"energy_drift_tol", rc.energy_drift_tol},
                                {"limit_min_steps", rc.limit_min_steps}};
    m["norm"] =
        "mean over n = 1..N of per-step Euclidean errors; position and energy "
        "are concatenated into one vector before taking the norm; w rows "
        "compare speeds | |w_n| - |v(t_n)| |";
    m["regimes"] = {{"stiff-resolved", "dt <= eps^3"},
                    {"ap-plateau", "eps^3 < dt <= sqrt(eps)"},
                    {"coarse", "dt > sqrt(eps)"}};
    m["rate_windows"] = {
        {"reference-stiff vs dt", "cells of a single regime (coarse or stiff-resolved)"},
        {"reference-stiff vs eps", "stiff-resolved cells only"},
        {"limit comparands vs eps", "cells with eps >= dt (below that the dt^2 floor dominates)"}};
    m["status_tokens"] = {"ok", "failed:<error-token>", "skipped:step-budget"};
    m["schema"] = {{"sweep_csv", kSweepCsvHeader},
                   {"per_step_csv", kStepCsvHeader},
                   {"step_error_csv", kStepErrorCsvHeader}};
    return m;
}

// ---------------------------------------------------------------------------
// Parsing emitted sweep CSVs back (rates subcommand, round-trip checks).

struct ParsedRow {
    double eps = 0.0;
    double dt = 0.0;
    double lambda = 0.0;
    std::string regime;
    std::string variable_set;
    std::string comparand;
    double l1_error = std::numeric_limits<double>::quiet_NaN();
    double max_fp_residual = std::numeric_limits<double>::quiet_NaN();
    std::string status;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline double parse_real(const std::string& s, const std::string& context) {
    const char* begin = s.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
        throw IoError("bad numeric field \"" + s + "\" in " + context);
    return v;
}

} // namespace detail

inline std::vector<ParsedRow> parse_sweep_csv_text(const std::string& text,
                                                   const std::string& origin) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            if (!cur.empty() && cur.back() == '\r') cur.pop_back();
            lines.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) lines.push_back(cur);
    if (lines.empty() || lines[0] != kSweepCsvHeader)
        throw IoError("unexpected CSV header in " + origin);

    std::vector<ParsedRow> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::vector<std::string> f = detail::split_csv_line(lines[i]);
        if (f.size() != 9)
            throw IoError("expected 9 fields, got " + std::to_string(f.size()) +
                          " at line " + std::to_string(i + 1) + " of " + origin);
        ParsedRow r;
        r.eps = detail::parse_real(f[0], origin);
        r.dt = detail::parse_real(f[1], origin);
        r.lambda = detail::parse_real(f[2], origin);
        r.regime = f[3];
        r.variable_set = f[4];
        r.comparand = f[5];
        r.l1_error = detail::parse_real(f[6], origin);
        r.max_fp_residual = detail::parse_real(f[7], origin);
        r.status = f[8];
        rows.push_back(r);
    }
    return rows;
}

inline std::vector<ParsedRow> parse_sweep_csv(const std::filesystem::path& p) {
    return parse_sweep_csv_text(read_text_file(p), p.string());
}

inline std::vector<ParsedRow> table_to_parsed(const SweepTable& t) {
    std::vector<ParsedRow> rows;
    for (const SweepRow& r : t.rows) {
        ParsedRow p;
        p.eps = r.eps;
        p.dt = r.dt;
        p.lambda = r.lambda;
        p.regime = regime_token(r.regime);
        p.variable_set = variable_token(r.variable_set);
        p.comparand = comparand_token(r.comparison);
        p.l1_error = r.l1_error;
        p.max_fp_residual = r.max_fp_residual;
        p.status = r.status;
        rows.push_back(p);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Rate-fit report: fitted slopes against their theoretical targets.

struct FitTarget {
    std::string comparand;
    std::string variable;
    std::string axis;        // parameter varied ("dt" or "eps")
    double fixed_value = 0;  // parameter held constant
    std::string window;      // which cells were admitted
    double target = 0.0;
    double tol = 0.0;
    std::size_t points = 0;  // usable points inside the window
    bool attempted = false;
    bool pass = false;
    RateFit fit{};
    std::string note;
};

namespace detail {

inline void push_fit(std::vector<FitTarget>& out, const std::string& comparand,
                     const std::string& variable, const std::string& axis,
                     double fixed_value, const std::string& window,
                     double target, double tol, std::vector<RatePoint> pts) {
    if (pts.empty()) return;
    FitTarget t;
    t.comparand = comparand;
    t.variable = variable;
    t.axis = axis;
    t.fixed_value = fixed_value;
    t.window = window;
    t.target = target;
    t.tol = tol;
    t.points = pts.size();
    if (pts.size() < 3) {
        t.note = "insufficient points";
        out.push_back(t);
        return;
    }
    try {
        t.fit = fit_rate(pts);
        t.fit.axis = axis;
        t.attempted = true;
        t.pass = std::abs(t.fit.slope - target) <= tol;
    } catch (const DegenerateFit& e) {
        t.note = e.what();
    }
    out.push_back(t);
}

} // namespace detail

// Slope targets, per comparand and variable set:
//   vs the stiff reference: slope 2 in dt within one regime; slope -5 (raw)
//   or -4 (guiding center) in eps across stiff-resolved cells.
//   vs either limit comparand: slope 1 (raw) or 2 (guiding center) in eps,
//   restricted to eps >= dt where the asymptotic term dominates the dt^2
//   discretization floor.
// Speed rows carry no slope target and are not fitted.
inline std::vector<FitTarget> analyze_rates(const std::vector<ParsedRow>& rows) {
    std::vector<FitTarget> out;
    const std::string variables[2] = {"(x,e)", "(x_gc,e_gc)"};
    const std::string comparands[3] = {"reference-stiff", "limit-scheme",
                                       "limit-reference"};
    for (const std::string& comp : comparands) {
        for (const std::string& var : variables) {
            std::vector<ParsedRow> sel;
            std::set<double> eps_vals, dt_vals;
            for (const ParsedRow& r : rows) {
                if (r.comparand != comp || r.variable_set != var) continue;
                if (r.status != "ok") continue;
                if (!(r.l1_error > 0.0) || !std::isfinite(r.l1_error)) continue;
                sel.push_back(r);
                eps_vals.insert(r.eps);
                dt_vals.insert(r.dt);
            }
            if (sel.empty()) continue;

            if (comp == "reference-stiff") {
                for (double eps : eps_vals) {
                    for (const char* regime : {"coarse", "stiff-resolved"}) {
                        std::vector<RatePoint> pts;
                        for (const ParsedRow& r : sel)
                            if (r.eps == eps && r.regime == regime)
                                pts.push_back({r.dt, r.l1_error});
                        std::sort(pts.begin(), pts.end(),
                                  [](auto& a, auto& b) { return a.param < b.param; });
                        detail::push_fit(out, comp, var, "dt", eps, regime, 2.0,
                                         0.25, std::move(pts));
                    }
                }
                for (double dt : dt_vals) {
                    std::vector<RatePoint> pts;
                    for (const ParsedRow& r : sel)
                        if (r.dt == dt && r.regime == "stiff-resolved")
                            pts.push_back({r.eps, r.l1_error});
                    std::sort(pts.begin(), pts.end(),
                              [](auto& a, auto& b) { return a.param < b.param; });
                    const double target = (var == "(x,e)") ? -5.0 : -4.0;
                    detail::push_fit(out, comp, var, "eps", dt, "stiff-resolved",
                                     target, 0.7, std::move(pts));
                }
            } else {
                for (double dt : dt_vals) {
                    std::vector<RatePoint> pts;
                    for (const ParsedRow& r : sel)
                        if (r.dt == dt && r.eps >= dt)
                            pts.push_back({r.eps, r.l1_error});
                    std::sort(pts.begin(), pts.end(),
                              [](auto& a, auto& b) { return a.param < b.param; });
                    const double target = (var == "(x,e)") ? 1.0 : 2.0;
                    detail::push_fit(out, comp, var, "eps", dt, "eps>=dt", target,
                                     0.25, std::move(pts));
                }
            }
        }
    }
    return out;
}

inline std::string rates_report_text(const std::vector<FitTarget>& fits) {
    std::string out = "rate-fit report\n";
    std::size_t attempted = 0, passed = 0, failed = 0, skipped = 0;
    char buf[256];
    for (const FitTarget& t : fits) {
        if (!t.attempted) {
            ++skipped;
            std::snprintf(buf, sizeof buf,
                          "[SKIP] %s %s slope vs %s @ %s=%.6e window=%s: %s (%zu usable)\n",
                          t.comparand.c_str(), t.variable.c_str(), t.axis.c_str(),
                          (t.axis == "dt") ? "eps" : "dt", t.fixed_value,
                          t.window.c_str(), t.note.c_str(), t.points);
            out += buf;
            continue;
        }
        ++attempted;
        if (t.pass) ++passed;
        else ++failed;
        std::snprintf(buf, sizeof buf,
                      "[%s] %s %s slope vs %s @ %s=%.6e window=%s n=%zu: "
                      "slope=%+.4f target=%+.2f tol=%.2f r2=%.5f\n",
                      t.pass ? "PASS" : "FAIL", t.comparand.c_str(),
                      t.variable.c_str(), t.axis.c_str(),
                      (t.axis == "dt") ? "eps" : "dt", t.fixed_value,
                      t.window.c_str(), t.points, t.fit.slope, t.target, t.tol,
                      t.fit.r2);
        out += buf;
    }
    std::snprintf(buf, sizeof buf,
                  "summary: attempted=%zu passed=%zu failed=%zu skipped=%zu\n",
                  attempted, passed, failed, skipped);
    out += buf;
    return out;
}

inline std::size_t count_rate_failures(const std::vector<FitTarget>& fits) {
    std::size_t n = 0;
    for (const FitTarget& t : fits)
        if (t.attempted && !t.pass) ++n;
    return n;
}

// Writes, per table: the sweep CSV, its manifest, and (optionally) one
// per-step error file per row under steps-<mode>/.  A combined rate-fit
// report over all the given tables lands in rates.txt.
inline std::vector<std::filesystem::path> emit_reports(
    const std::vector<SweepTable>& tables, const SweepConfig& cfg,
    const std::filesystem::path& dest, bool with_steps = false) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dest, ec);
    if (ec) throw IoError("cannot create output directory: " + dest.string());

    std::vector<fs::path> written;
    std::vector<ParsedRow> all_rows;
    for (const SweepTable& t : tables) {
        const fs::path csv = dest / (std::string(mode_token(t.mode)) + ".csv");
        write_text_file(csv, sweep_csv_text(t));
        written.push_back(csv);

        const fs::path man =
            dest / (std::string("manifest-") + mode_token(t.mode) + ".json");
        write_text_file(man, manifest_json(cfg, t.mode).dump(2) + "\n");
        written.push_back(man);

        if (with_steps) {
            const fs::path steps_dir =
                dest / (std::string("steps-") + mode_token(t.mode));
            fs::create_directories(steps_dir, ec);
            if (ec)
                throw IoError("cannot create output directory: " + steps_dir.string());
            for (std::size_t i = 0; i < t.rows.size(); ++i) {
                char name[32];
                std::snprintf(name, sizeof name, "row%04zu.csv", i);
                const fs::path p = steps_dir / name;
                write_text_file(p, step_error_csv_text(t.rows[i]));
                written.push_back(p);
            }
        }
        const std::vector<ParsedRow> pr = table_to_parsed(t);
        all_rows.insert(all_rows.end(), pr.begin(), pr.end());
    }

    const fs::path rates = dest / "rates.txt";
    write_text_file(rates, rates_report_text(analyze_rates(all_rows)));
    written.push_back(rates);
    return written;
}

// Reads whichever sweep CSVs exist in a directory (one per mode).
inline std::vector<ParsedRow> collect_sweep_rows(const std::filesystem::path& dir) {
    std::vector<ParsedRow> rows;
    bool found = false;
    for (Comparison mode : {Comparison::Convergence, Comparison::AsympDiscrete,
                            Comparison::AsympContinuous}) {
        const std::filesystem::path p =
            dir / (std::string(mode_token(mode)) + ".csv");
        if (!std::filesystem::exists(p)) continue;
        found = true;
        const std::vector<ParsedRow> r = parse_sweep_csv(p);
        rows.insert(rows.end(), r.begin(), r.end());
    }
    if (!found)
        throw IoError("no sweep CSVs found in " + dir.string() +
                      " (expected convergence.csv, asymp-discrete.csv, or "
                      "asymp-continuous.csv)");
    return rows;
}

} // namespace gyroap
