#pragma once

#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "shuttlekit/config.hpp"
#include "shuttlekit/constants.hpp"
#include "shuttlekit/errors.hpp"
#include "shuttlekit/excitation.hpp"
#include "shuttlekit/noise.hpp"
#include "shuttlekit/oracle.hpp"
#include "shuttlekit/parallel.hpp"
#include "shuttlekit/report_json.hpp"
#include "shuttlekit/robustness.hpp"
#include "shuttlekit/trajectory.hpp"

namespace shuttlekit {

// CSV cells carry 17 significant digits so reruns are byte-comparable and
// values round-trip exactly.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline void write_file(const std::string& path, const std::string& contents) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out) throw ConfigError("output: cannot open '" + path + "' for writing");
    out << contents;
}

struct SweepCell {
    std::optional<double> value;
    std::string text() const { return value ? fmt17(*value) : std::string{}; }
};

struct SweepRow {
    std::vector<SweepCell> cells;
    bool infeasible = false;
    nlohmann::json report;  // optional per-row report (json output only)
};

inline NoiseModel with_tau(const NoiseModel& base, double tau) {
    const auto& ou = std::get<OrnsteinUhlenbeckNoise>(base);
    return OrnsteinUhlenbeckNoise{ou.intensity, tau};
}

inline NoiseModel with_tau2(const NoiseModel& base, double tau2) {
    const auto& f = std::get<FlickerNoise>(base);
    return FlickerNoise{f.variance, f.tau_short, tau2};
}

/// Per-point sweep executor: runs fn(i) for every sweep value, downgrading
/// infeasible points to flagged rows (keeping the sweep value) and
/// re-throwing the first hard error in point order.
template <class Fn>
std::vector<SweepRow> run_sweep_points(const std::vector<double>& values, Fn&& fn) {
    std::vector<SweepRow> rows(values.size());
    std::vector<std::exception_ptr> errors(values.size());
    parallel_for(values.size(), [&](std::size_t i) {
        try {
            rows[i] = fn(i);
        } catch (const InfeasibleError&) {
            rows[i] = SweepRow{{SweepCell{values[i]}}, true, {}};
        } catch (const InvalidDurationError&) {
            rows[i] = SweepRow{{SweepCell{values[i]}}, true, {}};
        } catch (...) {
            errors[i] = std::current_exception();
        }
    });
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return rows;
}

inline std::string csv_text(const std::string& header, std::size_t data_columns,
                            const std::vector<SweepRow>& rows, bool with_flag,
                            const std::string& footer = {}) {
    std::string out = "# schema=1\n" + header + "\n";
    for (const auto& row : rows) {
        std::string line;
        for (std::size_t c = 0; c < data_columns; ++c) {
            if (c < row.cells.size()) line += row.cells[c].text();
            line += ',';
        }
        if (with_flag)
            line += row.infeasible ? '1' : '0';
        else
            line.pop_back();
        out += line + "\n";
    }
    if (!footer.empty()) out += footer + "\n";
    return out;
}

inline std::string json_text(const std::vector<std::string>& columns,
                             const std::vector<SweepRow>& rows, bool with_flag) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& row : rows) {
        nlohmann::json obj;
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (row.infeasible && c > 0)
                obj[columns[c]] = nullptr;
            else if (c < row.cells.size() && row.cells[c].value)
                obj[columns[c]] = *row.cells[c].value;
            else
                obj[columns[c]] = nullptr;
        }
        if (with_flag) obj["infeasible"] = row.infeasible;
        if (!row.report.is_null()) obj["report"] = row.report;
        arr.push_back(obj);
    }
    return arr.dump(2) + "\n";
}

inline std::vector<std::string> split_header(const std::string& header) {
    std::vector<std::string> cols;
    std::string cur;
    for (char ch : header) {
        if (ch == ',') {
            cols.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    cols.push_back(cur);
    return cols;
}

inline ExcitationReport sweep_point_report(const RunConfig& cfg, const PhysicalParams& params,
                                           const NoiseModel& model) {
    if (cfg.coupling == NoiseCoupling::Position)
        return position_excitation(params, {cfg.position_coupling, model}, params.duration);
    const Trajectory traj = synthesize(cfg.protocol, params, cfg.bangbang_k);
    return spring_excitation_closed(traj, model);
}

} // namespace detail

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

/// Executes the configured sweep and writes one record per point. Sweep
/// points run concurrently; records are buffered and written in sweep order.
inline int cmd_run(const RunConfig& cfg) {
    if (!cfg.sweep) throw ConfigError("run: requires a sweep block");
    const auto values = cfg.sweep->values();
    const double hw = constants::hbar * cfg.physical.omega;
    const double g0_norm = hw * cfg.physical.omega * 1e6;  // G0 = hbar w^2 x 1e6
    const bool spring = cfg.coupling == NoiseCoupling::Spring;

    std::string header;
    std::vector<detail::SweepRow> rows;
    bool with_flag = true;

    switch (cfg.sweep->variable) {
        case SweepSpec::Variable::Duration: {
            if (!cfg.noise) throw ConfigError("run: duration sweep requires a noise block");
            header = "T_s,T_over_T0,G_SI,G_over_G0,E_e_J,E_e_hbar_omega";
            rows = detail::run_sweep_points(values, [&](std::size_t i) {
                auto params = cfg.physical;
                params.duration = values[i];
                const auto rep = detail::sweep_point_report(cfg, params, *cfg.noise);
                detail::SweepRow row;
                row.cells = {{values[i]},
                             {values[i] / cfg.physical.period()},
                             {rep.sensitivity},
                             spring ? detail::SweepCell{rep.sensitivity / g0_norm}
                                    : detail::SweepCell{},
                             {rep.excitation_energy},
                             {rep.excitation_energy / hw}};
                row.report = to_json(rep);
                return row;
            });
            break;
        }
        case SweepSpec::Variable::Tau: {
            if (!cfg.noise || !std::holds_alternative<OrnsteinUhlenbeckNoise>(*cfg.noise))
                throw ConfigError("run: tau sweep requires noise.kind=ou");
            header = "tau_s,G_SI,G_over_G0,E_e_J,E_e_hbar_omega";
            rows = detail::run_sweep_points(values, [&](std::size_t i) {
                const NoiseModel model = detail::with_tau(*cfg.noise, values[i]);
                const auto rep = detail::sweep_point_report(cfg, cfg.physical, model);
                detail::SweepRow row;
                row.cells = {{values[i]},
                             {rep.sensitivity},
                             spring ? detail::SweepCell{rep.sensitivity / g0_norm}
                                    : detail::SweepCell{},
                             {rep.excitation_energy},
                             {rep.excitation_energy / hw}};
                row.report = to_json(rep);
                return row;
            });
            break;
        }
        case SweepSpec::Variable::Tau2: {
            if (!cfg.noise || !std::holds_alternative<FlickerNoise>(*cfg.noise))
                throw ConfigError("run: tau2 sweep requires noise.kind=flicker");
            header = "tau2_s,G_SI,G_over_G0,E_e_J,E_e_hbar_omega";
            rows = detail::run_sweep_points(values, [&](std::size_t i) {
                NoiseModel model = detail::with_tau2(*cfg.noise, values[i]);
                validate(model);  // tau2 must stay above tau1
                const auto rep = detail::sweep_point_report(cfg, cfg.physical, model);
                detail::SweepRow row;
                row.cells = {{values[i]},
                             {rep.sensitivity},
                             spring ? detail::SweepCell{rep.sensitivity / g0_norm}
                                    : detail::SweepCell{},
                             {rep.excitation_energy},
                             {rep.excitation_energy / hw}};
                row.report = to_json(rep);
                return row;
            });
            break;
        }
        case SweepSpec::Variable::Lambda: {
            header = "lambda,E_e_quintic_J,E_e_septic_J,ratio";
            with_flag = false;
            const Trajectory quintic = synth_quintic(cfg.physical);
            const Trajectory septic = synth_robust_septic(cfg.physical);
            rows = detail::run_sweep_points(values, [&](std::size_t i) {
                const SystematicError err{values[i]};
                const double e_q = systematic_excitation(quintic, err);
                const double e_s = systematic_excitation(septic, err);
                detail::SweepRow row;
                row.cells = {{values[i]}, {e_q}, {e_s}, {e_q > 0.0 ? e_s / e_q : 0.0}};
                return row;
            });
            break;
        }
        case SweepSpec::Variable::OmegaEval: {
            header = "omega_eval_rad_s,I_cos,I_sin";
            with_flag = false;
            const Trajectory traj = synthesize(cfg.protocol, cfg.physical, cfg.bangbang_k);
            rows = detail::run_sweep_points(values, [&](std::size_t i) {
                const auto [ic, is] = fourier_conditions(traj, values[i]);
                detail::SweepRow row;
                row.cells = {{values[i]}, {ic}, {is}};
                return row;
            });
            break;
        }
    }

    std::string full_header = header + (with_flag ? ",infeasible" : "");
    const std::size_t ncols = detail::split_header(header).size();
    if (cfg.output.format == OutputSpec::Format::Csv)
        detail::write_file(cfg.output.path,
                           detail::csv_text(full_header, ncols, rows, with_flag));
    else
        detail::write_file(cfg.output.path,
                           detail::json_text(detail::split_header(header), rows, with_flag));
    std::cout << "wrote " << rows.size() << " records to " << cfg.output.path << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

/// Per sweep point: closed-form prediction vs a non-perturbative oracle.
inline int cmd_compare(const RunConfig& cfg,
                       std::optional<std::uint64_t> seed_override = {}) {
    if (!cfg.sweep) throw ConfigError("compare: requires a sweep block");
    if (!cfg.noise) throw ConfigError("compare: requires a noise block");
    if (cfg.oracle.mode == OracleSpec::Mode::None)
        throw ConfigError("compare: requires oracle.mode=moments or mc");
    const auto var = cfg.sweep->variable;
    if (var != SweepSpec::Variable::Duration && var != SweepSpec::Variable::Tau &&
        var != SweepSpec::Variable::Tau2)
        throw ConfigError("compare: sweep variable must be T, tau, or tau2");
    const bool mc = cfg.oracle.mode == OracleSpec::Mode::Mc;
    const std::uint64_t seed = seed_override.value_or(cfg.oracle.seed);
    const double hw = constants::hbar * cfg.physical.omega;

    const auto values = cfg.sweep->values();
    auto point_setup = [&](std::size_t i) {
        auto params = cfg.physical;
        NoiseModel model = *cfg.noise;
        if (var == SweepSpec::Variable::Duration) params.duration = values[i];
        else if (var == SweepSpec::Variable::Tau) model = detail::with_tau(model, values[i]);
        else model = detail::with_tau2(model, values[i]);
        return std::pair{params, model};
    };

    auto rows = detail::run_sweep_points(values, [&](std::size_t i) {
        const auto [params, model] = point_setup(i);
        const double e_n = (params.mode_n + 0.5) * hw;
        const Trajectory traj = synthesize(cfg.protocol, params, cfg.bangbang_k);

        double pred = 0.0, oracle_e = 0.0, std_err = 0.0;
        int members = 0;
        if (cfg.coupling == NoiseCoupling::Spring) {
            pred = spring_excitation_closed(traj, model).excitation_energy;
            if (mc) {
                McOptions opts;
                opts.members = cfg.oracle.members;
                opts.seed = mix_seed(seed, i);
                opts.step_size = cfg.oracle.dt;
                const auto res = mc_ensemble_energy(traj, model, NoiseCoupling::Spring, opts);
                oracle_e = res.mean_energy - e_n;
                std_err = res.std_error;
                members = res.member_count;
            } else {
                const MomentState ms =
                    evolve_moments_spring(traj, model, {cfg.oracle.dt});
                oracle_e = energy_from_moments(ms, params, params.distance) - e_n;
            }
        } else {
            const PositionNoiseParams pos{cfg.position_coupling, model};
            pred = position_excitation(params, pos, params.duration).excitation_energy;
            if (mc) {
                McOptions opts;
                opts.members = cfg.oracle.members;
                opts.seed = mix_seed(seed, i);
                opts.step_size = cfg.oracle.dt;
                opts.position_coupling = cfg.position_coupling;
                const auto res =
                    mc_ensemble_energy(traj, model, NoiseCoupling::Position, opts);
                oracle_e = res.mean_energy - e_n;
                std_err = res.std_error;
                members = res.member_count;
            } else {
                const MomentState ms = evolve_moments_position(traj, pos, {cfg.oracle.dt});
                oracle_e = energy_from_moments(ms, params, params.distance) - e_n;
            }
        }
        // 0/0 convention: a zero prediction reports a zero gap
        const double gap = pred == 0.0 ? 0.0 : (oracle_e - pred) / pred;
        detail::SweepRow row;
        row.cells = {{values[i]}, {pred}, {oracle_e}, {gap}};
        if (mc) {
            row.cells.push_back({std_err});
            row.cells.push_back({static_cast<double>(members)});
        }
        return row;
    });

    double max_gap = 0.0;
    for (const auto& row : rows)
        if (!row.infeasible && row.cells[3].value)
            max_gap = std::max(max_gap, std::abs(*row.cells[3].value));

    const char* value_col = var == SweepSpec::Variable::Duration ? "T_s"
                            : var == SweepSpec::Variable::Tau    ? "tau_s"
                                                                 : "tau2_s";
    std::string header = std::string(value_col) + ",E_e_pred_J,E_e_oracle_J,rel_gap";
    if (mc) header += ",std_error_J,members";
    const std::string footer = "# max_abs_rel_gap=" + fmt17(max_gap);
    if (cfg.output.format == OutputSpec::Format::Csv)
        detail::write_file(cfg.output.path,
                           detail::csv_text(header, detail::split_header(header).size(), rows,
                                            false, footer));
    else
        detail::write_file(cfg.output.path,
                           detail::json_text(detail::split_header(header), rows, false));
    std::cout << "max |rel_gap| = " << fmt17(max_gap) << " over " << rows.size()
              << " points; wrote " << cfg.output.path << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// traj dump
// ---------------------------------------------------------------------------

/// Writes t, q_c, qdot_c, qddot_c, q_0 on a uniform grid over [0, T].
inline int cmd_traj_dump(const RunConfig& cfg) {
    const Trajectory traj = synthesize(cfg.protocol, cfg.physical, cfg.bangbang_k);
    const int n = cfg.output.points;
    std::string out = "# schema=1\nt,q_c,qdot_c,qddot_c,q_0\n";
    for (int i = 0; i < n; ++i) {
        const double t = cfg.physical.duration * i / (n - 1);
        const Motion m = traj.eval(t);
        out += fmt17(t) + ',' + fmt17(m.position) + ',' + fmt17(m.velocity) + ',' +
               fmt17(m.acceleration) + ',' + fmt17(traj.trap_position(t)) + '\n';
    }
    detail::write_file(cfg.output.path, out);
    std::cout << "wrote " << n << " samples to " << cfg.output.path << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------------

/// Single-point oracle run at the configured duration; JSON report with the
/// closed-form prediction alongside.
inline int cmd_oracle(const RunConfig& cfg, std::optional<std::uint64_t> seed_override = {}) {
    if (!cfg.noise) throw ConfigError("oracle: requires a noise block");
    if (cfg.oracle.mode == OracleSpec::Mode::None)
        throw ConfigError("oracle: requires oracle.mode=moments or mc");
    const Trajectory traj = synthesize(cfg.protocol, cfg.physical, cfg.bangbang_k);
    const double e_n = (cfg.physical.mode_n + 0.5) * constants::hbar * cfg.physical.omega;
    const std::uint64_t seed = seed_override.value_or(cfg.oracle.seed);

    const ExcitationReport pred =
        cfg.coupling == NoiseCoupling::Spring
            ? spring_excitation_closed(traj, *cfg.noise)
            : position_excitation(cfg.physical, {cfg.position_coupling, *cfg.noise},
                                  cfg.physical.duration);

    nlohmann::json out;
    double oracle_e = 0.0;
    if (cfg.oracle.mode == OracleSpec::Mode::Moments) {
        const MomentState ms =
            cfg.coupling == NoiseCoupling::Spring
                ? evolve_moments_spring(traj, *cfg.noise, {cfg.oracle.dt})
                : evolve_moments_position(traj, {cfg.position_coupling, *cfg.noise},
                                          {cfg.oracle.dt});
        const double energy = energy_from_moments(ms, cfg.physical, cfg.physical.distance);
        oracle_e = energy - e_n;
        out["final_moments"] = to_json(ms);
        out["energy_J"] = energy;
    } else {
        McOptions opts;
        opts.members = cfg.oracle.members;
        opts.seed = seed;
        opts.step_size = cfg.oracle.dt;
        opts.position_coupling = cfg.position_coupling;
        const auto res = mc_ensemble_energy(traj, *cfg.noise, cfg.coupling, opts);
        oracle_e = res.mean_energy - e_n;
        out["energy_J"] = res.mean_energy;
        out["std_error_J"] = res.std_error;
        out["members"] = res.member_count;
        out["seed"] = res.seed;
        out["flagged"] = res.flagged;
    }
    out["excitation_J"] = oracle_e;
    out["prediction_J"] = pred.excitation_energy;
    out["relative_gap"] = pred.excitation_energy == 0.0
                              ? 0.0
                              : (oracle_e - pred.excitation_energy) / pred.excitation_energy;
    out["prediction_report"] = to_json(pred);

    detail::write_file(cfg.output.path, out.dump(2) + "\n");
    std::cout << "excitation " << fmt17(oracle_e) << " J vs prediction "
              << fmt17(pred.excitation_energy) << " J; wrote " << cfg.output.path << "\n";
    return 0;
}

} // namespace shuttlekit
