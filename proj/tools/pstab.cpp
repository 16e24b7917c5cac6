// pstab: command-line driver for the stabilizer library.
//
//   pstab simulate    --config run.ini [--out-dir D] [--seed N]
//   pstab tune        --config run.ini --method zn|cc|custom [--out-dir D]
//   pstab replay      flight.csv [--out-dir D]
//   pstab dof         [--links N] [--joint F,J ...]
//   pstab load-budget [--torque T] [--crank R] [--efficiency E] [--fos S] [--legs L]
//
// Exit status: 0 ok, 1 invalid input, 2 a procedure could not produce a result.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <pstab/harness/commands.hpp>
#include <pstab/harness/config.hpp>
#include <pstab/harness/load_budget.hpp>
#include <pstab/harness/replay.hpp>

namespace fs = std::filesystem;
using namespace pstab;
using namespace pstab::harness;

namespace {

std::ofstream open_out(const fs::path& dir, const std::string& name)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    const fs::path p = dir / name;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ValidationError("cannot write '" + p.string() + "'");
    return f;
}

std::vector<JointGroup> parse_joints(const std::vector<std::string>& specs)
{
    std::vector<JointGroup> out;
    for (const auto& s : specs) {
        const auto parts = harness::detail::split(s);
        if (parts.size() != 2) throw ValidationError("--joint expects F,J (freedoms per joint, joint count)");
        out.push_back({harness::detail::to_integer<int>(parts[0], "--joint"),
                       harness::detail::to_integer<int>(parts[1], "--joint")});
    }
    return out;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Three-leg stabilizing platform: simulation, tuning and log analysis"};
    app.require_subcommand(1);
    app.fallthrough();
    bool quiet = false;
    app.add_flag("-q,--quiet", quiet, "Only report errors");

    std::string config_path, out_dir = ".", method, log_path;
    std::optional<std::uint64_t> seed;

    auto* sim = app.add_subcommand("simulate", "Run the closed loop and write trace.csv and summary.csv");
    sim->add_option("--config", config_path, "INI configuration")->required();
    sim->add_option("--out-dir", out_dir, "Output directory");
    sim->add_option("--seed", seed, "Override run.seed");

    auto* tune = app.add_subcommand("tune", "Tune each leg and write the report, gains and probe responses");
    tune->add_option("--config", config_path, "INI configuration")->required();
    tune->add_option("--method", method, "zn, cc or custom (overrides tune.method)");
    tune->add_option("--out-dir", out_dir, "Output directory");
    tune->add_option("--seed", seed, "Override run.seed");

    auto* replay = app.add_subcommand("replay", "Deviation statistics of a flight log; writes a cleaned copy");
    replay->add_option("log", log_path, "Flight-log CSV")->required();
    replay->add_option("--out-dir", out_dir, "Output directory");

    int links = 8;
    std::vector<std::string> joint_specs;
    auto* dof = app.add_subcommand("dof", "Mobility of a mechanism by the Grubler criterion");
    dof->add_option("--links", links, "Number of links including the base");
    dof->add_option("--joint", joint_specs, "Joint group F,J: J joints of F freedoms each (repeatable)");

    double torque = 1.0, crank = 0.015, efficiency = 0.85, fos = 1.5;
    int legs = 3;
    auto* load = app.add_subcommand("load-budget", "Payload capacity from servo torque");
    load->add_option("--torque", torque, "Servo torque, N*m");
    load->add_option("--crank", crank, "Crank radius, m");
    load->add_option("--efficiency", efficiency, "Drive efficiency in (0, 1]");
    load->add_option("--fos", fos, "Factor of safety");
    load->add_option("--legs", legs, "Number of legs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*sim) {
            AppConfig cfg = load_config(config_path);
            if (seed) cfg.sim.seed = *seed;
            const SimulationTrace trace = simulate_closed_loop(cfg.sim);
            const SimulationSummary s = summarize(trace);
            auto tf = open_out(out_dir, "trace.csv");
            write_trace_csv(tf, trace);
            auto sf = open_out(out_dir, "summary.csv");
            write_summary_csv(sf, s);
            if (!quiet) {
                std::cout << trace.rows.size() << " rows written to " << (fs::path(out_dir) / "trace.csv").string()
                          << '\n';
                write_summary_text(std::cout, s);
            }
        } else if (*tune) {
            AppConfig cfg = load_config(config_path);
            if (seed) cfg.sim.seed = *seed;
            if (!method.empty()) cfg.tune.method = parse_tune_method(method);
            const auto result = tune_legs(cfg);
            std::ostringstream report;
            write_tuning_report(report, cfg, result);
            open_out(out_dir, "tuning_report.txt") << report.str();
            auto gf = open_out(out_dir, "tuned_gains.ini");
            write_gains_ini(gf, result);
            for (const auto& lt : result) {
                auto pf = open_out(out_dir, "probes_leg" + std::to_string(lt.leg + 1) + ".csv");
                write_probe_csv(pf, lt.probes);
            }
            if (!quiet) std::cout << report.str();
        } else if (*replay) {
            std::ifstream in(log_path);
            if (!in) throw ValidationError("cannot open flight log '" + log_path + "'");
            const FlightLog log = read_flight_log(in);
            const DeviationReport r = analyse_flight_log(log);
            std::ostringstream report;
            write_deviation_report(report, r);
            open_out(out_dir, "replay_report.txt") << report.str();
            auto cf = open_out(out_dir, "cleaned.csv");
            write_flight_log(cf, log);
            if (!quiet) std::cout << report.str();
        } else if (*dof) {
            std::vector<JointGroup> joints =
                joint_specs.empty() ? std::vector<JointGroup>{{1, 6}, {3, 3}} : parse_joints(joint_specs);
            const DofBreakdown b = dof_breakdown(links, std::move(joints));
            if (!quiet) write_dof_report(std::cout, b);
        } else if (*load) {
            const LoadBudget b = compute_load_budget(torque, crank, efficiency, fos, legs);
            if (!quiet) {
                std::printf("per link ideal force     %.4g N\n", b.per_link_ideal);
                std::printf("per link effective force %.4g N\n", b.per_link_effective);
                std::printf("per link rated mass      %.4g kg\n", b.per_link_rated_mass);
                std::printf("total rated mass         %.4g kg (%d legs)\n", b.total_rated_mass, b.legs);
            }
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const ModelError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
