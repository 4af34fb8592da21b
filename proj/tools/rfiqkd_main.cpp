// Command-line front end: scenario-driven simulation, measured-data
// evaluation, pulse-level Monte Carlo and beta sweeps.

#include <cstdint>
#include <fstream>
#include <future>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rfiqkd/channel.hpp"
#include "rfiqkd/io.hpp"
#include "rfiqkd/montecarlo.hpp"
#include "rfiqkd/optimizer.hpp"
#include "rfiqkd/security.hpp"

namespace {

using namespace rfiqkd;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitInconsistentCounts = 4;

struct OutputTarget {
    std::string path;
    bool to_stdout = false;

    // stdout carries only data when --stdout is set; diagnostics go to stderr.
    template <typename Fn>
    int write(Fn&& fn) const {
        if (to_stdout) {
            fn(std::cout);
            return kExitOk;
        }
        std::ofstream out(path, std::ios::binary);
        if (!out) {
            std::cerr << "error: cannot open output file '" << path << "'\n";
            return kExitConfig;
        }
        fn(out);
        return kExitOk;
    }
};

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

int cmd_simulate(const std::string& scenario_path, const OutputTarget& target) {
    Scenario sc = load_scenario(scenario_path);
    print_warnings(sc.warnings);
    if (sc.drift.kind != DriftKind::Constant)
        std::cerr << "warning: simulate uses the analytic model; drift ignored, using beta0\n";
    const double beta = sc.drift.beta0;

    struct Row {
        double distance;
        ProtocolParams params;
        KeyRateReport report;
    };
    std::vector<std::future<Row>> futures;
    futures.reserve(sc.distances.size());
    for (double L : sc.distances) {
        futures.push_back(std::async(std::launch::async, [&, L]() {
            Row row;
            row.distance = L;
            if (sc.optimize_mode) {
                OptimizationSpec spec = sc.optimizer;
                spec.beta = beta;
                OptimizeResult res = optimize(L, sc.device, sc.security, spec);
                row.params = res.params;
                row.report = std::move(res.report);
            } else {
                const ChannelPoint point(L, beta, sc.device);
                row.params = sc.protocol;
                row.report = analyze(expected_counts(sc.protocol, sc.device, point), sc.protocol,
                                     sc.device, sc.security);
            }
            return row;
        }));
    }
    std::vector<Row> rows;
    rows.reserve(futures.size());
    for (auto& f : futures) rows.push_back(f.get());  // input order preserved

    return target.write([&](std::ostream& out) {
        out << kRateTableHeader << '\n';
        for (const auto& row : rows) write_rate_row(out, row.distance, row.params, row.report);
    });
}

int cmd_evaluate(const std::string& scenario_path, const std::string& counts_path,
                 bool integer_counts, const OutputTarget& target) {
    Scenario sc = load_scenario(scenario_path);
    print_warnings(sc.warnings);
    if (sc.optimize_mode) {
        std::cerr << "error: scenario key 'protocol': evaluate requires a fixed protocol\n";
        return kExitConfig;
    }
    std::ifstream in(counts_path);
    if (!in) {
        std::cerr << "error: cannot open counts file '" << counts_path << "'\n";
        return kExitConfig;
    }
    SiftedCounts counts = read_counts_csv(in, integer_counts);
    KeyRateReport rep = analyze(counts, sc.protocol, sc.device, sc.security);
    for (const auto& w : sc.warnings) rep.warnings.push_back(w);
    nlohmann::json j = report_to_json(rep);
    return target.write([&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

int cmd_montecarlo(const std::string& scenario_path, std::uint64_t pulses, std::uint64_t seed,
                   std::uint64_t block_size, const OutputTarget& target) {
    Scenario sc = load_scenario(scenario_path);
    print_warnings(sc.warnings);
    if (sc.optimize_mode) {
        std::cerr << "error: scenario key 'protocol': montecarlo requires a fixed protocol\n";
        return kExitConfig;
    }
    if (sc.distances.size() != 1) {
        std::cerr << "error: scenario key 'channel.distances': montecarlo needs one distance\n";
        return kExitConfig;
    }
    if (static_cast<double>(pulses) != sc.protocol.n_pulses)
        std::cerr << "warning: --pulses differs from protocol.n_pulses; evaluate will use "
                     "protocol.n_pulses as the emitted-pulse count N\n";
    RunSpec spec;
    spec.pulses = pulses;
    spec.seed = seed;
    spec.block_size = block_size;
    const SiftedCounts counts = run(sc.protocol, sc.device, sc.distances[0], sc.drift, spec);

    for (EventClass cls : kAllClasses) {
        const ClassCounts cc = class_counts(counts, cls);
        std::cerr << to_string(cls) << ": valid=" << format_count(cc.valid_total())
                  << " error=" << format_count(cc.error_total()) << '\n';
    }
    return target.write([&](std::ostream& out) { write_counts_csv(out, counts); });
}

int cmd_sweep_beta(const std::string& scenario_path, int steps, const OutputTarget& target) {
    Scenario sc = load_scenario(scenario_path);
    print_warnings(sc.warnings);
    if (sc.optimize_mode) {
        std::cerr << "error: scenario key 'protocol': sweep-beta requires a fixed protocol\n";
        return kExitConfig;
    }
    if (sc.distances.size() != 1) {
        std::cerr << "error: scenario key 'channel.distances': sweep-beta needs one distance\n";
        return kExitConfig;
    }
    if (steps < 1) {
        std::cerr << "error: --steps must be >= 1\n";
        return kExitConfig;
    }
    const double beta0 = sc.drift.beta0;
    std::vector<double> betas(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i)
        betas[static_cast<std::size_t>(i)] =
            beta0 + 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(steps);

    std::vector<std::future<KeyRateReport>> futures;
    futures.reserve(betas.size());
    for (double b : betas) {
        futures.push_back(std::async(std::launch::async, [&, b]() {
            const ChannelPoint point(sc.distances[0], b, sc.device);
            return analyze(expected_counts(sc.protocol, sc.device, point), sc.protocol, sc.device,
                           sc.security);
        }));
    }
    std::vector<KeyRateReport> reports;
    reports.reserve(futures.size());
    for (auto& f : futures) reports.push_back(f.get());

    return target.write([&](std::ostream& out) {
        out << "beta,R_l,C_diagnostic,r_l\n";
        char buf[160];
        for (std::size_t i = 0; i < betas.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g", betas[i], reports[i].R_l,
                          reports[i].c_diagnostic, reports[i].r_l);
            out << buf << '\n';
        }
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finite-key security analysis and simulation for improved RFI-QKD"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string counts_path;
    std::string out_path = "out.csv";
    bool use_stdout = false;
    bool integer_counts = false;
    std::uint64_t pulses = 0, seed = 1, block_size = 1 << 20;
    int steps = 32;

    auto* sim = app.add_subcommand("simulate", "Rate table over distances (fixed or optimized)");
    sim->add_option("scenario", scenario_path, "scenario JSON file")->required();
    sim->add_option("--out", out_path, "output CSV path");
    sim->add_flag("--stdout", use_stdout, "write data to stdout");

    auto* ev = app.add_subcommand("evaluate", "Key-rate report from a counts CSV");
    ev->add_option("scenario", scenario_path, "scenario JSON file")->required();
    ev->add_option("--counts", counts_path, "counts CSV file")->required();
    ev->add_option("--out", out_path, "output JSON path");
    ev->add_flag("--stdout", use_stdout, "write data to stdout");
    ev->add_flag("--integer-counts", integer_counts, "reject non-integer counts");

    auto* mc = app.add_subcommand("montecarlo", "Pulse-level simulation emitting a counts CSV");
    mc->add_option("scenario", scenario_path, "scenario JSON file")->required();
    mc->add_option("--pulses", pulses, "number of pulses")->required();
    mc->add_option("--seed", seed, "RNG seed");
    mc->add_option("--block-size", block_size, "pulses per RNG block");
    mc->add_option("--out", out_path, "output CSV path");
    mc->add_flag("--stdout", use_stdout, "write data to stdout");

    auto* sb = app.add_subcommand("sweep-beta", "Analytic sweep of the frame angle");
    sb->add_option("scenario", scenario_path, "scenario JSON file")->required();
    sb->add_option("--steps", steps, "number of grid points over [beta0, beta0 + 2 pi)");
    sb->add_option("--out", out_path, "output CSV path");
    sb->add_flag("--stdout", use_stdout, "write data to stdout");

    CLI11_PARSE(app, argc, argv);

    OutputTarget target{out_path, use_stdout};
    try {
        if (sim->parsed()) return cmd_simulate(scenario_path, target);
        if (ev->parsed()) return cmd_evaluate(scenario_path, counts_path, integer_counts, target);
        if (mc->parsed()) return cmd_montecarlo(scenario_path, pulses, seed, block_size, target);
        if (sb->parsed()) return cmd_sweep_beta(scenario_path, steps, target);
    } catch (const rfiqkd::ScenarioError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const rfiqkd::CountsConsistencyError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInconsistentCounts;
    } catch (const rfiqkd::CountsFormatError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const rfiqkd::DecoyInfeasible& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInfeasible;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitOk;
}
