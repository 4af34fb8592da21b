// Acceptance suite: each numbered check prints one PASS/FAIL line with the
// measured quantities and its wall time. Exit status is the number of failed
// checks. Checks 6b and 7 include legs that cannot be met with the published
// APD device constants; see the repository README for the analysis. They are
// executed and reported honestly rather than loosened.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "poisson_oracle.hpp"
#include "reference_points.hpp"
#include "rfiqkd/channel.hpp"
#include "rfiqkd/io.hpp"
#include "rfiqkd/montecarlo.hpp"
#include "rfiqkd/optimizer.hpp"
#include "rfiqkd/security.hpp"

using namespace rfiqkd;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

class Timer {
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();

  public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }
};

void report(const std::string& id, bool pass, const std::string& detail, double seconds) {
    std::printf("criterion %-3s %s  [%6.2f s]  %s\n", id.c_str(), pass ? "PASS" : "FAIL", seconds,
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

// ---------------------------------------------------------------- 1
void criterion_frame_independence() {
    Timer t;
    const auto& pt = refpoints::operating_points()[3];  // SNSPD, 100 km
    const DeviceParams dev = refpoints::snspd();
    const ProtocolParams proto = refpoints::protocol_for(pt, 1e11);
    SecurityParams sec;
    sec.eps_pe = 1.0;  // expectation counts carry no sampling fluctuation

    double r_min = 1e300, r_max = 0.0;
    double worst_r = 0.0, worst_c = 0.0;
    for (int i = 0; i < 32; ++i) {
        const double beta = 2.0 * std::numbers::pi * i / 32.0;
        const ChannelPoint point(100.0, beta, dev);
        const KeyRateReport rep = analyze(expected_counts(proto, dev, point), proto, dev, sec);
        r_min = std::min(r_min, rep.r_l);
        r_max = std::max(r_max, rep.r_l);

        const double xx = ideal_correlator(Basis::X, Basis::X, beta);
        const double xy = ideal_correlator(Basis::X, Basis::Y, beta);
        const double yx = ideal_correlator(Basis::Y, Basis::X, beta);
        const double yy = ideal_correlator(Basis::Y, Basis::Y, beta);
        const double r1 = 0.25 * ((xx - yy) * (xx - yy) + (xy + yx) * (xy + yx));
        worst_r = std::max(worst_r, std::fabs(r1 - 1.0));
        worst_c = std::max(worst_c, std::fabs(c_value(xx, xy, yx, yy) - 2.0));
    }
    const double spread = r_max > 0.0 ? (r_max - r_min) / r_max : 1.0;
    const bool pass = r_max > 0.0 && spread < 1e-6 && worst_r < 1e-12 && worst_c < 1e-12 &&
                      t.seconds() < 10.0;
    report("1", pass,
           "frame independence: r_l spread " + fmt(spread) + " over 32 beta (limit 1e-6), |R-1| " +
               fmt(worst_r) + ", |C-2| " + fmt(worst_c) + " (limit 1e-12)",
           t.seconds());
}

// ---------------------------------------------------------------- 2
void criterion_decoy_sandwich() {
    Timer t;
    std::mt19937_64 rng(20240915);
    int violations = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto sc = poisson_oracle::random_scenario(rng);
        const PhotonNumberBounds b = estimate_class(sc.counts, sc.proto, 1.0);
        const double tol = 1e-9 * sc.counts.valid_total() + 1e-9;
        if (b.s0_l > sc.s0_true + tol) ++violations;
        if (b.s1_l > sc.s1_true + tol) ++violations;
        if (b.s1_u < sc.s1_true - tol) ++violations;
        if (b.t1_l > sc.t1_true + tol) ++violations;
        if (b.t1_u < sc.t1_true - tol) ++violations;
    }
    const bool pass = violations == 0 && t.seconds() < 30.0;
    report("2", pass,
           "decoy sandwich: " + std::to_string(violations) +
               " violations over 200 exact-Poisson scenarios (limit 0)",
           t.seconds());
}

// ---------------------------------------------------------------- 3
void criterion_hoeffding_coverage() {
    Timer t;
    std::mt19937_64 rng(777);
    const double eps = 1e-3;
    const int reps = 10000;
    const int n = 20000;
    std::uniform_real_distribution<double> up(0.05, 0.95);
    int upper_viol = 0, lower_viol = 0;
    for (int i = 0; i < reps; ++i) {
        const double p = up(rng);
        std::binomial_distribution<int> bin(n, p);
        const double x = bin(rng);
        const double d = hoeffding_delta(n, eps);
        const double truth = n * p;
        if (truth < x - d) ++upper_viol;
        if (truth > x + d) ++lower_viol;
    }
    const double rate_up = static_cast<double>(upper_viol) / reps;
    const double rate_lo = static_cast<double>(lower_viol) / reps;
    const bool pass = rate_up <= 2e-3 && rate_lo <= 2e-3 && t.seconds() < 60.0;
    report("3", pass,
           "Hoeffding coverage: per-side violation rates " + fmt(rate_up) + " / " + fmt(rate_lo) +
               " over 1e4 binomial replications (limit 2e-3)",
           t.seconds());
}

// ---------------------------------------------------------------- 4
void criterion_oracle_equivalence() {
    Timer t;
    const DeviceParams dev = refpoints::apd();
    ProtocolParams p;
    p.mu = 0.58;
    p.nu = 0.27;
    p.omega = 0.0;
    p.p_mu = 0.40;
    p.p_nu = 0.35;
    p.p_omega = 0.25;
    p.p_z = 0.5;  // balanced bases give every pair useful statistics
    const double beta = 0.4;
    RunSpec spec;
    spec.pulses = 100000000;
    spec.seed = 4242;
    DriftSchedule drift;
    drift.beta0 = beta;
    p.n_pulses = static_cast<double>(spec.pulses);

    const SiftedCounts obs = run(p, dev, 50.0, drift, spec);
    const ChannelPoint point(50.0, beta, dev);

    int checked = 0, failed = 0;
    double worst_z = 0.0;
    for (const auto& [a, b] : kSiftedPairs)
        for (Intensity ik : kAllIntensities) {
            const PairStat st = pair_statistics(a, b, ik, point, dev, p);
            const double rounds = static_cast<double>(spec.pulses) * p.basis_prob(a) *
                                  p.basis_prob(b) * p.intensity_prob(ik);
            const double expect_n = rounds * st.gain;
            const double se_n = std::sqrt(std::max(expect_n * (1.0 - st.gain), 1.0));
            const double zn = std::fabs(obs.valid_at(a, b, ik) - expect_n) / se_n;
            ++checked;
            worst_z = std::max(worst_z, zn);
            if (zn > 5.0) ++failed;
            const double n_obs = obs.valid_at(a, b, ik);
            if (expect_n >= 50.0 && n_obs > 0.0) {
                const double se_m =
                    std::sqrt(std::max(n_obs * st.qber * (1.0 - st.qber), 1.0));
                const double zm = std::fabs(obs.error_at(a, b, ik) - n_obs * st.qber) / se_m;
                ++checked;
                worst_z = std::max(worst_z, zm);
                if (zm > 5.0) ++failed;
            }
        }
    const bool pass = failed == 0 && t.seconds() < 300.0;
    report("4", pass,
           "oracle equivalence at 50 km APD, 1e8 pulses: " + std::to_string(failed) + "/" +
               std::to_string(checked) + " checks beyond 5 SE, worst z " + fmt(worst_z),
           t.seconds());
}

// ---------------------------------------------------------------- 5
void criterion_published_arithmetic() {
    Timer t;
    const SecurityParams sec;
    bool pass = true;
    std::ostringstream detail;
    for (const auto& pt : refpoints::operating_points()) {
        const DeviceParams dev = refpoints::device_for(pt);
        const double ie = leaked_info(pt.e_zz1_u, pt.r_stat);
        const KeyRate kr =
            key_rate(0.0, pt.q_zz1_l, ie, pt.q_zz, pt.e_zz, dev, sec, 1e11);
        const double ratio = kr.clamped / pt.rate;
        if (pt.detector[0] == 'A' && pt.distance_km == 50) {
            if (ratio < 0.75 || ratio > 1.05) pass = false;
            detail << "50km ratio " << fmt(ratio) << " (band [0.75, 1.05]); ";
        } else {
            if (ratio > 1.25) pass = false;
        }
        if (pt.distance_km == 175) {
            detail << "175 km recomputation " << fmt(kr.unclamped)
                   << " vs published 1.64e-07 (known discrepancy, reported); ";
        }
    }
    if (t.seconds() >= 1.0) pass = false;
    report("5", pass, "published-row arithmetic: " + detail.str() + "one-sided <= 1.25x elsewhere",
           t.seconds());
}

// ---------------------------------------------------------------- 6
void criterion_curve_reproduction() {
    Timer t;
    const SecurityParams sec;

    OptimizationSpec spec11;
    spec11.n_pulses = 1e11;
    const OptimizeResult snspd175 = optimize(175.0, refpoints::snspd(), sec, spec11);

    const OptimizeResult apd100 = optimize(100.0, refpoints::apd(), sec, spec11);

    OptimizationSpec spec13;
    spec13.n_pulses = 1e13;
    std::vector<double> distances;
    for (double d = 150.0; d <= 220.0; d += 10.0) distances.push_back(d);
    const auto rows = sweep(distances, refpoints::snspd(), sec, spec13);
    double beyond200 = 0.0;
    for (const auto& row : rows)
        if (row.distance_km > 200.0) beyond200 = std::max(beyond200, row.result.report.r_l);

    const bool pass_snspd = snspd175.positive;
    const bool pass_apd = apd100.positive;
    const bool pass_13 = beyond200 > 0.0;
    const bool in_time = t.seconds() < 600.0;

    report("6a", pass_snspd && in_time,
           "optimized SNSPD 175 km @ N=1e11: r_l " + fmt(snspd175.report.r_l), t.seconds());
    report("6b", pass_apd,
           "optimized APD 100 km @ N=1e11: r_l " + fmt(apd100.report.r_l) +
               " (unclamped " + fmt(apd100.report.r_l_unclamped) +
               "); unreachable with the published APD dark rate, see README",
           t.seconds());
    report("6c", pass_13 && in_time,
           "optimized SNSPD @ N=1e13 beyond 200 km: best r_l " + fmt(beyond200), t.seconds());
}

// ---------------------------------------------------------------- 7
void criterion_row_consistency() {
    Timer t;
    const SecurityParams sec;
    bool pass = true;
    std::ostringstream detail;
    for (const auto& pt : refpoints::operating_points()) {
        const DeviceParams dev = refpoints::device_for(pt);
        const ProtocolParams proto = refpoints::protocol_for(pt, 1e11);
        const ChannelPoint point(pt.distance_km, 0.0, dev);
        const KeyRateReport rep =
            analyze(expected_counts(proto, dev, point), proto, dev, sec);
        const double ratio = rep.r_l / pt.rate;
        const bool ok = ratio >= 0.1 && ratio <= 10.0;
        if (!ok) pass = false;
        detail << pt.detector << pt.distance_km << " " << fmt(ratio) << (ok ? " " : "(X) ");
    }
    report("7", pass,
           "analytic r_l / published r_l per row (decade band): " + detail.str() +
               "- APD 75/100 unreachable with the published APD dark rate, see README",
           t.seconds());
}

// ---------------------------------------------------------------- 8
void criterion_drift_robustness() {
    Timer t;
    DeviceParams d;
    d.alpha_db_per_km = 0.0;
    d.eta_z_db = 0.0;
    d.eta_xy_db = 0.0;
    d.sift_db = 0.0;
    d.e0 = 0.0;
    d.e_d = 0.0;
    d.eta_det = 1.0;
    ProtocolParams p;
    p.mu = 0.02;
    p.nu = 0.01;
    p.omega = 0.0;
    p.p_mu = 1.0;
    p.p_nu = 0.0;
    p.p_omega = 0.0;
    p.p_z = 0.2;

    const double window = 0.2;
    RunSpec spec;
    spec.pulses = 400000000;
    spec.seed = 888;
    DriftSchedule drift;
    drift.kind = DriftKind::Linear;
    drift.beta0 = 0.35;
    drift.rate = window / static_cast<double>(spec.pulses);
    const SiftedCounts c = run(p, d, 0.0, drift, spec);

    auto cls = [&](EventClass e) {
        const ClassCounts cc = class_counts(c, e);
        const double n = cc.valid_total();
        const double f = cc.error_total() / n;
        const double g = 2.0 * (1.0 - 2.0 * f);
        const double sg = 4.0 * std::sqrt(std::max(f * (1.0 - f), 1e-12) / n);
        return std::pair<double, double>{g, sg};
    };
    const auto [g1, s1] = cls(EventClass::G1);
    const auto [g2, s2] = cls(EventClass::G2);
    const double r_meas = 0.25 * (g1 * g1 + g2 * g2);
    const double se = std::sqrt(0.25 * g1 * g1 * s1 * s1 + 0.25 * g2 * g2 * s2 * s2);
    const double expected = drift_r_degradation(window);
    const double z = std::fabs(r_meas - expected) / se;
    const bool pass = z <= 3.0;
    report("8", pass,
           "drift robustness: measured R " + fmt(r_meas) + " vs (sin(0.1)/0.1)^2 = " +
               fmt(expected) + ", " + fmt(z) + " SE (limit 3)",
           t.seconds());
}

// ---------------------------------------------------------------- 9
void criterion_determinism() {
    Timer t;
    const fs::path dir = fs::temp_directory_path() / "rfiqkd_acceptance";
    fs::create_directories(dir);
    const fs::path sc_path = dir / "det.json";
    {
        std::ofstream out(sc_path);
        out << R"({"device":{"alpha_db_per_km":0.2,"eta_z_db":10,"eta_xy_db":12,"sift_db":3,)"
            << R"("e0":0.01,"e_d":8e-6,"eta_det":0.15,"f_ec":1.16},)"
            << R"("protocol":{"mu":0.58,"nu":0.27,"omega":0,"p_mu":0.52,"p_nu":0.36,)"
            << R"("p_omega":0.12,"p_z":0.7,"n_pulses":1e9},)"
            << R"("security":{"eps_ec":1e-10,"eps_pa":1e-10,"eps_bar":1e-10,"eps_pe":1e-10},)"
            << R"("channel":{"distance_km":25.0,"beta":0.3}})";
    }
    auto run_cli = [&](const fs::path& out) {
        const std::string cmd = std::string(RFIQKD_CLI_PATH) + " montecarlo " + sc_path.string() +
                                " --pulses 3000000 --seed 77 --out " + out.string() +
                                " 2>/dev/null";
        return std::system(cmd.c_str()) == 0;
    };
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream os;
        os << in.rdbuf();
        return os.str();
    };
    const fs::path o1 = dir / "mc1.csv", o2 = dir / "mc2.csv";
    bool pass = run_cli(o1) && run_cli(o2);
    const std::string f1 = slurp(o1), f2 = slurp(o2);
    pass = pass && !f1.empty() && f1 == f2;

    // block-parallel execution order: accumulate the same blocks in reverse
    ProtocolParams p;
    p.mu = 0.58;
    p.nu = 0.27;
    p.p_mu = 0.52;
    p.p_nu = 0.36;
    p.p_omega = 0.12;
    p.p_z = 0.7;
    const DeviceParams dev = refpoints::apd();
    RunSpec spec;
    spec.pulses = 600000;
    spec.seed = 77;
    spec.block_size = 100000;
    DriftSchedule drift;
    drift.beta0 = 0.3;
    const SiftedCounts full = run(p, dev, 25.0, drift, spec);
    SiftedCounts reversed;
    detail::BlockContext ctx{p, dev, ChannelPoint(25.0, 0.0, dev), drift, {}};
    for (Intensity ik : kAllIntensities)
        ctx.exp_neg_k[static_cast<int>(ik)] = std::exp(-p.intensity(ik));
    for (int b = 5; b >= 0; --b)
        detail::run_block(ctx, spec.seed, static_cast<std::uint64_t>(b),
                          static_cast<std::uint64_t>(b) * 100000ULL, 100000ULL, reversed);
    for (Basis x : kAllBases)
        for (Basis y : kAllBases)
            for (Intensity k : kAllIntensities) {
                if (reversed.valid_at(x, y, k) != full.valid_at(x, y, k)) pass = false;
                if (reversed.error_at(x, y, k) != full.error_at(x, y, k)) pass = false;
            }
    report("9", pass, "determinism: byte-identical CLI output and order-independent block merge",
           t.seconds());
}

}  // namespace

int main() {
    std::printf("rfiqkd acceptance suite\n");
    criterion_frame_independence();
    criterion_decoy_sandwich();
    criterion_hoeffding_coverage();
    criterion_oracle_equivalence();
    criterion_published_arithmetic();
    criterion_curve_reproduction();
    criterion_row_consistency();
    criterion_drift_robustness();
    criterion_determinism();
    std::printf("%d criterion check(s) failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
