#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rfiqkd/channel.hpp"
#include "rfiqkd/security.hpp"

namespace rfiqkd {

// Search configuration for per-distance protocol-parameter optimization.
// Free variables: mu, nu, p_mu, p_nu, p_z; omega is fixed at 0. Box bounds
// keep every candidate decoy-feasible.
struct OptimizationSpec {
    double n_pulses = 1e11;
    std::uint64_t seed = 1;
    int budget = 6000;  // max objective evaluations
    double beta = 0.0;

    double mu_min = 0.05, mu_max = 1.0;
    double nu_min = 0.01, nu_frac_max = 0.9;  // nu <= nu_frac_max * mu
    double p_mu_min = 0.05, p_mu_max = 0.93;
    double p_nu_min = 0.02;
    double p_omega_min = 0.02;
    double p_z_min = 0.5, p_z_max = 0.99;

    int lhs_points = 64;
    int refine_starts = 8;
    int sweeps = 4;
    int golden_iters = 14;
};

struct OptimizeResult {
    ProtocolParams params;
    KeyRateReport report;
    bool positive = false;
    std::string reason;
};

namespace detail_opt {

// Unit-cube decoding keeps the simplex and decoy-feasibility constraints
// satisfied for every x in [0,1]^5.
inline ProtocolParams decode(const std::array<double, 5>& x, const OptimizationSpec& spec) {
    ProtocolParams p;
    p.mu = spec.mu_min + x[0] * (spec.mu_max - spec.mu_min);
    const double nu_hi = spec.nu_frac_max * p.mu;
    p.nu = spec.nu_min + x[1] * std::max(0.0, nu_hi - spec.nu_min);
    p.omega = 0.0;
    p.p_mu = spec.p_mu_min + x[2] * (spec.p_mu_max - spec.p_mu_min);
    const double pnu_hi = 1.0 - p.p_mu - spec.p_omega_min;
    p.p_nu = spec.p_nu_min + x[3] * std::max(0.0, pnu_hi - spec.p_nu_min);
    p.p_omega = 1.0 - p.p_mu - p.p_nu;
    p.p_z = spec.p_z_min + x[4] * (spec.p_z_max - spec.p_z_min);
    p.n_pulses = spec.n_pulses;
    return p;
}

constexpr double kGolden = 0.6180339887498949;

}  // namespace detail_opt

// Deterministic multi-start direct search: a Latin-hypercube seed set scored
// once, then coordinate-wise golden-section refinement of the best starts.
// Identical (spec, seed) gives identical output.
inline OptimizeResult optimize(double distance_km, const DeviceParams& dev,
                               const SecurityParams& sec, const OptimizationSpec& spec) {
    int evals = 0;
    auto objective = [&](const std::array<double, 5>& x) -> double {
        ++evals;
        const ProtocolParams p = detail_opt::decode(x, spec);
        if (p.p_omega <= 0.0 || p.nu >= p.mu || p.mu * p.nu - p.nu * p.nu <= 0.0) return -1e30;
        const ChannelPoint point(distance_km, spec.beta, dev);
        const KeyRateReport rep = analyze(expected_counts(p, dev, point), p, dev, sec);
        return rep.r_l_unclamped;
    };

    std::mt19937_64 rng(spec.seed);
    auto unit = [&]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

    // Latin hypercube over [0,1]^5
    const int n = std::max(2, spec.lhs_points);
    std::array<std::vector<int>, 5> perms;
    for (auto& perm : perms) {
        perm.resize(n);
        for (int i = 0; i < n; ++i) perm[i] = i;
        std::shuffle(perm.begin(), perm.end(), rng);
    }
    std::vector<std::pair<double, std::array<double, 5>>> scored;
    scored.reserve(n);
    for (int i = 0; i < n; ++i) {
        std::array<double, 5> x;
        for (int d = 0; d < 5; ++d) x[d] = (perms[d][i] + unit()) / n;
        scored.emplace_back(objective(x), x);
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });

    std::pair<double, std::array<double, 5>> best = scored.front();
    const int starts = std::min<int>(spec.refine_starts, static_cast<int>(scored.size()));
    for (int s = 0; s < starts && evals < spec.budget; ++s) {
        std::array<double, 5> x = scored[s].second;
        for (int sweep = 0; sweep < spec.sweeps && evals < spec.budget; ++sweep) {
            for (int d = 0; d < 5 && evals < spec.budget; ++d) {
                double a = 0.0, b = 1.0;
                double c = b - detail_opt::kGolden * (b - a);
                double e = a + detail_opt::kGolden * (b - a);
                auto eval_at = [&](double v) {
                    std::array<double, 5> y = x;
                    y[d] = v;
                    return objective(y);
                };
                double fc = eval_at(c), fe = eval_at(e);
                for (int it = 0; it < spec.golden_iters && evals < spec.budget; ++it) {
                    if (fc > fe) {
                        b = e; e = c; fe = fc;
                        c = b - detail_opt::kGolden * (b - a);
                        fc = eval_at(c);
                    } else {
                        a = c; c = e; fc = fe;
                        e = a + detail_opt::kGolden * (b - a);
                        fe = eval_at(e);
                    }
                }
                x[d] = (a + b) / 2.0;
            }
        }
        const double v = objective(x);
        if (v > best.first) best = {v, x};
    }

    OptimizeResult out;
    out.params = detail_opt::decode(best.second, spec);
    const ChannelPoint point(distance_km, spec.beta, dev);
    out.report = analyze(expected_counts(out.params, dev, point), out.params, dev, sec);
    out.positive = out.report.r_l > 0.0;
    if (!out.positive) out.reason = "no feasible point with positive rate";
    return out;
}

struct SweepRow {
    double distance_km = 0.0;
    OptimizeResult result;
    bool monotonicity_flag = false;  // rate rose by > 2% vs previous distance
};

// Batch driver over distances. Results should be nonincreasing in distance;
// a later distance beating an earlier one by > 2% means that earlier search
// failed, so a backward repair pass re-evaluates the better parameters there
// before flagging what remains.
inline std::vector<SweepRow> sweep(const std::vector<double>& distances, const DeviceParams& dev,
                                   const SecurityParams& sec, const OptimizationSpec& spec) {
    std::vector<SweepRow> rows;
    rows.reserve(distances.size());
    for (double d : distances) {
        SweepRow row;
        row.distance_km = d;
        row.result = optimize(d, dev, sec, spec);
        rows.push_back(std::move(row));
    }
    for (int i = static_cast<int>(rows.size()) - 2; i >= 0; --i) {
        const auto& next = rows[static_cast<std::size_t>(i) + 1];
        auto& cur = rows[static_cast<std::size_t>(i)];
        if (next.result.report.r_l > cur.result.report.r_l) {
            const ChannelPoint point(cur.distance_km, spec.beta, dev);
            ProtocolParams cand = next.result.params;
            const KeyRateReport rep = analyze(expected_counts(cand, dev, point), cand, dev, sec);
            if (rep.r_l > cur.result.report.r_l) {
                cur.result.params = cand;
                cur.result.report = rep;
                cur.result.positive = rep.r_l > 0.0;
            }
        }
    }
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double prev = rows[i - 1].result.report.r_l;
        if (rows[i].result.report.r_l > prev * 1.02 && rows[i].result.report.r_l > 0.0)
            rows[i].monotonicity_flag = true;
    }
    return rows;
}

}  // namespace rfiqkd
