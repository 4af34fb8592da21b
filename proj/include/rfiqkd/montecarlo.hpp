#pragma once

#include <cmath>
#include <cstdint>
#include <future>
#include <numbers>
#include <random>
#include <thread>
#include <vector>

#include "rfiqkd/channel.hpp"
#include "rfiqkd/counts.hpp"
#include "rfiqkd/params.hpp"

namespace rfiqkd {

enum class DriftKind { Constant, Linear, Sinusoidal };

// Reference-frame angle as a function of the pulse index.
struct DriftSchedule {
    DriftKind kind = DriftKind::Constant;
    double beta0 = 0.0;
    double rate = 0.0;       // radians per pulse (linear)
    double amplitude = 0.0;  // radians (sinusoidal)
    double period = 1.0;     // pulses per cycle (sinusoidal)

    double beta_at(std::uint64_t i) const {
        switch (kind) {
            case DriftKind::Constant: return beta0;
            case DriftKind::Linear: return beta0 + rate * static_cast<double>(i);
            default:
                return beta0 + amplitude * std::sin(2.0 * std::numbers::pi *
                                                    static_cast<double>(i) / period);
        }
    }
};

struct RunSpec {
    std::uint64_t pulses = 0;
    std::uint64_t seed = 1;
    std::uint64_t block_size = 1 << 20;
};

// Ideal single-photon R after uniform averaging of beta over a window of
// width delta: R = (sin(delta/2) / (delta/2))^2, independent of the offset.
inline double drift_r_degradation(double window) {
    if (window <= 0.0) return 1.0;
    const double x = window / 2.0;
    const double s = std::sin(x) / x;
    return s * s;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stream derivation rule: the engine of block b is seeded from
// splitmix64(seed XOR splitmix64(b)), so merging blocks in any order and on
// any number of threads reproduces the single-threaded result.
inline std::mt19937_64 block_engine(std::uint64_t seed, std::uint64_t block_index) {
    return std::mt19937_64(splitmix64(seed ^ splitmix64(block_index + 1)));
}

inline double uniform01(std::mt19937_64& rng) {
    // 53-bit mantissa draw, engine-portable
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Inversion sampling; intensities are <= ~1 so the walk is short. p0 is the
// precomputed exp(-mean).
inline int poisson_draw(double mean, double p0, std::mt19937_64& rng) {
    if (mean <= 0.0) return 0;
    const double u = uniform01(rng);
    double p = p0;
    double cum = p;
    int n = 0;
    while (u > cum && n < 500) {
        ++n;
        p *= mean / n;
        cum += p;
    }
    return n;
}

struct BlockContext {
    ProtocolParams proto;
    DeviceParams dev;
    ChannelPoint point;
    DriftSchedule drift;
    std::array<double, 3> exp_neg_k{};
};

inline void run_block(const BlockContext& ctx, std::uint64_t seed, std::uint64_t block_index,
                      std::uint64_t first_pulse, std::uint64_t count, SiftedCounts& out) {
    std::mt19937_64 rng = block_engine(seed, block_index);
    const ProtocolParams& pr = ctx.proto;
    const double p_x = pr.p_x();

    for (std::uint64_t j = 0; j < count; ++j) {
        const std::uint64_t pulse = first_pulse + j;

        const double uk = uniform01(rng);
        Intensity ik;
        if (uk < pr.p_mu) ik = Intensity::Mu;
        else if (uk < pr.p_mu + pr.p_nu) ik = Intensity::Nu;
        else ik = Intensity::Omega;

        const double ua = uniform01(rng);
        Basis a_basis = ua < pr.p_z ? Basis::Z : (ua < pr.p_z + p_x ? Basis::X : Basis::Y);
        const int a_bit = uniform01(rng) < 0.5 ? 0 : 1;

        const double ub = uniform01(rng);
        Basis b_basis = ub < pr.p_z ? Basis::Z : (ub < pr.p_z + p_x ? Basis::X : Basis::Y);

        // Z-vs-XY crossings are discarded at sifting; X-vs-Y crossings stay.
        if ((a_basis == Basis::Z) != (b_basis == Basis::Z)) continue;

        const double beta = ctx.drift.beta_at(pulse);
        const double eta = ctx.point.eta_for(b_basis);
        const double c0 = overlap({a_basis, a_bit}, {b_basis, 0}, beta);

        const int n = poisson_draw(pr.intensity(ik), ctx.exp_neg_k[static_cast<int>(ik)], rng);
        bool hit0 = false, hit1 = false;
        for (int ph = 0; ph < n; ++ph) {
            const double u = uniform01(rng);
            if (u < eta * c0) hit0 = true;
            else if (u < eta) hit1 = true;
        }
        bool click0 = hit0, click1 = hit1;
        if (!click0 && ctx.dev.e_d > 0.0) click0 = uniform01(rng) < ctx.dev.e_d;
        if (!click1 && ctx.dev.e_d > 0.0) click1 = uniform01(rng) < ctx.dev.e_d;
        if (!click0 && !click1) continue;

        int b_bit;
        if (click0 && click1) b_bit = uniform01(rng) < 0.5 ? 0 : 1;
        else b_bit = click0 ? 0 : 1;

        // Intrinsic optical-system bit flip.
        if (ctx.dev.e0 > 0.0 && uniform01(rng) < ctx.dev.e0) b_bit ^= 1;

        out.valid_at(a_basis, b_basis, ik) += 1.0;
        if (b_bit != a_bit) out.error_at(a_basis, b_basis, ik) += 1.0;
    }
}

}  // namespace detail

// Pulse-level simulation of the same physical model the analytic formulas
// describe: Poisson photon number, per-photon routing to Bob's two detectors
// through the overlap at beta(i), dark counts, fair-coin double-click
// resolution, intrinsic misalignment flips. Blocks are independent RNG
// streams; the result depends only on (seed, block_size).
inline SiftedCounts run(const ProtocolParams& proto, const DeviceParams& dev, double distance_km,
                        const DriftSchedule& drift, const RunSpec& spec) {
    proto.validate();
    dev.validate();

    detail::BlockContext ctx{proto, dev, ChannelPoint(distance_km, 0.0, dev), drift, {}};
    // beta comes from the schedule per pulse; the point carries transmittances.
    for (Intensity ik : kAllIntensities)
        ctx.exp_neg_k[static_cast<int>(ik)] = std::exp(-proto.intensity(ik));

    const std::uint64_t bs = std::max<std::uint64_t>(1, spec.block_size);
    const std::uint64_t n_blocks = spec.pulses == 0 ? 0 : (spec.pulses + bs - 1) / bs;

    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    const unsigned n_workers = static_cast<unsigned>(
        std::min<std::uint64_t>(n_blocks == 0 ? 1 : n_blocks, hw));

    std::vector<std::future<SiftedCounts>> futures;
    futures.reserve(n_workers);
    for (unsigned w = 0; w < n_workers; ++w) {
        futures.push_back(std::async(std::launch::async, [&, w]() {
            SiftedCounts local;
            for (std::uint64_t b = w; b < n_blocks; b += n_workers) {
                const std::uint64_t first = b * bs;
                const std::uint64_t count = std::min(bs, spec.pulses - first);
                detail::run_block(ctx, spec.seed, b, first, count, local);
            }
            return local;
        }));
    }
    SiftedCounts total;
    for (auto& f : futures) total += f.get();
    return total;
}

}  // namespace rfiqkd
