#pragma once

#include <cmath>
#include <numbers>

#include "rfiqkd/counts.hpp"
#include "rfiqkd/params.hpp"

namespace rfiqkd {

struct StateLabel {
    Basis basis;
    int bit;  // 0 or 1
};

// End-to-end transmittance of one measurement path:
// eta = 10^-(alpha*L + path_db [+ sift_db]) / 10 * eta_det.
inline double transmittance(double distance_km, Basis bob_basis, const DeviceParams& dev) {
    const bool z_path = bob_basis == Basis::Z;
    double db = dev.alpha_db_per_km * distance_km + (z_path ? dev.eta_z_db : dev.eta_xy_db);
    const bool sift = dev.sift_applies == SiftApplies::Both ||
                      (dev.sift_applies == SiftApplies::XyOnly && !z_path) ||
                      (dev.sift_applies == SiftApplies::ZOnly && z_path);
    if (sift) db += dev.sift_db;
    return db_to_linear(db) * dev.eta_det;
}

struct ChannelPoint {
    double distance_km = 0.0;
    double beta = 0.0;  // wrapped to [0, 2pi)
    double eta_total_z = 1.0;
    double eta_total_xy = 1.0;

    ChannelPoint() = default;
    ChannelPoint(double distance, double beta_raw, const DeviceParams& dev)
        : distance_km(distance),
          beta(wrap_angle(beta_raw)),
          eta_total_z(transmittance(distance, Basis::Z, dev)),
          eta_total_xy(transmittance(distance, Basis::X, dev)) {}

    double eta_for(Basis bob_basis) const {
        return bob_basis == Basis::Z ? eta_total_z : eta_total_xy;
    }

    static double wrap_angle(double b) {
        const double two_pi = 2.0 * std::numbers::pi;
        double w = std::fmod(b, two_pi);
        if (w < 0.0) w += two_pi;
        return w;
    }
};

// Conditional probability that Bob's detector for outcome |gamma_j> fires
// given Alice sent |chi_i>, under a frame rotated by beta. Signs are fixed so
// the ideal correlators are <XX> = cos b, <YY> = -cos b, <XY> = <YX> = -sin b,
// which makes the pooled statistic R equal 1 for every beta.
inline double overlap(StateLabel alice, StateLabel bob, double beta) {
    const bool az = alice.basis == Basis::Z;
    const bool bz = bob.basis == Basis::Z;
    if (az && bz) return alice.bit == bob.bit ? 1.0 : 0.0;
    if (az || bz) return 0.5;
    const double sign = (alice.bit ^ bob.bit) ? -1.0 : 1.0;
    if (alice.basis == Basis::X && bob.basis == Basis::X)
        return (1.0 + sign * std::cos(beta)) / 2.0;
    if (alice.basis == Basis::Y && bob.basis == Basis::Y)
        return (1.0 - sign * std::cos(beta)) / 2.0;
    return (1.0 - sign * std::sin(beta)) / 2.0;  // XY and YX
}

// Ideal single-photon correlator <chi_A gamma_B> implied by the overlap table.
inline double ideal_correlator(Basis alice, Basis bob, double beta) {
    double corr = 0.0;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            const double sign = (a ^ b) ? -1.0 : 1.0;
            corr += 0.5 * sign * overlap({alice, a}, {bob, b}, beta);
        }
    return corr;
}

// Probability that the queried detector registers an n-photon round, from the
// two-detector click model with dark probability e_d per detector: a correct
// click, a dark-count click, or the fair-coin share of a double click. The
// joint no-click factor is (1-e_d)^2 (1-eta)^n.
inline double yield_n(int n, double eta, double c, double e_d) {
    const double u = 1.0 - e_d;
    const double no_this = std::pow(1.0 - eta * c, n);
    const double no_other = std::pow(1.0 - eta * (1.0 - c), n);
    const double no_any = std::pow(1.0 - eta, n);
    // 1/2 (1 - u^2 no_any) + u (no_other - no_this)/2, with 1 - u^2 expanded
    // so tiny dark rates do not cancel against 1
    const double dark_any = e_d * (2.0 - e_d);
    const double y =
        0.5 * ((1.0 - no_any) + no_any * dark_any) + 0.5 * u * (no_other - no_this);
    return std::min(1.0, std::max(0.0, y));
}

// Poisson-weighted sum of yield_n over a weak coherent pulse of intensity k,
// in closed form: with a = (1-e_d) e^{-k eta c}, b = (1-e_d) e^{-k eta (1-c)},
// V = (1-a)(1+b)/2.
inline double gain_wcs(double k, double eta, double c, double e_d) {
    const double u = 1.0 - e_d;
    const double a = u * std::exp(-k * eta * c);
    const double b = u * std::exp(-k * eta * (1.0 - c));
    return (1.0 - a) * (1.0 + b) / 2.0;
}

struct PairStat {
    double gain = 0.0;   // Q: probability a round in this basis pair is detected
    double qber = 0.5;   // E: fraction of detections with mismatched bits
    bool zero_gain = false;
};

// Gain and QBER of one (Alice basis, Bob basis) pair at intensity k.
// Q = (V00 + V01 + V10 + V11)/2, E' = (V01 + V10)/(2Q), and the intrinsic
// misalignment error folds in as E = e0 (1 - E') + (1 - e0) E'.
inline PairStat pair_statistics(Basis alice, Basis bob, Intensity ik, const ChannelPoint& point,
                                const DeviceParams& dev, const ProtocolParams& proto) {
    const double k = proto.intensity(ik);
    const double eta = point.eta_for(bob);
    double v[2][2];
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            v[a][b] = gain_wcs(k, eta, overlap({alice, a}, {bob, b}, point.beta), dev.e_d);
    PairStat out;
    out.gain = (v[0][0] + v[0][1] + v[1][0] + v[1][1]) / 2.0;
    if (out.gain <= 0.0) {
        out.gain = 0.0;
        out.qber = 0.5;
        out.zero_gain = true;
        return out;
    }
    const double ep = (v[0][1] + v[1][0]) / (2.0 * out.gain);
    out.qber = dev.e0 * (1.0 - ep) + (1.0 - dev.e0) * ep;
    return out;
}

// Expectation-valued sifted counts: N_{ab,k} = N Pr_a Pr_b Pr_k Q_{ab,k} and
// m = N Pr_a Pr_b Pr_k Q E. Only the five sifted basis pairs are populated.
inline SiftedCounts expected_counts(const ProtocolParams& proto, const DeviceParams& dev,
                                    const ChannelPoint& point) {
    SiftedCounts counts;
    for (const auto& [a, b] : kSiftedPairs) {
        for (Intensity ik : kAllIntensities) {
            const PairStat st = pair_statistics(a, b, ik, point, dev, proto);
            const double base = proto.n_pulses * proto.basis_prob(a) * proto.basis_prob(b) *
                                proto.intensity_prob(ik);
            counts.valid_at(a, b, ik) = base * st.gain;
            counts.error_at(a, b, ik) = base * st.gain * st.qber;
        }
    }
    return counts;
}

}  // namespace rfiqkd
