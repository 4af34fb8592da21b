#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "rfiqkd/counts.hpp"
#include "rfiqkd/params.hpp"

namespace rfiqkd {

// The three event classes estimated separately: ZZ key rounds, the pooled
// X_A X_B - Y_A Y_B combination (G1, where a YY match counts as an "error" so
// the sign flip is realized by the pooling itself), and the pooled
// X_A Y_B + Y_A X_B combination (G2).
enum class EventClass : int { ZZ = 0, G1 = 1, G2 = 2 };
constexpr std::array<EventClass, 3> kAllClasses{EventClass::ZZ, EventClass::G1, EventClass::G2};

inline const char* to_string(EventClass c) {
    switch (c) {
        case EventClass::ZZ: return "ZZ";
        case EventClass::G1: return "G1";
        default: return "G2";
    }
}

struct ClassCounts {
    std::array<double, 3> valid{};  // indexed by Intensity
    std::array<double, 3> error{};
    double valid_total() const { return valid[0] + valid[1] + valid[2]; }
    double error_total() const { return error[0] + error[1] + error[2]; }
};

inline ClassCounts class_counts(const SiftedCounts& c, EventClass cls) {
    ClassCounts out;
    for (Intensity ik : kAllIntensities) {
        const int k = static_cast<int>(ik);
        switch (cls) {
            case EventClass::ZZ:
                out.valid[k] = c.valid_at(Basis::Z, Basis::Z, ik);
                out.error[k] = c.error_at(Basis::Z, Basis::Z, ik);
                break;
            case EventClass::G1: {
                const double nxx = c.valid_at(Basis::X, Basis::X, ik);
                const double nyy = c.valid_at(Basis::Y, Basis::Y, ik);
                out.valid[k] = nxx + nyy;
                out.error[k] = c.error_at(Basis::X, Basis::X, ik) +
                               (nyy - c.error_at(Basis::Y, Basis::Y, ik));
                break;
            }
            case EventClass::G2:
                out.valid[k] = c.valid_at(Basis::X, Basis::Y, ik) + c.valid_at(Basis::Y, Basis::X, ik);
                out.error[k] = c.error_at(Basis::X, Basis::Y, ik) + c.error_at(Basis::Y, Basis::X, ik);
                break;
        }
    }
    return out;
}

// Pooled G1/G2 estimation assumes symmetric X/Y sampling; flag clear imbalance.
inline bool pooling_asymmetric(const SiftedCounts& c, double tol = 0.05) {
    double nxx = 0.0, nyy = 0.0;
    for (Intensity ik : kAllIntensities) {
        nxx += c.valid_at(Basis::X, Basis::X, ik);
        nyy += c.valid_at(Basis::Y, Basis::Y, ik);
    }
    if (nyy <= 0.0) return nxx > 0.0;
    return std::fabs(nxx / nyy - 1.0) > tol;
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

inline double hoeffding_delta(double class_total, double eps_pe) {
    if (eps_pe >= 1.0 || class_total <= 0.0) return 0.0;
    return std::sqrt(class_total / 2.0 * std::log(1.0 / eps_pe));
}

// Hoeffding fluctuation interval around an observed count. The normalization
// uses the class total valid count for every per-intensity count of either
// stream: each sifted round of the class is one bounded trial.
inline Interval fluctuate(double count, double class_total, double eps_pe) {
    const double d = hoeffding_delta(class_total, eps_pe);
    return {std::max(0.0, count - d), count + d};
}

struct DecoyInfeasible : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require_decoy_feasible(const ProtocolParams& p) {
    if (p.mu * (p.nu - p.omega) - p.nu * p.nu + p.omega * p.omega <= 0.0)
        throw DecoyInfeasible("decoy infeasible: mu (nu - omega) - nu^2 + omega^2 must be > 0");
    if (p.p_mu <= 0.0 || p.p_nu <= 0.0 || p.p_omega <= 0.0)
        throw DecoyInfeasible("decoy infeasible: all three intensity probabilities must be > 0");
}

// Lower bound on vacuum events of one stream:
// s0_l = tau0 [nu e^w/p_w N^L_w - w e^v/p_v N^U_v] / (nu - w), clamped at 0.
inline double vacuum_lower(const std::array<double, 3>& stream, double class_total,
                           const ProtocolParams& p, double eps_pe) {
    require_decoy_feasible(p);
    const double t0 = tau(0, p);
    const double nwL = fluctuate(stream[2], class_total, eps_pe).lo;
    const double nvU = fluctuate(stream[1], class_total, eps_pe).hi;
    const double v = t0 *
                     (p.nu * std::exp(p.omega) / p.p_omega * nwL -
                      p.omega * std::exp(p.nu) / p.p_nu * nvU) /
                     (p.nu - p.omega);
    return std::max(0.0, v);
}

// The single-photon upper-bound functional
// tau1 [e^v/p_v N_v - e^w/p_w N_w] / (nu - w) with the fluctuation direction
// selectable. up = true gives the conservative upper bound (N^U_v, N^L_w);
// up = false evaluates the same linear estimator at the opposite fluctuation
// corner, used for the correlator-interval construction.
inline double single_photon_estimator(const std::array<double, 3>& stream, double class_total,
                                      const ProtocolParams& p, double eps_pe, bool up) {
    require_decoy_feasible(p);
    const double t1 = tau(1, p);
    const Interval v = fluctuate(stream[1], class_total, eps_pe);
    const Interval w = fluctuate(stream[2], class_total, eps_pe);
    const double nv = up ? v.hi : v.lo;
    const double nw = up ? w.lo : w.hi;
    const double est = t1 *
                       (std::exp(p.nu) / p.p_nu * nv - std::exp(p.omega) / p.p_omega * nw) /
                       (p.nu - p.omega);
    return std::max(0.0, est);
}

// Lower and upper bounds on single-photon events of one stream. The lower
// bound takes N^L_v, N^U_w, N^U_mu and the vacuum lower bound plug-in; both
// are clamped to [0, stream total] and ordered.
inline Interval single_photon_bounds(const std::array<double, 3>& stream, double class_total,
                                     const ProtocolParams& p, double eps_pe,
                                     double vacuum_lower_plug) {
    require_decoy_feasible(p);
    const double t0 = tau(0, p);
    const double t1 = tau(1, p);
    const double den = p.mu * (p.nu - p.omega) - p.nu * p.nu + p.omega * p.omega;

    const double up = single_photon_estimator(stream, class_total, p, eps_pe, true);

    const double nvL = fluctuate(stream[1], class_total, eps_pe).lo;
    const double nwU = fluctuate(stream[2], class_total, eps_pe).hi;
    const double nmU = fluctuate(stream[0], class_total, eps_pe).hi;
    const double n0_over_tau0 = t0 > 0.0 ? vacuum_lower_plug / t0 : 0.0;
    double lo = t1 * p.mu / den *
                (std::exp(p.nu) / p.p_nu * nvL - std::exp(p.omega) / p.p_omega * nwU -
                 (p.nu * p.nu - p.omega * p.omega) / (p.mu * p.mu) *
                     (std::exp(p.mu) / p.p_mu * nmU - n0_over_tau0));

    const double total = stream[0] + stream[1] + stream[2];
    const double hi = std::clamp(up, 0.0, total);
    lo = std::clamp(lo, 0.0, total);
    return {std::min(lo, hi), hi};
}

// All decoy-estimated quantities for one event class. The valid stream gives
// s-bounds, the error stream t-bounds; t1_u is additionally capped by s1_u
// since error events are a subset of valid events. The *_est_hi / *_est_lo
// fields carry the raw upper-bound functional at the two fluctuation corners,
// without the total-count clamps: the correlator intervals divide matched
// estimator pairs, and clamping only one side of such a ratio would bias it.
struct PhotonNumberBounds {
    double s0_l = 0.0;
    double s1_l = 0.0;
    double s1_u = 0.0;
    double t0_l = 0.0;
    double t1_l = 0.0;
    double t1_u = 0.0;
    double s1_est_hi = 0.0;
    double s1_est_lo = 0.0;
    double t1_est_hi = 0.0;
    double t1_est_lo = 0.0;
    double s_total = 0.0;
    double m_total = 0.0;
};

inline PhotonNumberBounds estimate_class(const ClassCounts& cc, const ProtocolParams& p,
                                         double eps_pe) {
    PhotonNumberBounds b;
    b.s_total = cc.valid_total();
    b.m_total = cc.error_total();
    const double total = b.s_total;  // Hoeffding trials for both streams

    b.s0_l = vacuum_lower(cc.valid, total, p, eps_pe);
    const Interval s1 = single_photon_bounds(cc.valid, total, p, eps_pe, b.s0_l);
    b.s1_l = s1.lo;
    b.s1_u = s1.hi;

    b.t0_l = vacuum_lower(cc.error, total, p, eps_pe);
    Interval t1 = single_photon_bounds(cc.error, total, p, eps_pe, b.t0_l);
    t1.hi = std::min(std::min(t1.hi, cc.error_total()), b.s1_u);
    t1.lo = std::min(t1.lo, t1.hi);
    b.t1_l = t1.lo;
    b.t1_u = t1.hi;

    b.s1_est_hi = single_photon_estimator(cc.valid, total, p, eps_pe, true);
    b.s1_est_lo = single_photon_estimator(cc.valid, total, p, eps_pe, false);
    b.t1_est_hi = single_photon_estimator(cc.error, total, p, eps_pe, true);
    b.t1_est_lo = single_photon_estimator(cc.error, total, p, eps_pe, false);
    return b;
}

}  // namespace rfiqkd
