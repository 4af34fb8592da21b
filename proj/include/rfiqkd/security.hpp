#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "rfiqkd/counts.hpp"
#include "rfiqkd/decoy.hpp"
#include "rfiqkd/params.hpp"

namespace rfiqkd {

// Worst-case interval for one pooled correlator combination, in [-2, 2].
struct CorrelatorInterval {
    double lo = -2.0;
    double hi = 2.0;
};

// Interval for G = <X_A X_B - Y_A Y_B> (or the G2 analog) restricted to
// single-photon rounds, from the decoy bounds of the class. Both ends map the
// same linear single-photon estimator applied to the error and valid streams,
// evaluated at the two fluctuation corners; with expectation-valued counts
// and eps_PE = 1 the interval collapses onto the single-photon combination,
// which keeps the composed key rate frame-independent.
inline CorrelatorInterval correlator_interval(const PhotonNumberBounds& b) {
    if (b.s1_est_lo <= 0.0 || b.s1_est_hi <= 0.0) return {-2.0, 2.0};
    const double f_hi = std::min(1.0, std::min(b.t1_est_hi, b.s1_est_hi) / b.s1_est_hi);
    double f_lo = std::clamp(b.t1_est_lo / b.s1_est_lo, 0.0, 1.0);
    f_lo = std::min(f_lo, f_hi);
    CorrelatorInterval g;
    g.lo = std::max(-2.0, 2.0 * (1.0 - 2.0 * f_hi));
    g.hi = std::min(2.0, 2.0 * (1.0 - 2.0 * f_lo));
    return g;
}

inline double square_toward_zero(const CorrelatorInterval& g) {
    if (g.lo <= 0.0 && 0.0 <= g.hi) return 0.0;
    return std::min(g.lo * g.lo, g.hi * g.hi);
}

// R lower bound: R = 1/4 [<X_A X_B - Y_A Y_B>^2 + <X_A Y_B + Y_A X_B>^2]
// minimized over the two intervals.
inline double r_lower(const CorrelatorInterval& g1, const CorrelatorInterval& g2) {
    return std::min(1.0, 0.25 * (square_toward_zero(g1) + square_toward_zero(g2)));
}

// Original-RFI witness C, kept as a diagnostic observable only.
inline double c_value(double xx, double xy, double yx, double yy) {
    return xx * xx + xy * xy + yx * yx + yy * yy;
}

inline double binary_entropy(double x) {
    if (x < 0.0 || x > 1.0) throw std::domain_error("binary_entropy argument outside [0, 1]");
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

// Upper bound on the per-bit information leaked to Eve:
// I_E <= (1 - e) h[(1 + sqrt(R) - e) / (2 (1 - e))] + e,
// with the entropy argument clamped to [1/2, 1].
inline double leaked_info(double e_zz1_u, double r_l) {
    const double e = std::clamp(e_zz1_u, 0.0, 0.5);
    const double sr = std::sqrt(std::clamp(r_l, 0.0, 1.0));
    double arg = 1.0;
    if (sr <= 1.0 - e) arg = (1.0 + sr - e) / (2.0 * (1.0 - e));
    arg = std::clamp(arg, 0.5, 1.0);
    return std::clamp((1.0 - e) * binary_entropy(arg) + e, 0.0, 1.0);
}

struct KeyRate {
    double clamped = 0.0;
    double unclamped = 0.0;
};

// Finite-key secure rate per pulse:
// r = (1/N)[s0 + s1 (1 - I_E) - s_zz f h(E_zz) - log2(2/e_EC) - 2 log2(2/e_PA)
//           - 7 sqrt(s_zz log2(2/e_bar)) - 30 log2(N + 1)].
inline KeyRate key_rate(double s_zz0_l, double s_zz1_l, double i_e_u, double s_zz, double e_zz_u,
                        const DeviceParams& dev, const SecurityParams& sec, double n_pulses) {
    const double leak_ec = s_zz * dev.f_ec * binary_entropy(std::clamp(e_zz_u, 0.0, 1.0));
    const double raw = (s_zz0_l + s_zz1_l * (1.0 - i_e_u) - leak_ec - std::log2(2.0 / sec.eps_ec) -
                        2.0 * std::log2(2.0 / sec.eps_pa) -
                        7.0 * std::sqrt(s_zz * std::log2(2.0 / sec.eps_bar)) -
                        30.0 * std::log2(n_pulses + 1.0)) /
                       n_pulses;
    return {std::max(0.0, raw), raw};
}

struct ClassReport {
    EventClass cls = EventClass::ZZ;
    ClassCounts counts;
    PhotonNumberBounds bounds;
};

struct KeyRateReport {
    double r_l = 0.0;
    double r_l_unclamped = 0.0;
    double R_l = 0.0;
    double I_E_u = 1.0;
    double e_zz1_u = 0.5;
    double s_zz0_l = 0.0;
    double s_zz1_l = 0.0;
    double s_zz1_u = 0.0;
    double s_zz = 0.0;     // ZZ valid events pooled over intensities
    double s_zz_mu = 0.0;  // signal-intensity-only convention, reported alongside
    double m_zz = 0.0;
    double E_zz_obs = 0.5;
    double E_zz_u = 1.0;
    double eps_total = 0.0;
    CorrelatorInterval g1, g2;
    double c_diagnostic = 0.0;
    std::array<ClassReport, 3> classes;
    std::vector<std::string> warnings;
    std::vector<std::string> reasons;

    ProtocolParams proto;
    DeviceParams dev;
    SecurityParams sec;
};

// Observed pooled correlator of one basis pair, 1 - 2 m/n over all
// intensities. Used only for the C diagnostic.
inline double observed_correlator(const SiftedCounts& c, Basis a, Basis b) {
    double n = 0.0, m = 0.0;
    for (Intensity ik : kAllIntensities) {
        n += c.valid_at(a, b, ik);
        m += c.error_at(a, b, ik);
    }
    if (n <= 0.0) return 0.0;
    return 1.0 - 2.0 * m / n;
}

// Full pipeline: class pooling -> decoy bounds on both streams -> single-photon
// Z error bound -> correlator intervals -> R_l -> I_E -> fluctuated observed
// Z QBER -> finite-key rate.
inline KeyRateReport analyze(const SiftedCounts& counts, const ProtocolParams& proto,
                             const DeviceParams& dev, const SecurityParams& sec) {
    proto.validate();
    dev.validate();
    sec.validate();
    require_decoy_feasible(proto);

    KeyRateReport rep;
    rep.proto = proto;
    rep.dev = dev;
    rep.sec = sec;
    rep.eps_total = epsilon_total(sec);

    if (pooling_asymmetric(counts))
        rep.warnings.push_back("pooling asymmetry: |n_XX/n_YY - 1| > 0.05");

    for (EventClass cls : kAllClasses) {
        ClassReport& cr = rep.classes[static_cast<int>(cls)];
        cr.cls = cls;
        cr.counts = class_counts(counts, cls);
        cr.bounds = estimate_class(cr.counts, proto, sec.eps_pe);
    }

    const PhotonNumberBounds& zz = rep.classes[0].bounds;
    rep.s_zz = zz.s_total;
    rep.m_zz = zz.m_total;
    rep.s_zz_mu = rep.classes[0].counts.valid[static_cast<int>(Intensity::Mu)];
    rep.s_zz0_l = zz.s0_l;
    rep.s_zz1_l = zz.s1_l;
    rep.s_zz1_u = zz.s1_u;

    // Single-photon Z error upper bound, conservative pairing.
    rep.e_zz1_u = zz.s1_l > 0.0 ? std::min(0.5, zz.t1_u / zz.s1_l) : 0.5;

    rep.g1 = correlator_interval(rep.classes[1].bounds);
    rep.g2 = correlator_interval(rep.classes[2].bounds);
    rep.R_l = r_lower(rep.g1, rep.g2);
    rep.I_E_u = leaked_info(rep.e_zz1_u, rep.R_l);

    rep.c_diagnostic = c_value(observed_correlator(counts, Basis::X, Basis::X),
                               observed_correlator(counts, Basis::X, Basis::Y),
                               observed_correlator(counts, Basis::Y, Basis::X),
                               observed_correlator(counts, Basis::Y, Basis::Y));

    if (rep.s_zz > 0.0) {
        rep.E_zz_obs = rep.m_zz / rep.s_zz;
        rep.E_zz_u = std::min(1.0, fluctuate(rep.m_zz, rep.s_zz, sec.eps_pe).hi / rep.s_zz);
    } else {
        rep.E_zz_obs = 0.5;
        rep.E_zz_u = 1.0;
        rep.reasons.push_back("no ZZ events");
    }
    if (rep.classes[1].bounds.s_total <= 0.0 && rep.classes[2].bounds.s_total <= 0.0)
        rep.reasons.push_back("no X/Y events");

    const KeyRate kr = key_rate(rep.s_zz0_l, rep.s_zz1_l, rep.I_E_u, rep.s_zz, rep.E_zz_u, dev,
                                sec, proto.n_pulses);
    rep.r_l = kr.clamped;
    rep.r_l_unclamped = kr.unclamped;
    if (rep.r_l == 0.0 && rep.reasons.empty()) rep.reasons.push_back("overhead exceeds extractable key");
    return rep;
}

}  // namespace rfiqkd
