#pragma once

// Device profiles and measured operating points of the reference experiment,
// used as regression anchors across the test suites.

#include <array>

#include "rfiqkd/params.hpp"

namespace refpoints {

inline rfiqkd::DeviceParams apd() {
    rfiqkd::DeviceParams d;
    d.alpha_db_per_km = 0.2;
    d.eta_z_db = 10.0;
    d.eta_xy_db = 12.0;
    d.sift_db = 3.0;
    d.sift_applies = rfiqkd::SiftApplies::XyOnly;
    d.e0 = 0.01;
    d.e_d = 8e-6;
    d.eta_det = 0.15;
    d.f_ec = 1.16;
    return d;
}

inline rfiqkd::DeviceParams snspd() {
    rfiqkd::DeviceParams d = apd();
    d.e0 = 0.002;
    d.e_d = 1e-8;
    d.eta_det = 0.55;
    return d;
}

struct OperatingPoint {
    const char* detector;  // "APD" or "SNSPD"
    double distance_km;
    // measured results
    double rate;    // r^L
    double r_stat;  // R^L
    double e_zz1_u;
    double q_zz1_l;
    double e_zz;
    double q_zz;
    // protocol parameters of the run
    double p_z, mu, nu;
    double p_mu, p_nu, p_omega;
};

inline const std::array<OperatingPoint, 7>& operating_points() {
    static const std::array<OperatingPoint, 7> rows{{
        {"APD", 50, 7.69e-5, 0.59, 0.019, 2.26e7, 0.0140, 3.06e7, 0.90, 0.58, 0.27, 0.52, 0.36, 0.11},
        {"APD", 75, 1.50e-5, 0.64, 0.030, 5.44e6, 0.0215, 8.64e6, 0.86, 0.58, 0.28, 0.36, 0.48, 0.16},
        {"APD", 100, 2.24e-6, 0.78, 0.058, 1.26e6, 0.0390, 2.68e6, 0.74, 0.56, 0.28, 0.30, 0.46, 0.25},
        {"SNSPD", 100, 4.05e-5, 0.66, 0.0045, 9.04e6, 0.0047, 1.70e7, 0.90, 0.58, 0.26, 0.46, 0.41, 0.13},
        {"SNSPD", 125, 7.59e-6, 0.74, 0.0057, 1.40e6, 0.0037, 2.07e6, 0.87, 0.59, 0.26, 0.35, 0.48, 0.17},
        {"SNSPD", 150, 2.97e-6, 0.86, 0.023, 5.08e5, 0.020, 5.20e5, 0.83, 0.59, 0.27, 0.33, 0.46, 0.21},
        {"SNSPD", 175, 1.64e-7, 0.14, 0.0104, 3.42e5, 0.0095, 3.00e5, 0.69, 0.59, 0.23, 0.31, 0.45, 0.24},
    }};
    return rows;
}

inline rfiqkd::DeviceParams device_for(const OperatingPoint& pt) {
    return pt.detector[0] == 'A' ? apd() : snspd();
}

inline rfiqkd::ProtocolParams protocol_for(const OperatingPoint& pt, double n_pulses = 1e11) {
    rfiqkd::ProtocolParams p;
    p.mu = pt.mu;
    p.nu = pt.nu;
    p.omega = 0.0;
    p.p_mu = pt.p_mu;
    p.p_nu = pt.p_nu;
    p.p_omega = pt.p_omega;
    p.p_z = pt.p_z;
    p.n_pulses = n_pulses;
    rfiqkd::renormalize_intensity_probs(p);
    p.validate();
    return p;
}

}  // namespace refpoints
