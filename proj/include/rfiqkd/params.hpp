#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace rfiqkd {

enum class Basis : int { X = 0, Y = 1, Z = 2 };
enum class Intensity : int { Mu = 0, Nu = 1, Omega = 2 };

constexpr std::array<Basis, 3> kAllBases{Basis::X, Basis::Y, Basis::Z};
constexpr std::array<Intensity, 3> kAllIntensities{Intensity::Mu, Intensity::Nu,
                                                   Intensity::Omega};

inline const char* to_string(Basis b) {
    switch (b) {
        case Basis::X: return "X";
        case Basis::Y: return "Y";
        default: return "Z";
    }
}

inline const char* to_string(Intensity k) {
    switch (k) {
        case Intensity::Mu: return "mu";
        case Intensity::Nu: return "nu";
        default: return "omega";
    }
}

inline double db_to_linear(double db) { return std::pow(10.0, -db / 10.0); }

// Which measurement path carries the time-bin post-selection loss.
enum class SiftApplies { XyOnly, Both, ZOnly };

// Fixed device constants: fiber, receiver paths, detectors, error correction.
struct DeviceParams {
    double alpha_db_per_km = 0.2;
    double eta_z_db = 10.0;
    double eta_xy_db = 12.0;
    double sift_db = 3.0;
    SiftApplies sift_applies = SiftApplies::XyOnly;
    double e0 = 0.01;      // intrinsic misalignment error probability per round
    double e_d = 8e-6;     // dark-count probability per detector per gate
    double eta_det = 0.15;
    double f_ec = 1.16;

    void validate() const {
        if (!(e0 >= 0.0 && e0 < 0.5)) throw std::invalid_argument("device.e0 must be in [0, 0.5)");
        if (!(e_d >= 0.0 && e_d < 1.0)) throw std::invalid_argument("device.e_d must be in [0, 1)");
        if (!(eta_det > 0.0 && eta_det <= 1.0))
            throw std::invalid_argument("device.eta_det must be in (0, 1]");
        if (!(f_ec >= 1.0)) throw std::invalid_argument("device.f_ec must be >= 1");
        if (!(alpha_db_per_km >= 0.0)) throw std::invalid_argument("device.alpha_db_per_km must be >= 0");
        if (!(eta_z_db >= 0.0)) throw std::invalid_argument("device.eta_z_db must be >= 0");
        if (!(eta_xy_db >= 0.0)) throw std::invalid_argument("device.eta_xy_db must be >= 0");
        if (!(sift_db >= 0.0)) throw std::invalid_argument("device.sift_db must be >= 0");
    }
};

// Source and basis-choice settings for one run: three intensities (omega is
// the vacuum decoy, fixed to 0 in the reference configuration), their
// selection probabilities, the shared Z-basis probability and the pulse count.
struct ProtocolParams {
    double mu = 0.58;
    double nu = 0.27;
    double omega = 0.0;
    double p_mu = 0.52;
    double p_nu = 0.36;
    double p_omega = 0.12;
    double p_z = 0.90;
    double n_pulses = 1e11;

    double intensity(Intensity k) const {
        switch (k) {
            case Intensity::Mu: return mu;
            case Intensity::Nu: return nu;
            default: return omega;
        }
    }
    double intensity_prob(Intensity k) const {
        switch (k) {
            case Intensity::Mu: return p_mu;
            case Intensity::Nu: return p_nu;
            default: return p_omega;
        }
    }
    double p_x() const { return (1.0 - p_z) / 2.0; }
    double p_y() const { return p_x(); }
    double basis_prob(Basis b) const { return b == Basis::Z ? p_z : p_x(); }

    void validate() const {
        if (!(mu > nu && nu > omega && omega >= 0.0))
            throw std::invalid_argument("protocol intensities must satisfy mu > nu > omega >= 0");
        if (p_mu < 0.0 || p_nu < 0.0 || p_omega < 0.0)
            throw std::invalid_argument("protocol intensity probabilities must be >= 0");
        if (std::fabs(p_mu + p_nu + p_omega - 1.0) > 1e-9)
            throw std::invalid_argument("protocol intensity probabilities must sum to 1 within 1e-9");
        if (!(p_z > 0.0 && p_z < 1.0)) throw std::invalid_argument("protocol.p_z must be in (0, 1)");
        if (!(n_pulses >= 1.0)) throw std::invalid_argument("protocol.n_pulses must be >= 1");
    }
};

struct ProbNormalization {
    bool adjusted = false;
    double original_sum = 1.0;
};

// Published parameter tables round their probability vectors; accept drift up
// to 0.02, renormalize, and report the adjustment. Larger drift is an error.
inline ProbNormalization renormalize_intensity_probs(ProtocolParams& p) {
    const double sum = p.p_mu + p.p_nu + p.p_omega;
    ProbNormalization out;
    out.original_sum = sum;
    if (std::fabs(sum - 1.0) > 0.02)
        throw std::invalid_argument("protocol intensity probabilities sum to " +
                                    std::to_string(sum) + ", off the simplex by more than 0.02");
    if (std::fabs(sum - 1.0) > 1e-9) {
        p.p_mu /= sum;
        p.p_nu /= sum;
        p.p_omega /= sum;
        out.adjusted = true;
    }
    return out;
}

// Composable failure-probability budget; n_pe = 18 for the standard scheme
// (valid + error counts, three intensities, three event classes).
struct SecurityParams {
    double eps_ec = 1e-10;
    double eps_pa = 1e-10;
    double eps_bar = 1e-10;
    double eps_pe = 1e-10;
    int n_pe = 18;

    void validate() const {
        for (double e : {eps_ec, eps_pa, eps_bar, eps_pe})
            if (!(e > 0.0 && e <= 1.0))
                throw std::invalid_argument("security epsilons must be in (0, 1]");
        if (n_pe < 1) throw std::invalid_argument("security.n_pe must be >= 1");
    }
};

inline double epsilon_total(const SecurityParams& sec) {
    return sec.eps_ec + sec.eps_pa + sec.eps_bar + static_cast<double>(sec.n_pe) * sec.eps_pe;
}

// Probability that the source emits an n-photon state, averaged over the
// intensity choice: tau_n = sum_k p_k e^{-k} k^n / n!.
inline double tau(int n, const ProtocolParams& proto) {
    double out = 0.0;
    for (Intensity ik : kAllIntensities) {
        const double k = proto.intensity(ik);
        const double pk = proto.intensity_prob(ik);
        if (pk == 0.0) continue;
        if (k == 0.0) {
            if (n == 0) out += pk;
        } else {
            out += pk * std::exp(n * std::log(k) - std::lgamma(n + 1.0) - k);
        }
    }
    return out;
}

}  // namespace rfiqkd
