#pragma once

#include <array>
#include <cmath>
#include <cstddef>

#include "rfiqkd/params.hpp"

namespace rfiqkd {

// Sifted detection tallies indexed by (Alice basis, Bob basis, intensity).
// Values are real so the same type carries analytic expectations and
// integer-valued measured or simulated data. Rounds where exactly one side
// chose Z are discarded at sifting and never appear here; X-vs-Y crossings
// are kept (they feed the G2 event class).
struct SiftedCounts {
    std::array<std::array<std::array<double, 3>, 3>, 3> valid{};
    std::array<std::array<std::array<double, 3>, 3>, 3> error{};

    double& valid_at(Basis a, Basis b, Intensity k) {
        return valid[static_cast<int>(a)][static_cast<int>(b)][static_cast<int>(k)];
    }
    double valid_at(Basis a, Basis b, Intensity k) const {
        return valid[static_cast<int>(a)][static_cast<int>(b)][static_cast<int>(k)];
    }
    double& error_at(Basis a, Basis b, Intensity k) {
        return error[static_cast<int>(a)][static_cast<int>(b)][static_cast<int>(k)];
    }
    double error_at(Basis a, Basis b, Intensity k) const {
        return error[static_cast<int>(a)][static_cast<int>(b)][static_cast<int>(k)];
    }

    SiftedCounts& operator+=(const SiftedCounts& o) {
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                for (int k = 0; k < 3; ++k) {
                    valid[a][b][k] += o.valid[a][b][k];
                    error[a][b][k] += o.error[a][b][k];
                }
        return *this;
    }

    double total_valid() const {
        double s = 0.0;
        for (const auto& pa : valid)
            for (const auto& pb : pa)
                for (double v : pb) s += v;
        return s;
    }

    bool is_integral() const {
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                for (int k = 0; k < 3; ++k) {
                    if (valid[a][b][k] != std::floor(valid[a][b][k])) return false;
                    if (error[a][b][k] != std::floor(error[a][b][k])) return false;
                }
        return true;
    }
};

// Basis pairs that survive sifting.
constexpr std::array<std::pair<Basis, Basis>, 5> kSiftedPairs{{
    {Basis::Z, Basis::Z},
    {Basis::X, Basis::X},
    {Basis::X, Basis::Y},
    {Basis::Y, Basis::X},
    {Basis::Y, Basis::Y},
}};

}  // namespace rfiqkd
