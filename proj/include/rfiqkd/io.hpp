#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rfiqkd/counts.hpp"
#include "rfiqkd/montecarlo.hpp"
#include "rfiqkd/optimizer.hpp"
#include "rfiqkd/params.hpp"
#include "rfiqkd/security.hpp"

namespace rfiqkd {

// Malformed configuration; carries the offending key for diagnostics.
struct ScenarioError : std::runtime_error {
    std::string key;
    ScenarioError(std::string k, const std::string& msg)
        : std::runtime_error("scenario key '" + k + "': " + msg), key(std::move(k)) {}
};

struct CountsFormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// error count exceeding valid count in a row; mapped to its own exit code
struct CountsConsistencyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Scenario {
    DeviceParams device;
    SecurityParams security;
    bool optimize_mode = false;
    ProtocolParams protocol;  // valid when !optimize_mode
    OptimizationSpec optimizer;
    std::vector<double> distances;
    DriftSchedule drift;
    std::vector<std::string> warnings;
};

namespace detail_io {

using nlohmann::json;

inline double require_number(const json& j, const std::string& scope, const char* key) {
    if (!j.contains(key)) throw ScenarioError(scope + "." + key, "missing");
    if (!j.at(key).is_number()) throw ScenarioError(scope + "." + key, "must be a number");
    return j.at(key).get<double>();
}

inline double number_or(const json& j, const std::string& scope, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw ScenarioError(scope + "." + key, "must be a number");
    return j.at(key).get<double>();
}

}  // namespace detail_io

inline Scenario parse_scenario(const nlohmann::json& j) {
    using detail_io::number_or;
    using detail_io::require_number;
    Scenario sc;

    if (!j.contains("device") || !j.at("device").is_object())
        throw ScenarioError("device", "missing or not an object");
    const auto& d = j.at("device");
    sc.device.alpha_db_per_km = require_number(d, "device", "alpha_db_per_km");
    sc.device.eta_z_db = require_number(d, "device", "eta_z_db");
    sc.device.eta_xy_db = require_number(d, "device", "eta_xy_db");
    sc.device.sift_db = number_or(d, "device", "sift_db", 3.0);
    sc.device.e0 = require_number(d, "device", "e0");
    sc.device.e_d = require_number(d, "device", "e_d");
    sc.device.eta_det = require_number(d, "device", "eta_det");
    sc.device.f_ec = require_number(d, "device", "f_ec");
    if (d.contains("sift_applies")) {
        const std::string s = d.at("sift_applies").get<std::string>();
        if (s == "xy_only") sc.device.sift_applies = SiftApplies::XyOnly;
        else if (s == "both") sc.device.sift_applies = SiftApplies::Both;
        else if (s == "z_only") sc.device.sift_applies = SiftApplies::ZOnly;
        else throw ScenarioError("device.sift_applies", "must be xy_only, both or z_only");
    }
    try {
        sc.device.validate();
    } catch (const std::invalid_argument& e) {
        throw ScenarioError("device", e.what());
    }

    if (!j.contains("security") || !j.at("security").is_object())
        throw ScenarioError("security", "missing or not an object");
    const auto& s = j.at("security");
    sc.security.eps_ec = require_number(s, "security", "eps_ec");
    sc.security.eps_pa = require_number(s, "security", "eps_pa");
    sc.security.eps_bar = require_number(s, "security", "eps_bar");
    sc.security.eps_pe = require_number(s, "security", "eps_pe");
    sc.security.n_pe = static_cast<int>(number_or(s, "security", "n_pe", 18));
    try {
        sc.security.validate();
    } catch (const std::invalid_argument& e) {
        throw ScenarioError("security", e.what());
    }

    if (!j.contains("protocol")) throw ScenarioError("protocol", "missing");
    if (j.at("protocol").is_string()) {
        if (j.at("protocol").get<std::string>() != "optimize")
            throw ScenarioError("protocol", "string form must be \"optimize\"");
        sc.optimize_mode = true;
        if (!j.contains("optimizer") || !j.at("optimizer").is_object())
            throw ScenarioError("optimizer", "required when protocol is \"optimize\"");
        const auto& o = j.at("optimizer");
        sc.optimizer.n_pulses = require_number(o, "optimizer", "n_pulses");
        sc.optimizer.seed = static_cast<std::uint64_t>(number_or(o, "optimizer", "seed", 1));
        sc.optimizer.budget = static_cast<int>(number_or(o, "optimizer", "budget", 6000));
        if (sc.optimizer.n_pulses < 1.0) throw ScenarioError("optimizer.n_pulses", "must be >= 1");
    } else if (j.at("protocol").is_object()) {
        const auto& p = j.at("protocol");
        sc.protocol.mu = require_number(p, "protocol", "mu");
        sc.protocol.nu = require_number(p, "protocol", "nu");
        sc.protocol.omega = number_or(p, "protocol", "omega", 0.0);
        sc.protocol.p_mu = require_number(p, "protocol", "p_mu");
        sc.protocol.p_nu = require_number(p, "protocol", "p_nu");
        sc.protocol.p_omega = require_number(p, "protocol", "p_omega");
        sc.protocol.p_z = require_number(p, "protocol", "p_z");
        sc.protocol.n_pulses = require_number(p, "protocol", "n_pulses");
        try {
            const ProbNormalization norm = renormalize_intensity_probs(sc.protocol);
            if (norm.adjusted) {
                std::ostringstream os;
                os << "intensity probabilities renormalized from sum " << norm.original_sum;
                sc.warnings.push_back(os.str());
            }
            sc.protocol.validate();
        } catch (const std::invalid_argument& e) {
            throw ScenarioError("protocol", e.what());
        }
    } else {
        throw ScenarioError("protocol", "must be an object or \"optimize\"");
    }

    if (!j.contains("channel") || !j.at("channel").is_object())
        throw ScenarioError("channel", "missing or not an object");
    const auto& c = j.at("channel");
    if (c.contains("distances")) {
        if (!c.at("distances").is_array() || c.at("distances").empty())
            throw ScenarioError("channel.distances", "must be a nonempty array");
        for (const auto& v : c.at("distances")) {
            if (!v.is_number()) throw ScenarioError("channel.distances", "entries must be numbers");
            sc.distances.push_back(v.get<double>());
        }
    } else if (c.contains("distance_km")) {
        sc.distances.push_back(require_number(c, "channel", "distance_km"));
    } else {
        throw ScenarioError("channel.distance_km", "missing (or provide channel.distances)");
    }
    for (double L : sc.distances)
        if (L < 0.0) throw ScenarioError("channel.distance_km", "must be >= 0");

    if (c.contains("drift")) {
        const auto& dr = c.at("drift");
        if (!dr.is_object()) throw ScenarioError("channel.drift", "must be an object");
        const std::string kind = dr.contains("kind") ? dr.at("kind").get<std::string>() : "constant";
        if (kind == "constant") sc.drift.kind = DriftKind::Constant;
        else if (kind == "linear") sc.drift.kind = DriftKind::Linear;
        else if (kind == "sinusoidal") sc.drift.kind = DriftKind::Sinusoidal;
        else throw ScenarioError("channel.drift.kind", "must be constant, linear or sinusoidal");
        sc.drift.beta0 = number_or(dr, "channel.drift", "beta0", 0.0);
        sc.drift.rate = number_or(dr, "channel.drift", "rate", 0.0);
        sc.drift.amplitude = number_or(dr, "channel.drift", "amplitude", 0.0);
        sc.drift.period = number_or(dr, "channel.drift", "period", 1.0);
        if (sc.drift.kind == DriftKind::Sinusoidal && sc.drift.period <= 0.0)
            throw ScenarioError("channel.drift.period", "must be > 0");
    } else {
        sc.drift.kind = DriftKind::Constant;
        sc.drift.beta0 = number_or(c, "channel", "beta", 0.0);
    }
    return sc;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("file", "cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ScenarioError("json", e.what());
    }
    return parse_scenario(j);
}

// ---- counts CSV (header: alice_basis,bob_basis,intensity,valid,error) ----

inline std::string format_count(double v) {
    if (v == std::floor(v) && std::fabs(v) < 1e15) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.0f", v);
        return buf;
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_counts_csv(std::ostream& out, const SiftedCounts& c) {
    out << "alice_basis,bob_basis,intensity,valid,error\n";
    for (Basis a : kAllBases)
        for (Basis b : kAllBases)
            for (Intensity k : kAllIntensities) {
                const double n = c.valid_at(a, b, k);
                const double m = c.error_at(a, b, k);
                if (n == 0.0 && m == 0.0) continue;
                out << to_string(a) << ',' << to_string(b) << ',' << to_string(k) << ','
                    << format_count(n) << ',' << format_count(m) << '\n';
            }
}

inline std::optional<Basis> parse_basis(const std::string& s) {
    if (s == "X") return Basis::X;
    if (s == "Y") return Basis::Y;
    if (s == "Z") return Basis::Z;
    return std::nullopt;
}

inline std::optional<Intensity> parse_intensity(const std::string& s) {
    if (s == "mu") return Intensity::Mu;
    if (s == "nu") return Intensity::Nu;
    if (s == "omega") return Intensity::Omega;
    return std::nullopt;
}

inline SiftedCounts read_counts_csv(std::istream& in, bool integer_counts = false) {
    std::string line;
    if (!std::getline(in, line)) throw CountsFormatError("empty counts file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "alice_basis,bob_basis,intensity,valid,error")
        throw CountsFormatError("bad header: expected alice_basis,bob_basis,intensity,valid,error");
    SiftedCounts counts;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string fa, fb, fk, fn, fm;
        if (!std::getline(ls, fa, ',') || !std::getline(ls, fb, ',') ||
            !std::getline(ls, fk, ',') || !std::getline(ls, fn, ',') || !std::getline(ls, fm))
            throw CountsFormatError("line " + std::to_string(lineno) + ": expected 5 fields");
        const auto a = parse_basis(fa), b = parse_basis(fb);
        const auto k = parse_intensity(fk);
        if (!a || !b) throw CountsFormatError("line " + std::to_string(lineno) + ": bad basis");
        if (!k) throw CountsFormatError("line " + std::to_string(lineno) + ": bad intensity");
        double n = 0.0, m = 0.0;
        try {
            n = std::stod(fn);
            m = std::stod(fm);
        } catch (const std::exception&) {
            throw CountsFormatError("line " + std::to_string(lineno) + ": bad count value");
        }
        if (n < 0.0 || m < 0.0)
            throw CountsFormatError("line " + std::to_string(lineno) + ": negative count");
        if (m > n)
            throw CountsConsistencyError("line " + std::to_string(lineno) +
                                         ": error count exceeds valid count");
        if (integer_counts && (n != std::floor(n) || m != std::floor(m)))
            throw CountsFormatError("line " + std::to_string(lineno) +
                                    ": non-integer count with --integer-counts");
        counts.valid_at(*a, *b, *k) += n;
        counts.error_at(*a, *b, *k) += m;
    }
    return counts;
}

// ---- report JSON ----

inline nlohmann::json bounds_to_json(const PhotonNumberBounds& b) {
    return {{"s0_l", b.s0_l},     {"s1_l", b.s1_l},         {"s1_u", b.s1_u},
            {"t0_l", b.t0_l},     {"t1_l", b.t1_l},         {"t1_u", b.t1_u},
            {"s1_est_hi", b.s1_est_hi}, {"s1_est_lo", b.s1_est_lo},
            {"t1_est_hi", b.t1_est_hi}, {"t1_est_lo", b.t1_est_lo},
            {"s_total", b.s_total}, {"m_total", b.m_total}};
}

inline nlohmann::json report_to_json(const KeyRateReport& r) {
    nlohmann::json j;
    j["r_l"] = r.r_l;
    j["r_l_unclamped"] = r.r_l_unclamped;
    j["R_l"] = r.R_l;
    j["I_E_u"] = r.I_E_u;
    j["e_zz1_u"] = r.e_zz1_u;
    j["s_zz0_l"] = r.s_zz0_l;
    j["s_zz1_l"] = r.s_zz1_l;
    j["s_zz1_u"] = r.s_zz1_u;
    j["s_zz"] = r.s_zz;
    j["s_zz_mu"] = r.s_zz_mu;
    j["m_zz"] = r.m_zz;
    j["E_zz_obs"] = r.E_zz_obs;
    j["E_zz_u"] = r.E_zz_u;
    j["eps_total"] = r.eps_total;
    j["g1"] = {{"lo", r.g1.lo}, {"hi", r.g1.hi}};
    j["g2"] = {{"lo", r.g2.lo}, {"hi", r.g2.hi}};
    j["c_diagnostic"] = r.c_diagnostic;
    for (const auto& cr : r.classes) {
        nlohmann::json cj = bounds_to_json(cr.bounds);
        cj["valid"] = cr.counts.valid;
        cj["error"] = cr.counts.error;
        j["classes"][to_string(cr.cls)] = std::move(cj);
    }
    j["warnings"] = r.warnings;
    j["reasons"] = r.reasons;
    j["inputs"]["protocol"] = {{"mu", r.proto.mu},       {"nu", r.proto.nu},
                               {"omega", r.proto.omega}, {"p_mu", r.proto.p_mu},
                               {"p_nu", r.proto.p_nu},   {"p_omega", r.proto.p_omega},
                               {"p_z", r.proto.p_z},     {"n_pulses", r.proto.n_pulses}};
    j["inputs"]["device"] = {{"alpha_db_per_km", r.dev.alpha_db_per_km},
                             {"eta_z_db", r.dev.eta_z_db},
                             {"eta_xy_db", r.dev.eta_xy_db},
                             {"sift_db", r.dev.sift_db},
                             {"e0", r.dev.e0},
                             {"e_d", r.dev.e_d},
                             {"eta_det", r.dev.eta_det},
                             {"f_ec", r.dev.f_ec}};
    j["inputs"]["security"] = {{"eps_ec", r.sec.eps_ec},
                               {"eps_pa", r.sec.eps_pa},
                               {"eps_bar", r.sec.eps_bar},
                               {"eps_pe", r.sec.eps_pe},
                               {"n_pe", r.sec.n_pe}};
    return j;
}

inline const char* kRateTableHeader =
    "distance_km,r_l,R_l,I_E_u,mu,nu,p_mu,p_nu,p_omega,p_z,e_zz1_u,s_zz1_l,s_zz0_l,eps_total";

inline void write_rate_row(std::ostream& out, double distance, const ProtocolParams& p,
                           const KeyRateReport& r) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                  distance, r.r_l, r.R_l, r.I_E_u, p.mu, p.nu, p.p_mu, p.p_nu, p.p_omega, p.p_z,
                  r.e_zz1_u, r.s_zz1_l, r.s_zz0_l, r.eps_total);
    out << buf << '\n';
}

}  // namespace rfiqkd
