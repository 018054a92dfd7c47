#pragma once

// Wave-mode lattice K = 2 pi Z^2 \ {0} truncated at |z| <= R, and the noise
// spectrum lambda_k that drives each mode.

#include <cmath>
#include <cstddef>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace fracturb {

struct KolmogorovSpectrum {};
struct PowerLawSpectrum {
    double exponent = 0.0;  ///< lambda = c0 |z|^{-exponent}
};
struct TableSpectrum {
    std::map<int, double> weights;  ///< |z|^2 -> weight (times c0); missing entries are 0
};

using SpectrumKind = std::variant<KolmogorovSpectrum, PowerLawSpectrum, TableSpectrum>;

struct SpectrumConfig {
    SpectrumKind kind = KolmogorovSpectrum{};
    double c0 = 1.0;
    int cutoff = 2;  ///< R: modes kept iff |z| <= R
    double h = 1.0 / 3.0;

    void validate() const {
        if (!(c0 > 0.0) || !std::isfinite(c0)) throw std::invalid_argument("spectrum: c0 must be > 0");
        if (cutoff < 1) throw std::invalid_argument("spectrum: cutoff R must be >= 1");
        if (!(h > 0.0 && h < 1.0)) throw std::invalid_argument("spectrum: H must lie in (0, 1)");
        if (const auto* t = std::get_if<TableSpectrum>(&kind)) {
            for (const auto& [n2, w] : t->weights)
                if (n2 <= 0 || !(w >= 0.0)) throw std::invalid_argument("spectrum: table entries need |z|^2 > 0 and weight >= 0");
        }
    }

    std::string kind_name() const {
        return std::visit(
            [](const auto& k) -> std::string {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, KolmogorovSpectrum>) return "kolmogorov";
                else if constexpr (std::is_same_v<K, PowerLawSpectrum>) return "power_law";
                else return "table";
            },
            kind);
    }

    /// Exponent q with lambda = c0 |z|^q (Kolmogorov: -14/3 + 4H).
    double exponent() const {
        if (std::holds_alternative<KolmogorovSpectrum>(kind)) return -14.0 / 3.0 + 4.0 * h;
        if (const auto* p = std::get_if<PowerLawSpectrum>(&kind)) return -p->exponent;
        throw std::logic_error("spectrum: table spectra have no single exponent");
    }

    /// Noise weight for a lattice point with |z|^2 = norm2; zero beyond the cutoff.
    double lambda(int norm2) const {
        if (norm2 <= 0) throw std::invalid_argument("spectrum: the zero mode is excluded");
        if (norm2 > cutoff * cutoff) return 0.0;
        if (const auto* t = std::get_if<TableSpectrum>(&kind)) {
            const auto it = t->weights.find(norm2);
            return it == t->weights.end() ? 0.0 : c0 * it->second;
        }
        return c0 * std::pow(static_cast<double>(norm2), 0.5 * exponent());
    }
};

/// One lattice mode k = 2 pi z.
struct WaveMode {
    int z1 = 0, z2 = 0;
    double k1 = 0.0, k2 = 0.0;
    double alpha = 0.0;   ///< |k|^2
    double lambda = 0.0;  ///< noise weight
    bool positive_half = false;  ///< z in K+ = {z1 > 0} U {z1 = 0, z2 > 0}

    int norm2() const noexcept { return z1 * z1 + z2 * z2; }
    double k_norm() const noexcept { return std::sqrt(alpha); }
};

inline WaveMode make_mode(int z1, int z2, double lambda) {
    if (z1 == 0 && z2 == 0) throw std::invalid_argument("make_mode: z = 0 is not a wave mode");
    const double two_pi = 2.0 * std::numbers::pi;
    WaveMode m;
    m.z1 = z1;
    m.z2 = z2;
    m.k1 = two_pi * z1;
    m.k2 = two_pi * z2;
    m.alpha = 4.0 * std::numbers::pi * std::numbers::pi * static_cast<double>(z1 * z1 + z2 * z2);
    m.lambda = lambda;
    m.positive_half = z1 > 0 || (z1 == 0 && z2 > 0);
    return m;
}

/// All modes with 0 < |z| <= R in lexicographic (z1, z2) order.
inline std::vector<WaveMode> mode_set(const SpectrumConfig& config) {
    config.validate();
    const int r = config.cutoff;
    std::vector<WaveMode> modes;
    for (int z1 = -r; z1 <= r; ++z1)
        for (int z2 = -r; z2 <= r; ++z2) {
            const int n2 = z1 * z1 + z2 * z2;
            if (n2 == 0 || n2 > r * r) continue;
            modes.push_back(make_mode(z1, z2, config.lambda(n2)));
        }
    return modes;
}

/// The K+ half of a mode set, order preserved.
inline std::vector<WaveMode> positive_half(const std::vector<WaveMode>& modes) {
    std::vector<WaveMode> out;
    for (const auto& m : modes)
        if (m.positive_half) out.push_back(m);
    return out;
}

/// Energy of one Fourier mode, Gamma(2H) H / 2 * lambda_k |k|^{2-4H}.
inline double mode_energy(const WaveMode& mode, double h) {
    if (!(h > 0.0 && h < 1.0)) throw std::invalid_argument("mode_energy: H must lie in (0, 1)");
    return 0.5 * std::tgamma(2.0 * h) * h * mode.lambda * std::pow(mode.k_norm(), 2.0 - 4.0 * h);
}

struct RegularityCheck {
    bool cond1 = false;  ///< sum lambda_k alpha_k^{2g-2H} |k|^{2m} < inf
    bool cond2 = false;  ///< sum lambda_k alpha_k^{-2H} |k|^{2m+2g} < inf  (Holder-in-time variant)
};

/// Summability of lattice sums for the untruncated power law lambda_k = |k|^{-p},
/// alpha_k = |k|^2. A 2-D lattice sum of |k|^q converges iff q < -2.
inline RegularityCheck check_regularity(double p, double h, int m, double gamma) {
    if (m < 0) throw std::invalid_argument("check_regularity: m must be >= 0");
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("check_regularity: gamma must lie in (0, 1)");
    if (!(h > 0.0 && h < 1.0)) throw std::invalid_argument("check_regularity: H must lie in (0, 1)");
    RegularityCheck out;
    out.cond1 = -p + 4.0 * gamma - 4.0 * h + 2.0 * m < -2.0;
    out.cond2 = -p - 4.0 * h + 2.0 * m + 2.0 * gamma < -2.0;
    return out;
}

}  // namespace fracturb
