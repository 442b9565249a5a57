#include "modr/ensemble.hpp"

#include <cmath>
#include <stdexcept>

namespace modr {

double InhomProfile::sigma() const {
    return fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
}

void InhomProfile::validate() const {
    if (!(fwhm > 0.0))
        throw std::invalid_argument("InhomProfile requires fwhm > 0");
}

void RateParams::validate() const {
    if (!(t1 > 0.0) || !(pump_rate_per_watt > 0.0))
        throw std::invalid_argument("RateParams requires t1 > 0 and pump_rate_per_watt > 0");
}

namespace {

// Acklam's rational approximation of the probit function, polished with one
// Halley step against erfc. Good to ~1e-15 relative across (0,1).
double acklam_probit(double p) {
    static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                    -2.759285104469687e+02, 1.383577518672690e+02,
                                    -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                    -1.556989798598866e+02, 6.680131188771972e+01,
                                    -1.328068155288572e+01};
    static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                    -2.400758277161838e+00, -2.549732539343734e+00,
                                    4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                    2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double q, r, x;
    if (p < plow) {
        q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        q = p - 0.5;
        r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // Halley refinement: e = Phi(x) - p
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    return x - u / (1.0 + x * u / 2.0);
}

} // namespace

double inverse_normal_cdf(double p) {
    if (!(p > 0.0) || !(p < 1.0))
        throw std::domain_error("inverse_normal_cdf requires p in (0,1)");
    return acklam_probit(p);
}

std::vector<SpinPacket> discretize(const InhomProfile& profile, std::size_t n,
                                   double gamma_h) {
    profile.validate();
    if (n < 2)
        throw std::invalid_argument("discretize requires n >= 2 packets");
    if (!(gamma_h > 0.0))
        throw std::invalid_argument("discretize requires gamma_h > 0");

    const double sig = profile.sigma();
    std::vector<SpinPacket> packets(n);
    const double w = 1.0 / static_cast<double>(n);
    // Fill the lower half and mirror it, so the set is symmetric to the bit.
    for (std::size_t k = 0; k < n / 2; ++k) {
        const double p = (static_cast<double>(k) + 0.5) / static_cast<double>(n);
        const double x = sig * inverse_normal_cdf(p);
        packets[k] = {x, w, 1.0, gamma_h};
        packets[n - 1 - k] = {-x, w, 1.0, gamma_h};
    }
    if (n % 2 == 1)
        packets[n / 2] = {0.0, w, 1.0, gamma_h};
    return packets;
}

std::complex<double> self_energy(const EnsembleCoupling& coupling, double delta) {
    if (coupling.packets.empty())
        throw std::invalid_argument("self_energy requires a non-empty packet list");
    const double g2 = coupling.g_total * coupling.g_total;
    std::complex<double> acc{0.0, 0.0};
    for (const auto& pk : coupling.packets) {
        const double gk2 = g2 * pk.weight * pk.pop_diff;
        acc += gk2 / std::complex<double>(pk.gamma_h / 2.0, delta - pk.detuning);
    }
    return acc;
}

double dispersive_pull(const EnsembleCoupling& coupling, double delta) {
    return -self_energy(coupling, delta).imag();
}

double lorentzian_peak1(double delta, double gamma) {
    const double hg = gamma / 2.0;
    return hg * hg / (delta * delta + hg * hg);
}

double steady_state_saturation(const RateParams& params, const Quantity& p_drive,
                               double detuning, double gamma_h, double thermal_diff) {
    params.validate();
    const double p = require(p_drive, Dimension::Power, "steady_state_saturation");
    if (p < 0.0)
        throw std::invalid_argument("drive power must be >= 0");
    const double x = (p / params.p_sat_eff()) * lorentzian_peak1(detuning, gamma_h);
    return thermal_diff / (1.0 + x);
}

AmResponse am_population_response(const RateParams& params, const Quantity& p0,
                                  double depth, double f_mod, double detuning,
                                  double gamma_h, double thermal_diff) {
    params.validate();
    if (depth < 0.0 || depth > 1.0)
        throw std::invalid_argument("modulation depth must lie in [0,1]");
    if (!(f_mod > 0.0))
        throw std::invalid_argument("modulation frequency must be > 0");
    const double p = require(p0, Dimension::Power, "am_population_response");
    const double x = (p / params.p_sat_eff()) * lorentzian_peak1(detuning, gamma_h);
    // ds/dln p = -thermal_diff * x / (1+x)^2
    const double ds_dlnp = -thermal_diff * x / ((1.0 + x) * (1.0 + x));
    const double tau_eff = params.t1 / (1.0 + x);
    const std::complex<double> lag(1.0, 2.0 * M_PI * f_mod * tau_eff);
    return {depth * ds_dlnp / lag, tau_eff};
}

} // namespace modr
