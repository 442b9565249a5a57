#include "modr/cavity.hpp"

#include "modr/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace modr {

void CavityMode::validate() const {
    if (!(kappa_int > 0.0))
        throw std::invalid_argument("CavityMode requires kappa_int > 0");
    if (kappa_ext < 0.0)
        throw std::invalid_argument("CavityMode requires kappa_ext >= 0");
}

std::string_view polarization_name(Polarization p) {
    switch (p) {
    case Polarization::TE: return "TE";
    case Polarization::TM: return "TM";
    case Polarization::MW: return "MW";
    }
    return "?";
}

Polarization polarization_from_name(std::string_view name) {
    if (name == "TE") return Polarization::TE;
    if (name == "TM") return Polarization::TM;
    if (name == "MW") return Polarization::MW;
    throw std::invalid_argument("unknown polarization '" + std::string(name) + "'");
}

double linewidth_to_q(double nu_c, double kappa_int) {
    if (!(nu_c > 0.0) || !(kappa_int > 0.0))
        throw std::invalid_argument("linewidth_to_q requires positive inputs");
    return nu_c / kappa_int;
}

std::complex<double> reflection(const CavityMode& mode, const EnsembleCoupling& coupling,
                                double ensemble_offset, double delta_laser) {
    const std::complex<double> denom =
        std::complex<double>(mode.kappa_total() / 2.0, delta_laser) +
        self_energy(coupling, delta_laser - ensemble_offset);
    return 1.0 - mode.kappa_ext / denom;
}

std::complex<double> reflection_bare(const CavityMode& mode, double delta_laser) {
    const std::complex<double> denom(mode.kappa_total() / 2.0, delta_laser);
    return 1.0 - mode.kappa_ext / denom;
}

double coupling_contrast(const CavityMode& mode) {
    const double r0 = std::abs(reflection_bare(mode, 0.0));
    return 1.0 - r0 * r0;
}

// ---------------------------------------------------------------------------
// Secular (arrowhead characteristic function) solver.
//
// Roots of  f(w) = w - wc - sum_i c_i / (w - d_i),  d ascending, c_i > 0.
// One root per pole gap plus one below and one above; f is strictly
// increasing on every interval. Each root is solved in the shifted variable
// t = w - d_origin with the nearer enclosing pole as origin, so the gap to
// that pole carries full relative precision (this keeps eigenvector weights
// and photon fractions accurate even for roots pinned tightly to a pole).
// ---------------------------------------------------------------------------
namespace {

struct Secular {
    double omega_c = 0.0;
    std::vector<double> poles; // ascending
    std::vector<double> c;     // per-pole coupling strength squared
    double coupling_norm = 0.0;
};

struct Root {
    double lambda = 0.0;        // in the same frame as poles
    std::size_t origin = 0;     // pole index the gap is measured from
    double gap = 0.0;           // lambda - poles[origin]
};

double phi(const Secular& s, std::size_t origin, double t, double* dphi = nullptr) {
    double f = s.poles[origin] + t - s.omega_c;
    double df = 1.0;
    for (std::size_t i = 0; i < s.poles.size(); ++i) {
        const double d = t - (s.poles[i] - s.poles[origin]);
        const double q = s.c[i] / d;
        f -= q;
        df += q / d;
    }
    if (dphi)
        *dphi = df;
    return f;
}

// Safeguarded Newton on the bracket (lo, hi), 0 excluded; phi increases in t.
// lo/hi are in t-coordinates relative to `origin`.
double solve_bracketed(const Secular& s, std::size_t origin, double lo, double hi,
                       double t0, int interval_tag) {
    double t = std::clamp(t0, lo + 0.25 * (hi - lo), hi - 0.25 * (hi - lo));
    for (int it = 0; it < 200; ++it) {
        double df = 0.0;
        const double f = phi(s, origin, t, &df);
        if (f == 0.0)
            return t;
        if (f > 0.0)
            hi = t;
        else
            lo = t;
        double step = -f / df;
        double tn = t + step;
        if (!(tn > lo) || !(tn < hi))
            tn = 0.5 * (lo + hi); // Newton left the bracket: bisect
        const double scale = std::max(std::abs(lo), std::abs(hi));
        if (std::abs(hi - lo) <= 16.0 * std::numeric_limits<double>::epsilon() * scale)
            return 0.5 * (lo + hi);
        if (tn == t)
            return t;
        t = tn;
    }
    std::ostringstream msg;
    msg << "secular root failed to converge in interval " << interval_tag
        << " (bracket [" << lo << ", " << hi << "], origin pole " << s.poles[origin] << ")";
    throw numeric_error(msg.str());
}

// interval k = -1 .. N-1: (-inf,d0), (d_k, d_{k+1}), (d_{N-1}, +inf)
Root solve_interval(const Secular& s, std::ptrdiff_t k) {
    const std::size_t n = s.poles.size();
    // outer-root search span: the coupling norm bounds the repulsion, with a
    // relative floor so the bracket expansion always makes progress
    const double span =
        s.coupling_norm +
        1e-12 * std::max(std::abs(s.poles.front()), std::abs(s.poles.back())) +
        std::numeric_limits<double>::min();
    Root r;
    if (k == -1) {
        // below the lowest pole; phi(t->0-) = +inf
        r.origin = 0;
        double lo = std::min(s.omega_c - s.poles.front(), 0.0) - 1.0000001 * span;
        while (phi(s, r.origin, lo) >= 0.0)
            lo *= 2.0;
        const double start = (s.omega_c < s.poles.front())
                                 ? (s.omega_c - s.poles.front())
                                 : -std::sqrt(s.c.front() + std::numeric_limits<double>::min());
        r.gap = solve_bracketed(s, r.origin, lo, 0.0, start, -1);
    } else if (static_cast<std::size_t>(k) == n - 1) {
        // above the highest pole; phi(t->0+) = -inf
        r.origin = n - 1;
        double hi = std::max(s.omega_c - s.poles.back(), 0.0) + 1.0000001 * span;
        while (phi(s, r.origin, hi) <= 0.0)
            hi *= 2.0;
        const double start = (s.omega_c > s.poles.back())
                                 ? (s.omega_c - s.poles.back())
                                 : std::sqrt(s.c.back() + std::numeric_limits<double>::min());
        r.gap = solve_bracketed(s, r.origin, 0.0, hi, start, static_cast<int>(k));
    } else {
        const std::size_t kk = static_cast<std::size_t>(k);
        const double mid = 0.5 * (s.poles[kk] + s.poles[kk + 1]);
        const double fmid = phi(s, kk, mid - s.poles[kk]);
        if (fmid >= 0.0) {
            r.origin = kk; // root in (d_k, mid]
            r.gap = solve_bracketed(s, r.origin, 0.0, mid - s.poles[kk],
                                    0.5 * (mid - s.poles[kk]), static_cast<int>(k));
        } else {
            r.origin = kk + 1; // root in (mid, d_{k+1})
            r.gap = solve_bracketed(s, r.origin, mid - s.poles[kk + 1], 0.0,
                                    0.5 * (mid - s.poles[kk + 1]), static_cast<int>(k));
        }
    }
    r.lambda = s.poles[r.origin] + r.gap;
    return r;
}

// Eigenvector weight on the cavity coordinate, using exact pole gaps.
double photon_fraction_at(const Secular& s, const Root& r) {
    double sum = 0.0;
    for (std::size_t i = 0; i < s.poles.size(); ++i) {
        const double d = r.gap - (s.poles[i] - s.poles[r.origin]);
        sum += s.c[i] / (d * d);
    }
    return 1.0 / (1.0 + sum);
}

double branch_linewidth_at(const Secular& s, const Root& r, double kappa_total,
                           const std::vector<double>& gamma) {
    double sum = 0.0;
    double gsum = 0.0;
    for (std::size_t i = 0; i < s.poles.size(); ++i) {
        const double d = r.gap - (s.poles[i] - s.poles[r.origin]);
        const double wgt = s.c[i] / (d * d);
        sum += wgt;
        gsum += wgt * gamma[i];
    }
    return (kappa_total + gsum) / (1.0 + sum);
}

struct SecularSetup {
    Secular sec;
    std::vector<double> gamma;           // per retained pole
    std::vector<const SpinPacket*> dark; // packets with zero weight/coupling
};

SecularSetup build_secular(const EnsembleCoupling& coupling, double ensemble_offset) {
    if (coupling.packets.empty())
        throw std::invalid_argument("polariton solve requires at least one packet");
    SecularSetup out;
    out.sec.omega_c = 0.0; // cavity frame
    const double g2 = coupling.g_total * coupling.g_total;
    out.sec.poles.reserve(coupling.packets.size());
    for (const auto& pk : coupling.packets) {
        const double ci = g2 * pk.weight * pk.pop_diff;
        if (ci > 0.0) {
            out.sec.poles.push_back(ensemble_offset + pk.detuning);
            out.sec.c.push_back(ci);
            out.gamma.push_back(pk.gamma_h);
        } else {
            out.dark.push_back(&pk);
        }
    }
    // packets come detuning-sorted from discretize; re-sort defensively
    if (!std::is_sorted(out.sec.poles.begin(), out.sec.poles.end())) {
        std::vector<std::size_t> order(out.sec.poles.size());
        for (std::size_t i = 0; i < order.size(); ++i)
            order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return out.sec.poles[a] < out.sec.poles[b];
        });
        SecularSetup sorted = out;
        for (std::size_t i = 0; i < order.size(); ++i) {
            sorted.sec.poles[i] = out.sec.poles[order[i]];
            sorted.sec.c[i] = out.sec.c[order[i]];
            sorted.gamma[i] = out.gamma[order[i]];
        }
        out = std::move(sorted);
    }
    double csum = 0.0;
    for (double ci : out.sec.c)
        csum += ci;
    out.sec.coupling_norm = std::sqrt(csum);
    return out;
}

} // namespace

PolaritonBranches polariton_frequencies(const CavityMode& mode,
                                        const EnsembleCoupling& coupling,
                                        double ensemble_offset) {
    mode.validate();
    PolaritonBranches out;
    SecularSetup setup = build_secular(coupling, ensemble_offset);
    const auto& sec = setup.sec;

    if (sec.poles.empty()) {
        // fully dark ensemble: bare cavity plus the bare packet lines
        out.branches.push_back({mode.nu_c, mode.kappa_total(), 1.0});
    } else {
        const std::size_t n = sec.poles.size();
        out.branches.reserve(n + 1 + setup.dark.size());
        for (std::ptrdiff_t k = -1; k < static_cast<std::ptrdiff_t>(n); ++k) {
            const Root r = solve_interval(sec, k);
            PolaritonBranch b;
            b.frequency = mode.nu_c + r.lambda;
            b.photon_fraction = photon_fraction_at(sec, r);
            b.linewidth = branch_linewidth_at(sec, r, mode.kappa_total(), setup.gamma);
            out.branches.push_back(b);
        }
    }
    for (const SpinPacket* pk : setup.dark)
        out.branches.push_back({mode.nu_c + ensemble_offset + pk->detuning, pk->gamma_h, 0.0});
    std::sort(out.branches.begin(), out.branches.end(),
              [](const PolaritonBranch& a, const PolaritonBranch& b) {
                  return a.frequency < b.frequency;
              });
    return out;
}

LockedBranch locked_branch(const CavityMode& mode, const EnsembleCoupling& coupling,
                           double ensemble_offset) {
    mode.validate();
    SecularSetup setup = build_secular(coupling, ensemble_offset);
    const auto& sec = setup.sec;

    LockedBranch out;
    const double g2 = coupling.g_total * coupling.g_total;
    if (sec.poles.empty()) {
        out.frequency = mode.nu_c;
        out.photon_fraction = 1.0;
        double slope = 0.0;
        for (const auto& pk : coupling.packets) {
            const double d = -(ensemble_offset + pk.detuning);
            slope += pk.weight * pk.pop_diff / d;
        }
        out.dfreq_dg2 = slope;
        return out;
    }

    // the interval containing the bare cavity frequency (0 in this frame)
    const auto it = std::upper_bound(sec.poles.begin(), sec.poles.end(), 0.0);
    const std::ptrdiff_t k = (it - sec.poles.begin()) - 1;
    const Root r = solve_interval(sec, k);
    out.frequency = mode.nu_c + r.lambda;
    out.photon_fraction = photon_fraction_at(sec, r);

    double num = 0.0, den = 1.0;
    for (std::size_t i = 0; i < sec.poles.size(); ++i) {
        const double d = r.gap - (sec.poles[i] - sec.poles[r.origin]);
        num += (sec.c[i] / g2) / d;
        den += sec.c[i] / (d * d);
    }
    out.dfreq_dg2 = num / den;
    return out;
}

ScanResult anticrossing_map(const CavityMode& mode, const ZeemanSystem& sys,
                            Transition transition, const EnsembleCoupling& coupling,
                            const std::vector<double>& field_grid,
                            const std::vector<double>& laser_offset_grid,
                            const Quantity& temperature, const OpticalDrive& drive) {
    mode.validate();
    if (field_grid.empty() || laser_offset_grid.empty())
        throw std::invalid_argument("anticrossing_map requires non-empty, sorted grids");
    if (!std::is_sorted(field_grid.begin(), field_grid.end()) ||
        !std::is_sorted(laser_offset_grid.begin(), laser_offset_grid.end()))
        throw std::invalid_argument("anticrossing_map grids must be sorted ascending");

    ScanResult res;
    res.axis1 = {"field", "T", field_grid};
    res.axis2 = Axis{"laser_detuning", "Hz", laser_offset_grid};
    res.value_names = {"reflectance"};
    res.value_units = {""};
    res.values.assign(1, std::vector<double>(res.grid_size(), 0.0));

    if (laser_offset_grid.size() >= 2) {
        const double step = laser_offset_grid[1] - laser_offset_grid[0];
        if (step > mode.kappa_total() / 3.0)
            res.warnings.push_back("laser grid step exceeds kappa/3; dips may be unresolved");
    }

    const std::size_t nlaser = laser_offset_grid.size();
    auto& plane = res.values[0];
    parallel_for(field_grid.size(), [&](std::size_t bi) {
        const Quantity field = tesla(field_grid[bi]);
        const double center = transition_frequency(sys, transition, field);
        const double offset = center - mode.nu_c;
        const double s_th = thermal_populations(sys, field, temperature).population_difference();

        EnsembleCoupling local = coupling;
        for (auto& pk : local.packets) {
            // pump sits on the mode; packet sees it detuned by (nu_c - center) - delta_k
            const double det = -offset - pk.detuning;
            pk.pop_diff = steady_state_saturation(drive.rates, drive.power, det,
                                                  pk.gamma_h, s_th);
        }
        for (std::size_t li = 0; li < nlaser; ++li) {
            const auto r = reflection(mode, local, offset, laser_offset_grid[li]);
            plane[bi * nlaser + li] = std::norm(r);
        }
    });
    return res;
}

ScanResult microwave_pull_sweep(const CavityMode& mw_mode, const ZeemanSystem& sys,
                                const EnsembleCoupling& coupling,
                                const std::vector<double>& field_grid,
                                const Quantity& temperature) {
    mw_mode.validate();
    if (field_grid.empty())
        throw std::invalid_argument("microwave_pull_sweep requires a non-empty field grid");

    ScanResult res;
    res.axis1 = {"field", "T", field_grid};
    res.value_names = {"mw_detuning", "shift"};
    res.value_units = {"Hz", "Hz"};
    res.values.assign(2, std::vector<double>(field_grid.size(), 0.0));

    parallel_for(field_grid.size(), [&](std::size_t bi) {
        const Quantity field = tesla(field_grid[bi]);
        const double nu12 = transition_frequency(sys, Transition::MW_12, field);
        const double s_th = thermal_populations(sys, field, temperature).population_difference();
        EnsembleCoupling local = coupling;
        for (auto& pk : local.packets)
            pk.pop_diff = s_th;
        res.values[0][bi] = nu12 - mw_mode.nu_c;
        res.values[1][bi] = dispersive_pull(local, mw_mode.nu_c - nu12);
    });
    return res;
}

} // namespace modr
