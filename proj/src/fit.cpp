#include "modr/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace modr {

double FitResult::param(std::string_view name) const {
    for (std::size_t i = 0; i < param_names.size(); ++i)
        if (param_names[i] == name)
            return params[i];
    throw std::invalid_argument("no fit parameter named '" + std::string(name) + "'");
}

double FitResult::stderr_of(std::string_view name) const {
    for (std::size_t i = 0; i < param_names.size(); ++i)
        if (param_names[i] == name)
            return i < stderrs.size() ? stderrs[i] : 0.0;
    throw std::invalid_argument("no fit parameter named '" + std::string(name) + "'");
}

namespace {

// Gaussian elimination with partial pivoting; returns false on (near-)singular.
bool solve_linear(std::vector<double>& a, std::vector<double>& b, std::size_t n) {
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col]))
                piv = r;
        if (std::abs(a[piv * n + col]) < 1e-300)
            return false;
        if (piv != col) {
            for (std::size_t c = 0; c < n; ++c)
                std::swap(a[col * n + c], a[piv * n + c]);
            std::swap(b[col], b[piv]);
        }
        const double inv = 1.0 / a[col * n + col];
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r * n + col] * inv;
            if (f == 0.0)
                continue;
            for (std::size_t c = col; c < n; ++c)
                a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }
    for (std::size_t col = n; col-- > 0;) {
        double s = b[col];
        for (std::size_t c = col + 1; c < n; ++c)
            s -= a[col * n + c] * b[c];
        b[col] = s / a[col * n + col];
    }
    return true;
}

// Inverse via the same elimination, for the covariance matrix.
bool invert_matrix(std::vector<double> a, std::vector<double>& inv, std::size_t n) {
    inv.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        inv[i * n + i] = 1.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col]))
                piv = r;
        if (std::abs(a[piv * n + col]) < 1e-300)
            return false;
        if (piv != col)
            for (std::size_t c = 0; c < n; ++c) {
                std::swap(a[col * n + c], a[piv * n + c]);
                std::swap(inv[col * n + c], inv[piv * n + c]);
            }
        const double d = a[col * n + col];
        for (std::size_t c = 0; c < n; ++c) {
            a[col * n + c] /= d;
            inv[col * n + c] /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col)
                continue;
            const double f = a[r * n + col];
            if (f == 0.0)
                continue;
            for (std::size_t c = 0; c < n; ++c) {
                a[r * n + c] -= f * a[col * n + c];
                inv[r * n + c] -= f * inv[col * n + c];
            }
        }
    }
    return true;
}

double cost_of(const std::vector<double>& r) {
    double c = 0.0;
    for (double v : r)
        c += v * v;
    return c;
}

} // namespace

FitResult lm_minimize(const ResidualFn& residuals, std::vector<std::string> names,
                      std::vector<double> p0, bool sigma_supplied) {
    FitResult out;
    out.param_names = std::move(names);
    out.params = std::move(p0);
    const std::size_t np = out.params.size();

    std::vector<double> r = residuals(out.params);
    const std::size_t m = r.size();
    if (m < np) {
        out.message = "fewer data points than parameters";
        return out;
    }
    for (double p : out.params)
        if (!std::isfinite(p)) {
            out.message = "non-finite initial guess";
            return out;
        }

    double cost = cost_of(r);
    double lambda = 1e-3;
    double max_abs_p = 0.0;
    for (double p : out.params)
        max_abs_p = std::max(max_abs_p, std::abs(p));

    std::vector<double> jac(m * np);
    std::vector<double> jtj(np * np), jtr(np), a(np * np), rhs(np);
    std::vector<double> trial(np);

    int iter = 0;
    for (; iter < 200; ++iter) {
        // central-difference Jacobian, relative step 1e-6
        for (std::size_t j = 0; j < np; ++j) {
            const double pj = out.params[j];
            const double h =
                1e-6 * (std::abs(pj) > 0.0 ? std::abs(pj) : (1.0 + max_abs_p) * 1e-3);
            std::vector<double> pp = out.params, pm = out.params;
            pp[j] = pj + h;
            pm[j] = pj - h;
            const std::vector<double> rp = residuals(pp);
            const std::vector<double> rm = residuals(pm);
            for (std::size_t i = 0; i < m; ++i)
                jac[i * np + j] = (rp[i] - rm[i]) / (2.0 * h);
        }
        for (std::size_t j = 0; j < np; ++j) {
            for (std::size_t k = j; k < np; ++k) {
                double s = 0.0;
                for (std::size_t i = 0; i < m; ++i)
                    s += jac[i * np + j] * jac[i * np + k];
                jtj[j * np + k] = jtj[k * np + j] = s;
            }
            double s = 0.0;
            for (std::size_t i = 0; i < m; ++i)
                s += jac[i * np + j] * r[i];
            jtr[j] = s;
        }

        bool accepted = false;
        for (int attempt = 0; attempt < 40; ++attempt) {
            a = jtj;
            for (std::size_t j = 0; j < np; ++j) {
                const double d = jtj[j * np + j];
                a[j * np + j] += lambda * (d > 0.0 ? d : 1.0);
            }
            for (std::size_t j = 0; j < np; ++j)
                rhs[j] = -jtr[j];
            if (!solve_linear(a, rhs, np)) {
                lambda *= 4.0;
                if (lambda > 1e14) {
                    out.n_iter = iter;
                    out.residual_norm = std::sqrt(cost);
                    out.message = "singular normal equations";
                    return out;
                }
                continue;
            }
            for (std::size_t j = 0; j < np; ++j)
                trial[j] = out.params[j] + rhs[j];
            const std::vector<double> rt = residuals(trial);
            const double trial_cost = cost_of(rt);
            if (trial_cost <= cost) {
                double step2 = 0.0, p2 = 0.0;
                for (std::size_t j = 0; j < np; ++j) {
                    step2 += rhs[j] * rhs[j];
                    p2 += out.params[j] * out.params[j];
                }
                const double rel_step = std::sqrt(step2) / (std::sqrt(p2) + 1e-300);
                const double rel_dcost = (cost - trial_cost) / (cost + 1e-300);
                out.params = trial;
                r = rt;
                cost = trial_cost;
                lambda = std::max(lambda / 3.0, 1e-12);
                accepted = true;
                if (rel_step < 1e-10 || rel_dcost < 1e-12)
                    out.converged = true;
                break;
            }
            lambda *= 4.0;
            if (lambda > 1e14) {
                // cannot improve: treat the current point as converged-stalled
                out.converged = true;
                break;
            }
        }
        if (out.converged || !accepted)
            break;
    }
    out.n_iter = iter + 1;
    out.residual_norm = std::sqrt(cost);
    if (!out.converged) {
        out.message = "maximum iterations (200) exceeded";
        return out;
    }

    // covariance: (J^T J)^-1, rescaled by the reduced chi-square when the
    // caller supplied no measurement uncertainties
    std::vector<double> cov;
    if (invert_matrix(jtj, cov, np)) {
        const double dof = static_cast<double>(m > np ? m - np : 1);
        const double scale2 = sigma_supplied ? 1.0 : cost / dof;
        out.stderrs.resize(np);
        for (std::size_t j = 0; j < np; ++j)
            out.stderrs[j] = std::sqrt(std::max(0.0, cov[j * np + j] * scale2));
    }
    return out;
}

FitResult least_squares(const ModelFn& model, std::vector<std::string> names,
                        std::vector<double> p0, const FitData& data) {
    if (data.x.size() != data.y.size())
        throw std::invalid_argument("least_squares: x/y length mismatch");
    if (!data.sigma.empty() && data.sigma.size() != data.x.size())
        throw std::invalid_argument("least_squares: sigma length mismatch");
    const bool weighted = !data.sigma.empty();
    ResidualFn res = [&, weighted](std::span<const double> p) {
        std::vector<double> r(data.x.size());
        for (std::size_t i = 0; i < data.x.size(); ++i) {
            const double w = weighted ? 1.0 / data.sigma[i] : 1.0;
            r[i] = (model(data.x[i], p) - data.y[i]) * w;
        }
        return r;
    };
    return lm_minimize(res, std::move(names), std::move(p0), weighted);
}

// ---------------------------------------------------------------------------

double gaussian_derivative_model(double x, double amplitude, double center, double sigma,
                                 double offset) {
    const double u = x - center;
    return -amplitude * u / (sigma * sigma) * std::exp(-u * u / (2.0 * sigma * sigma)) +
           offset;
}

GaussianDerivativeFit fit_gaussian_derivative(const FitData& data) {
    if (data.x.size() < 5)
        throw std::invalid_argument("fit_gaussian_derivative needs at least 5 points");
    const std::size_t imax = static_cast<std::size_t>(
        std::max_element(data.y.begin(), data.y.end()) - data.y.begin());
    const std::size_t imin = static_cast<std::size_t>(
        std::min_element(data.y.begin(), data.y.end()) - data.y.begin());

    GaussianDerivativeFit out;
    if (imax == 0 || imax == data.y.size() - 1 || imin == 0 || imin == data.y.size() - 1) {
        out.fit.message = "extrema not bracketed by the data";
        out.fit.param_names = {"amplitude", "center", "sigma", "offset"};
        out.fit.params = {0, 0, 0, 0};
        return out;
    }

    const double x_hi = data.x[imax], x_lo = data.x[imin];
    const double center0 = 0.5 * (x_hi + x_lo);
    double sigma0 = 0.5 * std::abs(x_hi - x_lo);
    if (!(sigma0 > 0.0))
        sigma0 = 0.25 * std::abs(data.x.back() - data.x.front());
    const double p2p = data.y[imax] - data.y[imin];
    // the model's extrema sit at center -/+ sigma with values +/- A e^{-1/2}/sigma
    double amp0 = 0.5 * p2p * sigma0 * std::exp(0.5);
    if (x_hi > x_lo)
        amp0 = -amp0; // rising-then-falling order flips the sign
    const double offset0 =
        std::accumulate(data.y.begin(), data.y.end(), 0.0) / static_cast<double>(data.y.size());

    ModelFn model = [](double x, std::span<const double> p) {
        return gaussian_derivative_model(x, p[0], p[1], p[2], p[3]);
    };
    out.fit = least_squares(model, {"amplitude", "center", "sigma", "offset"},
                            {amp0, center0, sigma0, offset0}, data);
    const double k = 2.0 * std::sqrt(2.0 * std::log(2.0));
    const double s = std::abs(out.fit.param("sigma"));
    out.fwhm = k * s;
    if (!out.fit.stderrs.empty())
        out.fwhm_stderr = k * out.fit.stderr_of("sigma");
    out.peak_to_peak = 2.0 * std::abs(out.fit.param("amplitude")) * std::exp(-0.5) / s;
    out.extremum_separation = 2.0 * s;
    return out;
}

SaturationFit fit_saturation(const FitData& data) {
    if (data.x.size() < 3)
        throw std::invalid_argument("fit_saturation needs at least 3 powers");
    // orientation: compare means of the low-power and high-power thirds
    std::vector<std::size_t> order(data.x.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return data.x[a] < data.x[b]; });
    const std::size_t third = std::max<std::size_t>(1, data.x.size() / 3);
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < third; ++i) {
        lo += std::abs(data.y[order[i]]);
        hi += std::abs(data.y[order[order.size() - 1 - i]]);
    }
    return fit_saturation(data, lo > hi);
}

SaturationFit fit_saturation(const FitData& data, bool decaying) {
    for (double p : data.x)
        if (p < 0.0)
            throw std::invalid_argument("fit_saturation expects linear powers >= 0 W");

    const double ymax = *std::max_element(data.y.begin(), data.y.end(), [](double a, double b) {
        return std::abs(a) < std::abs(b);
    });
    const double xmax = *std::max_element(data.x.begin(), data.x.end());
    const double xmin = *std::min_element(data.x.begin(), data.x.end());
    double psat0 = std::sqrt(std::max(xmin, xmax * 1e-6) * xmax); // geometric midpoint

    ModelFn model;
    if (decaying)
        model = [](double x, std::span<const double> p) {
            return p[0] * std::exp(-x / p[1]);
        };
    else
        model = [](double x, std::span<const double> p) {
            return p[0] * (1.0 - std::exp(-x / p[1]));
        };

    SaturationFit out;
    out.decaying = decaying;
    out.fit = least_squares(model, {"dnu_max", "p_sat"}, {ymax, psat0}, data);
    out.p_sat_watts = std::abs(out.fit.param("p_sat"));
    out.p_sat_dbm = 10.0 * std::log10(out.p_sat_watts / 1e-3);
    if (out.fit.converged && out.p_sat_watts > xmax)
        out.fit.message = "all powers below the fitted saturation power; dnu_max weakly "
                          "identified";
    return out;
}

namespace {

double dip_model(double x, double nu_c, double ki, double ke) {
    const double d = x - nu_c;
    const double half_diff = 0.5 * (ki - ke);
    const double half_sum = 0.5 * (ki + ke);
    return (d * d + half_diff * half_diff) / (d * d + half_sum * half_sum);
}

} // namespace

ReflectionDipFit fit_reflection_dip(const FitData& data) {
    if (data.x.size() < 7)
        throw std::invalid_argument("fit_reflection_dip needs a sampled spectrum");
    const std::size_t imin = static_cast<std::size_t>(
        std::min_element(data.y.begin(), data.y.end()) - data.y.begin());
    const double nu0 = data.x[imin];
    const double ymin = data.y[imin];
    const double contrast = std::clamp(1.0 - ymin, 1e-6, 1.0 - 1e-12);

    if (!data.sigma.empty()) {
        std::vector<double> s = data.sigma;
        std::nth_element(s.begin(), s.begin() + s.size() / 2, s.end());
        if (1.0 - ymin < 3.0 * s[s.size() / 2]) {
            ReflectionDipFit out;
            out.fit.param_names = {"nu_c", "kappa_int", "kappa_ext"};
            out.fit.params = {nu0, 0.0, 0.0};
            out.fit.message = "dip contrast below the noise floor";
            out.swapped = out.fit;
            return out;
        }
    }

    // half-depth width -> kappa_total estimate
    const double half_level = 0.5 * (1.0 + ymin);
    double wlo = data.x.front(), whi = data.x.back();
    for (std::size_t i = imin; i-- > 0;)
        if (data.y[i] > half_level) {
            wlo = data.x[i];
            break;
        }
    for (std::size_t i = imin + 1; i < data.x.size(); ++i)
        if (data.y[i] > half_level) {
            whi = data.x[i];
            break;
        }
    double ktot0 = whi - wlo;
    if (!(ktot0 > 0.0))
        ktot0 = 0.1 * (data.x.back() - data.x.front());

    // contrast = 4u/(1+u)^2 with u = ke/ki; undercoupled root
    const double q = 2.0 / contrast - 1.0;
    const double u = q - std::sqrt(std::max(0.0, q * q - 1.0));
    const double ki0 = ktot0 / (1.0 + u);
    const double ke0 = ktot0 * u / (1.0 + u);

    ModelFn model = [](double x, std::span<const double> p) {
        return dip_model(x, p[0], std::abs(p[1]), std::abs(p[2]));
    };
    ReflectionDipFit out;
    out.fit = least_squares(model, {"nu_c", "kappa_int", "kappa_ext"}, {nu0, ki0, ke0}, data);
    out.fit.params[1] = std::abs(out.fit.params[1]);
    out.fit.params[2] = std::abs(out.fit.params[2]);

    out.swapped = out.fit;
    std::swap(out.swapped.params[1], out.swapped.params[2]);
    if (out.swapped.stderrs.size() == 3)
        std::swap(out.swapped.stderrs[1], out.swapped.stderrs[2]);
    return out;
}

FitResult fit_reflection_dip_complex(const std::vector<double>& detuning,
                                     const std::vector<std::complex<double>>& refl) {
    if (detuning.size() != refl.size() || detuning.size() < 4)
        throw std::invalid_argument("fit_reflection_dip_complex: bad input lengths");
    // magnitude fit first, then the phase picks the branch
    FitData mag;
    mag.x = detuning;
    mag.y.resize(refl.size());
    for (std::size_t i = 0; i < refl.size(); ++i)
        mag.y[i] = std::norm(refl[i]);
    ReflectionDipFit both = fit_reflection_dip(mag);

    ResidualFn res = [&](std::span<const double> p) {
        std::vector<double> r(2 * refl.size());
        for (std::size_t i = 0; i < refl.size(); ++i) {
            const std::complex<double> den(0.5 * (std::abs(p[1]) + std::abs(p[2])),
                                           detuning[i] - p[0]);
            const std::complex<double> model = 1.0 - std::abs(p[2]) / den;
            r[2 * i] = model.real() - refl[i].real();
            r[2 * i + 1] = model.imag() - refl[i].imag();
        }
        return r;
    };
    FitResult a = lm_minimize(res, {"nu_c", "kappa_int", "kappa_ext"}, both.fit.params, false);
    FitResult b = lm_minimize(res, {"nu_c", "kappa_int", "kappa_ext"},
                              both.swapped.params, false);
    FitResult& best = (a.residual_norm <= b.residual_norm) ? a : b;
    best.params[1] = std::abs(best.params[1]);
    best.params[2] = std::abs(best.params[2]);
    return best;
}

// ---------------------------------------------------------------------------

SidebandSpectrum synthesize_sideband_spectrum(const CavityMode& carrier,
                                              const CavityMode& neighbor, double fsr,
                                              double mod_freq,
                                              const std::vector<double>& laser_grid,
                                              double sideband_weight) {
    SidebandSpectrum out;
    out.mod_freq = mod_freq;
    out.laser = laser_grid;
    out.transmission.resize(laser_grid.size());
    for (std::size_t i = 0; i < laser_grid.size(); ++i) {
        const double nu = laser_grid[i];
        const double carrier_dip = std::norm(reflection_bare(carrier, nu));
        // the +1st sideband meets the neighbor when nu + mod_freq = fsr
        const double sideband_dip =
            std::norm(reflection_bare(neighbor, nu + mod_freq - fsr));
        out.transmission[i] =
            (carrier_dip + sideband_weight * sideband_dip) / (1.0 + sideband_weight);
    }
    return out;
}

FsrEstimate extract_fsr_sideband(const std::vector<SidebandSpectrum>& family,
                                 double noise_rms) {
    if (family.size() < 3)
        throw std::invalid_argument("extract_fsr_sideband needs >= 3 modulation frequencies");
    std::vector<double> f(family.size()), metric(family.size());
    for (std::size_t i = 0; i < family.size(); ++i) {
        f[i] = family[i].mod_freq;
        metric[i] =
            *std::min_element(family[i].transmission.begin(), family[i].transmission.end());
    }
    const std::size_t j = static_cast<std::size_t>(
        std::min_element(metric.begin(), metric.end()) - metric.begin());
    if (j == 0 || j == metric.size() - 1)
        throw numeric_error("sideband coincidence not bracketed by the modulation grid");

    // parabola through the three points around the minimum
    const double x0 = f[j - 1], x1 = f[j], x2 = f[j + 1];
    const double y0 = metric[j - 1], y1 = metric[j], y2 = metric[j + 1];
    const double d1 = (y2 - y0) / (x2 - x0);
    const double d2 = ((y2 - y1) / (x2 - x1) - (y1 - y0) / (x1 - x0)) / (0.5 * (x2 - x0));
    FsrEstimate est;
    if (!(d2 > 0.0))
        throw numeric_error("coincidence metric has no local curvature at its minimum");
    est.fsr = x1 - d1 / (2.0 * d2);
    const double grid_step = 0.5 * (x2 - x0);
    const double noise_term = noise_rms > 0.0 ? 2.0 * noise_rms / d2 : 0.0;
    est.sigma = std::sqrt(noise_term + grid_step * grid_step / 12.0);
    return est;
}

void FsrTable::validate() const {
    if (rows.size() < 2)
        throw std::invalid_argument("FSR table needs at least two rows");
    const int step = rows[1].m_offset - rows[0].m_offset;
    if (step != 1 && step != -1)
        throw std::invalid_argument("FSR table rows must have consecutive mode offsets");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].m_offset - rows[i - 1].m_offset != step)
            throw std::invalid_argument("FSR table rows must have consecutive mode offsets");
        if (!(rows[i].fsr > 0.0) || !(rows[i - 1].fsr > 0.0))
            throw std::invalid_argument("FSR values must be positive");
    }
}

std::vector<GvdRow> gvd_from_fsrs(const FsrTable& table, const Quantity& radius) {
    table.validate();
    const double r = require(radius, Dimension::Length, "gvd_from_fsrs");
    if (!(r > 0.0))
        throw std::invalid_argument("radius must be positive");

    // normalize to ascending m
    std::vector<FsrRow> rows = table.rows;
    if (rows.size() >= 2 && rows[1].m_offset < rows[0].m_offset)
        std::reverse(rows.begin(), rows.end());

    const double k = (2.0 * M_PI) * (2.0 * M_PI) * r;
    std::vector<GvdRow> out;
    out.reserve(rows.size() - 1);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        GvdRow g;
        g.m_offset = rows[i].m_offset;
        g.delta_fsr = rows[i].fsr - rows[i - 1].fsr;
        g.fsr_mean = 0.5 * (rows[i].fsr + rows[i - 1].fsr);
        const double mean3 = g.fsr_mean * g.fsr_mean * g.fsr_mean;
        g.beta2 = -g.delta_fsr / (k * mean3);
        const double d_hi = -1.0 / (k * mean3) +
                            1.5 * g.delta_fsr / (k * mean3 * g.fsr_mean);
        const double d_lo = 1.0 / (k * mean3) +
                            1.5 * g.delta_fsr / (k * mean3 * g.fsr_mean);
        g.beta2_sigma = std::sqrt(d_hi * d_hi * rows[i].sigma * rows[i].sigma +
                                  d_lo * d_lo * rows[i - 1].sigma * rows[i - 1].sigma);
        out.push_back(g);
    }
    return out;
}

} // namespace modr
