#include "modr/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <set>

namespace modr {

std::vector<SpinPacket> Scenario::spin_packets() const {
    return discretize(InhomProfile{0.0, mw_fwhm}, packets, gamma_spin);
}

EnsembleCoupling Scenario::optical_coupling() const {
    return {g_optical, discretize(InhomProfile{0.0, optical_fwhm}, packets, gamma_optical)};
}

EnsembleCoupling Scenario::mw_coupling() const {
    return {g_mw, discretize(InhomProfile{0.0, mw_fwhm}, packets, gamma_spin)};
}

OdmrSetup Scenario::odmr_setup() const {
    OdmrSetup s;
    s.optical_mode = optical_mode;
    s.mw_mode = mw_mode;
    s.sys = sys;
    s.optical_transition = transition;
    s.optical = optical_coupling();
    s.spin = spin_packets();
    s.rates = rates;
    s.servo = servo;
    s.pdh = pdh;
    s.drive = drive;
    s.temperature = temperature;
    return s;
}

namespace {

struct RawValue {
    std::string text;     // token or quoted content
    bool quoted = false;
    std::size_t line = 0;
    std::size_t column = 0;
};

struct Setter {
    std::function<void(Scenario&, const RawValue&)> apply;
};

[[noreturn]] void fail(const RawValue& v, const std::string& what) {
    throw config_error(what, v.line, v.column);
}

double number_of(const RawValue& v) {
    if (v.quoted)
        fail(v, "expected a bare number, got a quoted string");
    double out = 0.0;
    const char* b = v.text.data();
    const char* e = b + v.text.size();
    auto [p, ec] = std::from_chars(b, e, out);
    if (ec != std::errc() || p != e)
        fail(v, "malformed number '" + v.text + "'");
    return out;
}

Quantity quantity_of(const RawValue& v, Dimension want) {
    Quantity q;
    if (v.quoted) {
        try {
            q = parse_quantity(v.text);
        } catch (const parse_error& pe) {
            fail(v, pe.what());
        }
    } else {
        q = Quantity{number_of(v), want == Dimension::Dimensionless ? Dimension::Dimensionless
                                                                    : want};
        return q; // bare numbers adopt the expected dimension
    }
    if (q.dim != want)
        fail(v, "dimension mismatch: expected " + std::string(dimension_name(want)) +
                    ", got " + std::string(dimension_name(q.dim)));
    return q;
}

// a power value may be linear (W) or logarithmic (dBm)
Quantity power_of(const RawValue& v) {
    if (!v.quoted)
        fail(v, "powers must be quoted quantities with an explicit unit (W, mW or dBm)");
    Quantity q;
    try {
        q = parse_quantity(v.text);
    } catch (const parse_error& pe) {
        fail(v, pe.what());
    }
    if (q.dim != Dimension::Power && q.dim != Dimension::PowerDbm)
        fail(v, "expected a power (W, mW or dBm)");
    return q;
}

double fraction_of(const RawValue& v) {
    if (v.quoted) {
        Quantity q;
        try {
            q = parse_quantity(v.text);
        } catch (const parse_error& pe) {
            fail(v, pe.what());
        }
        if (q.dim != Dimension::Dimensionless)
            fail(v, "expected a dimensionless value");
        return q.value;
    }
    return number_of(v);
}

std::uint64_t count_of(const RawValue& v) {
    const double d = number_of(v);
    if (d < 0.0 || d != std::floor(d))
        fail(v, "expected a non-negative integer");
    return static_cast<std::uint64_t>(d);
}

std::string string_of(const RawValue& v) {
    if (!v.quoted)
        fail(v, "expected a quoted string");
    return v.text;
}

#define SET_HZ(field) \
    [](Scenario& s, const RawValue& v) { s.field = quantity_of(v, Dimension::Frequency).value; }
#define SET_NUM(field) [](Scenario& s, const RawValue& v) { s.field = number_of(v); }

const std::map<std::string, Setter>& registry() {
    static const std::map<std::string, Setter> reg = {
        {"scenario.id", {[](Scenario& s, const RawValue& v) { s.id = string_of(v); }}},
        {"scenario.seed",
         {[](Scenario& s, const RawValue& v) { s.seed = count_of(v); }}},
        {"scenario.noise",
         {[](Scenario& s, const RawValue& v) { s.noise = fraction_of(v); }}},

        {"spin.g_ground", {SET_NUM(sys.g_ground)}},
        {"spin.g_excited", {SET_NUM(sys.g_excited)}},
        {"spin.nu0", {SET_HZ(sys.nu0)}},

        {"ensemble.mw_fwhm", {SET_HZ(mw_fwhm)}},
        {"ensemble.optical_fwhm", {SET_HZ(optical_fwhm)}},
        {"ensemble.packets",
         {[](Scenario& s, const RawValue& v) { s.packets = count_of(v); }}},
        {"ensemble.gamma_spin", {SET_HZ(gamma_spin)}},
        {"ensemble.gamma_optical", {SET_HZ(gamma_optical)}},
        {"ensemble.g_optical", {SET_HZ(g_optical)}},
        {"ensemble.g_mw", {SET_HZ(g_mw)}},

        {"rates.t1",
         {[](Scenario& s, const RawValue& v) {
             s.rates.t1 = quantity_of(v, Dimension::Time).value;
         }}},
        {"rates.pump_rate_per_watt", {SET_NUM(rates.pump_rate_per_watt)}},

        {"optical_mode.frequency", {SET_HZ(optical_mode.nu_c)}},
        {"optical_mode.kappa_int", {SET_HZ(optical_mode.kappa_int)}},
        {"optical_mode.kappa_ext", {SET_HZ(optical_mode.kappa_ext)}},
        {"optical_mode.polarization",
         {[](Scenario& s, const RawValue& v) {
             try {
                 s.optical_mode.polarization = polarization_from_name(string_of(v));
             } catch (const std::invalid_argument& e) {
                 fail(v, e.what());
             }
         }}},
        {"optical_mode.m_index",
         {[](Scenario& s, const RawValue& v) {
             s.optical_mode.m_index = static_cast<int>(count_of(v));
         }}},

        {"mw_mode.frequency", {SET_HZ(mw_mode.nu_c)}},
        {"mw_mode.kappa_int", {SET_HZ(mw_mode.kappa_int)}},
        {"mw_mode.kappa_ext", {SET_HZ(mw_mode.kappa_ext)}},

        {"lock.mod_freq", {SET_HZ(pdh.mod_freq)}},
        {"lock.mod_depth", {SET_NUM(pdh.mod_depth)}},
        {"lock.pound_mod_freq", {SET_HZ(pound.mod_freq)}},
        {"lock.pound_mod_depth", {SET_NUM(pound.mod_depth)}},
        {"lock.servo.unity_gain_bandwidth", {SET_HZ(servo.unity_gain_bandwidth)}},
        {"lock.servo.input_lowpass", {SET_HZ(servo.input_lowpass_corner)}},

        {"drive.carrier", {SET_HZ(drive.carrier_freq)}},
        {"drive.power",
         {[](Scenario& s, const RawValue& v) { s.drive.power_in = power_of(v); }}},
        {"drive.depth",
         {[](Scenario& s, const RawValue& v) { s.drive.depth = fraction_of(v); }}},
        {"drive.mod_freq", {SET_HZ(drive.mod_freq)}},
        {"drive.insertion_loss_db", {SET_NUM(drive.insertion_loss_db)}},
        {"drive.field_enhancement", {SET_NUM(drive.field_enhancement)}},
        {"drive.waveform",
         {[](Scenario& s, const RawValue& v) {
             const std::string w = string_of(v);
             if (w == "sine")
                 s.drive.waveform = AmWaveform::Sine;
             else if (w == "square")
                 s.drive.waveform = AmWaveform::Square;
             else
                 fail(v, "waveform must be \"sine\" or \"square\"");
         }}},

        {"scan.transition",
         {[](Scenario& s, const RawValue& v) {
             try {
                 s.transition = transition_from_name(string_of(v));
             } catch (const std::invalid_argument& e) {
                 fail(v, e.what());
             }
         }}},
        {"scan.temperature",
         {[](Scenario& s, const RawValue& v) {
             s.temperature = quantity_of(v, Dimension::Temperature);
         }}},
        {"scan.field_start",
         {[](Scenario& s, const RawValue& v) {
             s.field_start = quantity_of(v, Dimension::MagneticFluxDensity).value;
         }}},
        {"scan.field_stop",
         {[](Scenario& s, const RawValue& v) {
             s.field_stop = quantity_of(v, Dimension::MagneticFluxDensity).value;
         }}},
        {"scan.field_points",
         {[](Scenario& s, const RawValue& v) { s.field_points = count_of(v); }}},
        {"scan.laser_start", {SET_HZ(laser_start)}},
        {"scan.laser_stop", {SET_HZ(laser_stop)}},
        {"scan.laser_points",
         {[](Scenario& s, const RawValue& v) { s.laser_points = count_of(v); }}},
        {"scan.mw_start", {SET_HZ(mw_start)}},
        {"scan.mw_stop", {SET_HZ(mw_stop)}},
        {"scan.mw_points",
         {[](Scenario& s, const RawValue& v) { s.mw_points = count_of(v); }}},
        {"scan.power_start",
         {[](Scenario& s, const RawValue& v) { s.power_start = power_of(v); }}},
        {"scan.power_stop",
         {[](Scenario& s, const RawValue& v) { s.power_stop = power_of(v); }}},
        {"scan.power_points",
         {[](Scenario& s, const RawValue& v) { s.power_points = count_of(v); }}},
        {"scan.optical_power",
         {[](Scenario& s, const RawValue& v) { s.optical_power = power_of(v); }}},
        {"fsr.radius",
         {[](Scenario& s, const RawValue& v) {
             s.fsr_radius = quantity_of(v, Dimension::Length);
         }}},
    };
    return reg;
}

#undef SET_HZ
#undef SET_NUM

} // namespace

Scenario parse_config(const std::string& text) {
    Scenario scenario;
    std::set<std::string> seen;
    std::string section;

    std::size_t lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string line = text.substr(pos, eol == std::string::npos ? eol : eol - pos);
        pos = (eol == std::string::npos) ? text.size() + 1 : eol + 1;
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();

        std::size_t i = 0;
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
            ++i;
        if (i >= line.size() || line[i] == '#' || line[i] == ';')
            continue;

        if (line[i] == '[') {
            const std::size_t close = line.find(']', i);
            if (close == std::string::npos)
                throw config_error("unterminated section header", lineno, i + 1);
            section = line.substr(i + 1, close - i - 1);
            for (std::size_t j = close + 1; j < line.size(); ++j)
                if (!std::isspace(static_cast<unsigned char>(line[j])))
                    throw config_error("trailing characters after section header", lineno,
                                       j + 1);
            if (section.empty())
                throw config_error("empty section name", lineno, i + 2);
            continue;
        }

        const std::size_t eq = line.find('=', i);
        if (eq == std::string::npos)
            throw config_error("expected 'key = value'", lineno, i + 1);
        std::string key = line.substr(i, eq - i);
        while (!key.empty() && std::isspace(static_cast<unsigned char>(key.back())))
            key.pop_back();
        if (key.empty())
            throw config_error("missing key before '='", lineno, i + 1);

        std::size_t v = eq + 1;
        while (v < line.size() && std::isspace(static_cast<unsigned char>(line[v])))
            ++v;
        if (v >= line.size())
            throw config_error("missing value for key '" + key + "'", lineno, eq + 2);

        RawValue raw;
        raw.line = lineno;
        raw.column = v + 1;
        if (line[v] == '"') {
            const std::size_t close = line.find('"', v + 1);
            if (close == std::string::npos)
                throw config_error("unterminated quoted value", lineno, v + 1);
            raw.text = line.substr(v + 1, close - v - 1);
            raw.quoted = true;
            for (std::size_t j = close + 1; j < line.size(); ++j)
                if (!std::isspace(static_cast<unsigned char>(line[j])) && line[j] != '#')
                    throw config_error("trailing characters after value", lineno, j + 1);
                else if (line[j] == '#')
                    break;
        } else {
            std::size_t end = line.find('#', v);
            raw.text = line.substr(v, end == std::string::npos ? end : end - v);
            while (!raw.text.empty() &&
                   std::isspace(static_cast<unsigned char>(raw.text.back())))
                raw.text.pop_back();
        }

        const std::string full_key = section.empty() ? key : section + "." + key;
        const auto it = registry().find(full_key);
        if (it == registry().end())
            throw config_error("unknown key '" + full_key + "'", lineno, i + 1);
        if (!seen.insert(full_key).second)
            throw config_error("duplicate key '" + full_key + "'", lineno, i + 1);
        it->second.apply(scenario, raw);
    }
    return scenario;
}

} // namespace modr
