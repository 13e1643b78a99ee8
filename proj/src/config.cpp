#include "qrelay/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace qrelay::cfg {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

struct RawEntry {
    std::string value;
    int line = 0;
    bool used = false;
};

using Section = std::map<std::string, RawEntry>;
using RawConfig = std::map<std::string, Section>;

RawConfig tokenize(const std::string& text, const std::string& origin,
                   std::vector<std::string>& diags) {
    RawConfig raw;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                diags.push_back(origin + ":" + std::to_string(lineno) + ": unterminated section header");
                continue;
            }
            section = lower(trim(line.substr(1, line.size() - 2)));
            if (section.empty())
                diags.push_back(origin + ":" + std::to_string(lineno) + ": empty section name");
            raw[section];
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            diags.push_back(origin + ":" + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        std::string key = lower(trim(line.substr(0, eq)));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            diags.push_back(origin + ":" + std::to_string(lineno) + ": empty key or value");
            continue;
        }
        if (section.empty()) {
            diags.push_back(origin + ":" + std::to_string(lineno) + ": key outside any section");
            continue;
        }
        auto [it, fresh] = raw[section].try_emplace(key, RawEntry{value, lineno, false});
        if (!fresh)
            diags.push_back(origin + ":" + std::to_string(lineno) + ": duplicate key " + section +
                            "." + key);
    }
    return raw;
}

// Accumulates typed lookups against the raw table and records diagnostics
// with `section.key` paths.
struct Reader {
    RawConfig& raw;
    std::string origin;
    std::vector<std::string>& diags;

    void error(const std::string& path, const std::string& msg, int line = 0) {
        std::string where = origin;
        if (line > 0) where += ":" + std::to_string(line);
        diags.push_back(where + ": " + path + ": " + msg);
    }

    RawEntry* find(const std::string& section, const std::string& key) {
        auto sit = raw.find(section);
        if (sit == raw.end()) return nullptr;
        auto kit = sit->second.find(key);
        if (kit == sit->second.end()) return nullptr;
        kit->second.used = true;
        return &kit->second;
    }

    bool parse_number(const std::string& path, const RawEntry& e, const std::string& token,
                      double& out) {
        const char* b = token.data();
        const char* end = token.data() + token.size();
        auto [p, ec] = std::from_chars(b, end, out);
        if (ec != std::errc{} || p != end) {
            error(path, "invalid number '" + token + "'", e.line);
            return false;
        }
        return true;
    }

    // value = "<number> <unit>"; scale[unit] converts to the target unit.
    bool unit_value(const std::string& section, const std::string& key,
                    const std::map<std::string, double>& scale, const std::string& expect,
                    double& out, bool required, double fallback) {
        std::string path = section + "." + key;
        RawEntry* e = find(section, key);
        if (!e) {
            if (required) error(path, "missing required key");
            out = fallback;
            return !required;
        }
        std::istringstream in(e->value);
        std::string num, unit, extra;
        in >> num >> unit;
        if (in >> extra) {
            error(path, "trailing text after value", e->line);
            return false;
        }
        if (unit.empty()) {
            error(path, "missing unit, expected " + expect, e->line);
            return false;
        }
        auto it = scale.find(unit);
        if (it == scale.end()) {
            error(path, "unknown unit '" + unit + "', expected " + expect, e->line);
            return false;
        }
        double v = 0.0;
        if (!parse_number(path, *e, num, v)) return false;
        out = v * it->second;
        return true;
    }

    bool time_ps(const std::string& sec, const std::string& key, double& out,
                 bool required = false, double fallback = 0.0) {
        static const std::map<std::string, double> scale{
            {"ps", 1.0}, {"ns", 1e3}, {"us", 1e6}, {"ms", 1e9}, {"s", 1e12}};
        return unit_value(sec, key, scale, "ps/ns/us/ms/s", out, required, fallback);
    }

    bool freq_ghz(const std::string& sec, const std::string& key, double& out,
                  bool required = false, double fallback = 0.0) {
        static const std::map<std::string, double> scale{
            {"ghz", 1.0}, {"mhz", 1e-3}, {"khz", 1e-6}, {"hz", 1e-9},
            {"GHz", 1.0}, {"MHz", 1e-3}, {"kHz", 1e-6}, {"Hz", 1e-9}};
        std::string path = sec + "." + key;
        RawEntry* e = find(sec, key);
        if (!e) {
            if (required) error(path, "missing required key");
            out = fallback;
            return !required;
        }
        std::istringstream in(e->value);
        std::string num, unit, extra;
        in >> num >> unit;
        if (in >> extra) {
            error(path, "trailing text after value", e->line);
            return false;
        }
        auto it = scale.find(unit);
        if (it == scale.end()) it = scale.find(lower(unit));
        if (unit.empty() || it == scale.end()) {
            error(path, "unknown unit '" + unit + "', expected GHz/MHz/kHz/Hz", e->line);
            return false;
        }
        double v = 0.0;
        if (!parse_number(path, *e, num, v)) return false;
        out = v * it->second;
        return true;
    }

    bool energy_uev(const std::string& sec, const std::string& key, double& out,
                    bool required = false, double fallback = 0.0) {
        static const std::map<std::string, double> scale{
            {"uev", 1.0}, {"ueV", 1.0}, {"mev", 1e3}, {"meV", 1e3}};
        return unit_value(sec, key, scale, "ueV/meV", out, required, fallback);
    }

    bool rate_hz(const std::string& sec, const std::string& key, double& out,
                 bool required = false, double fallback = 0.0) {
        static const std::map<std::string, double> scale{{"/s", 1.0}, {"/ms", 1e3}, {"/us", 1e6}};
        return unit_value(sec, key, scale, "/s//ms//us", out, required, fallback);
    }

    bool angle_rad(const std::string& sec, const std::string& key, double& out,
                   bool required = false, double fallback = 0.0) {
        static const std::map<std::string, double> scale{{"rad", 1.0},
                                                         {"deg", 3.14159265358979323846 / 180.0}};
        return unit_value(sec, key, scale, "rad/deg", out, required, fallback);
    }

    // Dimensionless scalar; a unit suffix here is an error.
    bool number(const std::string& sec, const std::string& key, double& out,
                bool required = false, double fallback = 0.0) {
        std::string path = sec + "." + key;
        RawEntry* e = find(sec, key);
        if (!e) {
            if (required) error(path, "missing required key");
            out = fallback;
            return !required;
        }
        std::string v = trim(e->value);
        if (v.find(' ') != std::string::npos || v.find('\t') != std::string::npos) {
            error(path, "dimensionless value must not carry a unit", e->line);
            return false;
        }
        return parse_number(path, *e, v, out);
    }

    bool integer(const std::string& sec, const std::string& key, std::uint64_t& out,
                 bool required = false, std::uint64_t fallback = 0) {
        double v = 0.0;
        if (!number(sec, key, v, required, static_cast<double>(fallback))) return false;
        if (v < 0 || v != std::floor(v)) {
            error(sec + "." + key, "expected a non-negative integer");
            return false;
        }
        out = static_cast<std::uint64_t>(v);
        return true;
    }

    bool boolean(const std::string& sec, const std::string& key, bool& out, bool fallback) {
        std::string path = sec + "." + key;
        RawEntry* e = find(sec, key);
        if (!e) {
            out = fallback;
            return true;
        }
        std::string v = lower(trim(e->value));
        if (v == "true" || v == "on" || v == "1") {
            out = true;
        } else if (v == "false" || v == "off" || v == "0") {
            out = false;
        } else {
            error(path, "expected true/false", e->line);
            return false;
        }
        return true;
    }

    bool text(const std::string& sec, const std::string& key, std::string& out,
              bool required = false, const std::string& fallback = "") {
        RawEntry* e = find(sec, key);
        if (!e) {
            if (required) error(sec + "." + key, "missing required key");
            out = fallback;
            return !required;
        }
        out = trim(e->value);
        return true;
    }

    bool time_list_ps(const std::string& sec, const std::string& key, std::vector<double>& out) {
        RawEntry* e = find(sec, key);
        if (!e) return true;
        std::string path = sec + "." + key;
        std::istringstream in(e->value);
        std::vector<double> vals;
        std::string num, unit;
        while (in >> num) {
            if (!(in >> unit)) {
                error(path, "missing unit after '" + num + "'", e->line);
                return false;
            }
            static const std::map<std::string, double> scale{{"ps", 1.0}, {"ns", 1e3}};
            auto it = scale.find(lower(unit));
            if (it == scale.end()) {
                error(path, "unknown unit '" + unit + "', expected ps/ns", e->line);
                return false;
            }
            double v = 0.0;
            if (!parse_number(path, *e, num, v)) return false;
            vals.push_back(v * it->second);
        }
        if (vals.empty()) {
            error(path, "empty list", e->line);
            return false;
        }
        out = std::move(vals);
        return true;
    }
};

void read_amzi(Reader& r, const std::string& sec, optics::AMZIParams& a,
               optics::AMZIParams::Mode default_mode) {
    a.mode = default_mode;
    r.time_ps(sec, "delay", a.delay_ps, false, a.delay_ps);
    r.angle_rad(sec, "phase", a.phase_rad, false, a.phase_rad);
    r.number(sec, "insertion_loss", a.insertion_loss, false, a.insertion_loss);
    std::string mode;
    if (r.text(sec, "mode", mode) && !mode.empty()) {
        if (mode == "pol_to_timebin") {
            a.mode = optics::AMZIParams::Mode::pol_to_timebin;
        } else if (mode == "timebin_to_pol") {
            a.mode = optics::AMZIParams::Mode::timebin_to_pol;
        } else {
            r.error(sec + ".mode", "expected pol_to_timebin or timebin_to_pol");
        }
    }
}

void read_detector(Reader& r, const std::string& sec, optics::DetectorParams& d) {
    r.time_ps(sec, "jitter_sigma", d.jitter_sigma_ps, false, d.jitter_sigma_ps);
    r.number(sec, "efficiency", d.efficiency, false, d.efficiency);
    r.rate_hz(sec, "dark_rate", d.dark_rate_hz, false, d.dark_rate_hz);
    r.time_ps(sec, "dead_time", d.dead_time_ps, false, d.dead_time_ps);
}

ExperimentConfig read_config(RawConfig& raw, const std::string& origin,
                             std::vector<std::string>& diags) {
    Reader r{raw, origin, diags};
    ExperimentConfig c;

    std::string preset;
    if (r.text("experiment", "preset", preset, true)) {
        try {
            if (!preset.empty()) c.preset = preset_from_string(preset);
        } catch (const config_error& e) {
            r.error("experiment.preset", e.what());
        }
    }
    std::uint64_t seed = c.seed;
    r.integer("experiment", "seed", seed, false, c.seed);
    c.seed = seed;
    std::uint64_t threads = 1;
    r.integer("experiment", "threads", threads, false, 1);
    if (threads == 0) r.error("experiment.threads", "must be >= 1");
    c.threads = static_cast<int>(std::max<std::uint64_t>(threads, 1));
    r.number("experiment", "purity", c.purity, false, c.purity);

    r.freq_ghz("clock", "repetition_rate", c.clock.repetition_rate_ghz, true);
    r.time_ps("clock", "pulse_fwhm", c.clock.pulse_fwhm_ps, false, c.clock.pulse_fwhm_ps);
    r.integer("clock", "cycles", c.clock.n_cycles, true);
    r.time_ps("clock", "epoch", c.clock.epoch_ps, false, 0.0);
    r.boolean("clock", "cw", c.clock.cw, false);

    r.time_ps("qd", "lifetime_xx", c.qd.lifetime_xx_ps, false, c.qd.lifetime_xx_ps);
    r.time_ps("qd", "lifetime_x", c.qd.lifetime_x_ps, false, c.qd.lifetime_x_ps);
    r.energy_uev("qd", "fss", c.qd.fss_uev, false, c.qd.fss_uev);
    r.number("qd", "p_excite", c.qd.p_excite, false, c.qd.p_excite);
    r.number("qd", "p_reexcite", c.qd.p_reexcite, false, c.qd.p_reexcite);
    r.number("qd", "shelving_prob", c.qd.shelving_prob, false, c.qd.shelving_prob);
    r.time_ps("qd", "shelving_lifetime", c.qd.shelving_lifetime_ps, false,
              c.qd.shelving_lifetime_ps);
    r.rate_hz("qd", "background_rate", c.qd.background_rate_hz, false, c.qd.background_rate_hz);
    r.number("qd", "hv_coherence_floor", c.qd.hv_coherence_floor, false, c.qd.hv_coherence_floor);
    r.boolean("qd", "occupancy_gating", c.qd.occupancy_gating, c.qd.occupancy_gating);

    optics::DetectorParams base;
    read_detector(r, "detector", base);
    c.detectors.fill(base);
    for (int i = 0; i < 6; ++i) {
        std::string sec = "detector." + std::to_string(i);
        if (raw.count(sec)) read_detector(r, sec, c.detectors[static_cast<std::size_t>(i)]);
    }

    read_amzi(r, "amzi.alice", c.amzi_alice, optics::AMZIParams::Mode::pol_to_timebin);
    read_amzi(r, "amzi.charlie", c.amzi_charlie, optics::AMZIParams::Mode::timebin_to_pol);
    c.amzi_bob = c.amzi_charlie;
    c.amzi_bob.mode = optics::AMZIParams::Mode::pol_to_timebin;
    if (raw.count("amzi.bob")) read_amzi(r, "amzi.bob", c.amzi_bob, c.amzi_bob.mode);

    r.number("bsm", "visibility", c.bsm.visibility, false, c.bsm.visibility);
    r.time_ps("bsm", "coincidence_window", c.bsm.coincidence_window_ps, false,
              c.bsm.coincidence_window_ps);

    r.text("laser", "input", c.laser.input_label, false, c.laser.input_label);
    r.number("laser", "mean_photon", c.laser.mean_photon, false, c.laser.mean_photon);
    r.time_ps("laser", "pulse_fwhm", c.laser.pulse_fwhm_ps, false, c.laser.pulse_fwhm_ps);
    r.time_ps("laser", "alignment_offset", c.laser.alignment_offset_ps, false,
              c.laser.alignment_offset_ps);

    auto& an = c.analysis;
    r.time_ps("analysis", "g2_bin", an.g2_bin_ps, false, an.g2_bin_ps);
    r.time_ps("analysis", "g2_range", an.g2_range_ps, false, an.g2_range_ps);
    r.time_ps("analysis", "grid_bin", an.grid_bin_ps, false, an.grid_bin_ps);
    std::uint64_t periods = an.grid_periods;
    r.integer("analysis", "grid_periods", periods, false, an.grid_periods);
    an.grid_periods = static_cast<std::size_t>(periods);
    r.time_ps("analysis", "lifetime_bin", an.lifetime_bin_ps, false, an.lifetime_bin_ps);
    r.time_ps("analysis", "tomo_window", an.tomo_window_ps, false, an.tomo_window_ps);
    r.time_ps("analysis", "tomo_step", an.tomo_step_ps, false, an.tomo_step_ps);
    r.time_ps("analysis", "tomo_center_min", an.tomo_center_min_ps, false, an.tomo_center_min_ps);
    r.time_ps("analysis", "tomo_center_max", an.tomo_center_max_ps, false, an.tomo_center_max_ps);
    r.time_list_ps("analysis", "teleport_windows", an.teleport_windows_ps);
    r.time_ps("analysis", "herald_window", an.herald_window_ps, false, an.herald_window_ps);
    r.time_ps("analysis", "charlie_range", an.charlie_range_ps, false, an.charlie_range_ps);
    r.time_ps("analysis", "bob_range", an.bob_range_ps, false, an.bob_range_ps);
    r.time_ps("analysis", "bob_offset", an.bob_offset_ps, false, an.bob_offset_ps);
    r.boolean("analysis", "debug_events", an.debug_events, an.debug_events);

    static const std::set<std::string> known_sections{
        "experiment", "clock",       "qd",   "detector", "amzi.alice",
        "amzi.charlie", "amzi.bob", "bsm",  "laser",    "analysis"};
    for (auto& [sec, entries] : raw) {
        bool known = known_sections.count(sec) || sec.rfind("detector.", 0) == 0;
        if (!known) {
            diags.push_back(origin + ": unknown section [" + sec + "]");
            continue;
        }
        for (auto& [key, e] : entries)
            if (!e.used)
                diags.push_back(origin + ":" + std::to_string(e.line) + ": unknown key " + sec +
                                "." + key);
    }
    return c;
}

void semantic_checks(const ExperimentConfig& c, const std::string& origin,
                     std::vector<std::string>& diags) {
    auto bad = [&](const std::string& path, const std::string& msg) {
        diags.push_back(origin + ": " + path + ": " + msg);
    };
    auto in01 = [&](double v, const std::string& path) {
        if (v < 0.0 || v > 1.0) bad(path, "must be in [0, 1]");
    };
    if (c.clock.repetition_rate_ghz <= 0) bad("clock.repetition_rate", "must be > 0");
    if (c.clock.n_cycles == 0) bad("clock.cycles", "must be > 0");
    if (!c.clock.cw && c.clock.pulse_fwhm_ps <= 0) bad("clock.pulse_fwhm", "must be > 0");
    if (c.qd.lifetime_xx_ps <= 0) bad("qd.lifetime_xx", "must be > 0");
    if (c.qd.lifetime_x_ps <= 0) bad("qd.lifetime_x", "must be > 0");
    if (c.qd.fss_uev < 0) bad("qd.fss", "must be >= 0");
    in01(c.qd.p_excite, "qd.p_excite");
    in01(c.qd.p_reexcite, "qd.p_reexcite");
    in01(c.qd.shelving_prob, "qd.shelving_prob");
    if (c.qd.background_rate_hz < 0) bad("qd.background_rate", "must be >= 0");
    in01(c.purity, "experiment.purity");
    in01(c.qd.hv_coherence_floor, "qd.hv_coherence_floor");
    if (c.purity + c.qd.hv_coherence_floor > 1.0 + 1e-12)
        bad("experiment.purity", "purity + hv_coherence_floor must be <= 1");
    for (std::size_t i = 0; i < c.detectors.size(); ++i) {
        const auto& d = c.detectors[i];
        std::string p = "detector." + std::to_string(i);
        in01(d.efficiency, p + ".efficiency");
        if (d.jitter_sigma_ps < 0) bad(p + ".jitter_sigma", "must be >= 0");
        if (d.dark_rate_hz < 0) bad(p + ".dark_rate", "must be >= 0");
        if (d.dead_time_ps < 0) bad(p + ".dead_time", "must be >= 0");
    }
    in01(c.bsm.visibility, "bsm.visibility");
    if (c.bsm.coincidence_window_ps <= 0) bad("bsm.coincidence_window", "must be > 0");
    for (const auto* a : {&c.amzi_alice, &c.amzi_charlie, &c.amzi_bob}) {
        std::string p = a == &c.amzi_alice ? "amzi.alice" : (a == &c.amzi_charlie ? "amzi.charlie" : "amzi.bob");
        if (a->delay_ps <= 0) bad(p + ".delay", "must be > 0");
        in01(a->insertion_loss, p + ".insertion_loss");
    }
    if (c.analysis.g2_bin_ps <= 0) bad("analysis.g2_bin", "must be > 0");
    if (c.analysis.grid_bin_ps <= 0) bad("analysis.grid_bin", "must be > 0");
    if (c.analysis.tomo_window_ps <= 0) bad("analysis.tomo_window", "must be > 0");
    for (double w : c.analysis.teleport_windows_ps)
        if (w <= 0) bad("analysis.teleport_windows", "widths must be > 0");

    bool teleport = c.preset == Preset::teleport_superposition ||
                    c.preset == Preset::teleport_timebin;
    if (teleport) {
        if (std::abs(c.amzi_alice.delay_ps - c.amzi_charlie.delay_ps) > 1.0)
            bad("amzi.charlie.delay",
                "must match amzi.alice.delay to within 1 ps for interferometric overlap");
        if (c.laser.mean_photon <= 0) bad("laser.mean_photon", "must be > 0");
        static const std::set<std::string> labels{"e", "l", "e+l", "e+il"};
        if (!labels.count(c.laser.input_label))
            bad("laser.input", "expected one of e, l, e+l, e+il");
    }
    if (c.preset == Preset::teleport_timebin &&
        std::abs(c.amzi_bob.delay_ps - c.amzi_charlie.delay_ps) > 1.0)
        bad("amzi.bob.delay", "must match amzi.charlie.delay to within 1 ps");
    if (c.preset == Preset::entanglement && c.analysis.tomo_step_ps <= 0)
        bad("analysis.tomo_step", "must be > 0");
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

Preset preset_from_string(const std::string& s) {
    if (s == "emission") return Preset::emission;
    if (s == "entanglement") return Preset::entanglement;
    if (s == "teleport_superposition") return Preset::teleport_superposition;
    if (s == "teleport_timebin") return Preset::teleport_timebin;
    throw config_error("unknown preset '" + s + "'");
}

std::string to_string(Preset p) {
    switch (p) {
        case Preset::emission: return "emission";
        case Preset::entanglement: return "entanglement";
        case Preset::teleport_superposition: return "teleport_superposition";
        case Preset::teleport_timebin: return "teleport_timebin";
    }
    return "?";
}

qstate::PolState LaserConfig::input_pol() const {
    using qstate::PolState;
    // encoder convention: V amplitude fills the early bin, H the late bin
    if (input_label == "e") return PolState::vertical();
    if (input_label == "l") return PolState::horizontal();
    if (input_label == "e+l") return PolState::diagonal();
    if (input_label == "e+il") return PolState(std::complex<double>(0.0, 1.0), 1.0);
    throw config_error("unknown laser input label '" + input_label + "'");
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    std::vector<std::string> diags;
    RawConfig raw = tokenize(text, origin, diags);
    ExperimentConfig c = read_config(raw, origin, diags);
    if (diags.empty()) semantic_checks(c, origin, diags);
    if (!diags.empty()) {
        std::string msg;
        for (const auto& d : diags) {
            if (!msg.empty()) msg += "\n";
            msg += d;
        }
        throw config_error(msg);
    }
    return c;
}

ExperimentConfig parse_config_file(const std::string& path) {
    return parse_config_text(slurp(path), path);
}

std::vector<std::string> validate_config_text(const std::string& text, const std::string& origin) {
    std::vector<std::string> diags;
    RawConfig raw = tokenize(text, origin, diags);
    ExperimentConfig c = read_config(raw, origin, diags);
    if (diags.empty()) semantic_checks(c, origin, diags);
    return diags;
}

std::vector<std::string> validate_config_file(const std::string& path) {
    return validate_config_text(slurp(path), path);
}

}  // namespace qrelay::cfg
