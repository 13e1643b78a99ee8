#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qrelay/optics.hpp"
#include "qrelay/source.hpp"

namespace qrelay::cfg {

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Preset { emission, entanglement, teleport_superposition, teleport_timebin };

Preset preset_from_string(const std::string& s);
std::string to_string(Preset p);

struct LaserConfig {
    std::string input_label = "e+l";  // e, l, e+l, e+il
    double mean_photon = 0.1;
    double pulse_fwhm_ps = 130.0;
    // shifts the decoded laser photon onto the X-photon arrival peak
    double alignment_offset_ps = 400.0;

    qstate::PolState input_pol() const;
};

struct AnalysisConfig {
    double g2_bin_ps = 40.0;
    double g2_range_ps = 50000.0;
    double grid_bin_ps = 40.0;
    std::size_t grid_periods = 7;
    double lifetime_bin_ps = 120.0;
    double tomo_window_ps = 96.0;
    double tomo_step_ps = 24.0;
    double tomo_center_min_ps = -200.0;
    double tomo_center_max_ps = 2100.0;
    std::vector<double> teleport_windows_ps{85.0, 96.0, 228.0};
    double herald_window_ps = 500.0;
    double charlie_range_ps = 2500.0;
    double bob_range_ps = 2500.0;
    double bob_offset_ps = 0.0;
    bool debug_events = false;
};

struct ExperimentConfig {
    Preset preset = Preset::emission;
    std::uint64_t seed = 1;
    int threads = 1;
    source::QDParams qd;
    double purity = 1.0;
    source::ClockConfig clock;
    std::array<optics::DetectorParams, 6> detectors{};
    optics::AMZIParams amzi_alice;
    optics::AMZIParams amzi_charlie;
    optics::AMZIParams amzi_bob;
    optics::BSMConfig bsm;
    LaserConfig laser;
    AnalysisConfig analysis;
};

// Parses the unit-suffixed key = value section format. Throws config_error
// listing every diagnostic when the file is invalid.
ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin = "<text>");

// Full schema / unit-range / preset-completeness check without running.
std::vector<std::string> validate_config_text(const std::string& text,
                                              const std::string& origin = "<text>");
std::vector<std::string> validate_config_file(const std::string& path);

}  // namespace qrelay::cfg
