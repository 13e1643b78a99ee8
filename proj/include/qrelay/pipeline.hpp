#pragma once

#include <array>
#include <string>
#include <vector>

#include "json.hpp"
#include "qrelay/config.hpp"
#include "qrelay/correlator.hpp"
#include "qrelay/timetag.hpp"
#include "qrelay/tomography.hpp"

namespace qrelay::pipeline {

using json = nlohmann::ordered_json;

// One simulated run: all detector tag streams plus the detection span.
struct TagRun {
    std::vector<tt::TimeTag> tags;  // sorted by (t, channel)
    double t0_ps = 0.0;
    double t1_ps = 0.0;

    std::vector<std::int64_t> channel_times(std::uint8_t ch) const;
    // Same, dropping tags flagged as transcoder satellites.
    std::vector<std::int64_t> channel_times_overlapped(std::uint8_t ch) const;
};

// Emission preset: XX on channel 2, X split onto channels 4/5.
TagRun simulate_emission(const cfg::ExperimentConfig& c);

// Entanglement preset: one independently seeded run per analyzer setting.
std::array<tomo::SettingTags, tomo::kSettings> simulate_entanglement(
    const cfg::ExperimentConfig& c);

// Teleport presets: Charlie H/V on channels 0/1, Bob on 2 (pass) and 3
// (fail; unused by the time-bin preset).
TagRun simulate_teleport(const cfg::ExperimentConfig& c);

struct TeleportGrids {
    corr::G3Grid pass;
    corr::G3Grid fail;  // time-bin preset: identical to pass
    double pass_center_bob_ps = 0.0;
    double fail_center_bob_ps = 0.0;
};

TeleportGrids teleport_grids(const TagRun& run, const cfg::ExperimentConfig& c);

// Runs the configured preset and writes report.json, per-channel .qtt files
// and analysis CSVs into out_dir. Returns the report.
json run_experiment(const cfg::ExperimentConfig& c, const std::string& out_dir);

// Combined teleport summary over per-input reports: mean fidelity at the
// given window width and the distance to the classical bound in sigma.
json mean_fidelity_report(const std::vector<json>& reports, double window_ps);

// FNV-1a over the canonical dump of the results section.
std::string content_hash(const json& results);

// Paths whose values differ, ignoring wall-clock fields.
std::vector<std::string> report_diff(const json& a, const json& b);

json config_to_json(const cfg::ExperimentConfig& c);

}  // namespace qrelay::pipeline
