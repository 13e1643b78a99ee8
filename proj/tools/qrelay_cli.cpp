#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qrelay/config.hpp"
#include "qrelay/correlator.hpp"
#include "qrelay/pipeline.hpp"
#include "qrelay/timetag.hpp"
#include "qrelay/tomography.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

using qrelay::pipeline::json;

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw qrelay::corr::analysis_error("cannot open report: " + path);
    return json::parse(in);
}

qrelay::cfg::ExperimentConfig load_config(const std::string& path, std::uint64_t* seed,
                                          std::string* preset, int threads) {
    auto c = qrelay::cfg::parse_config_file(path);
    if (seed) c.seed = *seed;
    if (preset && !preset->empty()) c.preset = qrelay::cfg::preset_from_string(*preset);
    if (threads > 0) c.threads = threads;
    return c;
}

void write_csv_histogram(const std::string& path, const qrelay::corr::Histogram1D& h) {
    std::ofstream out(path);
    out << "bin_start_ps,count\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i)
        out << h.t_min_ps + h.bin_ps * static_cast<double>(i) << "," << h.counts[i] << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qrelay: GHz-clocked time-bin teleportation relay simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::string preset_override;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;

    auto add_run_opts = [&](CLI::App* sub, bool need_config) {
        auto* o = sub->add_option("--config", config_path, "experiment config file");
        if (need_config) o->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--preset", preset_override, "override the configured preset");
        sub->add_option("--seed", seed, "override the configured seed")
            ->each([&](const std::string&) { seed_set = true; });
        sub->add_option("--threads", threads, "worker thread count");
    };

    auto* cmd_run = app.add_subcommand("run", "run the configured preset and write a report");
    add_run_opts(cmd_run, true);

    auto* cmd_validate = app.add_subcommand("validate", "check a config file without running");
    cmd_validate->add_option("--config", config_path, "experiment config file")->required();

    std::string tags_path;
    int ch_a = 4;
    int ch_b = 5;
    double bin_ps = 40.0;
    double range_ps = 50000.0;
    double period_ps = 0.0;
    std::size_t n_periods = 7;
    std::string csv_out;
    bool drop_satellites = false;

    auto* cmd_g2 = app.add_subcommand("g2", "correlation histogram from a tag file");
    cmd_g2->add_option("tags", tags_path, "QTT1 tag file")->required();
    cmd_g2->add_option("--ch-a", ch_a, "first channel");
    cmd_g2->add_option("--ch-b", ch_b, "second channel");
    cmd_g2->add_option("--bin-ps", bin_ps, "bin width [ps]");
    cmd_g2->add_option("--range-ps", range_ps, "delay range [ps]");
    cmd_g2->add_option("--out", csv_out, "CSV output path");
    cmd_g2->add_flag("--drop-satellites", drop_satellites, "ignore non-overlapped tags");
    cmd_g2->add_option("--threads", threads, "worker thread count");

    auto* cmd_grid = app.add_subcommand("grid", "clock-referenced 2D grid from a tag file");
    cmd_grid->add_option("tags", tags_path, "QTT1 tag file")->required();
    cmd_grid->add_option("--ch-a", ch_a, "first channel");
    cmd_grid->add_option("--ch-b", ch_b, "second channel");
    cmd_grid->add_option("--bin-ps", bin_ps, "bin width [ps]");
    cmd_grid->add_option("--period-ps", period_ps, "clock period [ps]")->required();
    cmd_grid->add_option("--periods", n_periods, "periods per grid span");
    cmd_grid->add_option("--threads", threads, "worker thread count");

    auto* cmd_tomo = app.add_subcommand("tomo", "run entanglement tomography");
    add_run_opts(cmd_tomo, true);

    auto* cmd_tele = app.add_subcommand("teleport", "run a teleportation preset or combine reports");
    add_run_opts(cmd_tele, false);
    std::vector<std::string> report_paths;
    double mean_window_ps = 228.0;
    cmd_tele->add_option("--reports", report_paths, "teleportation reports to combine");
    cmd_tele->add_option("--window-ps", mean_window_ps, "window width for the combined fidelity");

    auto* cmd_diff = app.add_subcommand("report-diff", "compare two run reports");
    std::string report_a;
    std::string report_b;
    cmd_diff->add_option("a", report_a, "first report.json")->required();
    cmd_diff->add_option("b", report_b, "second report.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*cmd_validate) {
            const auto diags = qrelay::cfg::validate_config_file(config_path);
            for (const auto& d : diags) std::cerr << d << "\n";
            if (!diags.empty()) return kExitConfig;
            std::cout << "ok\n";
            return kExitOk;
        }

        if (*cmd_run || *cmd_tomo || (*cmd_tele && report_paths.empty())) {
            auto c = load_config(config_path, seed_set ? &seed : nullptr, &preset_override,
                                 threads);
            if (*cmd_tomo && c.preset != qrelay::cfg::Preset::entanglement)
                throw qrelay::cfg::config_error("tomo requires the entanglement preset");
            if (*cmd_tele && c.preset != qrelay::cfg::Preset::teleport_superposition &&
                c.preset != qrelay::cfg::Preset::teleport_timebin)
                throw qrelay::cfg::config_error("teleport requires a teleport preset");
            const auto report = qrelay::pipeline::run_experiment(c, out_dir);
            std::cout << report["results"].dump(2) << "\n";
            std::cout << "report: " << out_dir << "/report.json\n";
            return kExitOk;
        }

        if (*cmd_tele) {
            std::vector<json> reports;
            reports.reserve(report_paths.size());
            for (const auto& p : report_paths) reports.push_back(load_json(p));
            const auto combined = qrelay::pipeline::mean_fidelity_report(reports, mean_window_ps);
            std::cout << combined.dump(2) << "\n";
            return kExitOk;
        }

        if (*cmd_g2) {
            std::uint64_t duration = 0;
            const auto tags = qrelay::tt::read_qtt(tags_path, &duration);
            std::vector<std::int64_t> a;
            std::vector<std::int64_t> b;
            for (const auto& t : tags) {
                if (drop_satellites && (t.flags & qrelay::tt::kFlagNonOverlapped)) continue;
                if (t.channel == ch_a) a.push_back(t.t_ps);
                if (t.channel == ch_b) b.push_back(t.t_ps);
            }
            const auto h = qrelay::corr::g2_histogram(a, b, bin_ps, range_ps,
                                                      static_cast<double>(duration),
                                                      threads > 0 ? threads : 1);
            if (!csv_out.empty()) write_csv_histogram(csv_out, h);
            std::int64_t pairs = 0;
            for (auto v : h.counts) pairs += v;
            std::cout << "singles_a " << a.size() << " singles_b " << b.size() << " pairs "
                      << pairs << "\n";
            return kExitOk;
        }

        if (*cmd_grid) {
            std::uint64_t duration = 0;
            const auto tags = qrelay::tt::read_qtt(tags_path, &duration);
            std::vector<std::int64_t> a;
            std::vector<std::int64_t> b;
            for (const auto& t : tags) {
                if (t.channel == ch_a) a.push_back(t.t_ps);
                if (t.channel == ch_b) b.push_back(t.t_ps);
            }
            const auto g = qrelay::corr::clocked_g2_grid(a, b, period_ps, 0.0, bin_ps, n_periods,
                                                         threads > 0 ? threads : 1);
            std::cout << "g2_block0 " << g.g2_block0 << (g.period_warning ? " period_warning" : "")
                      << "\n";
            return kExitOk;
        }

        if (*cmd_diff) {
            const auto diffs =
                qrelay::pipeline::report_diff(load_json(report_a), load_json(report_b));
            for (const auto& d : diffs) std::cout << d << "\n";
            if (!diffs.empty()) {
                std::cerr << diffs.size() << " differing fields\n";
                return kExitRuntime;
            }
            std::cout << "identical\n";
            return kExitOk;
        }
    } catch (const qrelay::cfg::config_error& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    } catch (const qrelay::qstate::validation_error& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
