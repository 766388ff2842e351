#include "droplet/scenario.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <thread>

using namespace droplet;

namespace {

int compare_radial_main(const std::string& trace_path, const std::string& config,
                        double h, double mu_plus, double mu_minus, const std::string& out)
{
    HysteresisParams p{mu_plus, mu_minus};
    try {
        if (!config.empty()) {
            Scenario sc = load_scenario(config);
            if (!sc.is_radial())
                std::cerr << "warning: " << sc.name
                          << " is not the unit-disk radial geometry; comparison is indicative only\n";
            p = sc.params;
            h = sc.h;
        }
        p.validate();
        if (!(h > 0.0))
            throw ConfigError("--cell-size: must be positive");
    } catch (const Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }
    try {
        RadialComparison c = compare_radial(read_trace_areas(trace_path), h, p);
        std::string dest = out.empty()
            ? (std::filesystem::path(trace_path).parent_path() / "radial.csv").string()
            : out;
        write_radial_comparison_csv(dest, c);
        std::cout << std::setprecision(6) << "max_error " << c.max_error << "\nmean_error " << c.mean_error
                  << "\nworst_ratio " << c.worst_ratio << "\npinned_moves " << c.pinned_moves << '\n'
                  << (c.pass ? "PASS" : "FAIL") << " radial\n";
        return c.pass ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Grid simulator for rate-independent droplet evolution"};
    app.require_subcommand(0, 1);

    std::vector<std::string> configs;
    std::string out;
    std::optional<int> snapshots;
    std::vector<std::string> verify;
    bool quiet = false;
    int jobs = 1;
    app.add_option("--config", configs, "Scenario JSON (repeat for a batch)");
    app.add_option("--out", out, "Output directory (with several configs: parent directory)");
    app.add_option("--snapshots", snapshots, "PGM snapshot stride, 0 = off")->check(CLI::NonNegativeNumber);
    app.add_option("--verify", verify, "Comma separated certificates (default: those in the config)")
        ->delimiter(',');
    app.add_flag("--quiet", quiet, "Only print certificate summaries");
    app.add_option("--jobs", jobs, "Scenarios run concurrently")->check(CLI::PositiveNumber);

    auto* cmp = app.add_subcommand("compare-radial", "Compare a trace CSV with the exact radial branch");
    std::string trace, cmp_config, cmp_out;
    double h = 0.0, mu_plus = 0.0, mu_minus = 0.0;
    cmp->add_option("--trace", trace, "trace.csv")->required();
    auto* cc = cmp->add_option("--config", cmp_config, "Scenario the trace came from");
    cmp->add_option("--cell-size", h, "Grid spacing h")->excludes(cc);
    cmp->add_option("--mu-plus", mu_plus)->excludes(cc);
    cmp->add_option("--mu-minus", mu_minus)->excludes(cc);
    cmp->add_option("--out", cmp_out, "Comparison CSV (default: radial.csv next to the trace)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (*cmp)
        return compare_radial_main(trace, cmp_config, h, mu_plus, mu_minus, cmp_out);

    if (configs.empty()) {
        std::cerr << "--config is required\n";
        return 2;
    }

    std::optional<std::vector<std::string>> verify_list;
    if (!verify.empty())
        verify_list = verify;

    std::vector<int> codes(configs.size(), 0);
    auto one = [&](std::size_t i) {
        std::optional<std::string> dir;
        if (!out.empty()) {
            if (configs.size() == 1) {
                dir = out;
            } else {
                try {
                    dir = (std::filesystem::path(out) / load_scenario(configs[i]).name).string();
                } catch (const std::exception&) {
                    // run_scenario reports the config error
                }
            }
        }
        codes[i] = run_scenario(configs[i], dir, snapshots, verify_list, quiet);
    };

    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    int n = std::min<int>(jobs, static_cast<int>(configs.size()));
    for (int w = 0; w < n; ++w)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next++) < configs.size();)
                one(i);
        });
    for (auto& t : pool)
        t.join();
    return *std::max_element(codes.begin(), codes.end());
}
