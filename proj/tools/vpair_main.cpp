#include <chrono>
#include <functional>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "vpair/dpo.hpp"
#include "vpair/dpo_selfcheck.hpp"
#include "vpair/mock_server.hpp"
#include "vpair/pipeline.hpp"
#include "vpair/run_config.hpp"

namespace {

int run_stage(const std::string& config_path, const std::vector<std::string>& overrides,
              bool needs_lock, const std::function<void(const vpair::RunConfig&)>& stage) {
    if (config_path.empty()) {
        std::cerr << "--config is required for pipeline stages\n";
        return 2;
    }
    vpair::RunConfig cfg;
    try {
        cfg = vpair::load_run_config(config_path, overrides);
    } catch (const vpair::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
    try {
        if (needs_lock) {
            vpair::RunLock lock(cfg.run_dir);
            stage(cfg);
        } else {
            stage(cfg);
        }
    } catch (const vpair::StageOrderError& e) {
        std::cerr << "stage order error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

int serve_mock_forever(const std::string& script_path, int port) {
    try {
        vpair::MockScript script;
        if (!script_path.empty()) script = vpair::load_mock_script_file(script_path);
        vpair::MockServer server(std::move(script));
        server.start(port);
        std::cout << "mock endpoint at " << server.base_url() << " (ctrl-c to stop)\n";
        while (true) {
            std::this_thread::sleep_for(std::chrono::seconds(3600));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"video-caption preference pair synthesis pipeline"};
    app.require_subcommand(1);
    app.fallthrough();  // lets "vpair run-all --config x" reach the global options

    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "Run configuration file (JSON)");
    app.add_option("--set", overrides, "Override a config key, e.g. --set delta=6")->take_all();

    CLI::App* ingest =
        app.add_subcommand("ingest", "Load manifest, filter blocklist, plan frames");
    CLI::App* caption = app.add_subcommand("caption", "Generate captions for every aspect");
    CLI::App* judge = app.add_subcommand("judge", "Score captions with the judge endpoint");
    CLI::App* pair = app.add_subcommand("pair", "Assemble and filter preference pairs");
    CLI::App* export_cmd = app.add_subcommand("export", "Write the DPO-ready dataset");
    std::string ablation_aspect;
    export_cmd->add_option("--ablation", ablation_aspect,
                           "Export prompt-only captions for one aspect instead "
                           "(general|temporal|spatial)");
    CLI::App* report = app.add_subcommand("report", "Print per-aspect retention statistics");
    CLI::App* run_all_cmd = app.add_subcommand("run-all", "Run every stage in order");
    CLI::App* dpo_check = app.add_subcommand("dpo-check", "Run the DPO numeric property suite");
    std::string trace_out;
    dpo_check->add_option("--trace-out", trace_out,
                          "Also write a demo training trace (step, loss, mean_z) here");
    CLI::App* serve_mock =
        app.add_subcommand("serve-mock", "Serve the deterministic mock endpoint");
    std::string script_path;
    int port = 8099;
    serve_mock->add_option("--script", script_path, "Mock script file (JSON)");
    serve_mock->add_option("--port", port, "Port to bind (default 8099)");

    CLI11_PARSE(app, argc, argv);

    if (dpo_check->parsed()) {
        bool ok = vpair::run_dpo_checks(std::cout);
        if (!trace_out.empty()) {
            vpair::ToyPolicy policy = vpair::ToyPolicy::uniform(2, 0.1);
            vpair::TrainTrace trace = vpair::toy_dpo_train({{{0}, {1}}}, policy, 100, 1.0);
            vpair::write_trace_jsonl(trace_out, trace);
            std::cout << "trace (" << trace.steps.size() << " records) -> " << trace_out << "\n";
        }
        return ok ? 0 : 1;
    }
    if (serve_mock->parsed()) {
        return serve_mock_forever(script_path, port);
    }
    if (ingest->parsed()) {
        return run_stage(config_path, overrides, true,
                         [](const vpair::RunConfig& c) { vpair::stage_ingest(c, std::cout); });
    }
    if (caption->parsed()) {
        return run_stage(config_path, overrides, true,
                         [](const vpair::RunConfig& c) { vpair::stage_caption(c, std::cout); });
    }
    if (judge->parsed()) {
        return run_stage(config_path, overrides, true,
                         [](const vpair::RunConfig& c) { vpair::stage_judge(c, std::cout); });
    }
    if (pair->parsed()) {
        return run_stage(config_path, overrides, true,
                         [](const vpair::RunConfig& c) { vpair::stage_pair(c, std::cout); });
    }
    if (export_cmd->parsed()) {
        if (!ablation_aspect.empty()) {
            auto aspect = vpair::aspect_from_name(ablation_aspect);
            if (!aspect) {
                std::cerr << "unknown aspect \"" << ablation_aspect << "\"\n";
                return 2;
            }
            return run_stage(config_path, overrides, true, [aspect](const vpair::RunConfig& c) {
                vpair::stage_export_ablation(c, *aspect, std::cout);
            });
        }
        return run_stage(config_path, overrides, true,
                         [](const vpair::RunConfig& c) { vpair::stage_export(c, std::cout); });
    }
    if (report->parsed()) {
        return run_stage(config_path, overrides, false,
                         [](const vpair::RunConfig& c) { vpair::stage_report(c, std::cout); });
    }
    if (run_all_cmd->parsed()) {
        int failed_requests = 0;
        int rc = run_stage(config_path, overrides, true, [&](const vpair::RunConfig& c) {
            failed_requests = vpair::run_all(c, std::cout).failed_requests;
        });
        if (rc != 0) return rc;
        if (failed_requests > 0) {
            std::cerr << failed_requests << " request(s) permanently failed\n";
            return 4;
        }
        return 0;
    }
    return 0;
}
