#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cli/config.hpp"
#include "cli/experiments.hpp"
#include "cli/presets.hpp"

namespace {

int load_and(const std::string& config_path, const std::string& preset,
             const std::function<int(const omcv::cli::RawConfig&)>& action) {
    std::string path = config_path;
    if (!preset.empty()) {
        try {
            path = omcv::cli::preset_path(preset);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return omcv::cli::kExitConfig;
        }
    }
    omcv::cli::ParseResult parsed = omcv::cli::parse_config_file(path);
    if (!parsed.ok()) {
        for (const auto& issue : parsed.issues)
            std::cerr << path << ":" << issue.line << ": " << issue.message << "\n";
        return omcv::cli::kExitConfig;
    }
    return action(*parsed.config);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Driven-dissipative optomechanics simulator: non-Gaussian cluster "
                 "preparation, homodyne measurement, and the measurement-based cubic gate"};
    app.require_subcommand(1);

    std::string run_config, run_preset;
    auto* run = app.add_subcommand("run", "execute an experiment config, write CSV + metadata");
    run->add_option("config", run_config, "config file path");
    run->add_option("--preset", run_preset, "run a named preset instead of a file");

    std::string val_config, val_preset;
    auto* validate = app.add_subcommand("validate", "check a config without executing it");
    validate->add_option("config", val_config, "config file path");
    validate->add_option("--preset", val_preset, "validate a named preset");

    auto* presets = app.add_subcommand("presets", "preset catalogue");
    presets->require_subcommand(1);
    auto* presets_list = presets->add_subcommand("list", "list available presets");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        if (run_config.empty() && run_preset.empty()) {
            std::cerr << "error: run needs a config path or --preset\n";
            return omcv::cli::kExitConfig;
        }
        return load_and(run_config, run_preset, omcv::cli::run_experiment);
    }
    if (validate->parsed()) {
        if (val_config.empty() && val_preset.empty()) {
            std::cerr << "error: validate needs a config path or --preset\n";
            return omcv::cli::kExitConfig;
        }
        return load_and(val_config, val_preset, [](const omcv::cli::RawConfig& cfg) {
            return omcv::cli::validate_and_report(cfg) ? omcv::cli::kExitOk
                                                       : omcv::cli::kExitConfig;
        });
    }
    if (presets->parsed() && presets_list->parsed()) {
        const auto catalogue = omcv::cli::list_presets();
        if (catalogue.empty()) {
            std::cout << "no presets found in " << omcv::cli::preset_directory() << "\n";
            return omcv::cli::kExitOk;
        }
        for (const auto& info : catalogue)
            std::cout << info.name << "\t" << info.description << "\n";
        return omcv::cli::kExitOk;
    }
    return omcv::cli::kExitConfig;
}
