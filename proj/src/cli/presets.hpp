#ifndef OMCV_CLI_PRESETS_HPP
#define OMCV_CLI_PRESETS_HPP

#include <string>
#include <vector>

namespace omcv::cli {

struct PresetInfo {
    std::string name;
    std::string path;
    std::string description;  // first comment line of the file
};

/// Presets live in the directory baked in at build time, overridable with
/// the OMCV_PRESET_DIR environment variable.
std::string preset_directory();
std::vector<PresetInfo> list_presets();
std::string preset_path(const std::string& name);

}  // namespace omcv::cli

#endif
