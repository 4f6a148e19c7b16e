#include "cli/presets.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#ifndef OMCV_PRESET_DIR
#define OMCV_PRESET_DIR "presets"
#endif

namespace omcv::cli {

namespace fs = std::filesystem;

std::string preset_directory() {
    if (const char* env = std::getenv("OMCV_PRESET_DIR")) return env;
    return OMCV_PRESET_DIR;
}

std::vector<PresetInfo> list_presets() {
    std::vector<PresetInfo> out;
    const fs::path dir = preset_directory();
    if (!fs::is_directory(dir)) return out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".cfg") continue;
        PresetInfo info;
        info.name = entry.path().stem().string();
        info.path = entry.path().string();
        std::ifstream in(entry.path());
        std::string line;
        if (std::getline(in, line) && line.rfind("#", 0) == 0)
            info.description = line.substr(line.find_first_not_of("# \t"));
        out.push_back(std::move(info));
    }
    std::sort(out.begin(), out.end(),
              [](const PresetInfo& a, const PresetInfo& b) { return a.name < b.name; });
    return out;
}

std::string preset_path(const std::string& name) {
    for (const auto& info : list_presets())
        if (info.name == name) return info.path;
    throw std::out_of_range("unknown preset: " + name + " (directory " + preset_directory() +
                            ")");
}

}  // namespace omcv::cli
