#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli/config.hpp"
#include "cli/experiments.hpp"
#include "cli/presets.hpp"

using namespace omcv::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path temp_dir() {
    fs::path dir = fs::temp_directory_path() / "omcv_cli_tests";
    fs::create_directories(dir);
    return dir;
}

int run_tool(const std::string& args) {
    const std::string cmd = std::string(OMCV_TOOL_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

const char* kTinyScan = R"(# tiny scan
experiment = stability-scan

[physical]
kappa = 0.5
Gamma = 0.0

[scan]
n_samples = 25
seed = 7
max_amplitude = 2.0

[output]
path = {OUT}
)";

std::string instantiate(const char* text, const std::string& out_path) {
    std::string s(text);
    const std::string token = "{OUT}";
    s.replace(s.find(token), token.size(), out_path);
    return s;
}

}  // namespace

TEST_CASE("config parsing: sections, comments, duplicate and malformed lines") {
    ParseResult ok = parse_config_text(
        "experiment = stability-scan\n"
        "[scan]\n"
        "n_samples = 10  # trailing comment\n"
        "[output]\n"
        "path = out.csv\n");
    CHECK(ok.ok());
    CHECK(ok.config->experiment == "stability-scan");
    CHECK(ok.config->entries.at("scan.n_samples") == "10");

    ParseResult dup = parse_config_text(
        "experiment = stability-scan\n[scan]\nseed = 1\nseed = 2\n");
    CHECK_FALSE(dup.ok());

    ParseResult broken = parse_config_text("experiment = x\n[scan\nseed = 1\n");
    CHECK_FALSE(broken.ok());

    ParseResult missing = parse_config_text("[scan]\nseed = 1\n");
    CHECK_FALSE(missing.ok());
}

TEST_CASE("schema validation reports missing, unknown, and unparsable fields") {
    ParseResult parsed = parse_config_text(
        "experiment = cubic-steady\n"
        "[physical]\n"
        "kappa = ten\n"
        "bogus = 1\n"
        "[output]\n"
        "path = out.csv\n");
    REQUIRE(parsed.config.has_value());
    ValidationReport report = validate_against_schema(*parsed.config);
    CHECK_FALSE(report.ok());

    bool saw_missing = false, saw_unknown = false, saw_parse = false;
    for (const auto& err : report.errors) {
        saw_missing = saw_missing || err.find("missing required field: physical.r") == 0;
        saw_unknown = saw_unknown || err.find("unknown key: physical.bogus") == 0;
        saw_parse = saw_parse || err.find("field physical.kappa") == 0;
    }
    CHECK(saw_missing);
    CHECK(saw_unknown);
    CHECK(saw_parse);

    ParseResult unknown_exp = parse_config_text("experiment = nonsense\n");
    CHECK_FALSE(validate_against_schema(*unknown_exp.config).ok());
}

TEST_CASE("all shipped presets pass schema validation") {
    setenv("OMCV_PRESET_DIR", OMCV_PRESET_DIR, 1);
    const auto presets = list_presets();
    CHECK(presets.size() >= 8);
    for (const auto& info : presets) {
        ParseResult parsed = parse_config_file(info.path);
        REQUIRE_MESSAGE(parsed.ok(), info.name);
        ValidationReport report = validate_against_schema(*parsed.config);
        for (const auto& err : report.errors) MESSAGE(info.name, ": ", err);
        CHECK(report.ok());
    }
}

TEST_CASE("stability scan: determinism, row count, exit codes") {
    const fs::path dir = temp_dir();
    const std::string out1 = (dir / "scan1.csv").string();
    const std::string out2 = (dir / "scan2.csv").string();

    ParseResult a = parse_config_text(instantiate(kTinyScan, out1));
    ParseResult b = parse_config_text(instantiate(kTinyScan, out2));
    REQUIRE(a.ok());
    REQUIRE(b.ok());
    CHECK(run_experiment(*a.config) == kExitOk);
    CHECK(run_experiment(*b.config) == kExitOk);

    const std::string csv1 = slurp(out1);
    const std::string csv2 = slurp(out2);
    CHECK(csv1 == csv2);  // bit-identical for identical config + seed

    int lines = 0;
    for (char c : csv1) lines += (c == '\n');
    CHECK(lines == 26);  // header + 25 samples

    CHECK(fs::exists(out1 + ".meta.json"));
    const std::string meta = slurp(out1 + ".meta.json");
    CHECK(meta.find("config_hash") != std::string::npos);
}

TEST_CASE("cubic-steady runs end to end at tiny cutoffs") {
    const fs::path dir = temp_dir();
    const std::string out = (dir / "steady.csv").string();
    std::ostringstream cfg;
    cfg << "experiment = cubic-steady\n"
        << "[physical]\nkappa = 10.0\nr = 0.3\ngamma = 0.05\n"
        << "[numerics]\nmech_cutoff = 10\ncavity_cutoff = 3\nmax_time = 80\n"
        << "[output]\npath = " << out << "\n";
    ParseResult parsed = parse_config_text(cfg.str());
    REQUIRE(parsed.ok());
    CHECK(run_experiment(*parsed.config) == kExitOk);

    std::ifstream in(out);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(header == "nbar,gamma_m,r,gamma,s,fidelity");
    const double fid = std::stod(row.substr(row.rfind(',') + 1));
    CHECK(fid > 0.9);
}

TEST_CASE("tool exit codes: empty config, invalid stability, missing file") {
    const fs::path dir = temp_dir();
    const std::string empty_path = (dir / "empty.cfg").string();
    std::ofstream(empty_path) << "";
    CHECK(run_tool("run " + empty_path) == 1);
    CHECK(run_tool("validate " + empty_path) == 1);
    CHECK(run_tool("run " + (dir / "does-not-exist.cfg").string()) == 1);

    const std::string unstable_path = (dir / "unstable.cfg").string();
    std::ofstream(unstable_path) << "experiment = cubic-steady\n"
                                    "[physical]\nkappa = 10.0\nr = 1.2\ngamma = 0.05\n"
                                    "[numerics]\nmech_cutoff = 10\nmax_time = 50\n"
                                    "[output]\npath = /tmp/unreached.csv\n";
    CHECK(run_tool("validate " + unstable_path) == 1);

    setenv("OMCV_PRESET_DIR", OMCV_PRESET_DIR, 1);
    CHECK(run_tool("presets list") == 0);
    CHECK(run_tool("validate --preset fig2") == 0);
    CHECK(run_tool("validate --preset figS1") == 0);
}

TEST_CASE("numerical failure surfaces as exit code 2") {
    const fs::path dir = temp_dir();
    const std::string out = (dir / "short.csv").string();
    std::ostringstream cfg;
    cfg << "experiment = cubic-steady\n"
        << "[physical]\nkappa = 10.0\nr = 0.3\ngamma = 0.05\n"
        << "[numerics]\nmech_cutoff = 10\ncavity_cutoff = 3\nmax_time = 0.5\n"
        << "[output]\npath = " << out << "\n";
    ParseResult parsed = parse_config_text(cfg.str());
    REQUIRE(parsed.ok());
    CHECK(run_experiment(*parsed.config) == kExitNumerical);
}


