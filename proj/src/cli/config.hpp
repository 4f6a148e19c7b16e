#ifndef OMCV_CLI_CONFIG_HPP
#define OMCV_CLI_CONFIG_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace omcv::cli {

/// Section/key/value text format: `key = value` lines grouped under
/// `[section]` headers, `#` comments, values either scalars or
/// comma-separated lists. The experiment selector lives above any section.
struct RawConfig {
    std::string experiment;
    std::map<std::string, std::string> entries;  // "section.key" -> raw value
    std::string source_text;

    bool has(const std::string& key) const { return entries.count(key) > 0; }
};

struct ParseIssue {
    int line = 0;
    std::string message;
};

struct ParseResult {
    std::optional<RawConfig> config;
    std::vector<ParseIssue> issues;
    bool ok() const { return config.has_value() && issues.empty(); }
};

ParseResult parse_config_text(const std::string& text);
ParseResult parse_config_file(const std::string& path);

enum class FieldType { Double, Int, Bool, UInt64, String, DoubleList };

struct FieldSpec {
    std::string key;  // "section.key"
    FieldType type = FieldType::Double;
    bool required = false;
    std::string default_value;  // used when !required
    std::string help;
};

/// Field-by-field validation against the experiment's schema: missing
/// required keys, unparsable values, and unknown keys are all reported.
struct ValidationReport {
    std::vector<std::string> errors;
    std::vector<std::string> warnings;
    bool ok() const { return errors.empty(); }
};

const std::vector<FieldSpec>& schema_for(const std::string& experiment);
std::vector<std::string> known_experiments();

ValidationReport validate_against_schema(const RawConfig& config);

/// Typed access on top of a schema-validated RawConfig.
class ConfigView {
  public:
    explicit ConfigView(const RawConfig& raw);

    double number(const std::string& key) const;
    int integer(const std::string& key) const;
    bool boolean(const std::string& key) const;
    std::uint64_t uint64(const std::string& key) const;
    std::string text(const std::string& key) const;
    std::vector<double> list(const std::string& key) const;

    const std::string& experiment() const { return raw_.experiment; }
    const RawConfig& raw() const { return raw_; }

  private:
    std::string lookup(const std::string& key) const;
    const RawConfig& raw_;
};

/// FNV-1a over the raw config text; recorded in the metadata sidecar.
std::uint64_t config_hash(const std::string& text);

}  // namespace omcv::cli

#endif
