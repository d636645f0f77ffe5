// config.hpp: flat key=value run configuration with a fixed per-command
// schema, file loading, and command-line overrides.
//
// A config file holds one `key = value` pair per line; blank lines and
// `#` comments are skipped. Values run to the end of the line, so paths may
// contain spaces. Overrides applied later win over earlier settings and over
// the file ("last writer wins"). Keys outside the schema are rejected by
// name.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "core/common.hpp"

namespace pairloc {

struct KeySpec {
    std::string key;
    std::string default_value;
    std::string help;
    bool required = false;  // must be set by file or override before use
};

class RunConfig {
  public:
    explicit RunConfig(std::string command, std::vector<KeySpec> schema);

    const std::string& command() const { return command_; }
    const std::vector<KeySpec>& schema() const { return schema_; }

    /// Parse a key=value file into this config. Unknown keys and malformed
    /// lines raise a config error naming the key or line.
    void load_file(const std::string& path);

    /// Set one key, overriding any earlier value.
    void set(const std::string& key, const std::string& value);

    bool is_set(const std::string& key) const;

    /// Current value, falling back to the schema default. A required key
    /// that was never set raises a config error.
    std::string get_string(const std::string& key) const;
    double get_double(const std::string& key) const;
    int get_int(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    /// Accepts on/off, true/false, yes/no, 1/0 (case-insensitive).
    bool get_bool(const std::string& key) const;

    /// One line per key: name, default, required marker, and help text.
    std::string help_text() const;

  private:
    const KeySpec& spec_for(const std::string& key) const;

    std::string command_;
    std::vector<KeySpec> schema_;
    std::map<std::string, std::string> values_;
};

}  // namespace pairloc
