#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace idian {

/// Minimal TOML subset for experiment configs: [section] headers, scalar
/// key = value pairs (bool, integer, float, quoted string) and single-line
/// string arrays. No nesting, no dates, no multi-line values.
struct TomlValue {
    enum class Kind { boolean, integer, real, string, string_array };
    Kind kind = Kind::string;
    bool b = false;
    long long i = 0;
    double d = 0.0;
    std::string s;
    std::vector<std::string> arr;
};

class TomlTable {
public:
    static TomlTable parse_file(const std::filesystem::path& path);
    static TomlTable parse_string(const std::string& text, const std::string& origin);

    bool has(const std::string& section, const std::string& key) const;

    /// Typed getters fall back to the default when the key is absent and
    /// throw ConfigError (naming section.key) on a type mismatch. Integers
    /// promote to reals.
    bool get_bool(const std::string& section, const std::string& key, bool def) const;
    long long get_int(const std::string& section, const std::string& key, long long def) const;
    double get_real(const std::string& section, const std::string& key, double def) const;
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& def) const;
    std::vector<std::string> get_string_array(const std::string& section, const std::string& key,
                                              const std::vector<std::string>& def) const;

    /// Rejects unknown keys in a section so typos fail loudly.
    void check_known(const std::string& section, const std::vector<std::string>& keys) const;
    void check_known_sections(const std::vector<std::string>& sections) const;

private:
    const TomlValue* find(const std::string& section, const std::string& key) const;

    std::map<std::string, std::map<std::string, TomlValue>> sections_;
};

} // namespace idian
