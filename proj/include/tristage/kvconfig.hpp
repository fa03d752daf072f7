#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace tristage {

/// Flat `key = value` configuration. Lines starting with '#' are comments.
/// Keys are kept sorted so that echoes are byte-stable.
class KeyValues {
public:
    static KeyValues parse(std::string_view text, std::string_view origin = "<config>");
    static KeyValues read(const std::filesystem::path& path);

    /// Applies a `key=value` override (as given on the command line).
    void set_assignment(std::string_view assignment);
    void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

    bool contains(const std::string& key) const { return values_.count(key) != 0; }
    std::optional<std::string> get(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;

    /// Throws a config error naming any key outside `known`.
    void reject_unknown(const std::set<std::string>& known, std::string_view what) const;

    const std::map<std::string, std::string>& entries() const noexcept { return values_; }

    std::string to_string() const;

private:
    std::map<std::string, std::string> values_;
};

} // namespace tristage
