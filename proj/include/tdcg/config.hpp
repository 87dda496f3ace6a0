#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tdcg/errors.hpp"

namespace tdcg {

/// Missing, unknown or mistyped configuration keys.
class ConfigError : public Error
{
public:
    ConfigError(const std::string& what, std::vector<std::string> keys);
    const std::vector<std::string>& keys() const { return keys_; }

private:
    std::vector<std::string> keys_;
};

/// Allowed keys per table.
using ConfigSchema = std::map<std::string, std::set<std::string>>;

/// The subset of TOML used by the experiment configs: [table] headers,
/// `key = value` with strings, integers, floats, booleans and single-line
/// arrays, and `#` comments. Keys outside a table are not allowed.
class Config
{
public:
    using Array = std::vector<std::variant<std::int64_t, double, std::string>>;
    using Value = std::variant<bool, std::int64_t, double, std::string, Array>;

    Config() = default;
    /// Throws FormatError with the line number on malformed input.
    static Config parse(std::string_view text);
    static Config load(const std::filesystem::path& path);

    const std::string& source() const { return source_; }
    bool has(const std::string& table, const std::string& key) const;
    bool has_table(const std::string& table) const { return tables_.count(table) > 0; }

    double number(const std::string& table, const std::string& key) const;
    double number_or(const std::string& table, const std::string& key, double fallback) const;
    std::int64_t integer(const std::string& table, const std::string& key) const;
    std::int64_t integer_or(const std::string& table, const std::string& key, std::int64_t fallback) const;
    std::string string(const std::string& table, const std::string& key) const;
    std::string string_or(const std::string& table, const std::string& key, const std::string& fallback) const;
    bool boolean_or(const std::string& table, const std::string& key, bool fallback) const;
    std::vector<double> numbers(const std::string& table, const std::string& key) const;

    /// Overrides or adds a value (used for --seed style command-line overrides).
    void set(const std::string& table, const std::string& key, Value v);

    /// ConfigError listing every key not present in the schema.
    void reject_unknown(const ConfigSchema& schema) const;
    /// ConfigError listing every `table.key` in `required` that is absent.
    void require(const std::vector<std::string>& required) const;

    /// Canonical `table.key = value` text, sorted, used for hashing.
    std::string canonical() const;
    /// The current values (including `set` overrides) as a config document;
    /// parsing it gives the same canonical text.
    std::string to_toml() const;

private:
    const Value& get(const std::string& table, const std::string& key) const;

    std::string source_;
    std::map<std::string, std::map<std::string, Value>> tables_;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view data);

}  // namespace tdcg
