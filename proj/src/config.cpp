#include "tdcg/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace tdcg {

namespace {

std::string join(const std::vector<std::string>& keys)
{
    std::string out;
    for (const auto& k : keys)
        out += (out.empty() ? "" : ", ") + k;
    return out;
}

std::string_view trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool bare_key(std::string_view s)
{
    if (s.empty())
        return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'))
            return false;
    return true;
}

class LineParser
{
public:
    LineParser(std::string_view text, std::size_t line) : s_(text), line_(line) {}

    [[noreturn]] void fail(const std::string& what) const
    {
        throw FormatError("config line " + std::to_string(line_) + ": " + what);
    }

    void skip_ws()
    {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r'))
            ++pos_;
    }
    bool at_end_or_comment()
    {
        skip_ws();
        return pos_ >= s_.size() || s_[pos_] == '#';
    }

    Config::Value value()
    {
        skip_ws();
        if (pos_ >= s_.size())
            fail("missing value");
        if (s_[pos_] == '[')
            return array();
        if (s_[pos_] == '"')
            return quoted();
        const auto start = pos_;
        while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != '#' && s_[pos_] != ' ' &&
               s_[pos_] != '\t' && s_[pos_] != '\r')
            ++pos_;
        const std::string tok(s_.substr(start, pos_ - start));
        if (tok == "true")
            return true;
        if (tok == "false")
            return false;
        return number(tok);
    }

private:
    Config::Value number(std::string tok)
    {
        std::string clean;
        for (char c : tok)
            if (c != '_')
                clean += c;
        if (clean.empty())
            fail("empty value");
        const bool is_float = clean.find_first_of(".eE") != std::string::npos ||
                              clean == "inf" || clean == "+inf" || clean == "-inf" || clean == "nan";
        if (!is_float) {
            std::int64_t v = 0;
            const char* b = clean.data() + (clean[0] == '+' ? 1 : 0);
            const auto [p, ec] = std::from_chars(b, clean.data() + clean.size(), v);
            if (ec != std::errc() || p != clean.data() + clean.size())
                fail("invalid integer '" + tok + "'");
            return v;
        }
        try {
            std::size_t used = 0;
            const double v = std::stod(clean, &used);
            if (used != clean.size())
                fail("invalid number '" + tok + "'");
            return v;
        } catch (const std::logic_error&) {
            fail("invalid number '" + tok + "'");
        }
    }

    std::string quoted()
    {
        ++pos_;
        std::string out;
        while (pos_ < s_.size() && s_[pos_] != '"') {
            char c = s_[pos_++];
            if (c == '\\') {
                if (pos_ >= s_.size())
                    fail("unterminated escape");
                const char e = s_[pos_++];
                switch (e) {
                case 'n': c = '\n'; break;
                case 't': c = '\t'; break;
                case '"': c = '"'; break;
                case '\\': c = '\\'; break;
                default: fail(std::string("unsupported escape \\") + e);
                }
            }
            out += c;
        }
        if (pos_ >= s_.size())
            fail("unterminated string");
        ++pos_;
        return out;
    }

    Config::Array array()
    {
        ++pos_;
        Config::Array out;
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == ']') {
            ++pos_;
            return out;
        }
        while (true) {
            const auto v = value();
            if (const auto* i = std::get_if<std::int64_t>(&v))
                out.emplace_back(*i);
            else if (const auto* d = std::get_if<double>(&v))
                out.emplace_back(*d);
            else if (const auto* s = std::get_if<std::string>(&v))
                out.emplace_back(*s);
            else
                fail("arrays hold numbers or strings only");
            skip_ws();
            if (pos_ >= s_.size())
                fail("unterminated array");
            if (s_[pos_] == ',') {
                ++pos_;
                skip_ws();
                if (pos_ < s_.size() && s_[pos_] == ']') {
                    ++pos_;
                    return out;
                }
                continue;
            }
            if (s_[pos_] == ']') {
                ++pos_;
                return out;
            }
            fail("expected ',' or ']' in array");
        }
    }

    std::string_view s_;
    std::size_t pos_ = 0;
    std::size_t line_;

};

}  // namespace

ConfigError::ConfigError(const std::string& what, std::vector<std::string> keys)
    : Error(what + ": " + join(keys)), keys_(std::move(keys))
{
}

Config Config::parse(std::string_view text)
{
    Config cfg;
    cfg.source_ = std::string(text);
    std::string table;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos)
            end = text.size();
        const std::string_view raw = text.substr(start, end - start);
        start = end + 1;
        ++line_no;

        LineParser lp(raw, line_no);
        if (lp.at_end_or_comment()) {
            if (end == text.size())
                break;
            continue;
        }
        const std::string_view line = trim(raw);
        if (line.front() == '[') {
            const auto close = line.find(']');
            if (close == std::string_view::npos)
                lp.fail("unterminated table header");
            const std::string_view name = trim(line.substr(1, close - 1));
            if (!bare_key(name))
                lp.fail("invalid table name");
            const auto rest = trim(line.substr(close + 1));
            if (!rest.empty() && rest.front() != '#')
                lp.fail("trailing characters after table header");
            table = std::string(name);
            if (cfg.tables_.count(table))
                lp.fail("duplicate table [" + table + "]");
            cfg.tables_[table];
        } else {
            const auto eq = line.find('=');
            if (eq == std::string_view::npos)
                lp.fail("expected key = value");
            const std::string key(trim(line.substr(0, eq)));
            if (!bare_key(key))
                lp.fail("invalid key '" + key + "'");
            if (table.empty())
                lp.fail("key '" + key + "' outside a table");
            LineParser vp(raw.substr(raw.find('=') + 1), line_no);
            Value v = vp.value();
            if (!vp.at_end_or_comment())
                vp.fail("trailing characters after value");
            auto& t = cfg.tables_[table];
            if (t.count(key))
                lp.fail("duplicate key '" + key + "'");
            t.emplace(key, std::move(v));
        }
        if (end == text.size())
            break;
    }
    return cfg;
}

Config Config::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot read config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

bool Config::has(const std::string& table, const std::string& key) const
{
    const auto t = tables_.find(table);
    return t != tables_.end() && t->second.count(key) > 0;
}

const Config::Value& Config::get(const std::string& table, const std::string& key) const
{
    const auto t = tables_.find(table);
    if (t == tables_.end() || !t->second.count(key))
        throw ConfigError("missing config keys", {table + "." + key});
    return t->second.at(key);
}

double Config::number(const std::string& table, const std::string& key) const
{
    const auto& v = get(table, key);
    if (const auto* d = std::get_if<double>(&v))
        return *d;
    if (const auto* i = std::get_if<std::int64_t>(&v))
        return static_cast<double>(*i);
    throw ConfigError("expected a number", {table + "." + key});
}

double Config::number_or(const std::string& table, const std::string& key, double fallback) const
{
    return has(table, key) ? number(table, key) : fallback;
}

std::int64_t Config::integer(const std::string& table, const std::string& key) const
{
    const auto& v = get(table, key);
    if (const auto* i = std::get_if<std::int64_t>(&v))
        return *i;
    throw ConfigError("expected an integer", {table + "." + key});
}

std::int64_t Config::integer_or(const std::string& table, const std::string& key, std::int64_t fallback) const
{
    return has(table, key) ? integer(table, key) : fallback;
}

std::string Config::string(const std::string& table, const std::string& key) const
{
    const auto& v = get(table, key);
    if (const auto* s = std::get_if<std::string>(&v))
        return *s;
    throw ConfigError("expected a string", {table + "." + key});
}

std::string Config::string_or(const std::string& table, const std::string& key, const std::string& fallback) const
{
    return has(table, key) ? string(table, key) : fallback;
}

bool Config::boolean_or(const std::string& table, const std::string& key, bool fallback) const
{
    if (!has(table, key))
        return fallback;
    const auto& v = get(table, key);
    if (const auto* b = std::get_if<bool>(&v))
        return *b;
    throw ConfigError("expected a boolean", {table + "." + key});
}

std::vector<double> Config::numbers(const std::string& table, const std::string& key) const
{
    const auto& v = get(table, key);
    const auto* a = std::get_if<Array>(&v);
    if (!a)
        throw ConfigError("expected an array of numbers", {table + "." + key});
    std::vector<double> out;
    for (const auto& e : *a) {
        if (const auto* d = std::get_if<double>(&e))
            out.push_back(*d);
        else if (const auto* i = std::get_if<std::int64_t>(&e))
            out.push_back(static_cast<double>(*i));
        else
            throw ConfigError("expected an array of numbers", {table + "." + key});
    }
    return out;
}

void Config::set(const std::string& table, const std::string& key, Value v)
{
    tables_[table][key] = std::move(v);
}

void Config::reject_unknown(const ConfigSchema& schema) const
{
    std::vector<std::string> bad;
    for (const auto& [t, keys] : tables_) {
        const auto s = schema.find(t);
        if (s == schema.end()) {
            bad.push_back("[" + t + "]");
            continue;
        }
        for (const auto& [k, v] : keys)
            if (!s->second.count(k))
                bad.push_back(t + "." + k);
    }
    if (!bad.empty())
        throw ConfigError("unknown config keys", bad);
}

void Config::require(const std::vector<std::string>& required) const
{
    std::vector<std::string> missing;
    for (const auto& r : required) {
        const auto dot = r.find('.');
        if (!has(r.substr(0, dot), r.substr(dot + 1)))
            missing.push_back(r);
    }
    if (!missing.empty())
        throw ConfigError("missing config keys", missing);
}

namespace {

void write_value(std::ostream& out, const Config::Value& v)
{
    auto scalar = [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::string>)
            out << std::quoted(x);
        else if constexpr (std::is_same_v<T, bool>)
            out << (x ? "true" : "false");
        else
            out << x;
    };
    std::visit(
        [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Config::Array>) {
                out << '[';
                for (std::size_t i = 0; i < x.size(); ++i) {
                    if (i)
                        out << ", ";
                    std::visit(scalar, x[i]);
                }
                out << ']';
            } else {
                scalar(x);
            }
        },
        v);
}

}  // namespace

std::string Config::canonical() const
{
    std::ostringstream out;
    out << std::setprecision(17);
    for (const auto& [t, keys] : tables_)
        for (const auto& [k, v] : keys) {
            out << t << '.' << k << " = ";
            write_value(out, v);
            out << '\n';
        }
    return out.str();
}

std::string Config::to_toml() const
{
    std::ostringstream out;
    out << std::setprecision(17);
    for (const auto& [t, keys] : tables_) {
        out << (out.tellp() > 0 ? "\n[" : "[") << t << "]\n";
        for (const auto& [k, v] : keys) {
            out << k << " = ";
            write_value(out, v);
            out << '\n';
        }
    }
    return out.str();
}

std::uint64_t fnv1a64(std::string_view data)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace tdcg
