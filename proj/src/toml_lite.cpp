#include "idian/toml_lite.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "idian/common.hpp"

namespace idian {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

// Drops an unquoted trailing comment.
std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') quoted = !quoted;
        else if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
}

std::string parse_quoted(const std::string& raw, const std::string& where) {
    if (raw.size() < 2 || raw.back() != '"')
        throw ParseError(where + ": unterminated string " + raw);
    std::string out;
    for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
        char c = raw[i];
        if (c == '\\') {
            if (i + 2 >= raw.size()) throw ParseError(where + ": dangling escape");
            char e = raw[++i];
            if (e == '"') out.push_back('"');
            else if (e == '\\') out.push_back('\\');
            else throw ParseError(where + ": unsupported escape \\" + std::string(1, e));
        } else if (c == '"') {
            throw ParseError(where + ": stray quote inside string");
        } else {
            out.push_back(c);
        }
    }
    return out;
}

TomlValue parse_value(const std::string& raw, const std::string& where) {
    TomlValue v;
    if (raw.empty()) throw ParseError(where + ": empty value");

    if (raw.front() == '"') {
        v.kind = TomlValue::Kind::string;
        v.s = parse_quoted(raw, where);
        return v;
    }
    if (raw.front() == '[') {
        if (raw.back() != ']') throw ParseError(where + ": unterminated array");
        v.kind = TomlValue::Kind::string_array;
        std::string body = trim(raw.substr(1, raw.size() - 2));
        while (!body.empty()) {
            std::size_t cut = std::string::npos;
            bool quoted = false;
            for (std::size_t i = 0; i < body.size(); ++i) {
                if (body[i] == '"') quoted = !quoted;
                else if (body[i] == ',' && !quoted) { cut = i; break; }
            }
            const std::string item = trim(cut == std::string::npos ? body : body.substr(0, cut));
            if (item.empty()) throw ParseError(where + ": empty array element");
            if (item.front() != '"') throw ParseError(where + ": array elements must be strings");
            v.arr.push_back(parse_quoted(item, where));
            body = cut == std::string::npos ? std::string() : trim(body.substr(cut + 1));
        }
        return v;
    }
    if (raw == "true" || raw == "false") {
        v.kind = TomlValue::Kind::boolean;
        v.b = raw == "true";
        return v;
    }

    const bool looks_integer = raw.find_first_of(".eE") == std::string::npos;
    if (looks_integer) {
        long long i = 0;
        auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), i);
        if (ec == std::errc() && p == raw.data() + raw.size()) {
            v.kind = TomlValue::Kind::integer;
            v.i = i;
            return v;
        }
    }
    double d = 0.0;
    auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), d);
    if (ec == std::errc() && p == raw.data() + raw.size()) {
        v.kind = TomlValue::Kind::real;
        v.d = d;
        return v;
    }
    throw ParseError(where + ": cannot parse value '" + raw + "'");
}

const char* kind_name(TomlValue::Kind k) {
    switch (k) {
        case TomlValue::Kind::boolean: return "bool";
        case TomlValue::Kind::integer: return "integer";
        case TomlValue::Kind::real: return "float";
        case TomlValue::Kind::string: return "string";
        case TomlValue::Kind::string_array: return "string array";
    }
    return "?";
}

[[noreturn]] void type_error(const std::string& section, const std::string& key,
                             const TomlValue& v, const char* wanted) {
    throw ConfigError("config " + section + "." + key + ": expected " + wanted + ", got " +
                      kind_name(v.kind));
}

} // namespace

TomlTable TomlTable::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str(), path.string());
}

TomlTable TomlTable::parse_string(const std::string& text, const std::string& origin) {
    TomlTable t;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = origin + ":" + std::to_string(lineno);
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError(where + ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ParseError(where + ": empty section name");
            t.sections_[section];
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(where + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ParseError(where + ": empty key");
        auto& sec = t.sections_[section];
        if (sec.count(key)) throw ParseError(where + ": duplicate key '" + key + "'");
        sec[key] = parse_value(trim(line.substr(eq + 1)), where);
    }
    return t;
}

const TomlValue* TomlTable::find(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    if (s == sections_.end()) return nullptr;
    auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
}

bool TomlTable::has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
}

bool TomlTable::get_bool(const std::string& section, const std::string& key, bool def) const {
    const TomlValue* v = find(section, key);
    if (!v) return def;
    if (v->kind != TomlValue::Kind::boolean) type_error(section, key, *v, "bool");
    return v->b;
}

long long TomlTable::get_int(const std::string& section, const std::string& key,
                             long long def) const {
    const TomlValue* v = find(section, key);
    if (!v) return def;
    if (v->kind != TomlValue::Kind::integer) type_error(section, key, *v, "integer");
    return v->i;
}

double TomlTable::get_real(const std::string& section, const std::string& key, double def) const {
    const TomlValue* v = find(section, key);
    if (!v) return def;
    if (v->kind == TomlValue::Kind::integer) return static_cast<double>(v->i);
    if (v->kind != TomlValue::Kind::real) type_error(section, key, *v, "float");
    return v->d;
}

std::string TomlTable::get_string(const std::string& section, const std::string& key,
                                  const std::string& def) const {
    const TomlValue* v = find(section, key);
    if (!v) return def;
    if (v->kind != TomlValue::Kind::string) type_error(section, key, *v, "string");
    return v->s;
}

std::vector<std::string> TomlTable::get_string_array(const std::string& section,
                                                     const std::string& key,
                                                     const std::vector<std::string>& def) const {
    const TomlValue* v = find(section, key);
    if (!v) return def;
    if (v->kind != TomlValue::Kind::string_array) type_error(section, key, *v, "string array");
    return v->arr;
}

void TomlTable::check_known(const std::string& section, const std::vector<std::string>& keys) const {
    auto s = sections_.find(section);
    if (s == sections_.end()) return;
    for (const auto& [key, value] : s->second) {
        bool known = false;
        for (const std::string& k : keys)
            if (k == key) { known = true; break; }
        if (!known) throw ConfigError("config " + section + "." + key + ": unknown key");
    }
}

void TomlTable::check_known_sections(const std::vector<std::string>& sections) const {
    for (const auto& [name, keys] : sections_) {
        bool known = false;
        for (const std::string& s : sections)
            if (s == name) { known = true; break; }
        if (!known) throw ConfigError("config section [" + name + "] unknown");
    }
}

} // namespace idian
