#pragma once

// Minimal TOML reader covering what pipeline config files use: [table] and
// [[array-of-tables]] headers, string/number/boolean scalars, flat arrays,
// and # comments. Not a general TOML implementation.

#include <cctype>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace nmsdec::toml {

struct Value {
    enum class Kind { string, number, boolean, array } kind = Kind::string;
    std::string str;
    double num = 0.0;
    bool boolean = false;
    std::vector<Value> array;

    double as_number() const {
        if (kind != Kind::number) throw std::runtime_error("toml: expected a number");
        return num;
    }
    std::int64_t as_int() const { return static_cast<std::int64_t>(as_number()); }
    bool as_bool() const {
        if (kind != Kind::boolean) throw std::runtime_error("toml: expected a boolean");
        return boolean;
    }
    const std::string& as_string() const {
        if (kind != Kind::string) throw std::runtime_error("toml: expected a string");
        return str;
    }
    std::vector<double> as_number_array() const {
        if (kind != Kind::array) throw std::runtime_error("toml: expected an array");
        std::vector<double> out;
        out.reserve(array.size());
        for (const auto& v : array) out.push_back(v.as_number());
        return out;
    }
};

using Table = std::map<std::string, Value>;

struct Document {
    Table root;
    std::map<std::string, Table> tables;
    std::map<std::string, std::vector<Table>> table_arrays;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::string strip_comment(const std::string& line) {
    bool in_str = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_str = !in_str;
        if (line[i] == '#' && !in_str) return line.substr(0, i);
    }
    return line;
}

inline Value parse_value(const std::string& raw, int lineno);

inline std::vector<std::string> split_array_items(const std::string& inner) {
    std::vector<std::string> items;
    std::string cur;
    bool in_str = false;
    int depth = 0;
    for (char ch : inner) {
        if (ch == '"') in_str = !in_str;
        if (!in_str && ch == '[') ++depth;
        if (!in_str && ch == ']') --depth;
        if (ch == ',' && !in_str && depth == 0) {
            items.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    if (!trim(cur).empty()) items.push_back(cur);
    return items;
}

inline Value parse_value(const std::string& raw, int lineno) {
    std::string s = trim(raw);
    if (s.empty()) throw std::runtime_error("toml: empty value at line " + std::to_string(lineno));
    Value v;
    if (s.front() == '"') {
        if (s.size() < 2 || s.back() != '"')
            throw std::runtime_error("toml: unterminated string at line " + std::to_string(lineno));
        v.kind = Value::Kind::string;
        v.str = s.substr(1, s.size() - 2);
        return v;
    }
    if (s.front() == '[') {
        if (s.back() != ']')
            throw std::runtime_error("toml: unterminated array at line " + std::to_string(lineno));
        v.kind = Value::Kind::array;
        for (const auto& item : split_array_items(s.substr(1, s.size() - 2)))
            v.array.push_back(parse_value(item, lineno));
        return v;
    }
    if (s == "true" || s == "false") {
        v.kind = Value::Kind::boolean;
        v.boolean = s == "true";
        return v;
    }
    try {
        std::size_t pos = 0;
        v.num = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing");
        v.kind = Value::Kind::number;
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("toml: cannot parse value '" + s + "' at line " + std::to_string(lineno));
    }
}

}  // namespace detail

inline Document parse(const std::string& text) {
    Document doc;
    Table* current = &doc.root;
    int lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string line = text.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
        pos = eol == std::string::npos ? text.size() + 1 : eol + 1;
        ++lineno;
        line = detail::trim(detail::strip_comment(line));
        if (line.empty()) continue;
        if (line.rfind("[[", 0) == 0) {
            if (line.size() < 5 || line.substr(line.size() - 2) != "]]")
                throw std::runtime_error("toml: bad table array header at line " + std::to_string(lineno));
            std::string name = detail::trim(line.substr(2, line.size() - 4));
            doc.table_arrays[name].emplace_back();
            current = &doc.table_arrays[name].back();
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::runtime_error("toml: bad table header at line " + std::to_string(lineno));
            std::string name = detail::trim(line.substr(1, line.size() - 2));
            current = &doc.tables[name];
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("toml: expected key = value at line " + std::to_string(lineno));
        std::string key = detail::trim(line.substr(0, eq));
        if (key.empty()) throw std::runtime_error("toml: empty key at line " + std::to_string(lineno));
        (*current)[key] = detail::parse_value(line.substr(eq + 1), lineno);
    }
    return doc;
}

inline const Value* find(const Table& t, const std::string& key) {
    auto it = t.find(key);
    return it == t.end() ? nullptr : &it->second;
}

}  // namespace nmsdec::toml
