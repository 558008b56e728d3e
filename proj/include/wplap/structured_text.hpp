#pragma once

#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "wplap/error.hpp"

namespace wplap {

/// Sectioned key/value text:
///
///     # comment
///     [section]
///     key = value   # trailing comment
///
/// Keys before the first header belong to the unnamed section "".
struct StructuredText {
    struct Entry {
        std::string key;
        std::string value;
        int line = 0;
        int value_column = 0;
    };
    struct Section {
        std::string name;
        int line = 0;
        std::vector<Entry> entries;

        const Entry* find(std::string_view key) const {
            for (const auto& e : entries)
                if (e.key == key) return &e;
            return nullptr;
        }
    };

    std::vector<Section> sections;

    const Section* find(std::string_view name) const {
        for (const auto& s : sections)
            if (s.name == name) return &s;
        return nullptr;
    }

    Section& section(const std::string& name) {
        for (auto& s : sections)
            if (s.name == name) return s;
        sections.push_back({name, 0, {}});
        return sections.back();
    }

    /// Appends or overwrites a key.
    void set(const std::string& sec, const std::string& key, const std::string& value) {
        Section& s = section(sec);
        for (auto& e : s.entries)
            if (e.key == key) {
                e.value = value;
                return;
            }
        s.entries.push_back({key, value, 0, 0});
    }

    std::string str() const {
        std::ostringstream out;
        bool first = true;
        if (const Section* top = find("")) {
            for (const auto& e : top->entries) out << e.key << " = " << e.value << '\n';
            first = top->entries.empty();
        }
        for (const auto& s : sections) {
            if (s.name.empty()) continue;
            if (!first) out << '\n';
            first = false;
            out << '[' << s.name << "]\n";
            for (const auto& e : s.entries) out << e.key << " = " << e.value << '\n';
        }
        return out.str();
    }

    void write(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw Error("cannot open '" + path + "' for writing");
        out << str();
    }

    static StructuredText parse(std::string_view text) {
        StructuredText st;
        st.sections.push_back({"", 0, {}});
        int line_no = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            std::size_t end = text.find('\n', pos);
            if (end == std::string_view::npos) end = text.size();
            std::string line(text.substr(pos, end - pos));
            pos = end + 1;
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            const auto first = line.find_first_not_of(" \t");
            if (first == std::string::npos) {
                if (end == text.size()) break;
                continue;
            }
            const auto last = line.find_last_not_of(" \t");
            const int col = static_cast<int>(first) + 1;
            if (line[first] == '[') {
                if (line[last] != ']') throw ConfigError("section header is missing ']'", line_no, static_cast<int>(last) + 1);
                std::string name = trim(line.substr(first + 1, last - first - 1));
                if (!valid_name(name)) throw ConfigError("invalid section name '" + name + "'", line_no, col + 1);
                if (st.find(name)) throw ConfigError("duplicate section [" + name + "]", line_no, col);
                st.sections.push_back({name, line_no, {}});
            } else {
                const auto eq = line.find('=');
                if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line_no, col);
                std::string key = trim(line.substr(0, eq));
                if (!valid_name(key)) throw ConfigError("invalid key '" + key + "'", line_no, col);
                const auto vstart = line.find_first_not_of(" \t", eq + 1);
                std::string value = vstart == std::string::npos ? "" : trim(line.substr(vstart));
                if (value.empty()) throw ConfigError("missing value for '" + key + "'", line_no, static_cast<int>(eq) + 2);
                Section& s = st.sections.back();
                if (s.find(key)) throw ConfigError("duplicate key '" + key + "'", line_no, col);
                s.entries.push_back({key, value, line_no, static_cast<int>(vstart) + 1});
            }
            if (end == text.size()) break;
        }
        return st;
    }

    static StructuredText read(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open '" + path + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

private:
    static std::string trim(const std::string& s) {
        const auto a = s.find_first_not_of(" \t");
        if (a == std::string::npos) return "";
        const auto b = s.find_last_not_of(" \t");
        return s.substr(a, b - a + 1);
    }

    static bool valid_name(const std::string& s) {
        if (s.empty()) return false;
        for (char c : s)
            if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-')) return false;
        return true;
    }
};

}  // namespace wplap
