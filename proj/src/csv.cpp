#include "nozzleflow/csv.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>

namespace nozzleflow::csvio {

namespace {

std::string trim(const std::string& s) {
    auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (true) {
        auto nxt = s.find(',', pos);
        if (nxt == std::string::npos) {
            parts.push_back(trim(s.substr(pos)));
            break;
        }
        parts.push_back(trim(s.substr(pos, nxt - pos)));
        pos = nxt + 1;
    }
    return parts;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, p);
}

int Table::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

Table parse_table(const std::string& text, const std::string& origin) {
    Table t;
    std::size_t pos = 0;
    int lineno = 0;
    auto next_line = [&](std::string& out) {
        if (pos >= text.size()) return false;
        auto nl = text.find('\n', pos);
        if (nl == std::string::npos) {
            out = text.substr(pos);
            pos = text.size();
        } else {
            out = text.substr(pos, nl - pos);
            pos = nl + 1;
        }
        ++lineno;
        return true;
    };

    std::string line;
    bool have_header = false;
    while (next_line(line)) {
        std::string body = trim(line);
        if (body.empty()) continue;
        if (!have_header) {
            t.header = split_commas(body);
            have_header = true;
            continue;
        }
        auto cells = split_commas(body);
        if (cells.size() != t.header.size())
            throw std::runtime_error(origin + ": line " + std::to_string(lineno) +
                                     ": expected " + std::to_string(t.header.size()) +
                                     " columns, got " + std::to_string(cells.size()));
        std::vector<double> row(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const std::string& c = cells[i];
            auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), row[i]);
            if (ec != std::errc() || p != c.data() + c.size())
                throw std::runtime_error(origin + ": line " + std::to_string(lineno) +
                                         ": bad number '" + c + "'");
        }
        t.rows.push_back(std::move(row));
    }
    if (!have_header) throw std::runtime_error(origin + ": empty table");
    return t;
}

Table read_table(const std::string& path) {
    FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("cannot open '" + path + "'");
    std::string text;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) text.append(buf, n);
    std::fclose(f);
    return parse_table(text, path);
}

std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<double>>& rows) {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out += ',';
        out += header[i];
    }
    out += '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += format_double(row[i]);
        }
        out += '\n';
    }
    return out;
}

void write_table(const std::string& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& rows) {
    std::string body = render_table(header, rows);
    FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    std::fwrite(body.data(), 1, body.size(), f);
    std::fclose(f);
}

}  // namespace nozzleflow::csvio
