#include "nozzleflow/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <map>
#include <sstream>

namespace nozzleflow::config {

namespace {

std::string trim(const std::string& s) {
    auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

bool parse_double(const std::string& s, double& out) {
    const char* b = s.data();
    const char* e = b + s.size();
    auto [p, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && p == e;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (true) {
        auto nxt = s.find(sep, pos);
        if (nxt == std::string::npos) {
            parts.push_back(s.substr(pos));
            break;
        }
        parts.push_back(s.substr(pos, nxt - pos));
        pos = nxt + 1;
    }
    return parts;
}

struct RawEntry {
    std::string value;
    int line = 0;
};

struct Parser {
    std::map<std::string, RawEntry> raw;
    std::vector<std::string> errors;

    void fail(int line, const std::string& msg) {
        errors.push_back("line " + std::to_string(line) + ": " + msg);
    }

    const RawEntry* find(const std::string& key) {
        auto it = raw.find(key);
        return it == raw.end() ? nullptr : &it->second;
    }

    bool get_double(const std::string& key, double& out, bool required) {
        const RawEntry* e = find(key);
        if (!e) {
            if (required) errors.push_back("missing required key '" + key + "'");
            return false;
        }
        if (!parse_double(e->value, out)) {
            fail(e->line, "key '" + key + "': expected a number, got '" + e->value + "'");
            return false;
        }
        return true;
    }

    // "name" or "name:k=v,k=v" -> (name, {k: v}); reports malformed pieces.
    bool packed(const std::string& key, std::string& head,
                std::map<std::string, std::string>& kv) {
        const RawEntry* e = find(key);
        if (!e) {
            errors.push_back("missing required key '" + key + "'");
            return false;
        }
        const std::string& v = e->value;
        auto colon = v.find(':');
        head = trim(colon == std::string::npos ? v : v.substr(0, colon));
        bool ok = true;
        if (colon != std::string::npos) {
            for (const auto& piece : split(v.substr(colon + 1), ',')) {
                auto eq = piece.find('=');
                if (eq == std::string::npos) {
                    fail(e->line, "key '" + key + "': expected name=value in '" +
                                      trim(piece) + "'");
                    ok = false;
                    continue;
                }
                std::string k = trim(piece.substr(0, eq));
                std::string val = trim(piece.substr(eq + 1));
                if (k.empty() || val.empty()) {
                    fail(e->line, "key '" + key + "': empty name or value in '" +
                                      trim(piece) + "'");
                    ok = false;
                    continue;
                }
                if (!kv.emplace(k, val).second) {
                    fail(e->line, "key '" + key + "': duplicate field '" + k + "'");
                    ok = false;
                }
            }
        }
        return ok;
    }

    bool packed_double(const std::string& key, int line,
                       std::map<std::string, std::string>& kv,
                       const std::string& field, double& out) {
        auto it = kv.find(field);
        if (it == kv.end()) {
            fail(line, "key '" + key + "': missing field '" + field + "'");
            return false;
        }
        if (!parse_double(it->second, out)) {
            fail(line, "key '" + key + "': field '" + field +
                           "': expected a number, got '" + it->second + "'");
            kv.erase(it);
            return false;
        }
        kv.erase(it);
        return true;
    }

    void reject_leftovers(const std::string& key, int line,
                          const std::map<std::string, std::string>& kv) {
        for (const auto& [k, v] : kv)
            fail(line, "key '" + key + "': unknown field '" + k + "'");
    }
};

const char* const known_keys[] = {
    "gamma", "T",     "dx",    "x_min",   "x_max", "nozzle",
    "init",  "b_override", "alpha", "beta",    "delta", "M",
    "epsilon", "snapshot_times", "out", "force",
};

}  // namespace

ConfigError::ConfigError(std::vector<std::string> msgs)
    : std::runtime_error([&msgs] {
          std::string joined;
          for (const auto& m : msgs) {
              if (!joined.empty()) joined += '\n';
              joined += m;
          }
          return joined;
      }()),
      messages(std::move(msgs)) {}

RunConfig parse_config(const std::string& text) {
    Parser ps;

    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::string body = trim(line);
        if (body.empty()) continue;
        auto eq = body.find('=');
        if (eq == std::string::npos) {
            ps.fail(lineno, "expected 'key = value', got '" + body + "'");
            continue;
        }
        std::string key = trim(body.substr(0, eq));
        std::string value = trim(body.substr(eq + 1));
        if (key.empty()) {
            ps.fail(lineno, "empty key");
            continue;
        }
        if (std::find_if(std::begin(known_keys), std::end(known_keys),
                         [&](const char* k) { return key == k; }) ==
            std::end(known_keys)) {
            ps.fail(lineno, "unknown key '" + key + "'");
            continue;
        }
        if (value.empty()) {
            ps.fail(lineno, "key '" + key + "' has no value");
            continue;
        }
        auto [it, inserted] = ps.raw.emplace(key, RawEntry{value, lineno});
        if (!inserted)
            ps.fail(lineno, "duplicate key '" + key + "' (first set at line " +
                                std::to_string(it->second.line) + ")");
    }

    RunConfig cfg;
    ps.get_double("gamma", cfg.gamma, true);
    ps.get_double("T", cfg.T, true);
    ps.get_double("dx", cfg.dx, true);
    ps.get_double("x_min", cfg.x_min, false);
    ps.get_double("x_max", cfg.x_max, false);

    if (const RawEntry* e = ps.find("nozzle")) {
        std::string head;
        std::map<std::string, std::string> kv;
        if (ps.packed("nozzle", head, kv)) {
            if (head == "constant") {
                cfg.nozzle.kind = NozzleSpec::Kind::constant;
            } else if (head == "laval" || head == "wind_tunnel") {
                cfg.nozzle.kind = head == "laval" ? NozzleSpec::Kind::laval
                                                  : NozzleSpec::Kind::wind_tunnel;
                ps.packed_double("nozzle", e->line, kv, "h", cfg.nozzle.h);
                ps.packed_double("nozzle", e->line, kv, "X", cfg.nozzle.X);
            } else if (head == "tabulated") {
                cfg.nozzle.kind = NozzleSpec::Kind::tabulated;
                auto it = kv.find("path");
                if (it == kv.end()) {
                    ps.fail(e->line, "key 'nozzle': missing field 'path'");
                } else {
                    cfg.nozzle.path = it->second;
                    kv.erase(it);
                }
            } else {
                ps.fail(e->line, "key 'nozzle': unknown profile '" + head +
                                     "' (expected constant, laval, wind_tunnel "
                                     "or tabulated)");
                kv.clear();
            }
            ps.reject_leftovers("nozzle", e->line, kv);
        }
    } else {
        ps.errors.push_back("missing required key 'nozzle'");
    }

    if (const RawEntry* e = ps.find("init")) {
        std::string head;
        std::map<std::string, std::string> kv;
        if (ps.packed("init", head, kv)) {
            if (head == "riemann") {
                cfg.init.kind = InitSpec::Kind::riemann;
                ps.packed_double("init", e->line, kv, "rho_l", cfg.init.rho_l);
                ps.packed_double("init", e->line, kv, "v_l", cfg.init.v_l);
                ps.packed_double("init", e->line, kv, "rho_r", cfg.init.rho_r);
                ps.packed_double("init", e->line, kv, "v_r", cfg.init.v_r);
                if (kv.count("x0"))
                    ps.packed_double("init", e->line, kv, "x0", cfg.init.x0);
            } else if (head == "tabulated") {
                cfg.init.kind = InitSpec::Kind::tabulated;
                auto it = kv.find("path");
                if (it == kv.end()) {
                    ps.fail(e->line, "key 'init': missing field 'path'");
                } else {
                    cfg.init.path = it->second;
                    kv.erase(it);
                }
            } else {
                ps.fail(e->line, "key 'init': unknown kind '" + head +
                                     "' (expected riemann or tabulated)");
                kv.clear();
            }
            ps.reject_leftovers("init", e->line, kv);
        }
    } else {
        ps.errors.push_back("missing required key 'init'");
    }

    if (const RawEntry* e = ps.find("b_override")) cfg.b_override_path = e->value;

    auto opt = [&](const char* key, std::optional<double>& dst) {
        double v;
        if (ps.find(key) && ps.get_double(key, v, false)) dst = v;
    };
    opt("alpha", cfg.alpha);
    opt("beta", cfg.beta);
    opt("delta", cfg.delta);
    opt("M", cfg.M);
    ps.get_double("epsilon", cfg.epsilon, false);

    if (const RawEntry* e = ps.find("snapshot_times")) {
        for (const auto& piece : split(e->value, ',')) {
            double t;
            if (!parse_double(trim(piece), t)) {
                ps.fail(e->line, "key 'snapshot_times': expected a number, got '" +
                                     trim(piece) + "'");
                continue;
            }
            cfg.snapshot_times.push_back(t);
        }
    }

    if (const RawEntry* e = ps.find("out")) cfg.out_dir = e->value;

    if (const RawEntry* e = ps.find("force")) {
        if (e->value == "true") {
            cfg.force = true;
        } else if (e->value == "false") {
            cfg.force = false;
        } else {
            ps.fail(e->line, "key 'force': expected true or false, got '" +
                                 e->value + "'");
        }
    }

    if (!ps.errors.empty()) throw ConfigError(std::move(ps.errors));
    return cfg;
}

RunConfig load_config(const std::string& path) {
    FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw ConfigError({"cannot open config file '" + path + "'"});
    std::string text;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) text.append(buf, n);
    std::fclose(f);
    return parse_config(text);
}

}  // namespace nozzleflow::config
