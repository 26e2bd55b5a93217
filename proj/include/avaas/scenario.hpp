#pragma once

#include <charconv>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "avaas/common.hpp"
#include "avaas/network.hpp"

namespace avaas {

// One `key = value` line of a scenario file; keys may repeat within a section.
struct ScenarioEntry {
    std::string key;
    std::string value;
    int line = 0;
};

using ScenarioSection = std::vector<ScenarioEntry>;
using ScenarioDoc = std::map<std::string, ScenarioSection>;

namespace detail {

inline std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

inline double parse_double(const std::string& s, const std::string& what, int line) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line) + ": " + what + ": not a number: '" + s + "'");
    }
}

inline long parse_long(const std::string& s, const std::string& what, int line) {
    long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw ParseError("line " + std::to_string(line) + ": " + what + ": not an integer: '" + s + "'");
    return v;
}

}  // namespace detail

// Parses the `[section]` / `key = value` scenario format. `#` starts a
// comment; blank lines ignored.
inline ScenarioDoc parse_scenario_doc(const std::string& text) {
    ScenarioDoc doc;
    std::string section;
    std::istringstream is(text);
    std::string raw;
    int line = 0;
    while (std::getline(is, raw)) {
        ++line;
        std::string s = raw;
        if (auto hash = s.find('#'); hash != std::string::npos) s = s.substr(0, hash);
        s = detail::trim(s);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw ParseError("line " + std::to_string(line) + ": unterminated section header");
            section = detail::trim(s.substr(1, s.size() - 2));
            if (section.empty()) throw ParseError("line " + std::to_string(line) + ": empty section name");
            doc[section];
            continue;
        }
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ParseError("line " + std::to_string(line) + ": expected 'key = value'");
        if (section.empty())
            throw ParseError("line " + std::to_string(line) + ": entry before any [section]");
        doc[section].push_back(
            ScenarioEntry{detail::trim(s.substr(0, eq)), detail::trim(s.substr(eq + 1)), line});
    }
    return doc;
}

inline std::optional<std::string> section_value(const ScenarioSection& sec, const std::string& key) {
    for (const auto& e : sec)
        if (e.key == key) return e.value;
    return std::nullopt;
}

// key=value attributes trailing the positional tokens of an `edge =` line
inline std::map<std::string, std::string> parse_attrs(const std::vector<std::string>& toks,
                                                      std::size_t start, int line) {
    std::map<std::string, std::string> attrs;
    for (std::size_t i = start; i < toks.size(); ++i) {
        auto eq = toks[i].find('=');
        if (eq == std::string::npos)
            throw ParseError("line " + std::to_string(line) + ": expected attr=value, got '" + toks[i] + "'");
        attrs[toks[i].substr(0, eq)] = toks[i].substr(eq + 1);
    }
    return attrs;
}

// Builds a RoadNetwork from the `[network]` section. `kind` selects a
// builtin (ring/corridor/grid) or `explicit` node/edge/adjacency lines.
inline RoadNetwork load_network_section(const ScenarioSection& sec) {
    std::string kind = section_value(sec, "kind").value_or("explicit");

    auto num = [&](const std::string& key, double fallback) {
        for (const auto& e : sec)
            if (e.key == key) return detail::parse_double(e.value, key, e.line);
        return fallback;
    };
    auto only_keys = [&](std::initializer_list<const char*> allowed) {
        for (const auto& e : sec) {
            if (e.key == "kind") continue;
            bool known = false;
            for (const char* k : allowed)
                if (e.key == k) known = true;
            if (!known)
                throw ParseError("line " + std::to_string(e.line) + ": unknown " + kind +
                                 " network key '" + e.key + "'");
        }
    };

    if (kind == "ring") only_keys({"length_m", "lanes", "speed_limit_mps"});
    if (kind == "corridor") only_keys({"segments", "segment_length_m", "lanes", "speed_limit_mps"});
    if (kind == "grid") only_keys({"rows", "cols", "edge_length_m", "lanes", "speed_limit_mps"});

    if (kind == "ring")
        return make_ring(num("length_m", 1000.0), static_cast<int>(num("lanes", 1)),
                         num("speed_limit_mps", 13.9));
    if (kind == "corridor")
        return make_corridor(static_cast<int>(num("segments", 2)), static_cast<int>(num("lanes", 1)),
                             num("segment_length_m", 500.0), num("speed_limit_mps", 13.9));
    if (kind == "grid") {
        GridParams p;
        p.rows = static_cast<int>(num("rows", 2));
        p.cols = static_cast<int>(num("cols", 2));
        p.edge_length_m = num("edge_length_m", 200.0);
        p.lanes = static_cast<int>(num("lanes", 1));
        p.speed_limit_mps = num("speed_limit_mps", 13.9);
        return make_grid(p);
    }
    if (kind != "explicit") throw ParseError("unknown network kind '" + kind + "'");

    std::vector<std::string> nodes;
    std::vector<Edge> edges;
    std::map<std::string, std::vector<std::string>> down;
    for (const auto& e : sec) {
        if (e.key == "node") {
            nodes.push_back(e.value);
        } else if (e.key == "edge") {
            auto toks = detail::split_ws(e.value);
            if (toks.size() < 3)
                throw ParseError("line " + std::to_string(e.line) + ": edge needs 'id from to [attrs]'");
            Edge edge;
            edge.id = toks[0];
            edge.from = toks[1];
            edge.to = toks[2];
            for (const auto& [k, v] : parse_attrs(toks, 3, e.line)) {
                if (k == "lanes")
                    edge.lane_count = static_cast<int>(detail::parse_long(v, "lanes", e.line));
                else if (k == "length_m")
                    edge.length_m = detail::parse_double(v, "length_m", e.line);
                else if (k == "speed_limit_mps")
                    edge.speed_limit_mps = detail::parse_double(v, "speed_limit_mps", e.line);
                else if (k == "opposite")
                    edge.opposite_edge = v;
                else
                    throw ParseError("line " + std::to_string(e.line) + ": unknown edge attribute '" + k + "'");
            }
            edges.push_back(edge);
        } else if (e.key == "adjacency") {
            auto toks = detail::split_ws(e.value);
            if (toks.size() < 2)
                throw ParseError("line " + std::to_string(e.line) + ": adjacency needs 'edge out...'");
            for (std::size_t i = 1; i < toks.size(); ++i) down[toks[0]].push_back(toks[i]);
        } else if (e.key != "kind") {
            throw ParseError("line " + std::to_string(e.line) + ": unknown network key '" + e.key + "'");
        }
    }
    return RoadNetwork(std::move(nodes), std::move(edges), std::move(down));
}

inline RoadNetwork load_network(const std::string& scenario_text) {
    ScenarioDoc doc = parse_scenario_doc(scenario_text);
    auto it = doc.find("network");
    if (it == doc.end()) throw ParseError("missing [network] section");
    return load_network_section(it->second);
}

// Serializes in explicit form; load_network(serialize_network(N)) == N.
inline std::string serialize_network(const RoadNetwork& net) {
    std::ostringstream os;
    os.precision(17);
    os << "[network]\nkind = explicit\n";
    for (const std::string& n : net.nodes()) os << "node = " << n << "\n";
    for (const Edge& e : net.edges()) {
        os << "edge = " << e.id << " " << e.from << " " << e.to << " lanes=" << e.lane_count
           << " length_m=" << e.length_m << " speed_limit_mps=" << e.speed_limit_mps;
        if (e.opposite_edge) os << " opposite=" << *e.opposite_edge;
        os << "\n";
    }
    for (const auto& [eid, outs] : net.downstream_map()) {
        if (outs.empty()) continue;
        os << "adjacency = " << eid;
        for (const std::string& o : outs) os << " " << o;
        os << "\n";
    }
    return os.str();
}

inline bool networks_equal(const RoadNetwork& a, const RoadNetwork& b) {
    return a.nodes() == b.nodes() && a.edges() == b.edges() && a.downstream_map() == b.downstream_map();
}

}  // namespace avaas
