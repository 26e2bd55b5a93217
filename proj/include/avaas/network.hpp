#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "avaas/common.hpp"

namespace avaas {

struct LaneId {
    std::string edge;
    int index = 0;

    auto operator<=>(const LaneId&) const = default;
    std::string str() const { return edge + "#" + std::to_string(index); }
};

struct Edge {
    std::string id;
    std::string from;
    std::string to;
    int lane_count = 1;
    double length_m = 0.0;
    double speed_limit_mps = 13.9;
    std::optional<std::string> opposite_edge;

    bool operator==(const Edge&) const = default;
};

struct Lane {
    LaneId id;
    double length_m = 0.0;
    double speed_limit_mps = 0.0;
    std::optional<std::string> opposite_edge;
};

// Directed link/lane network. Lanes are straight 1-D segments; the only
// cross-edge relations are downstream adjacency and the explicit
// opposite-direction edge. Immutable after construction.
class RoadNetwork {
public:
    RoadNetwork(std::vector<std::string> nodes, std::vector<Edge> edges,
                std::map<std::string, std::vector<std::string>> downstream)
        : nodes_(std::move(nodes)), edges_(std::move(edges)), downstream_(std::move(downstream)) {
        for (std::size_t i = 0; i < edges_.size(); ++i) edge_index_[edges_[i].id] = i;
        validate();
        for (const Edge& e : edges_) {
            for (int l = 0; l < e.lane_count; ++l) {
                lanes_.push_back(Lane{LaneId{e.id, l}, e.length_m, e.speed_limit_mps, e.opposite_edge});
            }
        }
    }

    const std::vector<std::string>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<Lane>& lanes() const { return lanes_; }

    bool has_edge(const std::string& id) const { return edge_index_.count(id) > 0; }

    const Edge& edge(const std::string& id) const {
        auto it = edge_index_.find(id);
        if (it == edge_index_.end()) throw ValidationError("unknown edge '" + id + "'");
        return edges_[it->second];
    }

    bool has_lane(const LaneId& id) const {
        return has_edge(id.edge) && id.index >= 0 && id.index < edge(id.edge).lane_count;
    }

    const Lane& lane(const LaneId& id) const {
        for (const Lane& l : lanes_)
            if (l.id == id) return l;
        throw ValidationError("unknown lane '" + id.str() + "'");
    }

    const std::map<std::string, std::vector<std::string>>& downstream_map() const { return downstream_; }

    const std::vector<std::string>& downstream(const std::string& edge_id) const {
        static const std::vector<std::string> empty;
        auto it = downstream_.find(edge_id);
        return it == downstream_.end() ? empty : it->second;
    }

    // An edge whose downstream set contains itself is circular; offsets on
    // its lanes wrap modulo the length.
    bool is_circular(const std::string& edge_id) const {
        const auto& d = downstream(edge_id);
        return std::find(d.begin(), d.end(), edge_id) != d.end();
    }

private:
    void validate() const {
        std::set<std::string> node_set(nodes_.begin(), nodes_.end());
        std::set<std::string> seen_edges;
        for (const Edge& e : edges_) {
            if (!seen_edges.insert(e.id).second)
                throw ValidationError("duplicate edge id '" + e.id + "'");
            if (!node_set.count(e.from))
                throw ValidationError("edge '" + e.id + "' references unknown node '" + e.from + "'");
            if (!node_set.count(e.to))
                throw ValidationError("edge '" + e.id + "' references unknown node '" + e.to + "'");
            if (e.lane_count < 1)
                throw ValidationError("edge '" + e.id + "': lane_count >= 1 violated");
            if (!(e.length_m > 0.0))
                throw ValidationError("edge '" + e.id + "': length > 0 violated");
            if (!(e.speed_limit_mps > 0.0))
                throw ValidationError("edge '" + e.id + "': speed_limit > 0 violated");
        }
        for (const Edge& e : edges_) {
            if (e.opposite_edge) {
                auto it = edge_index_.find(*e.opposite_edge);
                if (it == edge_index_.end())
                    throw ValidationError("edge '" + e.id + "': opposite_edge '" + *e.opposite_edge +
                                          "' does not exist");
                const Edge& opp = edges_[it->second];
                if (!(opp.from == e.to && opp.to == e.from))
                    throw ValidationError("edge '" + e.id + "': opposite_edge '" + opp.id +
                                          "' is not direction-reversed");
            }
        }
        for (const auto& [eid, outs] : downstream_) {
            if (!edge_index_.count(eid))
                throw ValidationError("adjacency references unknown edge '" + eid + "'");
            for (const std::string& out : outs)
                if (!edge_index_.count(out))
                    throw ValidationError("adjacency from '" + eid + "' references unknown edge '" + out + "'");
        }
    }

    std::vector<std::string> nodes_;
    std::vector<Edge> edges_;
    std::vector<Lane> lanes_;
    std::map<std::string, std::size_t> edge_index_;
    std::map<std::string, std::vector<std::string>> downstream_;
};

struct GridParams {
    int rows = 2;
    int cols = 2;
    double edge_length_m = 200.0;
    int lanes = 1;
    double speed_limit_mps = 13.9;
};

inline RoadNetwork make_ring(double length_m, int lanes = 1, double speed_limit_mps = 13.9) {
    if (!(length_m > 0.0) || lanes < 1) throw ValidationError("ring: length > 0 and lanes >= 1 required");
    Edge e{"ring", "n0", "n0", lanes, length_m, speed_limit_mps, std::nullopt};
    return RoadNetwork({"n0"}, {e}, {{"ring", {"ring"}}});
}

inline RoadNetwork make_corridor(int segments, int lanes, double segment_length_m,
                                 double speed_limit_mps = 13.9) {
    if (segments < 1 || lanes < 1 || !(segment_length_m > 0.0))
        throw ValidationError("corridor: segments >= 1, lanes >= 1, length > 0 required");
    std::vector<std::string> nodes;
    std::vector<Edge> edges;
    std::map<std::string, std::vector<std::string>> down;
    for (int i = 0; i <= segments; ++i) nodes.push_back("n" + std::to_string(i));
    for (int i = 0; i < segments; ++i) {
        std::string id = "c" + std::to_string(i);
        edges.push_back(Edge{id, "n" + std::to_string(i), "n" + std::to_string(i + 1), lanes,
                             segment_length_m, speed_limit_mps, std::nullopt});
        if (i + 1 < segments) down[id] = {"c" + std::to_string(i + 1)};
    }
    return RoadNetwork(std::move(nodes), std::move(edges), std::move(down));
}

// grid(r, c): r*c nodes, bidirectional edges between 4-neighbours; the two
// antiparallel edges of a pair are each other's opposite_edge.
inline RoadNetwork make_grid(const GridParams& p) {
    if (p.rows < 1 || p.cols < 1) throw ValidationError("grid: rows, cols >= 1 required");
    if (p.rows * p.cols < 2) throw ValidationError("grid(1,1): no edges possible");
    if (p.lanes < 1 || !(p.edge_length_m > 0.0))
        throw ValidationError("grid: lanes >= 1 and edge_length > 0 required");

    auto node_name = [](int r, int c) { return "n" + std::to_string(r) + "_" + std::to_string(c); };
    std::vector<std::string> nodes;
    std::vector<Edge> edges;
    for (int r = 0; r < p.rows; ++r)
        for (int c = 0; c < p.cols; ++c) nodes.push_back(node_name(r, c));

    auto add_pair = [&](int r1, int c1, int r2, int c2) {
        std::string a = node_name(r1, c1), b = node_name(r2, c2);
        std::string fwd = "e_" + a + "_" + b;
        std::string bwd = "e_" + b + "_" + a;
        edges.push_back(Edge{fwd, a, b, p.lanes, p.edge_length_m, p.speed_limit_mps, bwd});
        edges.push_back(Edge{bwd, b, a, p.lanes, p.edge_length_m, p.speed_limit_mps, fwd});
    };
    for (int r = 0; r < p.rows; ++r)
        for (int c = 0; c + 1 < p.cols; ++c) add_pair(r, c, r, c + 1);
    for (int r = 0; r + 1 < p.rows; ++r)
        for (int c = 0; c < p.cols; ++c) add_pair(r, c, r + 1, c);

    // downstream: every edge ending at a node feeds every edge leaving it,
    // except the U-turn back along its own opposite.
    std::map<std::string, std::vector<std::string>> down;
    for (const Edge& in : edges) {
        for (const Edge& out : edges) {
            if (out.from != in.to) continue;
            if (in.opposite_edge && *in.opposite_edge == out.id) continue;
            down[in.id].push_back(out.id);
        }
    }
    return RoadNetwork(std::move(nodes), std::move(edges), std::move(down));
}

// Shortest hop-count edge path (BFS over downstream adjacency), origin and
// destination inclusive. Empty when unreachable.
inline std::vector<std::string> shortest_edge_path(const RoadNetwork& net, const std::string& origin,
                                                   const std::string& destination) {
    if (!net.has_edge(origin) || !net.has_edge(destination)) return {};
    if (origin == destination) return {origin};
    std::map<std::string, std::string> parent;
    std::vector<std::string> frontier{origin};
    parent[origin] = origin;
    while (!frontier.empty()) {
        std::vector<std::string> next;
        for (const std::string& e : frontier) {
            for (const std::string& out : net.downstream(e)) {
                if (parent.count(out)) continue;
                parent[out] = e;
                if (out == destination) {
                    std::vector<std::string> path{destination};
                    std::string cur = destination;
                    while (parent[cur] != cur) {
                        cur = parent[cur];
                        path.push_back(cur);
                    }
                    std::reverse(path.begin(), path.end());
                    return path;
                }
                next.push_back(out);
            }
        }
        frontier = std::move(next);
    }
    return {};
}

}  // namespace avaas
