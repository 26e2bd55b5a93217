#pragma once

#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "avaas/clustering.hpp"
#include "avaas/common.hpp"
#include "avaas/estimation.hpp"
#include "avaas/metrics.hpp"
#include "avaas/microsim.hpp"
#include "avaas/trajectory_io.hpp"

namespace avaas {

namespace detail {

inline std::string opt_field(const std::optional<double>& v) { return v ? fmt_double(*v) : ""; }

inline std::optional<double> parse_opt(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return std::stod(s);
}

inline LaneId parse_lane_id(const std::string& s) {
    auto hash = s.rfind('#');
    if (hash == std::string::npos) throw ParseError("bad lane id '" + s + "'");
    return LaneId{s.substr(0, hash), std::stoi(s.substr(hash + 1))};
}

inline Scope parse_scope(const std::string& kind, const std::string& id) {
    if (kind == "lane") return Scope::for_lane(parse_lane_id(id));
    if (kind == "cluster") return Scope::for_cluster(std::stoi(id));
    if (kind == "network") return Scope::network();
    throw ParseError("bad scope kind '" + kind + "'");
}

inline Source parse_source(const std::string& s) {
    if (s == "ground_truth") return Source::GroundTruth;
    if (s == "mo_estimate") return Source::MoEstimate;
    if (s == "po_estimate") return Source::PoEstimate;
    if (s == "combined") return Source::Combined;
    throw ParseError("bad source '" + s + "'");
}

}  // namespace detail

// --- ground truth: lane_id,ts_s,k_vpk,q_vph,v_kmh,n_veh,vehicle_steps ---

inline void write_ground_truth(const std::vector<GroundTruthState>& gt, std::ostream& os) {
    os << "lane_id,ts_s,k_vpk,q_vph,v_kmh,n_veh,vehicle_steps\n";
    for (const GroundTruthState& g : gt) {
        os << g.lane.str() << "," << detail::fmt_double(g.interval_start_s) << ","
           << detail::fmt_double(g.k_vpk) << "," << detail::fmt_double(g.q_vph) << ","
           << detail::opt_field(g.v_kmh) << "," << g.n_veh << "," << g.vehicle_steps << "\n";
    }
}

inline std::vector<GroundTruthState> read_ground_truth(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || detail::trim(line) != "lane_id,ts_s,k_vpk,q_vph,v_kmh,n_veh,vehicle_steps")
        throw ParseError("ground truth file: bad header");
    std::vector<GroundTruthState> out;
    long rowno = 1;
    while (std::getline(is, line)) {
        ++rowno;
        std::string s = detail::trim(line);
        if (s.empty()) continue;
        auto f = detail::split_delim(s, ',');
        if (f.size() != 7) throw ParseError("ground truth row " + std::to_string(rowno) + ": bad field count");
        GroundTruthState g;
        g.lane = detail::parse_lane_id(f[0]);
        g.interval_start_s = std::stod(f[1]);
        g.k_vpk = std::stod(f[2]);
        g.q_vph = std::stod(f[3]);
        g.v_kmh = detail::parse_opt(f[4]);
        g.n_veh = std::stol(f[5]);
        g.vehicle_steps = std::stol(f[6]);
        out.push_back(g);
    }
    return out;
}

// --- traffic states: scope_kind,scope_id,ts_s,k_vpk,v_kmh,q_vph,source,sample_count ---

inline void write_traffic_states(const std::vector<TrafficState>& states, std::ostream& os) {
    os << "scope_kind,scope_id,ts_s,k_vpk,v_kmh,q_vph,source,sample_count\n";
    for (const TrafficState& t : states) {
        os << t.scope.kind_name() << "," << t.scope.id_name() << ","
           << detail::fmt_double(t.interval_start_s) << "," << detail::opt_field(t.k_vpk) << ","
           << detail::opt_field(t.v_kmh) << "," << detail::opt_field(t.q_vph) << ","
           << source_name(t.source) << "," << t.sample_count << "\n";
    }
}

inline std::vector<TrafficState> read_traffic_states(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) ||
        detail::trim(line) != "scope_kind,scope_id,ts_s,k_vpk,v_kmh,q_vph,source,sample_count")
        throw ParseError("traffic state file: bad header");
    std::vector<TrafficState> out;
    long rowno = 1;
    while (std::getline(is, line)) {
        ++rowno;
        std::string s = detail::trim(line);
        if (s.empty()) continue;
        auto f = detail::split_delim(s, ',');
        if (f.size() != 8) throw ParseError("traffic state row " + std::to_string(rowno) + ": bad field count");
        TrafficState t;
        t.scope = detail::parse_scope(f[0], f[1]);
        t.interval_start_s = std::stod(f[2]);
        t.k_vpk = detail::parse_opt(f[3]);
        t.v_kmh = detail::parse_opt(f[4]);
        t.q_vph = detail::parse_opt(f[5]);
        t.source = detail::parse_source(f[6]);
        t.sample_count = std::stol(f[7]);
        out.push_back(t);
    }
    return out;
}

// --- clusters: lane_id,cluster_id ---

inline void write_cluster_mapping(const std::map<LaneId, int>& mapping, std::ostream& os) {
    os << "lane_id,cluster_id\n";
    for (const auto& [lane, cid] : mapping) os << lane.str() << "," << cid << "\n";
}

inline std::map<LaneId, int> read_cluster_mapping(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || detail::trim(line) != "lane_id,cluster_id")
        throw ParseError("cluster file: bad header");
    std::map<LaneId, int> out;
    while (std::getline(is, line)) {
        std::string s = detail::trim(line);
        if (s.empty()) continue;
        auto f = detail::split_delim(s, ',');
        if (f.size() != 2) throw ParseError("cluster file: bad row '" + s + "'");
        out[detail::parse_lane_id(f[0])] = std::stoi(f[1]);
    }
    return out;
}

inline void write_elbow(const std::vector<ElbowPoint>& points, std::ostream& os) {
    os << "k,wcss,is_knee\n";
    for (const ElbowPoint& p : points)
        os << p.k << "," << detail::fmt_double(p.wcss) << "," << (p.is_knee ? 1 : 0) << "\n";
}

// --- error report ---

inline void write_error_records(const std::vector<ErrorRecord>& records, std::ostream& os) {
    os << "scope_kind,scope_id,ts_s,quantity,true,est,rel_err,zero_flag\n";
    for (const ErrorRecord& r : records) {
        os << r.scope.kind_name() << "," << r.scope.id_name() << ","
           << detail::fmt_double(r.interval_start_s) << "," << quantity_name(r.quantity) << ","
           << detail::fmt_double(r.true_value) << "," << detail::fmt_double(r.estimated_value) << ","
           << detail::fmt_double(r.relative_error) << "," << (r.zero_true_fallback ? 1 : 0) << "\n";
    }
}

inline void write_summary(const ComparisonReport& rep, std::ostream& os) {
    os << "joined = " << rep.joined << "\n";
    for (const QuantitySummary& s : rep.summaries) {
        std::string q = quantity_name(s.quantity);
        os << q << ".count = " << s.count << "\n";
        os << q << ".mean_rel_err = " << detail::fmt_double(s.mean_rel_err) << "\n";
        os << q << ".median_rel_err = " << detail::fmt_double(s.median_rel_err) << "\n";
        os << q << ".p90_rel_err = " << detail::fmt_double(s.p90_rel_err) << "\n";
        os << q << ".overestimated_fraction = " << detail::fmt_double(s.overestimated_fraction) << "\n";
    }
}

inline void write_error_histogram(const ComparisonReport& rep, std::ostream& os, double bin_width = 0.05) {
    os << "quantity,bin_lower,count\n";
    for (Quantity q : {Quantity::Density, Quantity::Speed, Quantity::Flow}) {
        for (const HistogramBin& b : error_histogram(rep.records, q, bin_width))
            os << quantity_name(q) << "," << detail::fmt_double(b.lower) << "," << b.count << "\n";
    }
}

inline void write_mfd(const std::vector<MFDPoint>& points, std::ostream& os) {
    os << "scope_kind,scope_id,ts_s,k_vpk,q_vph,v_kmh,source\n";
    for (const MFDPoint& p : points) {
        os << p.scope.kind_name() << "," << p.scope.id_name() << ","
           << detail::fmt_double(p.interval_start_s) << "," << detail::opt_field(p.k_avg_vpk) << ","
           << detail::opt_field(p.q_avg_vph) << "," << detail::opt_field(p.v_avg_kmh) << ","
           << source_name(p.source) << "\n";
    }
}

// Ground truth as lane-scope TrafficStates, for comparison and rollup.
inline std::vector<TrafficState> ground_truth_states(const std::vector<GroundTruthState>& gt) {
    std::vector<TrafficState> out;
    for (const GroundTruthState& g : gt) {
        TrafficState t;
        t.scope = Scope::for_lane(g.lane);
        t.interval_start_s = g.interval_start_s;
        t.k_vpk = g.k_vpk;
        t.v_kmh = g.v_kmh;
        if (g.v_kmh) t.q_vph = g.q_vph;  // q needs a paired speed at state level
        t.source = Source::GroundTruth;
        t.sample_count = std::max(1L, g.vehicle_steps);
        out.push_back(t);
    }
    return out;
}

}  // namespace avaas
