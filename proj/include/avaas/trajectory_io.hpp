#pragma once

#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "avaas/common.hpp"
#include "avaas/microsim.hpp"
#include "avaas/network.hpp"

namespace avaas {

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::vector<std::string> split_delim(const std::string& s, char delim) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == delim) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace detail

// One row per (timestep_s, vehicle_id, edge_id, lane_index, position_m,
// speed_mps); header row required.
inline void serialize_trajectory(const TrajectoryLog& log, std::ostream& os, char delim = ',') {
    os << "timestep_s" << delim << "vehicle_id" << delim << "edge_id" << delim << "lane_index" << delim
       << "position_m" << delim << "speed_mps\n";
    for (long s = 0; s < log.step_count(); ++s) {
        double t = s * log.step_size_s;
        for (const VehicleState& v : log.steps[static_cast<std::size_t>(s)]) {
            os << detail::fmt_double(t) << delim << v.vehicle_id << delim << v.lane.edge << delim
               << v.lane.index << delim << detail::fmt_double(v.position_m) << delim
               << detail::fmt_double(v.speed_mps) << "\n";
        }
    }
}

inline std::string serialize_trajectory(const TrajectoryLog& log, char delim = ',') {
    std::ostringstream os;
    serialize_trajectory(log, os, delim);
    return os.str();
}

struct IngestReport {
    long rows_read = 0;
    long rows_dropped = 0;
    std::vector<std::string> diagnostics;
};

// Parses an external trajectory log against a network. Strict mode throws on
// the first bad row; lenient mode drops bad rows and reports them. The
// timestep grid is inferred and must be constant. Entry events are
// reconstructed from first appearances, lane changes, and backward position
// jumps on circular lanes.
inline TrajectoryLog parse_trajectory(std::istream& is, const RoadNetwork& net, bool strict = true,
                                      char delim = ',', IngestReport* report = nullptr) {
    std::string line;
    if (!std::getline(is, line)) throw ParseError("empty trajectory stream: header row required");
    {
        auto hdr = detail::split_delim(detail::trim(line), delim);
        if (hdr.size() != 6 || detail::trim(hdr[0]) != "timestep_s")
            throw ParseError("row 1: bad header, expected "
                             "timestep_s,vehicle_id,edge_id,lane_index,position_m,speed_mps");
    }

    struct Row {
        double t;
        VehicleState v;
    };
    std::vector<Row> rows;
    IngestReport local;
    IngestReport& rep = report ? *report : local;

    auto bad_row = [&](long rowno, const std::string& why) {
        std::string msg = "row " + std::to_string(rowno) + ": " + why;
        if (strict) throw ParseError(msg);
        ++rep.rows_dropped;
        rep.diagnostics.push_back(msg);
    };

    long rowno = 1;
    while (std::getline(is, line)) {
        ++rowno;
        std::string s = detail::trim(line);
        if (s.empty()) continue;
        ++rep.rows_read;
        auto f = detail::split_delim(s, delim);
        if (f.size() != 6) {
            bad_row(rowno, "expected 6 fields, got " + std::to_string(f.size()));
            continue;
        }
        Row r;
        try {
            r.t = std::stod(f[0]);
            r.v.vehicle_id = std::stoi(f[1]);
            r.v.lane = LaneId{detail::trim(f[2]), std::stoi(f[3])};
            r.v.position_m = std::stod(f[4]);
            r.v.speed_mps = std::stod(f[5]);
        } catch (const std::exception&) {
            bad_row(rowno, "malformed field");
            continue;
        }
        if (!net.has_lane(r.v.lane)) {
            bad_row(rowno, "unknown lane '" + r.v.lane.str() + "'");
            continue;
        }
        const Lane& lane = net.lane(r.v.lane);
        if (r.v.position_m < 0.0 || r.v.position_m > lane.length_m) {
            bad_row(rowno, "position " + std::to_string(r.v.position_m) + " outside lane length " +
                               std::to_string(lane.length_m));
            continue;
        }
        if (r.v.speed_mps < 0.0) {
            bad_row(rowno, "negative speed");
            continue;
        }
        rows.push_back(r);
    }

    // infer the timestep grid
    std::set<double> times;
    for (const Row& r : rows) times.insert(r.t);
    TrajectoryLog log;
    if (times.empty()) {
        log.step_size_s = 1.0;
        return log;
    }
    std::vector<double> tv(times.begin(), times.end());
    if (tv.front() < -1e-9) throw ParseError("negative timestep");
    // grid spacing = smallest adjacent gap; every timestamp must sit on the
    // grid (empty steps are allowed, e.g. a momentarily vehicle-free network)
    double step = 1.0;
    if (tv.size() >= 2) {
        step = tv[1] - tv[0];
        for (std::size_t i = 1; i < tv.size(); ++i) step = std::min(step, tv[i] - tv[i - 1]);
    }
    if (!(step > 0.0)) throw ParseError("degenerate timestep grid");
    std::map<double, long> step_of;
    for (double t : tv) {
        double ratio = t / step;
        long idx = std::lround(ratio);
        if (std::abs(ratio - idx) > 1e-6)
            throw ParseError("non-constant timestep grid: " + std::to_string(t) +
                             " is off the inferred step of " + std::to_string(step));
        step_of[t] = idx;
    }
    log.step_size_s = step;
    log.steps.resize(static_cast<std::size_t>(step_of[tv.back()]) + 1);

    std::set<std::pair<long, int>> seen;
    for (const Row& r : rows) {
        long s = step_of[r.t];
        if (!seen.insert({s, r.v.vehicle_id}).second) {
            if (strict)
                throw ParseError("duplicate (timestep " + std::to_string(r.t) + ", vehicle " +
                                 std::to_string(r.v.vehicle_id) + ")");
            ++rep.rows_dropped;
            rep.diagnostics.push_back("duplicate vehicle " + std::to_string(r.v.vehicle_id) +
                                      " at t=" + std::to_string(r.t));
            continue;
        }
        log.steps[static_cast<std::size_t>(s)].push_back(r.v);
    }
    for (auto& snap : log.steps)
        std::sort(snap.begin(), snap.end(),
                  [](const VehicleState& a, const VehicleState& b) { return a.vehicle_id < b.vehicle_id; });

    // reconstruct entry events
    std::map<int, std::pair<LaneId, double>> last;  // vehicle -> (lane, position)
    for (long s = 0; s < log.step_count(); ++s) {
        for (const VehicleState& v : log.steps[static_cast<std::size_t>(s)]) {
            auto it = last.find(v.vehicle_id);
            bool entered = false;
            if (it == last.end()) {
                entered = true;
            } else if (it->second.first != v.lane) {
                entered = true;
            } else if (net.is_circular(v.lane.edge) && v.position_m < it->second.second) {
                entered = true;  // wrapped past the lane start
            }
            if (entered) log.entries.push_back(EntryEvent{v.vehicle_id, v.lane, s});
            last[v.vehicle_id] = {v.lane, v.position_m};
        }
    }
    return log;
}

inline TrajectoryLog parse_trajectory(const std::string& text, const RoadNetwork& net, bool strict = true,
                                      char delim = ',', IngestReport* report = nullptr) {
    std::istringstream is(text);
    return parse_trajectory(is, net, strict, delim, report);
}

}  // namespace avaas
