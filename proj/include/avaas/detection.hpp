#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <vector>

#include "avaas/common.hpp"
#include "avaas/microsim.hpp"
#include "avaas/network.hpp"

namespace avaas {

enum class LaneRelation { Ego, Adjacent, Opposite };

enum class ObserverKind { MO, PO };

struct RangePair {
    double forward_m = 0.0;
    double backward_m = 0.0;
};

// Per-relation asymmetric detection zone. The default profiles keep the
// forward range at twice the backward range; lateral widths are carried for
// schema completeness but lanes are discrete, so only the enabled-relations
// set acts laterally.
struct SensorConfig {
    RangePair ego{200.0, 100.0};
    RangePair adjacent{100.0, 50.0};
    RangePair opposite{100.0, 50.0};
    double lateral_left_m = 4.0;
    double lateral_right_m = 2.0;
    std::set<LaneRelation> enabled{LaneRelation::Ego, LaneRelation::Adjacent};
    bool cross_edge = false;  // forward detections onto downstream edges

    const RangePair& range(LaneRelation r) const {
        switch (r) {
            case LaneRelation::Ego: return ego;
            case LaneRelation::Adjacent: return adjacent;
            default: return opposite;
        }
    }

    void validate() const {
        for (LaneRelation r : {LaneRelation::Ego, LaneRelation::Adjacent, LaneRelation::Opposite}) {
            const RangePair& p = range(r);
            if (p.forward_m < 0.0 || p.backward_m < 0.0)
                throw ValidationError("sensor ranges must be >= 0");
            if (p.forward_m > 1000.0 || p.backward_m > 1000.0)
                throw ValidationError("sensor ranges exceed the 1000 m physical maximum");
        }
        if (lateral_left_m < 0.0 || lateral_right_m < 0.0)
            throw ValidationError("lateral widths must be >= 0");
    }
};

enum class SensorProfile { LongRange, MidRange };

inline SensorConfig default_sensor_profile(SensorProfile kind) {
    SensorConfig c;
    c.ego = {200.0, 100.0};
    c.adjacent = {100.0, 50.0};
    c.opposite = {100.0, 50.0};
    c.lateral_left_m = 4.0;
    c.lateral_right_m = 2.0;
    if (kind == SensorProfile::MidRange) {
        c.ego = {100.0, 50.0};
        c.adjacent = {50.0, 25.0};
        c.opposite = {50.0, 25.0};
        c.lateral_left_m = 2.0;
        c.lateral_right_m = 1.0;
    }
    return c;
}

struct Detection {
    int vehicle_id = 0;
    LaneId lane;
    double distance_m = 0.0;  // signed longitudinal offset from the ego
    double speed_mps = 0.0;
};

struct Observation {
    int observer_id = 0;
    ObserverKind kind = ObserverKind::MO;
    double time_s = 0.0;
    LaneId ego_lane;
    double ego_speed_mps = 0.0;  // 0 for PO
    std::vector<Detection> detections;
    double zone_total_length_m = 0.0;  // sum of d_f + d_b over enabled lanes
    bool degenerate_zone = false;      // all enabled ranges zero

    long n_det() const { return static_cast<long>(detections.size()); }
};

struct ObserverPose {
    int observer_id = 0;
    ObserverKind kind = ObserverKind::MO;
    LaneId lane;
    double position_m = 0.0;
    double speed_mps = 0.0;
    std::optional<int> ego_vehicle_id;  // excluded from detections; required for MO
};

namespace detail {

// Candidate lane with its relation to the ego and the coordinate transform
// onto the ego axis: ego_axis_pos = sign * pos + offset.
struct RelatedLane {
    LaneId lane;
    LaneRelation relation;
    double sign = 1.0;
    double offset = 0.0;
};

inline std::vector<RelatedLane> related_lanes(const ObserverPose& ego, const SensorConfig& cfg,
                                              const RoadNetwork& net) {
    std::vector<RelatedLane> out;
    const Edge& edge = net.edge(ego.lane.edge);
    if (cfg.enabled.count(LaneRelation::Ego))
        out.push_back({ego.lane, LaneRelation::Ego, 1.0, 0.0});
    if (cfg.enabled.count(LaneRelation::Adjacent)) {
        for (int l = 0; l < edge.lane_count; ++l)
            if (l != ego.lane.index) out.push_back({LaneId{edge.id, l}, LaneRelation::Adjacent, 1.0, 0.0});
    }
    if (cfg.enabled.count(LaneRelation::Opposite) && edge.opposite_edge) {
        const Edge& opp = net.edge(*edge.opposite_edge);
        // opposite coordinate p maps to length - p on the ego axis
        for (int l = 0; l < opp.lane_count; ++l)
            out.push_back({LaneId{opp.id, l}, LaneRelation::Opposite, -1.0, opp.length_m});
    }
    return out;
}

}  // namespace detail

// Two-stage detection: lane relation filtering, then the asymmetric
// longitudinal zone -d_b <= delta <= d_f per relation. Detected speeds,
// lanes, and distances are copied from the snapshot without noise.
inline Observation detect(const ObserverPose& ego, const std::vector<VehicleState>& snapshot,
                          const SensorConfig& sensors, const RoadNetwork& net) {
    sensors.validate();
    if (!net.has_lane(ego.lane)) throw ValidationError("observer on unknown lane '" + ego.lane.str() + "'");
    if (ego.kind == ObserverKind::MO) {
        if (!ego.ego_vehicle_id) throw ContractError("MO observer requires an ego vehicle id");
        bool found = false;
        for (const VehicleState& v : snapshot)
            if (v.vehicle_id == *ego.ego_vehicle_id) found = true;
        if (!found)
            throw ContractError("MO ego vehicle " + std::to_string(*ego.ego_vehicle_id) +
                                " not present in snapshot");
    }

    Observation obs;
    obs.observer_id = ego.observer_id;
    obs.kind = ego.kind;
    obs.ego_lane = ego.lane;
    obs.ego_speed_mps = ego.kind == ObserverKind::PO ? 0.0 : ego.speed_mps;

    auto lanes = detail::related_lanes(ego, sensors, net);
    double zone = 0.0;
    for (const auto& rl : lanes) {
        const RangePair& rp = sensors.range(rl.relation);
        zone += rp.forward_m + rp.backward_m;
    }
    obs.zone_total_length_m = zone;
    if (zone <= 0.0) {
        obs.degenerate_zone = true;
        return obs;
    }

    double ego_len = net.lane(ego.lane).length_m;
    bool ego_circular = net.is_circular(ego.lane.edge);

    for (const VehicleState& v : snapshot) {
        if (ego.ego_vehicle_id && v.vehicle_id == *ego.ego_vehicle_id) continue;
        for (const auto& rl : lanes) {
            if (v.lane != rl.lane) continue;
            const RangePair& rp = sensors.range(rl.relation);
            double mapped = rl.sign * v.position_m + rl.offset;
            double delta = mapped - ego.position_m;
            bool hit = false;
            if (rl.relation == LaneRelation::Ego && ego_circular) {
                // forward and backward arcs around the ring
                double dp = std::fmod(delta, ego_len);
                if (dp < 0.0) dp += ego_len;
                if (dp <= rp.forward_m) {
                    delta = dp;
                    hit = true;
                } else if (dp - ego_len >= -rp.backward_m) {
                    delta = dp - ego_len;
                    hit = true;
                }
            } else {
                hit = delta >= -rp.backward_m && delta <= rp.forward_m;
            }
            if (hit) obs.detections.push_back(Detection{v.vehicle_id, v.lane, delta, v.speed_mps});
            break;  // each vehicle matches at most one related lane
        }
    }

    // optional forward look across the edge boundary onto downstream edges
    if (sensors.cross_edge) {
        const RangePair& rp = sensors.range(LaneRelation::Ego);
        double remaining = ego_len - ego.position_m;
        if (!ego_circular && rp.forward_m > remaining) {
            for (const std::string& next_edge : net.downstream(ego.lane.edge)) {
                for (const VehicleState& v : snapshot) {
                    if (v.lane.edge != next_edge) continue;
                    if (ego.ego_vehicle_id && v.vehicle_id == *ego.ego_vehicle_id) continue;
                    double delta = remaining + v.position_m;
                    if (delta <= rp.forward_m)
                        obs.detections.push_back(Detection{v.vehicle_id, v.lane, delta, v.speed_mps});
                }
            }
        }
    }

    // dedupe, keep the closest match per vehicle
    std::sort(obs.detections.begin(), obs.detections.end(), [](const Detection& a, const Detection& b) {
        if (a.vehicle_id != b.vehicle_id) return a.vehicle_id < b.vehicle_id;
        return std::abs(a.distance_m) < std::abs(b.distance_m);
    });
    obs.detections.erase(std::unique(obs.detections.begin(), obs.detections.end(),
                                     [](const Detection& a, const Detection& b) {
                                         return a.vehicle_id == b.vehicle_id;
                                     }),
                         obs.detections.end());
    return obs;
}

}  // namespace avaas
