#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "avaas/common.hpp"
#include "avaas/network.hpp"

namespace avaas {

struct VehicleState {
    int vehicle_id = 0;
    LaneId lane;
    double position_m = 0.0;  // front bumper, from lane start
    double speed_mps = 0.0;
    double length_m = 5.0;

    bool operator==(const VehicleState&) const = default;
};

struct EntryEvent {
    int vehicle_id = 0;
    LaneId lane;
    long timestep = 0;

    auto operator<=>(const EntryEvent&) const = default;
};

// Per-step vehicle snapshots on a constant timestep grid. Timestep t is
// simulation time t * step_size_s.
struct TrajectoryLog {
    double step_size_s = 1.0;
    std::vector<std::vector<VehicleState>> steps;
    std::vector<EntryEvent> entries;
    long queued_vehicle_steps = 0;  // demand that could not be inserted, reported not fatal

    long step_count() const { return static_cast<long>(steps.size()); }
};

struct AggregationConfig {
    double t_agg_s = 300.0;
    double start_s = 0.0;
};

struct GroundTruthState {
    LaneId lane;
    double interval_start_s = 0.0;
    double k_vpk = 0.0;                // time-mean occupancy density
    double q_vph = 0.0;                // entry-count flow
    std::optional<double> v_kmh;       // time-mean speed; absent when the lane saw no vehicle
    long n_veh = 0;                    // entering vehicles in the interval
    long vehicle_steps = 0;            // occupancy samples; "lane with observations" iff > 0
};

// Uniform initial placement on a ring network's lanes (round-robin).
struct RingFillDemand {
    int vehicles = 0;
    double initial_speed_mps = 0.0;
};

struct PoissonFlow {
    std::string origin_edge;
    std::string destination_edge;
    double rate_vph = 0.0;
};

struct DemandSpec {
    std::optional<RingFillDemand> ring_fill;
    std::vector<PoissonFlow> flows;
};

// Intelligent Driver Model parameters. Desired speed comes from the lane
// speed limit.
struct IdmParams {
    double time_headway_s = 1.5;
    double max_accel = 1.0;        // m/s^2
    double comfort_decel = 1.5;    // m/s^2
    double jam_distance_m = 2.0;
    double vehicle_length_m = 5.0;
};

namespace detail {

inline double idm_accel(double v, double v_desired, double gap, double dv, const IdmParams& p) {
    double free_term = 1.0 - std::pow(v / v_desired, 4.0);
    if (gap >= 1e8) return p.max_accel * free_term;
    gap = std::max(gap, 0.01);
    double s_star = p.jam_distance_m + std::max(0.0, v * p.time_headway_s +
                                                         v * dv / (2.0 * std::sqrt(p.max_accel * p.comfort_decel)));
    return p.max_accel * (free_term - (s_star / gap) * (s_star / gap));
}

struct SimVehicle {
    int id = 0;
    std::vector<std::string> route;  // edge path; circular edges loop in place
    std::size_t route_pos = 0;
    LaneId lane;
    double position = 0.0;  // front bumper
    double speed = 0.0;
    double length = 5.0;
    bool active = false;
};

}  // namespace detail

// Discrete-time IDM simulation. No lane changing; entering vehicles are
// assigned round-robin to the lanes of their origin edge. Deterministic
// given (network, demand, seed).
inline TrajectoryLog simulate(const RoadNetwork& net, const DemandSpec& demand, double horizon_s,
                              double step_s, std::uint64_t seed, const IdmParams& idm = IdmParams{}) {
    if (!(step_s > 0.0)) throw ValidationError("step > 0 required");
    long n_steps = std::lround(horizon_s / step_s);
    if (std::abs(n_steps * step_s - horizon_s) > 1e-9)
        throw ValidationError("horizon must be a multiple of step");
    for (const PoissonFlow& f : demand.flows) {
        if (!net.has_edge(f.origin_edge))
            throw ValidationError("demand references unknown edge '" + f.origin_edge + "'");
        if (!net.has_edge(f.destination_edge))
            throw ValidationError("demand references unknown edge '" + f.destination_edge + "'");
        if (!(f.rate_vph >= 0.0)) throw ValidationError("demand rate must be >= 0");
    }

    TrajectoryLog log;
    log.step_size_s = step_s;

    std::vector<detail::SimVehicle> vehicles;
    int next_id = 0;

    // --- initial ring fill ---
    if (demand.ring_fill && demand.ring_fill->vehicles > 0) {
        std::vector<const Lane*> ring_lanes;
        for (const Lane& l : net.lanes())
            if (net.is_circular(l.id.edge)) ring_lanes.push_back(&l);
        if (ring_lanes.empty()) throw ValidationError("ring_fill demand requires a circular edge");
        int n = demand.ring_fill->vehicles;
        int per_lane = (n + static_cast<int>(ring_lanes.size()) - 1) / static_cast<int>(ring_lanes.size());
        int placed = 0;
        for (std::size_t li = 0; li < ring_lanes.size() && placed < n; ++li) {
            int count = std::min(per_lane, n - placed);
            double spacing = ring_lanes[li]->length_m / count;
            if (spacing < idm.vehicle_length_m + idm.jam_distance_m)
                throw ValidationError("ring_fill: vehicles do not fit at jam spacing");
            for (int i = 0; i < count; ++i) {
                detail::SimVehicle v;
                v.id = next_id++;
                v.route = {ring_lanes[li]->id.edge};
                v.lane = ring_lanes[li]->id;
                v.position = spacing * i + idm.vehicle_length_m;
                v.speed = demand.ring_fill->initial_speed_mps;
                v.length = idm.vehicle_length_m;
                v.active = true;
                vehicles.push_back(v);
                ++placed;
            }
        }
    }

    // --- Poisson arrival schedule, per flow, exponential interarrivals ---
    struct Arrival {
        long step;
        std::size_t flow;
    };
    std::vector<Arrival> arrivals;
    for (std::size_t fi = 0; fi < demand.flows.size(); ++fi) {
        const PoissonFlow& f = demand.flows[fi];
        if (f.rate_vph <= 0.0) continue;
        Rng rng(mix_seed(seed, 1000 + fi));
        double rate_per_s = f.rate_vph / 3600.0;
        double t = 0.0;
        while (true) {
            t += -std::log(rng.unit()) / rate_per_s;
            if (t >= horizon_s) break;
            arrivals.push_back({static_cast<long>(t / step_s), fi});
        }
    }
    std::stable_sort(arrivals.begin(), arrivals.end(),
                     [](const Arrival& a, const Arrival& b) { return a.step < b.step; });

    std::map<std::string, int> round_robin;  // per-edge entry lane rotation
    std::deque<std::pair<std::size_t, int>> origin_queue;  // (flow index, vehicle id)
    std::size_t next_arrival = 0;

    // per-lane ordered index, rebuilt each step: vehicle indices sorted by position desc
    std::map<LaneId, std::vector<std::size_t>> by_lane;
    auto rebuild_index = [&]() {
        by_lane.clear();
        for (std::size_t i = 0; i < vehicles.size(); ++i)
            if (vehicles[i].active) by_lane[vehicles[i].lane].push_back(i);
        for (auto& [lane, idx] : by_lane)
            std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
                if (vehicles[a].position != vehicles[b].position)
                    return vehicles[a].position > vehicles[b].position;
                return vehicles[a].id < vehicles[b].id;
            });
    };

    auto record_entry = [&](int vid, const LaneId& lane, long step) {
        log.entries.push_back(EntryEvent{vid, lane, step});
    };

    // entries for the initial placement
    for (const auto& v : vehicles) record_entry(v.id, v.lane, 0);

    auto snapshot = [&](long /*step*/) {
        std::vector<VehicleState> snap;
        for (const auto& v : vehicles)
            if (v.active) snap.push_back(VehicleState{v.id, v.lane, v.position, v.speed, v.length});
        std::sort(snap.begin(), snap.end(),
                  [](const VehicleState& a, const VehicleState& b) { return a.vehicle_id < b.vehicle_id; });
        log.steps.push_back(std::move(snap));
    };

    rebuild_index();
    snapshot(0);

    for (long step = 1; step <= n_steps; ++step) {
        // --- car-following update, front-to-back per lane ---
        struct Pending {
            std::size_t vi;
            double new_pos;
            double new_speed;
        };
        std::vector<Pending> pend;
        for (auto& [lane_id, idx] : by_lane) {
            const Lane& lane = net.lane(lane_id);
            bool circular = net.is_circular(lane_id.edge);
            double prev_leader_new_pos = 0.0;  // leader's already-updated position
            for (std::size_t pos_in_lane = 0; pos_in_lane < idx.size(); ++pos_in_lane) {
                detail::SimVehicle& v = vehicles[idx[pos_in_lane]];
                double gap = 1e9, dv = 0.0;
                if (pos_in_lane > 0) {
                    const detail::SimVehicle& lead = vehicles[idx[pos_in_lane - 1]];
                    gap = lead.position - lead.length - v.position;
                    dv = v.speed - lead.speed;
                } else if (circular && idx.size() >= 1) {
                    const detail::SimVehicle& lead = vehicles[idx[idx.size() - 1]];  // wrap to rearmost
                    if (idx.size() == 1) {
                        gap = lane.length_m - v.length;
                        dv = 0.0;
                    } else {
                        gap = (lane.length_m - v.position) + lead.position - lead.length;
                        dv = v.speed - lead.speed;
                    }
                } else {
                    // look across the edge boundary at the rearmost vehicle
                    // on the continuation lane
                    if (v.route_pos + 1 < v.route.size()) {
                        const std::string& next_edge = v.route[v.route_pos + 1];
                        int lidx = std::min(v.lane.index, net.edge(next_edge).lane_count - 1);
                        auto it = by_lane.find(LaneId{next_edge, lidx});
                        if (it != by_lane.end() && !it->second.empty()) {
                            const detail::SimVehicle& lead = vehicles[it->second.back()];
                            gap = (lane.length_m - v.position) + lead.position - lead.length;
                            dv = v.speed - lead.speed;
                        }
                    }
                }
                double a = detail::idm_accel(v.speed, lane.speed_limit_mps, gap, dv, idm);
                double new_speed = std::max(0.0, v.speed + a * step_s);
                double new_pos = v.position + new_speed * step_s;
                // hard non-overlap guard against the updated leader
                if (pos_in_lane > 0) {
                    double limit = prev_leader_new_pos - vehicles[idx[pos_in_lane - 1]].length;
                    if (new_pos > limit) {
                        new_pos = std::max(v.position, limit);
                        new_speed = std::max(0.0, (new_pos - v.position) / step_s);
                    }
                }
                prev_leader_new_pos = new_pos;
                pend.push_back({idx[pos_in_lane], new_pos, new_speed});
            }
        }
        for (const Pending& p : pend) {
            vehicles[p.vi].position = p.new_pos;
            vehicles[p.vi].speed = p.new_speed;
        }

        // --- edge transitions / exits ---
        for (auto& v : vehicles) {
            if (!v.active) continue;
            const Lane& lane = net.lane(v.lane);
            if (v.position <= lane.length_m) continue;
            if (net.is_circular(v.lane.edge)) {
                v.position -= lane.length_m;
                record_entry(v.id, v.lane, step);
                continue;
            }
            if (v.route_pos + 1 >= v.route.size()) {
                v.active = false;  // reached route end
                continue;
            }
            const std::string& next_edge = v.route[v.route_pos + 1];
            int lidx = std::min(v.lane.index, net.edge(next_edge).lane_count - 1);
            LaneId target{next_edge, lidx};
            double carry = v.position - lane.length_m;
            // blocked if it would overlap the rearmost occupant of the target lane
            bool blocked = false;
            auto it = by_lane.find(target);
            if (it != by_lane.end()) {
                for (std::size_t vi : it->second) {
                    const auto& other = vehicles[vi];
                    if (other.active && other.position - other.length < carry) {
                        blocked = true;
                        break;
                    }
                }
            }
            if (blocked) {
                v.position = lane.length_m;
                v.speed = 0.0;
            } else {
                v.route_pos += 1;
                v.lane = target;
                v.position = carry;
                record_entry(v.id, v.lane, step);
            }
        }

        rebuild_index();

        // --- insertions ---
        while (next_arrival < arrivals.size() && arrivals[next_arrival].step < step) ++next_arrival;
        while (next_arrival < arrivals.size() && arrivals[next_arrival].step == step) {
            origin_queue.emplace_back(arrivals[next_arrival].flow, next_id++);
            ++next_arrival;
        }
        std::size_t queue_len = origin_queue.size();
        for (std::size_t qi = 0; qi < queue_len; ++qi) {
            auto [flow_idx, vid] = origin_queue.front();
            origin_queue.pop_front();
            const PoissonFlow& flow = demand.flows[flow_idx];
            const Edge& origin = net.edge(flow.origin_edge);
            int& rr = round_robin[origin.id];
            bool inserted = false;
            for (int attempt = 0; attempt < origin.lane_count && !inserted; ++attempt) {
                LaneId lane_id{origin.id, (rr + attempt) % origin.lane_count};
                double min_front = 1e18;
                double lead_speed = net.lane(lane_id).speed_limit_mps;
                auto it = by_lane.find(lane_id);
                if (it != by_lane.end()) {
                    for (std::size_t vi : it->second) {
                        const auto& o = vehicles[vi];
                        if (o.position - o.length < min_front) {
                            min_front = o.position - o.length;
                            lead_speed = o.speed;
                        }
                    }
                }
                double entry_pos = idm.vehicle_length_m;
                if (min_front - entry_pos < idm.jam_distance_m) continue;
                detail::SimVehicle nv;
                nv.id = vid;
                nv.route = shortest_edge_path(net, flow.origin_edge, flow.destination_edge);
                if (nv.route.empty())
                    throw ValidationError("no route from '" + flow.origin_edge + "' to '" +
                                          flow.destination_edge + "'");
                nv.lane = lane_id;
                nv.position = entry_pos;
                nv.speed = std::min(net.lane(lane_id).speed_limit_mps, lead_speed);
                nv.length = idm.vehicle_length_m;
                nv.active = true;
                vehicles.push_back(nv);
                by_lane[lane_id].push_back(vehicles.size() - 1);
                std::sort(by_lane[lane_id].begin(), by_lane[lane_id].end(), [&](std::size_t a, std::size_t b) {
                    return vehicles[a].position > vehicles[b].position;
                });
                record_entry(vid, lane_id, step);
                rr = (lane_id.index + 1) % origin.lane_count;
                inserted = true;
            }
            if (!inserted) {
                origin_queue.emplace_back(flow_idx, vid);  // keep id, retry next step
                ++log.queued_vehicle_steps;
            }
        }

        snapshot(step);
    }
    return log;
}

inline long interval_count(const TrajectoryLog& log, const AggregationConfig& agg) {
    long steps_per = std::lround(agg.t_agg_s / log.step_size_s);
    if (steps_per <= 0 || std::abs(steps_per * log.step_size_s - agg.t_agg_s) > 1e-9)
        throw ValidationError("t_agg must be a positive multiple of the log step size");
    long start_step = std::lround(agg.start_s / log.step_size_s);
    long usable = log.step_count() - start_step;
    return usable <= 0 ? 0 : usable / steps_per;
}

// Ground truth per lane and interval: occupancy time-mean density,
// entry-count flow n_veh*3600/t_agg, time-mean speed (absent when the lane
// carried no vehicle in the interval).
inline std::vector<GroundTruthState> ground_truth(const TrajectoryLog& log, const RoadNetwork& net,
                                                  const AggregationConfig& agg) {
    long steps_per = std::lround(agg.t_agg_s / log.step_size_s);
    if (steps_per <= 0 || std::abs(steps_per * log.step_size_s - agg.t_agg_s) > 1e-9)
        throw ValidationError("t_agg must be a positive multiple of the log step size");
    long start_step = std::lround(agg.start_s / log.step_size_s);
    long n_intervals = interval_count(log, agg);

    std::vector<GroundTruthState> out;
    for (long iv = 0; iv < n_intervals; ++iv) {
        long s0 = start_step + iv * steps_per;
        std::map<LaneId, std::pair<long, double>> occ;  // lane -> (vehicle-steps, speed sum)
        for (long s = s0; s < s0 + steps_per; ++s) {
            for (const VehicleState& v : log.steps[static_cast<std::size_t>(s)]) {
                auto& [count, speed_sum] = occ[v.lane];
                ++count;
                speed_sum += v.speed_mps;
            }
        }
        std::map<LaneId, long> entries;
        for (const EntryEvent& e : log.entries)
            if (e.timestep >= s0 && e.timestep < s0 + steps_per) ++entries[e.lane];

        for (const Lane& lane : net.lanes()) {
            auto oit = occ.find(lane.id);
            long vsteps = oit == occ.end() ? 0 : oit->second.first;
            double speed_sum = oit == occ.end() ? 0.0 : oit->second.second;
            long n_veh = entries.count(lane.id) ? entries[lane.id] : 0;
            if (vsteps == 0 && n_veh == 0) continue;  // lane without observations
            GroundTruthState g;
            g.lane = lane.id;
            g.interval_start_s = agg.start_s + iv * agg.t_agg_s;
            g.k_vpk = static_cast<double>(vsteps) / steps_per / (lane.length_m / 1000.0);
            g.q_vph = static_cast<double>(n_veh) * 3600.0 / agg.t_agg_s;
            if (vsteps > 0) g.v_kmh = speed_sum / vsteps * kMsToKmh;
            g.n_veh = n_veh;
            g.vehicle_steps = vsteps;
            out.push_back(g);
        }
    }
    return out;
}

struct NetworkMean {
    double interval_start_s = 0.0;
    double k_avg_vpk = 0.0;
    double q_avg_vph = 0.0;
    std::optional<double> v_avg_kmh;
    long lanes = 0;
};

// Unweighted per-interval mean over the scope's lanes. By default only lanes
// with observations in the interval contribute; include_unobserved adds the
// rest as k = 0, q = 0.
inline std::vector<NetworkMean> network_means(const std::vector<GroundTruthState>& states,
                                              const std::vector<LaneId>& scope,
                                              bool include_unobserved = false) {
    if (scope.empty()) throw ContractError("network_means: empty scope");
    std::set<LaneId> scope_set(scope.begin(), scope.end());
    std::map<double, std::vector<const GroundTruthState*>> by_interval;
    for (const GroundTruthState& g : states)
        if (scope_set.count(g.lane)) by_interval[g.interval_start_s].push_back(&g);

    std::vector<NetworkMean> out;
    for (const auto& [ts, group] : by_interval) {
        NetworkMean m;
        m.interval_start_s = ts;
        double vsum = 0.0;
        long vn = 0;
        for (const GroundTruthState* g : group) {
            m.k_avg_vpk += g->k_vpk;
            m.q_avg_vph += g->q_vph;
            if (g->v_kmh) {
                vsum += *g->v_kmh;
                ++vn;
            }
        }
        long n = static_cast<long>(group.size());
        if (include_unobserved) n = static_cast<long>(scope.size());
        m.k_avg_vpk /= n;
        m.q_avg_vph /= n;
        if (vn > 0) m.v_avg_kmh = vsum / vn;
        m.lanes = n;
        out.push_back(m);
    }
    return out;
}

}  // namespace avaas
