#pragma once

#include <atomic>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "avaas/common.hpp"
#include "avaas/detection.hpp"
#include "avaas/microsim.hpp"
#include "avaas/network.hpp"
#include "avaas/observers.hpp"

namespace avaas {

enum class ScopeKind { Lane, Cluster, Network };

struct Scope {
    ScopeKind kind = ScopeKind::Network;
    LaneId lane;          // valid when kind == Lane
    int cluster_id = -1;  // valid when kind == Cluster

    auto operator<=>(const Scope&) const = default;

    static Scope for_lane(LaneId id) { return Scope{ScopeKind::Lane, std::move(id), -1}; }
    static Scope for_cluster(int id) { return Scope{ScopeKind::Cluster, {}, id}; }
    static Scope network() { return Scope{}; }

    std::string kind_name() const {
        switch (kind) {
            case ScopeKind::Lane: return "lane";
            case ScopeKind::Cluster: return "cluster";
            default: return "network";
        }
    }

    std::string id_name() const {
        switch (kind) {
            case ScopeKind::Lane: return lane.str();
            case ScopeKind::Cluster: return std::to_string(cluster_id);
            default: return "-";
        }
    }
};

enum class Source { GroundTruth, MoEstimate, PoEstimate, Combined };

inline std::string source_name(Source s) {
    switch (s) {
        case Source::GroundTruth: return "ground_truth";
        case Source::MoEstimate: return "mo_estimate";
        case Source::PoEstimate: return "po_estimate";
        default: return "combined";
    }
}

struct TrafficState {
    Scope scope;
    double interval_start_s = 0.0;
    std::optional<double> k_vpk;
    std::optional<double> v_kmh;
    std::optional<double> q_vph;
    Source source = Source::GroundTruth;
    long sample_count = 1;
};

// Instantaneous estimate from one observation; v and q are absent for a PO
// with an empty zone.
struct PointEstimate {
    double k_vpk = 0.0;
    std::optional<double> v_kmh;
    std::optional<double> q_vph;
};

// k* = (1 + n_det) * 1000 / zone; v* = mean of detected speeds plus the ego
// speed; q* = k* v*. The ego is always counted, so k* >= 1000 / zone.
inline PointEstimate mo_point_estimate(const Observation& obs) {
    if (obs.kind != ObserverKind::MO) throw ContractError("mo_point_estimate: PO observation passed in");
    if (obs.degenerate_zone || obs.zone_total_length_m <= 0.0)
        throw ContractError("mo_point_estimate: degenerate detection zone");
    PointEstimate e;
    long n = obs.n_det();
    e.k_vpk = (1.0 + n) * 1000.0 / obs.zone_total_length_m;
    double speed_sum = obs.ego_speed_mps;
    for (const Detection& d : obs.detections) speed_sum += d.speed_mps;
    e.v_kmh = speed_sum / (n + 1) * kMsToKmh;
    e.q_vph = e.k_vpk * *e.v_kmh;
    return e;
}

// k** = n_det * 1000 / zone; v** = mean detected speed, absent when nothing
// is detected (the PO itself is not part of the traffic stream).
inline PointEstimate po_point_estimate(const Observation& obs) {
    if (obs.kind != ObserverKind::PO) throw ContractError("po_point_estimate: MO observation passed in");
    if (obs.degenerate_zone || obs.zone_total_length_m <= 0.0)
        throw ContractError("po_point_estimate: degenerate detection zone");
    PointEstimate e;
    long n = obs.n_det();
    e.k_vpk = n * 1000.0 / obs.zone_total_length_m;
    if (n > 0) {
        double speed_sum = 0.0;
        for (const Detection& d : obs.detections) speed_sum += d.speed_mps;
        e.v_kmh = speed_sum / n * kMsToKmh;
        e.q_vph = e.k_vpk * *e.v_kmh;
    }
    return e;
}

// One observer's per-step estimates within a single interval.
struct ObserverSeries {
    int observer_id = 0;
    std::vector<PointEstimate> points;
};

// Two-stage mean: each observer is first averaged over its own valid steps,
// then observers are averaged with equal weight. Speed (and flow) means skip
// absent samples at both stages.
inline std::optional<TrafficState> aggregate_interval(const std::vector<ObserverSeries>& series,
                                                      double interval_start_s, const Scope& scope,
                                                      Source source) {
    double k_sum = 0.0, v_sum = 0.0, q_sum = 0.0;
    long k_obs = 0, v_obs = 0, q_obs = 0;
    for (const ObserverSeries& s : series) {
        if (s.points.empty()) continue;
        double k = 0.0, v = 0.0, q = 0.0;
        long vn = 0, qn = 0;
        for (const PointEstimate& p : s.points) {
            k += p.k_vpk;
            if (p.v_kmh) {
                v += *p.v_kmh;
                ++vn;
            }
            if (p.q_vph) {
                q += *p.q_vph;
                ++qn;
            }
        }
        k_sum += k / static_cast<double>(s.points.size());
        ++k_obs;
        if (vn > 0) {
            v_sum += v / vn;
            ++v_obs;
        }
        if (qn > 0) {
            q_sum += q / qn;
            ++q_obs;
        }
    }
    if (k_obs == 0) return std::nullopt;  // explicit gap, never zero-filled
    TrafficState t;
    t.scope = scope;
    t.interval_start_s = interval_start_s;
    t.source = source;
    t.k_vpk = k_sum / k_obs;
    if (v_obs > 0) t.v_kmh = v_sum / v_obs;
    if (q_obs > 0) t.q_vph = q_sum / q_obs;
    t.sample_count = k_obs;
    return t;
}

// Unweighted per-interval mean over lanes with estimates, per source.
inline std::vector<TrafficState> scope_rollup(const std::vector<TrafficState>& link_states,
                                              const std::map<LaneId, int>& lane_to_cluster,
                                              ScopeKind target) {
    if (target == ScopeKind::Lane) throw ContractError("scope_rollup target must be cluster or network");
    struct Key {
        double ts;
        Source src;
        int cluster;
        auto operator<=>(const Key&) const = default;
    };
    std::map<Key, std::vector<const TrafficState*>> groups;
    for (const TrafficState& t : link_states) {
        if (t.scope.kind != ScopeKind::Lane) throw ContractError("scope_rollup expects lane-scope inputs");
        int cluster = -1;
        if (target == ScopeKind::Cluster) {
            auto it = lane_to_cluster.find(t.scope.lane);
            if (it == lane_to_cluster.end())
                throw ValidationError("scope_rollup: lane '" + t.scope.lane.str() + "' has no cluster");
            cluster = it->second;
        }
        groups[Key{t.interval_start_s, t.source, cluster}].push_back(&t);
    }

    std::vector<TrafficState> out;
    for (const auto& [key, members] : groups) {
        TrafficState t;
        t.scope = target == ScopeKind::Cluster ? Scope::for_cluster(key.cluster) : Scope::network();
        t.interval_start_s = key.ts;
        t.source = key.src;
        double k = 0.0, v = 0.0, q = 0.0;
        long kn = 0, vn = 0, qn = 0;
        t.sample_count = 0;
        for (const TrafficState* m : members) {
            if (m->k_vpk) {
                k += *m->k_vpk;
                ++kn;
            }
            if (m->v_kmh) {
                v += *m->v_kmh;
                ++vn;
            }
            if (m->q_vph) {
                q += *m->q_vph;
                ++qn;
            }
            t.sample_count += m->sample_count;
        }
        if (kn > 0) t.k_vpk = k / kn;
        if (vn > 0) t.v_kmh = v / vn;
        if (qn > 0) t.q_vph = q / qn;
        if (kn == 0 && vn == 0 && qn == 0) continue;
        out.push_back(t);
    }
    return out;
}

// Observer-count-weighted fusion of MO and PO lane states into `combined`.
inline std::vector<TrafficState> combine_sources(const std::vector<TrafficState>& states) {
    struct Key {
        Scope scope;
        double ts;
        auto operator<=>(const Key&) const = default;
    };
    std::map<Key, std::pair<const TrafficState*, const TrafficState*>> pairs;
    for (const TrafficState& t : states) {
        if (t.source == Source::MoEstimate) pairs[{t.scope, t.interval_start_s}].first = &t;
        if (t.source == Source::PoEstimate) pairs[{t.scope, t.interval_start_s}].second = &t;
    }
    std::vector<TrafficState> out;
    for (const auto& [key, pr] : pairs) {
        const TrafficState* mo = pr.first;
        const TrafficState* po = pr.second;
        if (!mo && !po) continue;
        TrafficState c;
        c.scope = key.scope;
        c.interval_start_s = key.ts;
        c.source = Source::Combined;
        if (mo && !po) {
            c.k_vpk = mo->k_vpk;
            c.v_kmh = mo->v_kmh;
            c.q_vph = mo->q_vph;
            c.sample_count = mo->sample_count;
        } else if (po && !mo) {
            c.k_vpk = po->k_vpk;
            c.v_kmh = po->v_kmh;
            c.q_vph = po->q_vph;
            c.sample_count = po->sample_count;
        } else {
            double wm = static_cast<double>(mo->sample_count);
            double wp = static_cast<double>(po->sample_count);
            auto fuse = [&](const std::optional<double>& a,
                            const std::optional<double>& b) -> std::optional<double> {
                if (a && b) return (*a * wm + *b * wp) / (wm + wp);
                if (a) return a;
                return b;
            };
            c.k_vpk = fuse(mo->k_vpk, po->k_vpk);
            c.v_kmh = fuse(mo->v_kmh, po->v_kmh);
            c.q_vph = fuse(mo->q_vph, po->q_vph);
            c.sample_count = mo->sample_count + po->sample_count;
        }
        out.push_back(c);
    }
    return out;
}

// Runs detection and point estimation over a log for the sampled observers
// and aggregates to lane-scope interval states. An MO contributes one
// observer series per lane it occupies (a lane stay); a PO contributes to
// its anchor lane.
inline std::vector<TrafficState> estimate_lane_states(const TrajectoryLog& log, const RoadNetwork& net,
                                                      const std::vector<ObserverAssignment>& assignments,
                                                      const SensorConfig& sensors,
                                                      const AggregationConfig& agg,
                                                      bool include_combined = true, int workers = 1) {
    long steps_per = std::lround(agg.t_agg_s / log.step_size_s);
    long start_step = std::lround(agg.start_s / log.step_size_s);

    auto process_assignment = [&](const ObserverAssignment& a) {
        std::vector<TrafficState> out;
        long s0 = start_step + a.interval_index * steps_per;
        // (lane, observer) -> per-step estimates, per source
        std::map<LaneId, std::map<int, ObserverSeries>> mo_series;
        std::map<LaneId, std::map<int, ObserverSeries>> po_series;

        for (long s = s0; s < s0 + steps_per && s < log.step_count(); ++s) {
            const auto& snap = log.steps[static_cast<std::size_t>(s)];
            double t = s * log.step_size_s;
            for (int vid : a.mo_ids) {
                const VehicleState* me = nullptr;
                for (const VehicleState& v : snap)
                    if (v.vehicle_id == vid) me = &v;
                if (!me) continue;  // observer not (yet / any more) in the network
                ObserverPose pose{vid, ObserverKind::MO, me->lane, me->position_m, me->speed_mps, vid};
                Observation obs = detect(pose, snap, sensors, net);
                obs.time_s = t;
                if (obs.degenerate_zone) continue;
                auto& series = mo_series[me->lane][vid];
                series.observer_id = vid;
                series.points.push_back(mo_point_estimate(obs));
            }
            for (std::size_t pi = 0; pi < a.po_anchors.size(); ++pi) {
                const PoAnchor& anchor = a.po_anchors[pi];
                ObserverPose pose{static_cast<int>(pi), ObserverKind::PO, anchor.lane, anchor.position_m,
                                  0.0, std::nullopt};
                Observation obs = detect(pose, snap, sensors, net);
                obs.time_s = t;
                if (obs.degenerate_zone) continue;
                auto& series = po_series[anchor.lane][static_cast<int>(pi)];
                series.observer_id = static_cast<int>(pi);
                series.points.push_back(po_point_estimate(obs));
            }
        }

        auto emit = [&](const std::map<LaneId, std::map<int, ObserverSeries>>& by_lane, Source src) {
            for (const auto& [lane, by_obs] : by_lane) {
                std::vector<ObserverSeries> series;
                for (const auto& [oid, s] : by_obs) series.push_back(s);
                auto st = aggregate_interval(series, a.interval_start_s, Scope::for_lane(lane), src);
                if (st) out.push_back(*st);
            }
        };
        emit(mo_series, Source::MoEstimate);
        emit(po_series, Source::PoEstimate);
        return out;
    };

    // intervals are independent; results are merged in interval order so the
    // worker count never changes the output
    std::vector<std::vector<TrafficState>> per_interval(assignments.size());
    if (workers <= 1 || assignments.size() <= 1) {
        for (std::size_t i = 0; i < assignments.size(); ++i)
            per_interval[i] = process_assignment(assignments[i]);
    } else {
        std::atomic<std::size_t> next{0};
        auto run = [&]() {
            while (true) {
                std::size_t i = next.fetch_add(1);
                if (i >= assignments.size()) break;
                per_interval[i] = process_assignment(assignments[i]);
            }
        };
        std::vector<std::thread> pool;
        int n = std::min<int>(workers, static_cast<int>(assignments.size()));
        for (int t = 0; t < n; ++t) pool.emplace_back(run);
        for (auto& t : pool) t.join();
    }

    std::vector<TrafficState> out;
    for (auto& chunk : per_interval) out.insert(out.end(), chunk.begin(), chunk.end());
    if (include_combined) {
        auto combined = combine_sources(out);
        out.insert(out.end(), combined.begin(), combined.end());
    }
    return out;
}

}  // namespace avaas
