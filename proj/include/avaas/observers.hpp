#pragma once

#include <map>
#include <set>
#include <vector>

#include "avaas/common.hpp"
#include "avaas/microsim.hpp"
#include "avaas/network.hpp"

namespace avaas {

struct ObserverPolicy {
    double penetration_pct = 10.0;  // p_r
    double mo_split = 0.5;          // fraction of sampled observers acting as MO
    std::uint64_t seed = 0;
    long min_per_interval = 1;

    void validate() const {
        if (!(penetration_pct > 0.0) || penetration_pct > 100.0)
            throw ValidationError("penetration_pct must be in (0, 100]");
        if (mo_split < 0.0 || mo_split > 1.0) throw ValidationError("mo_split must be in [0, 1]");
        if (min_per_interval < 0) throw ValidationError("min_per_interval must be >= 0");
    }
};

// A PO is a virtual stationary sensor anchored at the sampled vehicle's
// first in-interval pose; the anchoring vehicle keeps driving in the ground
// truth and may itself be detected.
struct PoAnchor {
    int anchor_vehicle_id = 0;
    LaneId lane;
    double position_m = 0.0;
};

struct ObserverAssignment {
    long interval_index = 0;
    double interval_start_s = 0.0;
    long n_total = 0;  // distinct vehicles present during the interval
    std::set<int> mo_ids;
    std::vector<PoAnchor> po_anchors;
};

// Observer counts for one interval: n_obs = max(min_per_interval,
// round_half_up(n_total * p_r / 100)) capped at n_total; the MO/PO split is
// round-half-up with both sides forced >= 1 when their share is positive and
// n_obs >= 2.
inline std::pair<long, long> observer_counts(long n_total, const ObserverPolicy& policy) {
    if (n_total <= 0) return {0, 0};
    long n_obs = std::max(policy.min_per_interval, round_half_up(n_total * policy.penetration_pct / 100.0));
    n_obs = std::min(n_obs, n_total);
    long n_mo = round_half_up(static_cast<double>(n_obs) * policy.mo_split);
    long n_po = n_obs - n_mo;
    if (n_obs >= 2) {
        if (policy.mo_split > 0.0 && n_mo == 0) {
            n_mo = 1;
            n_po = n_obs - 1;
        }
        if (policy.mo_split < 1.0 && n_po == 0) {
            n_po = 1;
            n_mo = n_obs - 1;
        }
    }
    return {n_mo, n_po};
}

// Per-interval uniform sampling without replacement, seeded per interval so
// results are order independent and deterministic.
inline std::vector<ObserverAssignment> sample_observers(const TrajectoryLog& log,
                                                        const AggregationConfig& agg,
                                                        const ObserverPolicy& policy) {
    policy.validate();
    long steps_per = std::lround(agg.t_agg_s / log.step_size_s);
    if (steps_per <= 0) throw ValidationError("t_agg must be a positive multiple of the log step size");
    long start_step = std::lround(agg.start_s / log.step_size_s);
    long n_intervals = interval_count(log, agg);

    std::vector<ObserverAssignment> out;
    for (long iv = 0; iv < n_intervals; ++iv) {
        long s0 = start_step + iv * steps_per;
        // first appearance per vehicle within the interval
        std::map<int, std::pair<LaneId, double>> first_pose;
        for (long s = s0; s < s0 + steps_per; ++s)
            for (const VehicleState& v : log.steps[static_cast<std::size_t>(s)])
                first_pose.emplace(v.vehicle_id, std::make_pair(v.lane, v.position_m));

        ObserverAssignment a;
        a.interval_index = iv;
        a.interval_start_s = agg.start_s + iv * agg.t_agg_s;
        a.n_total = static_cast<long>(first_pose.size());
        if (a.n_total > 0) {
            auto [n_mo, n_po] = observer_counts(a.n_total, policy);
            std::vector<int> ids;
            ids.reserve(first_pose.size());
            for (const auto& [vid, pose] : first_pose) ids.push_back(vid);
            Rng rng(mix_seed(policy.seed, static_cast<std::uint64_t>(iv)));
            auto picks = sample_without_replacement(ids.size(), static_cast<std::size_t>(n_mo + n_po), rng);
            for (long i = 0; i < n_mo; ++i) a.mo_ids.insert(ids[picks[static_cast<std::size_t>(i)]]);
            for (long i = n_mo; i < n_mo + n_po; ++i) {
                int vid = ids[picks[static_cast<std::size_t>(i)]];
                const auto& [lane, pos] = first_pose[vid];
                a.po_anchors.push_back(PoAnchor{vid, lane, pos});
            }
        }
        out.push_back(std::move(a));
    }
    return out;
}

}  // namespace avaas
