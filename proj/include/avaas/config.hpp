#pragma once

#include <optional>
#include <string>
#include <vector>

#include "avaas/common.hpp"
#include "avaas/detection.hpp"
#include "avaas/microsim.hpp"
#include "avaas/network.hpp"
#include "avaas/observers.hpp"
#include "avaas/scenario.hpp"

namespace avaas {

struct ClusteringOptions {
    int k = 0;                    // 0: pick via the elbow knee
    int elbow_k_min = 1;
    int elbow_k_max = 8;
    bool include_flow = false;    // add mean_q to the feature space
    bool on_estimates = false;    // cluster on estimated states instead of ground truth
    std::uint64_t seed = 0;
};

// Everything a pipeline run needs, parsed from one scenario file.
struct ScenarioConfig {
    ScenarioDoc doc;  // retained so the network can be rebuilt on demand
    DemandSpec demand;
    double horizon_s = 3600.0;
    double step_s = 1.0;
    std::uint64_t seed = 1;
    AggregationConfig agg;
    ObserverPolicy policy;
    SensorConfig sensors;
    ClusteringOptions clustering;

    RoadNetwork build_network() const {
        auto it = doc.find("network");
        if (it == doc.end()) throw ParseError("missing [network] section");
        return load_network_section(it->second);
    }

    void validate() const {
        if (!(step_s > 0.0)) throw ValidationError("step_s > 0 required");
        long n = std::lround(agg.t_agg_s / step_s);
        if (n <= 0 || std::abs(n * step_s - agg.t_agg_s) > 1e-9)
            throw ValidationError("t_agg_s must be a positive multiple of step_s");
        policy.validate();
        sensors.validate();
    }
};

namespace detail {

inline bool parse_bool(const std::string& s, const std::string& what, int line) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ParseError("line " + std::to_string(line) + ": " + what + ": expected true/false, got '" + s + "'");
}

}  // namespace detail

inline ScenarioConfig load_scenario(const std::string& text) {
    ScenarioConfig cfg;
    cfg.doc = parse_scenario_doc(text);

    if (auto it = cfg.doc.find("demand"); it != cfg.doc.end()) {
        std::string kind = section_value(it->second, "kind").value_or("none");
        if (kind == "ring_fill") {
            RingFillDemand rf;
            for (const auto& e : it->second) {
                if (e.key == "vehicles")
                    rf.vehicles = static_cast<int>(detail::parse_long(e.value, "vehicles", e.line));
                else if (e.key == "initial_speed_mps")
                    rf.initial_speed_mps = detail::parse_double(e.value, "initial_speed_mps", e.line);
                else if (e.key != "kind")
                    throw ParseError("line " + std::to_string(e.line) + ": unknown demand key '" + e.key + "'");
            }
            cfg.demand.ring_fill = rf;
        } else if (kind == "poisson") {
            for (const auto& e : it->second) {
                if (e.key == "flow") {
                    auto toks = detail::split_ws(e.value);
                    if (toks.size() < 2)
                        throw ParseError("line " + std::to_string(e.line) +
                                         ": flow needs 'origin destination [rate_vph=X]'");
                    PoissonFlow f;
                    f.origin_edge = toks[0];
                    f.destination_edge = toks[1];
                    for (const auto& [k, v] : parse_attrs(toks, 2, e.line)) {
                        if (k == "rate_vph")
                            f.rate_vph = detail::parse_double(v, "rate_vph", e.line);
                        else
                            throw ParseError("line " + std::to_string(e.line) + ": unknown flow attr '" + k + "'");
                    }
                    cfg.demand.flows.push_back(f);
                } else if (e.key != "kind") {
                    throw ParseError("line " + std::to_string(e.line) + ": unknown demand key '" + e.key + "'");
                }
            }
        } else if (kind != "none") {
            throw ParseError("unknown demand kind '" + kind + "'");
        }
    }

    if (auto it = cfg.doc.find("simulation"); it != cfg.doc.end()) {
        for (const auto& e : it->second) {
            if (e.key == "horizon_s")
                cfg.horizon_s = detail::parse_double(e.value, "horizon_s", e.line);
            else if (e.key == "step_s")
                cfg.step_s = detail::parse_double(e.value, "step_s", e.line);
            else if (e.key == "seed")
                cfg.seed = static_cast<std::uint64_t>(detail::parse_long(e.value, "seed", e.line));
            else
                throw ParseError("line " + std::to_string(e.line) + ": unknown simulation key '" + e.key + "'");
        }
    }

    if (auto it = cfg.doc.find("aggregation"); it != cfg.doc.end()) {
        for (const auto& e : it->second) {
            if (e.key == "t_agg_s")
                cfg.agg.t_agg_s = detail::parse_double(e.value, "t_agg_s", e.line);
            else if (e.key == "start_s")
                cfg.agg.start_s = detail::parse_double(e.value, "start_s", e.line);
            else
                throw ParseError("line " + std::to_string(e.line) + ": unknown aggregation key '" + e.key + "'");
        }
    }

    if (auto it = cfg.doc.find("observers"); it != cfg.doc.end()) {
        for (const auto& e : it->second) {
            if (e.key == "penetration_pct")
                cfg.policy.penetration_pct = detail::parse_double(e.value, "penetration_pct", e.line);
            else if (e.key == "mo_fraction")
                cfg.policy.mo_split = detail::parse_double(e.value, "mo_fraction", e.line);
            else if (e.key == "seed")
                cfg.policy.seed = static_cast<std::uint64_t>(detail::parse_long(e.value, "seed", e.line));
            else if (e.key == "min_per_interval")
                cfg.policy.min_per_interval = detail::parse_long(e.value, "min_per_interval", e.line);
            else
                throw ParseError("line " + std::to_string(e.line) + ": unknown observers key '" + e.key + "'");
        }
    }

    if (auto it = cfg.doc.find("sensors"); it != cfg.doc.end()) {
        if (auto profile = section_value(it->second, "profile")) {
            if (*profile == "long-range")
                cfg.sensors = default_sensor_profile(SensorProfile::LongRange);
            else if (*profile == "mid-range")
                cfg.sensors = default_sensor_profile(SensorProfile::MidRange);
            else
                throw ParseError("unknown sensor profile '" + *profile + "'");
        }
        for (const auto& e : it->second) {
            if (e.key == "profile") continue;
            if (e.key == "ego_forward_m")
                cfg.sensors.ego.forward_m = detail::parse_double(e.value, e.key, e.line);
            else if (e.key == "ego_backward_m")
                cfg.sensors.ego.backward_m = detail::parse_double(e.value, e.key, e.line);
            else if (e.key == "adjacent_forward_m")
                cfg.sensors.adjacent.forward_m = detail::parse_double(e.value, e.key, e.line);
            else if (e.key == "adjacent_backward_m")
                cfg.sensors.adjacent.backward_m = detail::parse_double(e.value, e.key, e.line);
            else if (e.key == "opposite_forward_m")
                cfg.sensors.opposite.forward_m = detail::parse_double(e.value, e.key, e.line);
            else if (e.key == "opposite_backward_m")
                cfg.sensors.opposite.backward_m = detail::parse_double(e.value, e.key, e.line);
            else if (e.key == "lateral_left_m")
                cfg.sensors.lateral_left_m = detail::parse_double(e.value, e.key, e.line);
            else if (e.key == "lateral_right_m")
                cfg.sensors.lateral_right_m = detail::parse_double(e.value, e.key, e.line);
            else if (e.key == "cross_edge")
                cfg.sensors.cross_edge = detail::parse_bool(e.value, e.key, e.line);
            else if (e.key == "relations") {
                cfg.sensors.enabled.clear();
                for (const std::string& r : detail::split_ws(e.value)) {
                    if (r == "ego")
                        cfg.sensors.enabled.insert(LaneRelation::Ego);
                    else if (r == "adjacent")
                        cfg.sensors.enabled.insert(LaneRelation::Adjacent);
                    else if (r == "opposite")
                        cfg.sensors.enabled.insert(LaneRelation::Opposite);
                    else
                        throw ParseError("line " + std::to_string(e.line) + ": unknown relation '" + r + "'");
                }
            } else {
                throw ParseError("line " + std::to_string(e.line) + ": unknown sensors key '" + e.key + "'");
            }
        }
    }

    if (auto it = cfg.doc.find("clustering"); it != cfg.doc.end()) {
        for (const auto& e : it->second) {
            if (e.key == "k") {
                if (e.value == "auto")
                    cfg.clustering.k = 0;
                else
                    cfg.clustering.k = static_cast<int>(detail::parse_long(e.value, "k", e.line));
            } else if (e.key == "elbow_k_min")
                cfg.clustering.elbow_k_min = static_cast<int>(detail::parse_long(e.value, e.key, e.line));
            else if (e.key == "elbow_k_max")
                cfg.clustering.elbow_k_max = static_cast<int>(detail::parse_long(e.value, e.key, e.line));
            else if (e.key == "include_flow")
                cfg.clustering.include_flow = detail::parse_bool(e.value, e.key, e.line);
            else if (e.key == "on_estimates")
                cfg.clustering.on_estimates = detail::parse_bool(e.value, e.key, e.line);
            else if (e.key == "seed")
                cfg.clustering.seed = static_cast<std::uint64_t>(detail::parse_long(e.value, "seed", e.line));
            else
                throw ParseError("line " + std::to_string(e.line) + ": unknown clustering key '" + e.key + "'");
        }
    }

    cfg.validate();
    return cfg;
}

}  // namespace avaas
