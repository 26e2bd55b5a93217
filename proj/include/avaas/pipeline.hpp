#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "avaas/clustering.hpp"
#include "avaas/common.hpp"
#include "avaas/config.hpp"
#include "avaas/estimation.hpp"
#include "avaas/metrics.hpp"
#include "avaas/microsim.hpp"
#include "avaas/observers.hpp"
#include "avaas/state_io.hpp"
#include "avaas/trajectory_io.hpp"

namespace avaas {

// A stage is missing an artifact a prior stage produces.
class DependencyError : public std::runtime_error {
public:
    explicit DependencyError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class Stage { Simulate, GroundTruth, DetectEstimate, Cluster, Compare, Mfd };

inline std::string stage_name(Stage s) {
    switch (s) {
        case Stage::Simulate: return "simulate";
        case Stage::GroundTruth: return "ground-truth";
        case Stage::DetectEstimate: return "detect-estimate";
        case Stage::Cluster: return "cluster";
        case Stage::Compare: return "compare";
        default: return "mfd";
    }
}

struct PipelineResult {
    std::vector<std::string> artifacts;  // file names under the output directory
};

namespace detail {

inline std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string read_artifact(const std::filesystem::path& dir, const std::string& name,
                                 const std::string& producing_stage) {
    std::filesystem::path p = dir / name;
    std::ifstream is(p);
    if (!is)
        throw DependencyError("missing artifact '" + name + "': run the '" + producing_stage +
                              "' stage first");
    std::ostringstream buf;
    buf << is.rdbuf();
    return buf.str();
}

inline void write_artifact(const std::filesystem::path& dir, const std::string& name,
                           const std::string& content, PipelineResult& result) {
    std::ofstream os(dir / name, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write '" + (dir / name).string() + "'");
    os << content;
    result.artifacts.push_back(name);
}

// cluster- and network-level views of a lane-scope series; cluster scope
// only when a mapping is available
inline std::vector<TrafficState> all_scopes(const std::vector<TrafficState>& lane_states,
                                            const std::map<LaneId, int>* mapping) {
    std::vector<TrafficState> out = lane_states;
    if (mapping && !mapping->empty()) {
        std::vector<TrafficState> mapped;
        for (const TrafficState& t : lane_states)
            if (mapping->count(t.scope.lane)) mapped.push_back(t);
        auto cluster = scope_rollup(mapped, *mapping, ScopeKind::Cluster);
        out.insert(out.end(), cluster.begin(), cluster.end());
    }
    auto network = scope_rollup(lane_states, {}, ScopeKind::Network);
    out.insert(out.end(), network.begin(), network.end());
    return out;
}

}  // namespace detail

// Runs the requested stages in canonical order against one output directory.
// Every stage reads and writes only the documented artifact files, so stage
// subsets compose across invocations. Idempotent per (config, seed).
inline PipelineResult run_pipeline(const ScenarioConfig& cfg, const std::string& scenario_text,
                                   std::set<Stage> stages, const std::filesystem::path& out_dir,
                                   int workers = 1) {
    cfg.validate();
    std::filesystem::create_directories(out_dir);
    RoadNetwork net = cfg.build_network();
    PipelineResult result;

    auto want = [&](Stage s) { return stages.count(s) > 0; };

    if (want(Stage::Simulate)) {
        TrajectoryLog log = simulate(net, cfg.demand, cfg.horizon_s, cfg.step_s, cfg.seed);
        detail::write_artifact(out_dir, "trajectory.csv", serialize_trajectory(log), result);
    }

    auto load_log = [&]() {
        std::string text = detail::read_artifact(out_dir, "trajectory.csv", "simulate");
        return parse_trajectory(text, net);
    };

    if (want(Stage::GroundTruth)) {
        std::vector<GroundTruthState> gt = ground_truth(load_log(), net, cfg.agg);
        std::ostringstream os;
        write_ground_truth(gt, os);
        detail::write_artifact(out_dir, "ground_truth.csv", os.str(), result);
    }

    if (want(Stage::DetectEstimate)) {
        TrajectoryLog log = load_log();
        auto assignments = sample_observers(log, cfg.agg, cfg.policy);
        auto states = estimate_lane_states(log, net, assignments, cfg.sensors, cfg.agg, true, workers);
        std::ostringstream os;
        write_traffic_states(states, os);
        detail::write_artifact(out_dir, "estimates.csv", os.str(), result);
    }

    if (want(Stage::Cluster)) {
        std::vector<GroundTruthState> basis;
        if (cfg.clustering.on_estimates) {
            std::istringstream is(detail::read_artifact(out_dir, "estimates.csv", "detect-estimate"));
            for (const TrafficState& t : read_traffic_states(is)) {
                if (t.scope.kind != ScopeKind::Lane || t.source != Source::Combined) continue;
                GroundTruthState g;
                g.lane = t.scope.lane;
                g.interval_start_s = t.interval_start_s;
                g.k_vpk = t.k_vpk.value_or(0.0);
                g.v_kmh = t.v_kmh;
                g.q_vph = t.q_vph.value_or(0.0);
                g.vehicle_steps = t.sample_count;
                basis.push_back(g);
            }
        } else {
            std::istringstream is(detail::read_artifact(out_dir, "ground_truth.csv", "ground-truth"));
            basis = read_ground_truth(is);
        }
        auto features = lane_features(basis, cfg.clustering.include_flow);

        int k_max = std::min(cfg.clustering.elbow_k_max, static_cast<int>(features.size()));
        int k_min = std::max(1, std::min(cfg.clustering.elbow_k_min, k_max));
        std::vector<int> k_range;
        for (int k = k_min; k <= k_max; ++k) k_range.push_back(k);
        auto elbow = elbow_curve(features, k_range, cfg.clustering.seed);

        int k = cfg.clustering.k;
        if (k <= 0) {
            k = elbow.front().k;
            for (const ElbowPoint& p : elbow)
                if (p.is_knee) k = p.k;
        }
        if (k > static_cast<int>(features.size())) k = static_cast<int>(features.size());
        ClusterModel model = kmeans(features, k, cfg.clustering.seed);

        std::ostringstream cos;
        write_cluster_mapping(cluster_mapping(features, model), cos);
        detail::write_artifact(out_dir, "clusters.csv", cos.str(), result);
        std::ostringstream eos;
        write_elbow(elbow, eos);
        detail::write_artifact(out_dir, "elbow.csv", eos.str(), result);
    }

    auto load_scoped_series = [&](std::vector<TrafficState>& gt_all, std::vector<TrafficState>& est_all) {
        std::istringstream gis(detail::read_artifact(out_dir, "ground_truth.csv", "ground-truth"));
        std::vector<TrafficState> gt_lane = ground_truth_states(read_ground_truth(gis));
        std::istringstream eis(detail::read_artifact(out_dir, "estimates.csv", "detect-estimate"));
        std::vector<TrafficState> est_lane = read_traffic_states(eis);

        std::map<LaneId, int> mapping;
        std::filesystem::path cpath = out_dir / "clusters.csv";
        if (std::filesystem::exists(cpath)) {
            std::ifstream cis(cpath);
            mapping = read_cluster_mapping(cis);
        }
        const std::map<LaneId, int>* mp = mapping.empty() ? nullptr : &mapping;
        gt_all = detail::all_scopes(gt_lane, mp);
        // roll estimate sources up separately, then re-fuse at each scope
        std::map<Source, std::vector<TrafficState>> by_source;
        for (const TrafficState& t : est_lane) by_source[t.source].push_back(t);
        est_all.clear();
        for (auto& [src, lane_states] : by_source) {
            auto scoped = detail::all_scopes(lane_states, mp);
            est_all.insert(est_all.end(), scoped.begin(), scoped.end());
        }
    };

    if (want(Stage::Compare)) {
        std::vector<TrafficState> gt_all, est_all;
        load_scoped_series(gt_all, est_all);
        // compare against the combined estimate at every scope
        std::vector<TrafficState> combined;
        for (const TrafficState& t : est_all)
            if (t.source == Source::Combined) combined.push_back(t);
        ComparisonReport rep = compare(gt_all, combined);

        std::ostringstream ros;
        write_error_records(rep.records, ros);
        detail::write_artifact(out_dir, "errors.csv", ros.str(), result);
        std::ostringstream sos;
        write_summary(rep, sos);
        detail::write_artifact(out_dir, "summary.txt", sos.str(), result);
        std::ostringstream hos;
        write_error_histogram(rep, hos);
        detail::write_artifact(out_dir, "error_histogram.csv", hos.str(), result);
    }

    if (want(Stage::Mfd)) {
        std::vector<TrafficState> gt_all, est_all;
        load_scoped_series(gt_all, est_all);
        std::vector<TrafficState> all = gt_all;
        all.insert(all.end(), est_all.begin(), est_all.end());
        std::vector<TrafficState> macro;
        for (const TrafficState& t : all)
            if (t.scope.kind != ScopeKind::Lane) macro.push_back(t);
        std::ostringstream os;
        write_mfd(mfd_series(macro), os);
        detail::write_artifact(out_dir, "mfd.csv", os.str(), result);
    }

    // manifest: config hash, seed, artifacts of this invocation
    {
        std::ostringstream os;
        os << "config_hash = " << detail::fnv1a(scenario_text) << "\n";
        os << "seed = " << cfg.seed << "\n";
        for (const std::string& a : result.artifacts) os << "artifact = " << a << "\n";
        std::ofstream ms(out_dir / "manifest.txt", std::ios::binary);
        ms << os.str();
    }
    return result;
}

struct SweepRow {
    double penetration_pct = 0.0;
    Quantity quantity = Quantity::Density;
    long count = 0;
    double mean_rel_err = 0.0;
    double median_rel_err = 0.0;
    double p90_rel_err = 0.0;
    double overestimated_fraction = 0.0;
};

// Re-runs detect-estimate + compare across penetration rates on one
// simulated log, in memory; one summary row per (p_r, quantity).
inline std::vector<SweepRow> penetration_sweep(const ScenarioConfig& cfg, const RoadNetwork& net,
                                               const TrajectoryLog& log,
                                               const std::vector<double>& penetrations) {
    std::vector<GroundTruthState> gt = ground_truth(log, net, cfg.agg);
    std::vector<TrafficState> gt_lane = ground_truth_states(gt);
    std::vector<SweepRow> rows;
    for (double p : penetrations) {
        ObserverPolicy policy = cfg.policy;
        policy.penetration_pct = p;
        auto assignments = sample_observers(log, cfg.agg, policy);
        auto est = estimate_lane_states(log, net, assignments, cfg.sensors, cfg.agg);
        std::vector<TrafficState> combined;
        for (const TrafficState& t : est)
            if (t.source == Source::Combined) combined.push_back(t);
        ComparisonReport rep = compare(gt_lane, combined);
        for (const QuantitySummary& s : rep.summaries) {
            SweepRow r;
            r.penetration_pct = p;
            r.quantity = s.quantity;
            r.count = s.count;
            r.mean_rel_err = s.mean_rel_err;
            r.median_rel_err = s.median_rel_err;
            r.p90_rel_err = s.p90_rel_err;
            r.overestimated_fraction = s.overestimated_fraction;
            rows.push_back(r);
        }
    }
    return rows;
}

inline void write_sweep(const std::vector<SweepRow>& rows, std::ostream& os) {
    os << "penetration_pct,quantity,count,mean_rel_err,median_rel_err,p90_rel_err,overestimated_fraction\n";
    for (const SweepRow& r : rows) {
        os << detail::fmt_double(r.penetration_pct) << "," << quantity_name(r.quantity) << "," << r.count
           << "," << detail::fmt_double(r.mean_rel_err) << "," << detail::fmt_double(r.median_rel_err)
           << "," << detail::fmt_double(r.p90_rel_err) << ","
           << detail::fmt_double(r.overestimated_fraction) << "\n";
    }
}

}  // namespace avaas
