// End-to-end acceptance checks. Each check prints one PASS/FAIL line; the
// process exits nonzero if any check fails. Tolerances are pinned inline.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <vector>

#include "avaas/pipeline.hpp"

using namespace avaas;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int number, const char* name, bool ok, const std::string& detail = "") {
    std::printf("[%s] %2d %s%s%s\n", ok ? "PASS" : "FAIL", number, name, detail.empty() ? "" : ": ",
                detail.c_str());
    if (!ok) ++g_failures;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

// ---- 1: point estimators vs an independent brute-force evaluation ----------

void check_formula_fidelity() {
    auto t0 = std::chrono::steady_clock::now();
    Rng rng(101);
    bool ok = true;
    std::string detail;
    for (int trial = 0; trial < 1000 && ok; ++trial) {
        Observation o;
        o.kind = (trial % 2 == 0) ? ObserverKind::MO : ObserverKind::PO;
        o.ego_lane = LaneId{"e", 0};
        o.ego_speed_mps = rng.unit() * 30.0;
        o.zone_total_length_m = 50.0 + rng.unit() * 950.0;
        int n = static_cast<int>(rng.below(11));
        for (int i = 0; i < n; ++i)
            o.detections.push_back(Detection{i + 1, o.ego_lane, rng.unit() * 100.0, rng.unit() * 30.0});

        // brute force: sums written out directly from first principles
        double speed_sum = 0.0;
        for (const Detection& d : o.detections) speed_sum += d.speed_mps;
        auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); };

        if (o.kind == ObserverKind::MO) {
            PointEstimate e = mo_point_estimate(o);
            double k = (1.0 + n) * 1000.0 / o.zone_total_length_m;
            double v = (speed_sum + o.ego_speed_mps) / (n + 1) * 3.6;
            ok = rel(e.k_vpk, k) <= 1e-9 && rel(*e.v_kmh, v) <= 1e-9 && rel(*e.q_vph, k * v) <= 1e-9;
        } else {
            PointEstimate e = po_point_estimate(o);
            double k = n * 1000.0 / o.zone_total_length_m;
            ok = rel(e.k_vpk, k) <= 1e-9;
            if (ok && n > 0) {
                double v = speed_sum / n * 3.6;
                ok = rel(*e.v_kmh, v) <= 1e-9 && rel(*e.q_vph, k * v) <= 1e-9;
            } else if (ok) {
                ok = !e.v_kmh && !e.q_vph;
            }
        }
        if (!ok) detail = "mismatch at trial " + std::to_string(trial);
    }
    double dt = elapsed_s(t0);
    if (ok && dt >= 1.0) {
        ok = false;
        detail = "runtime " + std::to_string(dt) + " s exceeds 1 s";
    }
    report(1, "point estimators match brute-force evaluation (1000 trials, 1e-9)", ok, detail);
}

// ---- 2: uniform-speed ring, exact speed recovery ---------------------------

void check_exact_speed_recovery() {
    RoadNetwork net = make_ring(1000.0, 1, 25.0);
    LaneId lane{"ring", 0};
    SensorConfig sensors;  // ego + adjacent, 200/100 forward/backward
    bool ok = true;
    std::string detail;
    for (double c : {5.0, 10.0, 20.0}) {
        std::vector<VehicleState> snap;
        for (int i = 0; i < 20; ++i) snap.push_back(VehicleState{i, lane, 50.0 * i, c, 5.0});

        for (const VehicleState& ego : snap) {  // 100% penetration: every vehicle observes
            ObserverPose pose{ego.vehicle_id, ObserverKind::MO, lane, ego.position_m, ego.speed_mps,
                              ego.vehicle_id};
            PointEstimate e = mo_point_estimate(detect(pose, snap, sensors, net));
            if (std::abs(*e.v_kmh - 3.6 * c) > 1e-9) {
                ok = false;
                detail = "MO speed off at c=" + std::to_string(c);
            }
        }
        Rng rng(7);
        for (int i = 0; i < 20; ++i) {
            ObserverPose pose{1000 + i, ObserverKind::PO, lane, rng.unit() * 1000.0, 0.0, std::nullopt};
            Observation obs = detect(pose, snap, sensors, net);
            PointEstimate e = po_point_estimate(obs);
            if (obs.n_det() > 0 && std::abs(*e.v_kmh - 3.6 * c) > 1e-9) {
                ok = false;
                detail = "PO speed off at c=" + std::to_string(c);
            }
        }
    }
    report(2, "uniform-speed ring recovers v exactly for c in {5, 10, 20} m/s", ok, detail);
}

// ---- 3: uniform-spacing ring, density discretization bounds ----------------

void check_density_discretization() {
    bool ok = true;
    std::string detail;
    const double L = 2000.0;
    RoadNetwork net = make_ring(L, 1, 25.0);
    LaneId lane{"ring", 0};
    struct Zone {
        double d_f, d_b;
    };
    for (double s : {20.0, 25.0, 50.0, 100.0}) {
        std::vector<VehicleState> snap;
        int n = static_cast<int>(L / s);
        for (int i = 0; i < n; ++i) snap.push_back(VehicleState{i, lane, s * i, 10.0, 5.0});
        double k_true = 1000.0 / s;

        for (Zone z : {Zone{100.0, 50.0}, Zone{200.0, 100.0}, Zone{300.0, 150.0}}) {
            SensorConfig cfg;
            cfg.ego = {z.d_f, z.d_b};
            cfg.enabled = {LaneRelation::Ego};
            double zone = z.d_f + z.d_b;

            for (const VehicleState& ego : snap) {
                ObserverPose pose{ego.vehicle_id, ObserverKind::MO, lane, ego.position_m, ego.speed_mps,
                                  ego.vehicle_id};
                PointEstimate e = mo_point_estimate(detect(pose, snap, cfg, net));
                if (std::abs(e.k_vpk - k_true) > 2000.0 / zone + 1e-9) {
                    ok = false;
                    detail = "MO bound broken at s=" + std::to_string(s) + " zone=" + std::to_string(zone);
                }
            }
            Rng rng(static_cast<std::uint64_t>(s));
            for (int i = 0; i < 50; ++i) {
                ObserverPose pose{9000 + i, ObserverKind::PO, lane, rng.unit() * L, 0.0, std::nullopt};
                PointEstimate e = po_point_estimate(detect(pose, snap, cfg, net));
                if (std::abs(e.k_vpk - k_true) > 1000.0 / zone + 1e-9) {
                    ok = false;
                    detail = "PO bound broken at s=" + std::to_string(s) + " zone=" + std::to_string(zone);
                }
            }
        }
    }
    report(3, "uniform-spacing ring respects the density discretization bounds", ok, detail);
}

// ---- 4: ground truth satisfies q ~= k v in steady state --------------------

void check_edie_consistency() {
    auto t0 = std::chrono::steady_clock::now();
    RoadNetwork net = make_ring(2000.0, 1, 13.9);
    DemandSpec demand;
    demand.ring_fill = RingFillDemand{100, 5.0};
    TrajectoryLog log = simulate(net, demand, 3600.0, 1.0, 42);
    AggregationConfig agg{300.0, 1800.0};  // skip the warm-up transient
    std::vector<GroundTruthState> gt = ground_truth(log, net, agg);

    bool ok = !gt.empty();
    std::string detail = gt.empty() ? "no ground-truth intervals" : "";
    long checked = 0;
    for (const GroundTruthState& g : gt) {
        if (g.q_vph <= 0.0 || !g.v_kmh) continue;
        ++checked;
        double err = std::abs(g.q_vph - g.k_vpk * *g.v_kmh) / g.q_vph;
        if (err > 0.05) {
            ok = false;
            detail = "interval " + std::to_string(g.interval_start_s) + " off by " + std::to_string(err);
        }
    }
    if (checked == 0) {
        ok = false;
        detail = "no intervals with positive flow";
    }
    double dt = elapsed_s(t0);
    if (ok && dt >= 5.0) {
        ok = false;
        detail = "runtime " + std::to_string(dt) + " s exceeds 5 s";
    }
    report(4, "steady-state ring ground truth satisfies |q - k v| / q <= 5%", ok, detail);
}

// ---- 5: MO density overestimation at low density ---------------------------

void check_low_density_overestimation() {
    const double L = 2000.0;
    RoadNetwork net = make_ring(L, 1, 25.0);
    LaneId lane{"ring", 0};
    SensorConfig cfg;
    cfg.ego = {200.0, 100.0};
    cfg.enabled = {LaneRelation::Ego};
    const double zone = 300.0;

    bool ok = true;
    std::string detail;
    double signed_err_sum = 0.0;
    long samples = 0;
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        Rng rng(seed);
        std::vector<VehicleState> snap;  // 8 vehicles on 2 km: k_true = 4 veh/km
        for (int i = 0; i < 8; ++i) snap.push_back(VehicleState{i, lane, rng.unit() * L, 10.0, 5.0});
        double k_true = 8.0 / (L / 1000.0);
        for (const VehicleState& ego : snap) {
            ObserverPose pose{ego.vehicle_id, ObserverKind::MO, lane, ego.position_m, ego.speed_mps,
                              ego.vehicle_id};
            PointEstimate e = mo_point_estimate(detect(pose, snap, cfg, net));
            signed_err_sum += e.k_vpk - k_true;
            ++samples;
            if (e.k_vpk < 1000.0 / zone - 1e-12) {
                ok = false;
                detail = "structural floor violated";
            }
        }
    }
    if (ok && !(signed_err_sum / samples > 0.0)) {
        ok = false;
        detail = "mean signed error not positive";
    }
    report(5, "sparse ring MO density is overestimated and floored at 1000/zone", ok, detail);
}

// ---- 6: speed errors are smaller than density errors at 10% penetration ----

void check_speed_vs_density_errors() {
    const char* scenario_fmt =
        "[network]\nkind = corridor\nsegments = 3\nlanes = 2\nsegment_length_m = 400\nspeed_limit_mps = 13.9\n"
        "[demand]\nkind = poisson\nflow = c0 c2 rate_vph=1200\n"
        "[simulation]\nhorizon_s = 900\nstep_s = 1\n"
        "[aggregation]\nt_agg_s = 300\nstart_s = 300\n"
        "[observers]\npenetration_pct = 10\n";
    ScenarioConfig cfg = load_scenario(scenario_fmt);
    RoadNetwork net = cfg.build_network();

    std::vector<double> k_errs, v_errs;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        TrajectoryLog log = simulate(net, cfg.demand, cfg.horizon_s, cfg.step_s, seed);
        ObserverPolicy policy = cfg.policy;
        policy.seed = seed;
        auto assignments = sample_observers(log, cfg.agg, policy);
        auto est = estimate_lane_states(log, net, assignments, cfg.sensors, cfg.agg);
        std::vector<TrafficState> combined;
        for (const TrafficState& t : est)
            if (t.source == Source::Combined) combined.push_back(t);
        ComparisonReport rep = compare(ground_truth_states(ground_truth(log, net, cfg.agg)), combined);
        for (const ErrorRecord& r : rep.records) {
            if (r.zero_true_fallback) continue;
            if (r.quantity == Quantity::Density) k_errs.push_back(r.relative_error);
            if (r.quantity == Quantity::Speed) v_errs.push_back(r.relative_error);
        }
    }
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v.empty() ? 0.0 : v[v.size() / 2];
    };
    bool ok = !k_errs.empty() && !v_errs.empty() && median(v_errs) <= median(k_errs);
    std::string detail = "median v err " + std::to_string(median(v_errs)) + ", median k err " +
                         std::to_string(median(k_errs));
    report(6, "corridor at 10% penetration: speed errors <= density errors", ok, detail);
}

// ---- 7: observer sampling count law ----------------------------------------

void check_sampling_law() {
    Rng rng(77);
    bool ok = true;
    std::string detail;
    for (int trial = 0; trial < 10000 && ok; ++trial) {
        long n_total = 1 + static_cast<long>(rng.below(2000));
        ObserverPolicy p;
        p.penetration_pct = 0.01 + rng.unit() * 99.99;
        p.mo_split = rng.unit();
        auto [mo, po] = observer_counts(n_total, p);
        long expected = std::max(1L, round_half_up(n_total * p.penetration_pct / 100.0));
        if (mo + po != expected || mo < 0 || po < 0 || mo + po > n_total) {
            ok = false;
            detail = "n_total=" + std::to_string(n_total) + " p=" + std::to_string(p.penetration_pct);
        }
    }
    report(7, "observer count law holds exactly over 10000 randomized intervals", ok, detail);
}

// ---- 8: planted clusters are recovered and the elbow flags them ------------

void check_clustering_recovery() {
    auto t0 = std::chrono::steady_clock::now();
    Rng rng(55);
    std::vector<GroundTruthState> gt;
    std::map<LaneId, int> truth;
    // 4 blobs of 125 lanes at square corners; centers >= 10 sigma apart
    // (uniform noise of half-width 1 per dimension, sd < 1)
    double centers_k[4] = {10.0, 10.0, 40.0, 40.0};
    double centers_v[4] = {80.0, 20.0, 80.0, 20.0};
    for (int b = 0; b < 4; ++b) {
        for (int i = 0; i < 125; ++i) {
            LaneId lane{"e" + std::to_string(b * 125 + i), 0};
            truth[lane] = b;
            GroundTruthState g;
            g.lane = lane;
            g.interval_start_s = 0.0;
            g.k_vpk = centers_k[b] + (rng.unit() - 0.5) * 2.0;  // uniform, sd < 1
            g.v_kmh = centers_v[b] + (rng.unit() - 0.5) * 2.0;
            g.q_vph = *g.v_kmh * g.k_vpk;
            g.vehicle_steps = 10;
            gt.push_back(g);
        }
    }
    auto features = lane_features(gt);
    ClusterModel model = kmeans(features, 4, 0);

    // best agreement over all label permutations
    std::vector<int> perm{0, 1, 2, 3};
    double best = 0.0;
    do {
        long agree = 0;
        for (std::size_t i = 0; i < features.size(); ++i)
            if (perm[static_cast<std::size_t>(model.assignment[i])] == truth.at(features[i].lane)) ++agree;
        best = std::max(best, static_cast<double>(agree) / features.size());
    } while (std::next_permutation(perm.begin(), perm.end()));

    auto curve = elbow_curve(features, {1, 2, 3, 4, 5, 6, 7, 8}, 0);
    bool nonincreasing = true;
    int knee_k = -1;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        if (i > 0 && curve[i].wcss > curve[i - 1].wcss + 1e-9) nonincreasing = false;
        if (curve[i].is_knee) knee_k = curve[i].k;
    }
    double dt = elapsed_s(t0);
    bool ok = best >= 0.95 && knee_k == 4 && nonincreasing && dt < 1.0;
    std::string detail = "agreement " + std::to_string(best) + ", knee k=" + std::to_string(knee_k) +
                         ", runtime " + std::to_string(dt) + " s";
    report(8, "4 planted blobs over 500 lanes: recovery, knee at 4, wcss monotone", ok, detail);
}

// ---- 9: rollup means equal brute-force recomputation -----------------------

void check_rollup_oracle() {
    Rng rng(88);
    std::vector<TrafficState> states;
    std::map<LaneId, int> mapping;
    for (int i = 0; i < 12; ++i) {
        LaneId lane{"e" + std::to_string(i), 0};
        mapping[lane] = i % 3;
        for (double ts : {0.0, 300.0, 600.0}) {
            TrafficState t;
            t.scope = Scope::for_lane(lane);
            t.interval_start_s = ts;
            t.k_vpk = rng.unit() * 60.0;
            t.v_kmh = rng.unit() * 80.0;
            t.q_vph = *t.k_vpk * *t.v_kmh;
            t.source = Source::MoEstimate;
            t.sample_count = 1 + static_cast<long>(rng.below(5));
            states.push_back(t);
        }
    }
    bool ok = true;
    std::string detail;
    for (ScopeKind target : {ScopeKind::Cluster, ScopeKind::Network}) {
        auto rolled = scope_rollup(states, mapping, target);
        for (const TrafficState& r : rolled) {
            double k = 0.0, v = 0.0, q = 0.0;
            long n = 0;
            for (const TrafficState& s : states) {
                if (s.interval_start_s != r.interval_start_s) continue;
                if (target == ScopeKind::Cluster && mapping.at(s.scope.lane) != r.scope.cluster_id)
                    continue;
                k += *s.k_vpk;
                v += *s.v_kmh;
                q += *s.q_vph;
                ++n;
            }
            if (std::abs(*r.k_vpk - k / n) > 1e-12 || std::abs(*r.v_kmh - v / n) > 1e-12 ||
                std::abs(*r.q_vph - q / n) > 1e-12) {
                ok = false;
                detail = "mismatch at " + r.scope.kind_name() + " ts=" + std::to_string(r.interval_start_s);
            }
        }
    }
    report(9, "cluster and network rollups equal brute-force means (1e-12)", ok, detail);
}

// ---- 10: pipeline determinism ----------------------------------------------

void check_pipeline_determinism() {
    const char* scenario =
        "[network]\nkind = ring\nlength_m = 2000\nlanes = 2\nspeed_limit_mps = 13.9\n"
        "[demand]\nkind = ring_fill\nvehicles = 60\ninitial_speed_mps = 8\n"
        "[simulation]\nhorizon_s = 900\nstep_s = 1\nseed = 11\n"
        "[aggregation]\nt_agg_s = 300\n"
        "[observers]\npenetration_pct = 20\nseed = 3\n"
        "[clustering]\nk = 2\n";
    ScenarioConfig cfg = load_scenario(scenario);
    std::set<Stage> stages{Stage::Simulate, Stage::GroundTruth, Stage::DetectEstimate,
                           Stage::Cluster,  Stage::Compare,     Stage::Mfd};
    fs::path base = fs::temp_directory_path() / "avaas_acceptance";
    fs::remove_all(base);
    run_pipeline(cfg, scenario, stages, base / "a");
    run_pipeline(cfg, scenario, stages, base / "b");
    bool ok = true;
    std::string detail;
    for (const char* name : {"estimates.csv", "errors.csv", "mfd.csv"}) {
        std::string a = slurp(base / "a" / name);
        if (a.empty() || a != slurp(base / "b" / name)) {
            ok = false;
            detail = std::string(name) + " differs or is empty";
        }
    }
    report(10, "repeat pipeline runs produce byte-identical estimate, error, MFD files", ok, detail);
}

// ---- 11: relative-error hand rule ------------------------------------------

void check_relative_error_oracle() {
    Rng rng(99);
    bool ok = true;
    std::string detail;
    for (int trial = 0; trial < 1000 && ok; ++trial) {
        double t = trial % 10 == 0 ? 0.0 : (rng.unit() - 0.5) * 200.0;
        double e = (rng.unit() - 0.5) * 200.0;
        ErrorRecord r = relative_error(t, e);
        double expect = t == 0.0 ? std::abs(e) : std::abs(t - e) / std::abs(t);
        if (std::abs(r.relative_error - expect) > 1e-12 || r.zero_true_fallback != (t == 0.0)) {
            ok = false;
            detail = "mismatch at trial " + std::to_string(trial);
        }
    }
    report(11, "relative error matches the hand rule including the zero guard", ok, detail);
}

}  // namespace

int main() {
    check_formula_fidelity();
    check_exact_speed_recovery();
    check_density_discretization();
    check_edie_consistency();
    check_low_density_overestimation();
    check_speed_vs_density_errors();
    check_sampling_law();
    check_clustering_recovery();
    check_rollup_oracle();
    check_pipeline_determinism();
    check_relative_error_oracle();
    if (g_failures > 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all 11 criteria passed\n");
    return 0;
}
