#include <doctest.h>

#include "avaas/common.hpp"
#include "avaas/detection.hpp"
#include "avaas/network.hpp"
#include "avaas/scenario.hpp"

using namespace avaas;

namespace {

SensorConfig ego_only(double d_f, double d_b) {
    SensorConfig c;
    c.ego = {d_f, d_b};
    c.enabled = {LaneRelation::Ego};
    return c;
}

VehicleState veh(int id, const LaneId& lane, double pos, double speed = 10.0) {
    return VehicleState{id, lane, pos, speed, 5.0};
}

}  // namespace

TEST_CASE("vehicle inside the zone is detected with a signed distance") {
    RoadNetwork net = make_corridor(1, 1, 1000.0);
    LaneId lane{"c0", 0};
    std::vector<VehicleState> snap{veh(1, lane, 500.0), veh(2, lane, 560.0)};
    ObserverPose ego{0, ObserverKind::MO, lane, 500.0, 10.0, 1};
    Observation obs = detect(ego, snap, ego_only(100.0, 50.0), net);
    REQUIRE(obs.n_det() == 1);
    CHECK(obs.detections[0].vehicle_id == 2);
    CHECK(obs.detections[0].distance_m == doctest::Approx(60.0));
    CHECK(obs.zone_total_length_m == doctest::Approx(150.0));
}

TEST_CASE("backward range is shorter than forward: 70 m behind is missed") {
    RoadNetwork net = make_corridor(1, 1, 1000.0);
    LaneId lane{"c0", 0};
    std::vector<VehicleState> snap{veh(1, lane, 500.0), veh(2, lane, 430.0)};
    ObserverPose ego{0, ObserverKind::MO, lane, 500.0, 10.0, 1};
    Observation obs = detect(ego, snap, ego_only(100.0, 50.0), net);
    CHECK(obs.n_det() == 0);
}

TEST_CASE("vehicles every 25 m give floor(100/25) + floor(50/25) = 6 detections") {
    RoadNetwork net = make_corridor(1, 1, 2000.0);
    LaneId lane{"c0", 0};
    std::vector<VehicleState> snap{veh(0, lane, 1000.0)};
    for (int i = 1; i <= 40; ++i) {
        snap.push_back(veh(100 + i, lane, 1000.0 + 25.0 * i));
        snap.push_back(veh(200 + i, lane, 1000.0 - 25.0 * i));
    }
    ObserverPose ego{0, ObserverKind::MO, lane, 1000.0, 10.0, 0};
    Observation obs = detect(ego, snap, ego_only(100.0, 50.0), net);
    CHECK(obs.n_det() == 6);
}

TEST_CASE("no self detection") {
    RoadNetwork net = make_corridor(1, 1, 1000.0);
    LaneId lane{"c0", 0};
    std::vector<VehicleState> snap{veh(1, lane, 500.0)};
    ObserverPose ego{0, ObserverKind::MO, lane, 500.0, 10.0, 1};
    Observation obs = detect(ego, snap, ego_only(100.0, 50.0), net);
    CHECK(obs.n_det() == 0);
}

TEST_CASE("MO ego missing from snapshot is a contract error") {
    RoadNetwork net = make_corridor(1, 1, 1000.0);
    LaneId lane{"c0", 0};
    std::vector<VehicleState> snap;
    ObserverPose ego{0, ObserverKind::MO, lane, 500.0, 10.0, 99};
    CHECK_THROWS_AS(detect(ego, snap, ego_only(100.0, 50.0), net), ContractError);
}

TEST_CASE("all-zero ranges flag a degenerate zone") {
    RoadNetwork net = make_corridor(1, 1, 1000.0);
    LaneId lane{"c0", 0};
    std::vector<VehicleState> snap{veh(1, lane, 500.0), veh(2, lane, 501.0)};
    ObserverPose ego{0, ObserverKind::MO, lane, 500.0, 10.0, 1};
    Observation obs = detect(ego, snap, ego_only(0.0, 0.0), net);
    CHECK(obs.degenerate_zone);
    CHECK(obs.detections.empty());
}

TEST_CASE("disabled relation is never detected regardless of distance") {
    RoadNetwork net = make_corridor(1, 2, 1000.0);
    LaneId ego_lane{"c0", 0};
    LaneId other_lane{"c0", 1};
    std::vector<VehicleState> snap{veh(1, ego_lane, 500.0), veh(2, other_lane, 500.0)};
    ObserverPose ego{0, ObserverKind::MO, ego_lane, 500.0, 10.0, 1};

    Observation without = detect(ego, snap, ego_only(100.0, 50.0), net);
    CHECK(without.n_det() == 0);

    SensorConfig with = ego_only(100.0, 50.0);
    with.adjacent = {100.0, 50.0};
    with.enabled.insert(LaneRelation::Adjacent);
    Observation obs = detect(ego, snap, with, net);
    CHECK(obs.n_det() == 1);
    CHECK(obs.zone_total_length_m == doctest::Approx(300.0));
}

TEST_CASE("opposite-direction detection maps the coordinate axis") {
    std::string text =
        "[network]\n"
        "node = a\n"
        "node = b\n"
        "edge = e1 a b lanes=1 length_m=1000 speed_limit_mps=14 opposite=e2\n"
        "edge = e2 b a lanes=1 length_m=1000 speed_limit_mps=14 opposite=e1\n";
    RoadNetwork net = load_network(text);
    LaneId ego_lane{"e1", 0};
    LaneId opp_lane{"e2", 0};
    // opposite position 420 maps to 1000 - 420 = 580 on the ego axis: +80 ahead
    std::vector<VehicleState> snap{veh(1, ego_lane, 500.0), veh(2, opp_lane, 420.0)};
    ObserverPose ego{0, ObserverKind::MO, ego_lane, 500.0, 10.0, 1};
    SensorConfig cfg = ego_only(100.0, 50.0);
    cfg.opposite = {100.0, 50.0};
    cfg.enabled.insert(LaneRelation::Opposite);
    Observation obs = detect(ego, snap, cfg, net);
    REQUIRE(obs.n_det() == 1);
    CHECK(obs.detections[0].vehicle_id == 2);
    CHECK(obs.detections[0].distance_m == doctest::Approx(80.0));
}

TEST_CASE("ring detection wraps across the lane start") {
    RoadNetwork net = make_ring(1000.0, 1);
    LaneId lane{"ring", 0};
    std::vector<VehicleState> snap{veh(1, lane, 990.0), veh(2, lane, 30.0), veh(3, lane, 950.0)};
    ObserverPose ego{0, ObserverKind::MO, lane, 990.0, 10.0, 1};
    Observation obs = detect(ego, snap, ego_only(100.0, 50.0), net);
    REQUIRE(obs.n_det() == 2);
    // vehicle 2 is 40 m ahead through the wrap; vehicle 3 is 40 m behind
    for (const Detection& d : obs.detections) {
        if (d.vehicle_id == 2) CHECK(d.distance_m == doctest::Approx(40.0));
        if (d.vehicle_id == 3) CHECK(d.distance_m == doctest::Approx(-40.0));
    }
}

TEST_CASE("default profiles satisfy the doubling rules") {
    SensorConfig lr = default_sensor_profile(SensorProfile::LongRange);
    CHECK(lr.ego.forward_m == doctest::Approx(200.0));
    CHECK(lr.ego.backward_m == doctest::Approx(100.0));
    SensorConfig mr = default_sensor_profile(SensorProfile::MidRange);
    CHECK(mr.ego.forward_m == doctest::Approx(100.0));
    CHECK(mr.ego.backward_m == doctest::Approx(50.0));
    for (const SensorConfig& c : {lr, mr}) {
        for (LaneRelation r : {LaneRelation::Ego, LaneRelation::Adjacent, LaneRelation::Opposite})
            CHECK(c.range(r).forward_m == doctest::Approx(2.0 * c.range(r).backward_m));
        CHECK(c.lateral_left_m == doctest::Approx(2.0 * c.lateral_right_m));
        CHECK_NOTHROW(c.validate());
    }
}

TEST_CASE("ranges beyond 1000 m fail validation") {
    SensorConfig c;
    c.ego.forward_m = 1500.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("properties over randomized snapshots") {
    RoadNetwork net = make_corridor(1, 1, 2000.0);
    LaneId lane{"c0", 0};
    Rng rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<VehicleState> snap;
        int n = 1 + static_cast<int>(rng.below(30));
        for (int i = 0; i < n; ++i)
            snap.push_back(veh(i + 1, lane, rng.unit() * 2000.0, rng.unit() * 20.0));
        double ego_pos = rng.unit() * 2000.0;
        ObserverPose ego{0, ObserverKind::PO, lane, ego_pos, 0.0, std::nullopt};

        double d_f = rng.unit() * 300.0;
        double d_b = rng.unit() * 150.0;
        Observation obs = detect(ego, snap, ego_only(d_f, d_b), net);

        // zone containment
        for (const Detection& d : obs.detections) {
            CHECK(d.distance_m <= d_f + 1e-9);
            CHECK(d.distance_m >= -d_b - 1e-9);
        }
        // determinism / purity
        Observation again = detect(ego, snap, ego_only(d_f, d_b), net);
        CHECK(again.n_det() == obs.n_det());
        // monotonicity: enlarging ranges never loses detections
        Observation bigger = detect(ego, snap, ego_only(d_f * 1.5 + 10.0, d_b * 1.5 + 10.0), net);
        CHECK(bigger.n_det() >= obs.n_det());
    }
}

TEST_CASE("monotonicity holds on circular lanes too") {
    RoadNetwork net = make_ring(600.0, 1);
    LaneId lane{"ring", 0};
    Rng rng(123);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<VehicleState> snap;
        int n = 1 + static_cast<int>(rng.below(15));
        for (int i = 0; i < n; ++i) snap.push_back(veh(i + 1, lane, rng.unit() * 600.0));
        ObserverPose ego{0, ObserverKind::PO, lane, rng.unit() * 600.0, 0.0, std::nullopt};
        double d_f = rng.unit() * 250.0, d_b = rng.unit() * 120.0;
        Observation small = detect(ego, snap, ego_only(d_f, d_b), net);
        Observation big = detect(ego, snap, ego_only(d_f + 80.0, d_b + 40.0), net);
        CHECK(big.n_det() >= small.n_det());
    }
}
