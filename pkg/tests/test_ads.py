import math

import pytest

from crashlab.ads import control as control_mod
from crashlab.ads import perception as perception_mod
from crashlab.ads import planning as planning_mod
from crashlab.ads import prediction as prediction_mod
from crashlab.ads.graph import CH_CHASSIS, CH_CONTROL, extract_module_graph
from crashlab.ads.params import build_parameter_specs, default_configuration
from crashlab.ads.perception import EgoPose, PerceivedObstacle, SensedEntity
from crashlab.ads.planning import EgoChassis
from crashlab.geometry import Polyline

CFG = default_configuration()
ROUTE = Polyline([(0.0, 0.0), (400.0, 0.0)])


def all_visible(_):
    return 1.0


def sensed(kind="sedan", color="white", x=30.0, y=0.0, heading=0.0, speed=0.0,
           hl=2.25, hw=0.9, is_actor=True, light=None, ident="obs"):
    return SensedEntity(id=ident, kind=kind, color=color, x=x, y=y,
                        heading=heading, speed=speed, half_length=hl,
                        half_width=hw, is_actor=is_actor, light_policy=light)


def obstacle(ident="obs", x=30.0, y=0.0, heading=0.0, speed=0.0,
             hl=2.25, hw=0.9, motion_heading=None):
    motion = heading if motion_heading is None else motion_heading
    return PerceivedObstacle(id=ident, x=x, y=y, heading=heading,
                             motion_heading=motion, speed=speed,
                             half_length=hl, half_width=hw, visible_fraction=1.0)


class TestPerception:
    def test_red_light_ahead_gives_high_brake_signal(self):
        light = sensed(kind="traffic_light", x=40.0, y=2.0, is_actor=False,
                       light="red", ident="tl", hl=0.15, hw=0.15)
        out = perception_mod.perceive(EgoPose(0, 0, 0, 8.0), [light], ROUTE,
                                      all_visible, CFG)
        assert out.pred_brake == pytest.approx(0.9)

    def test_red_truck_in_cone_gives_fluctuation_level(self):
        red_truck = sensed(kind="truck", color="red", x=25.0, y=2.0,
                           hl=4.0, hw=1.25, ident="rt")
        out = perception_mod.perceive(EgoPose(0, 0, 0, 8.0), [red_truck], ROUTE,
                                      all_visible, CFG)
        assert out.pred_brake == pytest.approx(0.2)
        # 0.2 clears the default 0.1 threshold downstream.
        assert out.pred_brake > CFG.get("perception", "BRAKE_THRESHOLD")

    def test_empty_road_floor_level(self):
        out = perception_mod.perceive(EgoPose(0, 0, 0, 8.0), [], ROUTE,
                                      all_visible, CFG)
        assert out.pred_brake == pytest.approx(0.02)
        assert out.pred_brake < CFG.get("perception", "BRAKE_THRESHOLD")

    def test_red_truck_far_away_does_not_trigger(self):
        red_truck = sensed(kind="truck", color="red", x=150.0, y=0.0,
                           hl=4.0, hw=1.25, ident="rt")
        out = perception_mod.perceive(EgoPose(0, 0, 0, 8.0), [red_truck], ROUTE,
                                      all_visible, CFG)
        assert out.pred_brake == pytest.approx(0.02)

    def test_gray_truck_does_not_trigger(self):
        truck = sensed(kind="truck", color="gray", x=30.0, y=2.0,
                       hl=4.0, hw=1.25, ident="gt")
        out = perception_mod.perceive(EgoPose(0, 0, 0, 8.0), [truck], ROUTE,
                                      all_visible, CFG)
        assert out.pred_brake == pytest.approx(0.02)

    def test_entities_behind_are_not_reported(self):
        behind = sensed(x=-30.0, ident="rear")
        out = perception_mod.perceive(EgoPose(0, 0, 0, 8.0), [behind], ROUTE,
                                      all_visible, CFG)
        assert out.obstacles == ()

    def test_invisible_entities_are_not_reported(self):
        ent = sensed(x=30.0, ident="hidden")
        out = perception_mod.perceive(EgoPose(0, 0, 0, 8.0), [ent], ROUTE,
                                      lambda _: 0.0, CFG)
        assert out.obstacles == ()

    def test_obstacles_sorted_by_id(self):
        ents = [sensed(x=30.0, ident="b"), sensed(x=40.0, ident="a")]
        out = perception_mod.perceive(EgoPose(0, 0, 0, 8.0), ents, ROUTE,
                                      all_visible, CFG)
        assert [o.id for o in out.obstacles] == ["a", "b"]


class TestPrediction:
    def test_slow_car_with_default_threshold_is_static(self):
        # 0.98 m/s against the 0.99 default: labeled static.
        out = prediction_mod.predict((obstacle(speed=0.98),), CFG)
        assert out[0].static is True
        assert len(set(out[0].points)) == 1

    def test_slow_car_with_lowered_threshold_is_moving(self):
        cfg = default_configuration(
            {"prediction.still_obstacle_speed_threshold": 0.50})
        out = prediction_mod.predict((obstacle(speed=0.98, heading=0.0),), cfg)
        assert out[0].static is False
        xs = [p[0] for p in out[0].points]
        assert xs[-1] == pytest.approx(30.0 + 0.98 * 5.0)

    def test_zero_speed_is_static_for_any_threshold(self):
        cfg = default_configuration(
            {"prediction.still_obstacle_speed_threshold": 0.01})
        out = prediction_mod.predict((obstacle(speed=0.0),), cfg)
        assert out[0].static is True

    def test_point_count_follows_horizon(self):
        out = prediction_mod.predict((obstacle(speed=2.0),), CFG)
        assert len(out[0].points) == 11  # 5 s at 0.5 s spacing plus the origin


class TestPlanning:
    def test_static_obstacle_in_lane_yields_with_fence(self):
        pred = prediction_mod.predict((obstacle(x=30.0, speed=0.0),), CFG)
        ego = EgoChassis(0.0, 0.0, 0.0, 8.0)
        out = planning_mod.plan(pred, ego, ROUTE, "lane_0", 1.75, 0.9, CFG)
        assert out.decision == "yield"
        conflict_s = 30.0 - 2.25  # rear face of the obstacle box
        assert out.stop_s == pytest.approx(conflict_s - 5.0, abs=0.3)

    def test_clear_lane_cruises(self):
        pred = prediction_mod.predict((obstacle(x=30.0, y=8.0, speed=0.0),), CFG)
        ego = EgoChassis(0.0, 0.0, 0.0, 8.0)
        out = planning_mod.plan(pred, ego, ROUTE, "lane_0", 1.75, 0.9, CFG)
        assert out.decision == "cruise"
        assert out.stop_s == -1.0

    def test_infeasible_fence_means_no_yield(self):
        # Conflict so close that no stop inside the decel limit exists.
        pred = prediction_mod.predict((obstacle(x=12.0, speed=0.0),), CFG)
        ego = EgoChassis(0.0, 0.0, 0.0, 12.0)
        out = planning_mod.plan(pred, ego, ROUTE, "lane_0", 1.75, 0.9, CFG)
        assert out.decision == "overtake"
        assert out.stop_s == -1.0

    def test_lateral_buffer_controls_drift_detection(self):
        # The planner orients obstacle boxes along the predicted path
        # tangent, so a drifted body (heading far off the travel direction)
        # only registers once the buffers cover the real footprint.
        drifting = obstacle(ident="truck", x=25.0, y=3.6, heading=0.9,
                            motion_heading=0.0, speed=5.0, hl=4.0, hw=1.25)
        pred = prediction_mod.predict((drifting,), CFG)
        assert pred[0].static is False
        assert pred[0].heading == 0.9  # available downstream, just unused
        ego = EgoChassis(0.0, 0.0, 0.0, 8.0)
        narrow = planning_mod.plan(pred, ego, ROUTE, "lane_0", 1.75, 0.9, CFG)
        assert narrow.decision == "cruise"
        wide_cfg = default_configuration({"planning.kADCSafetyLBuffer": 1.0})
        wide = planning_mod.plan(pred, ego, ROUTE, "lane_0", 1.75, 0.9, wide_cfg)
        assert wide.decision == "yield"

    def test_crossing_that_arrives_late_allows_overtake(self):
        # The crossing obstacle reaches the lane ~4.7 s out while the ego
        # passes the conflict within ~1.4 s: clear time gap, pass ahead.
        crossing = obstacle(ident="c", x=14.0, y=-13.35, heading=math.pi / 2,
                            speed=2.0)
        pred = prediction_mod.predict((crossing,), CFG)
        ego = EgoChassis(0.0, 0.0, 0.0, 10.0)
        out = planning_mod.plan(pred, ego, ROUTE, "lane_0", 1.75, 0.9, CFG)
        assert out.decision == "overtake"
        assert out.stop_s == -1.0

    def test_speed_profile_ramps_down_to_fence(self):
        pred = prediction_mod.predict((obstacle(x=25.0, speed=0.0),), CFG)
        ego = EgoChassis(0.0, 0.0, 0.0, 8.0)
        out = planning_mod.plan(pred, ego, ROUTE, "lane_0", 1.75, 0.9, CFG)
        speeds = [v for _, _, v in out.points]
        assert speeds == sorted(speeds, reverse=True)
        assert speeds[-1] < speeds[0]


class TestControl:
    def plan_for(self, ego, cfg=CFG):
        return planning_mod.plan((), ego, ROUTE, "lane_0", 1.75, 0.9, cfg)

    def test_on_trajectory_at_speed_is_a_fixed_point(self):
        ego = EgoChassis(10.0, 0.0, 0.0, CFG.get("planning", "cruise_speed_mps"))
        plan = self.plan_for(ego)
        out = control_mod.control(plan, ego, 0.02, CFG)
        assert out.throttle == pytest.approx(0.0, abs=1e-9)
        assert out.brake == pytest.approx(0.0, abs=1e-9)
        assert abs(out.steer) < 0.01

    def test_brake_override_fires_strictly_above_threshold(self):
        ego = EgoChassis(10.0, 0.0, 0.0, 8.0)
        plan = self.plan_for(ego)
        hit = control_mod.control(plan, ego, 0.2, CFG)
        assert hit.brake == 1.0 and hit.throttle == 0.0
        # Raising the threshold to exactly the signal level disables it.
        raised = default_configuration({"perception.BRAKE_THRESHOLD": 0.2})
        calm = control_mod.control(plan, ego, 0.2, raised)
        assert calm.brake < 1.0

    def test_speed_cap_cuts_throttle(self):
        fast = EgoChassis(10.0, 0.0, 0.0, 12.0)  # 43 km/h > 35 default
        cfg = default_configuration({"planning.cruise_speed_mps": 20.0})
        plan = planning_mod.plan((), fast, ROUTE, "lane_0", 1.75, 0.9, cfg)
        out = control_mod.control(plan, fast, 0.02, cfg)
        assert out.throttle == 0.0

    def test_missing_inputs_idle(self):
        out = control_mod.control(None, None, None, CFG)
        assert out == control_mod.ControlOut(0.0, 0.0, 0.0)

    def test_lateral_error_steers_back(self):
        ego = EgoChassis(10.0, 0.5, 0.0, 8.0)  # left of the lane center
        plan = planning_mod.plan((), EgoChassis(10.0, 0.0, 0.0, 8.0), ROUTE,
                                 "lane_0", 1.75, 0.9, CFG)
        out = control_mod.control(plan, ego, 0.02, CFG)
        assert out.steer < 0.0  # steer right


class TestParameterTable:
    def test_table_4_parameter_names_exist(self):
        names = {s.name for s in build_parameter_specs()}
        for required in ("still_obstacle_speed_threshold", "obstacle_lat_buffer",
                         "kMinOvertakeDistance", "yield_distance",
                         "kOvertakeTimeBuffer", "kADCSafetyLBuffer",
                         "BRAKE_THRESHOLD", "MAX_SPEED", "dist_threshold_moving",
                         "dist_threshold_static"):
            assert required in names

    def test_defaults_match_documented_values(self):
        cfg = default_configuration()
        assert cfg.get("prediction", "still_obstacle_speed_threshold") == 0.99
        assert cfg.get("planning", "yield_distance") == 5.0
        assert cfg.get("planning", "kADCSafetyLBuffer") == 0.1
        assert cfg.get("perception", "BRAKE_THRESHOLD") == 0.10
        assert cfg.get("control", "MAX_SPEED") == 35.0

    def test_every_module_has_at_most_a_quarter_of_parameters(self):
        specs = build_parameter_specs()
        total = len(specs)
        for module in ("perception", "prediction", "planning", "control"):
            count = sum(1 for s in specs if s.module == module)
            assert count / total <= 0.25


class TestModuleGraph:
    def test_shape(self):
        g = extract_module_graph()
        assert set(g.modules) == {"perception", "prediction", "planning", "control"}
        assert len(g.channels) == 6

    def test_control_channel_has_one_writer(self):
        g = extract_module_graph()
        assert g.writers_of(CH_CONTROL) == ("control",)

    def test_chassis_written_by_simulator_only(self):
        g = extract_module_graph()
        assert g.writers_of(CH_CHASSIS) == ()
        assert "control" in g.readers_of(CH_CHASSIS)

    def test_prediction_reachable_from_control_channel(self):
        g = extract_module_graph()
        # Reverse reachability over (writer, channel)/(channel, reader) edges.
        seen = {("channel", CH_CONTROL)}
        stack = [("channel", CH_CONTROL)]
        while stack:
            kind, name = stack.pop()
            if kind == "channel":
                for m in g.writers_of(name):
                    if ("module", m) not in seen:
                        seen.add(("module", m))
                        stack.append(("module", m))
            else:
                for c in g.inputs_of(name):
                    if ("channel", c) not in seen:
                        seen.add(("channel", c))
                        stack.append(("channel", c))
        assert ("module", "prediction") in seen

    def test_graph_identical_across_calls(self):
        assert extract_module_graph() == extract_module_graph()
