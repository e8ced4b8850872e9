# Scratch probe for fixture tuning (not shipped).
import sys
from crashlab.fixtures import scenario_library, s1_creeping_car, s2_left_turner, s3_red_truck, s4_drifting_truck
from crashlab.ads.params import default_configuration
from crashlab.simulator import SimulationParams, run_execution
from crashlab.scenario import Delta, DeltaEntry, apply_delta


def params_of(sc):
    return SimulationParams(dt=sc.sim["dt"], horizon=sc.sim["horizon"], seed=sc.sim.get("seed", 0))


def run_fixture(fx, overrides=None, deltas=None):
    sc = fx.scenario
    ov = dict(sc.ego_config_overrides)
    if overrides:
        ov.update(overrides)
    cfg = default_configuration(ov)
    cond = sc.condition
    if deltas:
        cond = apply_delta(cond, Delta("physical", tuple(DeltaEntry(*e) for e in deltas)))
    res = run_execution(cfg, cond, params_of(sc), scenario_id=sc.scenario_id)
    return res


def show(tag, res):
    v = res.verdict
    print(f"{tag:48s} verdict={v.kind:18s} t={v.time} parts={v.participants}")


which = sys.argv[1] if len(sys.argv) > 1 else "all"

if which in ("s1", "all"):
    fx = s1_creeping_car()
    show("S1 default (expect collision)", run_fixture(fx))
    show("S1 fix thr=0.50 (expect none)", run_fixture(fx, {"prediction.still_obstacle_speed_threshold": 0.50}))
    show("S1 thr=0.98 (expect none)", run_fixture(fx, {"prediction.still_obstacle_speed_threshold": 0.98}))
    car = fx.scenario.condition.actor("creeper")
    show("S1 car speed 1.2 (expect none)", run_fixture(fx, None, [("actors[creeper].speed", car.speed, 1.2)]))
    show("S1 car speed 0.995 (expect none)", run_fixture(fx, None, [("actors[creeper].speed", car.speed, 0.995)]))

if which in ("s2", "all"):
    fx = s2_left_turner()
    show("S2 default (expect collision)", run_fixture(fx))
    show("S2 fix yd=2.0 (expect none)", run_fixture(fx, {"planning.yield_distance": 2.0}))
    show("S2 yd=10 (expect collision)", run_fixture(fx, {"planning.yield_distance": 10.0}))
    t = fx.scenario.condition.actor("turner")
    show("S2 turner speed 7.2 (?)", run_fixture(fx, None, [("actors[turner].speed", t.speed, 7.2)]))
    show("S2 turner speed 4.0 (?)", run_fixture(fx, None, [("actors[turner].speed", t.speed, 4.0)]))

if which in ("s3", "all"):
    fx = s3_red_truck()
    show("S3 default (expect EB)", run_fixture(fx))
    show("S3 fix thr=0.20 (expect none)", run_fixture(fx, {"perception.BRAKE_THRESHOLD": 0.20}))
    tr = fx.scenario.condition.actor("red_truck")
    show("S3 truck y+=4.7 (expect none)", run_fixture(fx, None, [("actors[red_truck].y", tr.y, tr.y + 4.7)]))
    show("S3 truck gray (expect none)", run_fixture(fx, None, [("actors[red_truck].color", "red", "gray")]))

if which in ("s4", "all"):
    fx = s4_drifting_truck()
    show("S4 default (expect collision)", run_fixture(fx))
    show("S4 fix kADC=1.0 (expect none)", run_fixture(fx, {"planning.kADCSafetyLBuffer": 1.0}))
    show("S4 kADC=0.5 (expect collision)", run_fixture(fx, {"planning.kADCSafetyLBuffer": 0.5}))
    tr = fx.scenario.condition.actor("wet_truck")
    show("S4 dry (expect none)", run_fixture(fx, None, [("weather.precipitation", 80.0, 20.0)]))
    show("S4 heading -0.03 (?)", run_fixture(fx, None, [("actors[wet_truck].heading", tr.heading, tr.heading - 0.03)]))
    show("S4 heading +0.05 (?)", run_fixture(fx, None, [("actors[wet_truck].heading", tr.heading, tr.heading + 0.05)]))
