# Scratch: trace planner decisions per tick (not shipped).
import sys
from crashlab.fixtures import s1_creeping_car, s2_left_turner, s4_drifting_truck
from crashlab.ads.params import default_configuration
from crashlab.ads import prediction as pm, planning as plm
from crashlab.ads.planning import EgoChassis
from crashlab.ads.perception import PerceivedObstacle
from crashlab.simulator import SimulationParams, run_execution
from crashlab.geometry import Polyline
from crashlab.messages import Node, Leaf

which = sys.argv[1]

if which == "s4":
    fx = s4_drifting_truck()
    cfg = default_configuration({**fx.scenario.ego_config_overrides,
                                 "planning.kADCSafetyLBuffer": 1.0})
elif which == "s1":
    fx = s1_creeping_car()
    cfg = default_configuration({**fx.scenario.ego_config_overrides,
                                 "prediction.still_obstacle_speed_threshold": 0.5})
else:
    fx = s2_left_turner()
    cfg = default_configuration({**fx.scenario.ego_config_overrides,
                                 "planning.yield_distance": 2.0})

sc = fx.scenario
params = SimulationParams(dt=sc.sim["dt"], horizon=sc.sim["horizon"])
res = run_execution(cfg, sc.condition, params)
print("verdict:", res.verdict)

# Decode planning channel decisions + first prediction obstacles.
from crashlab.ads.planning import plan_from_tree
from crashlab.ads.prediction import prediction_from_tree

prev_dec = None
for msg in res.record.channels["planning"]:
    p = plan_from_tree(msg.tree)
    if p.decision != prev_dec:
        print(f"t={msg.timestamp:6.2f} decision={p.decision:9s} stop_s={p.stop_s:8.2f} "
              f"v0={p.points[0][2] if p.points else None}")
        prev_dec = p.decision

for msg in res.record.channels["prediction"][::20]:
    obs = prediction_from_tree(msg.tree)
    if obs:
        o = obs[0]
        print(f"t={msg.timestamp:6.2f} pred {o.id} static={o.static} head={o.heading:.3f} "
              f"p0={o.points[0]} p-1={o.points[-1]}")
