# Scratch: manual end-to-end chain on one fixture (not shipped).
import sys, time
from crashlab.fixtures import scenario_library
from crashlab.ads.params import default_configuration
from crashlab.ads.graph import extract_module_graph, CHANNELS
from crashlab.simulator import SimulationParams, run_execution
from crashlab.recording import reconstruct_scenario, AlignmentParams, trajectory_deviation
from crashlab.physical import PhysicalProblem, search_triggers, select_trigger
from crashlab.cyber import CyberProblem, search_misconfigurations, pinpoint_misconfiguration
from crashlab.diffing import all_channel_series, locate_deviating_module, NoAccidentSignature, LocalizationError, series_change_points
from crashlab.search import SearchSettings

name = sys.argv[1] if len(sys.argv) > 1 else "s3_red_truck"
budget = sys.argv[2] if len(sys.argv) > 2 else "small"

fx = next(f for f in scenario_library() if f.scenario_id == name)
sc = fx.scenario
cfg = default_configuration(sc.ego_config_overrides)
params = SimulationParams(dt=sc.sim["dt"], horizon=sc.sim["horizon"], seed=sc.sim["seed"])

t0 = time.perf_counter()
orig = run_execution(cfg, sc.condition, params, scenario_id=sc.scenario_id)
print(f"original verdict: {orig.verdict} ({time.perf_counter()-t0:.2f}s)")
assert orig.verdict.is_accident

replay_cond = reconstruct_scenario(orig.record)
replay = run_execution(cfg, replay_cond, params, scenario_id=sc.scenario_id)
print("replay matches:", replay.verdict == orig.verdict,
      replay.trajectories["ego"] == orig.trajectories["ego"])

if budget == "small":
    settings = SearchSettings(population=16, generations=10, seed=1)
else:
    settings = SearchSettings(population=24, generations=25, seed=1)

problem = PhysicalProblem(condition=replay_cond, config=cfg, params=params,
                          orig_record=replay.record)
t0 = time.perf_counter()
out = search_triggers(problem, settings)
print(f"physical search: {out.result.evaluations} evals, "
      f"{out.result.feasible_count} feasible, {out.result.generations_run} gens, "
      f"{time.perf_counter()-t0:.1f}s, front={len(out.candidates)}")
for c in out.candidates[:6]:
    print("   cand", c.entity_ids, [f"{e.path}:{e.old if not isinstance(e.old,float) else round(e.old,3)}->{e.new if not isinstance(e.new,float) else round(e.new,3)}" for e in c.delta.entries],
          "f=", tuple(round(v, 4) for v in c.objectives))

graph = extract_module_graph()

def has_signature(cand, outcome):
    try:
        series = all_channel_series(replay.record, outcome.record, CHANNELS)
        locate_deviating_module(graph, series)
        return True
    except (NoAccidentSignature, LocalizationError):
        return False

t0 = time.perf_counter()
sel = select_trigger(problem, out, align_exclusion=3.0, align_budget=5.0,
                     accept=has_signature)
print(f"selected trigger: {sel.candidate.entity_ids} deviation={sel.deviation:.3f} "
      f"rejected={[(c.entity_ids, why) for c, why in sel.rejected]} "
      f"({time.perf_counter()-t0:.1f}s)")

series = all_channel_series(replay.record, sel.reference.record, CHANNELS)
for ch in CHANNELS:
    cps = series_change_points(series[ch])
    print(f"   channel {ch:22s} cps={tuple(round(t,2) for t in cps.times[:4])} "
          f"mean {None if cps.mean_before is None else round(cps.mean_before,3)} -> "
          f"{None if cps.mean_after is None else round(cps.mean_after,3)}")
loc = locate_deviating_module(graph, series)
print("deviating module:", loc.module, " (expected:", fx.seeded_module + ")")
print("   module t*:", {m: round(t, 2) for m, t in loc.module_change_times.items()})

cyber_problem = CyberProblem(condition=replay_cond, config=cfg, params=params,
                             orig_record=replay.record, modules=(loc.module,))
t0 = time.perf_counter()
cout = search_misconfigurations(cyber_problem, settings)
print(f"cyber search: {cout.result.evaluations} evals, {cout.result.feasible_count} feasible, "
      f"{cout.result.generations_run} gens, {time.perf_counter()-t0:.1f}s")
for c in cout.candidates[:6]:
    print("   cand", [f"{e.path}:{e.old}->{round(e.new,4) if isinstance(e.new,float) else e.new}" for e in c.delta.entries],
          "h=", tuple(round(v, 4) for v in c.objectives))
pin = pinpoint_misconfiguration(cyber_problem, cout, align_exclusion=3.0, align_budget=5.0)
print("pinpointed:", [(e.path, e.old, round(e.new, 4) if isinstance(e.new, float) else e.new)
                      for e in pin.entries],
      f"dev_pre={pin.deviation_pre_accident:.3f} dev_full={pin.deviation_full_window:.3f}")
print("seeded:", fx.seeded_key, "found:", any(e.path == fx.seeded_key for e in pin.entries))
