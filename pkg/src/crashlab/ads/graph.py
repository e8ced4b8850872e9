"""Bipartite wiring of ADS modules and the pub-sub channels they touch.

Modules and channels may share names (the prediction module writes the
prediction channel), so write and read edges are stored separately instead
of in one ambiguous edge set.
"""

from __future__ import annotations

from dataclasses import dataclass

MODULES = ("perception", "prediction", "planning", "control")

CH_OBSTACLES = "perception/obstacles"
CH_BRAKE = "perception/brake"
CH_PREDICTION = "prediction"
CH_PLANNING = "planning"
CH_CONTROL = "control"
CH_CHASSIS = "chassis"

CHANNELS = (CH_OBSTACLES, CH_BRAKE, CH_PREDICTION, CH_PLANNING, CH_CONTROL, CH_CHASSIS)


@dataclass(frozen=True)
class ModuleGraph:
    """Directed bipartite graph: a write edge (module, channel) means the
    module publishes the channel; a read edge (channel, module) means the
    module subscribes to it. Channels may lack a writer (simulator-fed)."""

    modules: tuple[str, ...]
    channels: tuple[str, ...]
    writes: tuple[tuple[str, str], ...]
    reads: tuple[tuple[str, str], ...]

    def __post_init__(self):
        mods, chans = set(self.modules), set(self.channels)
        for m, c in self.writes:
            if m not in mods or c not in chans:
                raise ValueError(f"write edge ({m!r}, {c!r}) references unknown vertex")
        for c, m in self.reads:
            if m not in mods or c not in chans:
                raise ValueError(f"read edge ({c!r}, {m!r}) references unknown vertex")

    def writers_of(self, channel: str) -> tuple[str, ...]:
        return tuple(m for m, c in self.writes if c == channel)

    def readers_of(self, channel: str) -> tuple[str, ...]:
        return tuple(m for c, m in self.reads if c == channel)

    def outputs_of(self, module: str) -> tuple[str, ...]:
        return tuple(c for m, c in self.writes if m == module)

    def inputs_of(self, module: str) -> tuple[str, ...]:
        return tuple(c for c, m in self.reads if m == module)


def extract_module_graph() -> ModuleGraph:
    """Static wiring of the toy ADS; identical for every execution.

    The chassis channel is written by the simulator (vehicle state feedback),
    so it has no writer among the modules; planning and control read it.
    """
    return ModuleGraph(
        modules=MODULES,
        channels=CHANNELS,
        writes=(
            ("perception", CH_OBSTACLES),
            ("perception", CH_BRAKE),
            ("prediction", CH_PREDICTION),
            ("planning", CH_PLANNING),
            ("control", CH_CONTROL),
        ),
        reads=(
            (CH_OBSTACLES, "prediction"),
            (CH_PREDICTION, "planning"),
            (CH_CHASSIS, "planning"),
            (CH_PLANNING, "control"),
            (CH_CHASSIS, "control"),
            (CH_BRAKE, "control"),
        ),
    )
