import math

import pytest

from crashlab.scenario import (ActorState, MapEntityState, MapSpec,
                               PhysicalCondition, ScriptPoint, WeatherState)


def straight_route(length=400.0):
    return MapSpec(route=((0.0, 0.0), (length, 0.0)))


def ego(x=0.0, y=0.0, heading=0.0, speed=8.0):
    return ActorState(id="ego", kind="ego", color="blue", x=x, y=y,
                      heading=heading, speed=speed, half_length=2.25, half_width=0.9)


def sedan(actor_id="car_1", x=50.0, y=0.0, heading=0.0, speed=0.0, color="white"):
    return ActorState(id=actor_id, kind="sedan", color=color, x=x, y=y,
                      heading=heading, speed=speed, half_length=2.25, half_width=0.9)


def truck(actor_id="truck_1", x=50.0, y=0.0, heading=0.0, speed=0.0, color="red"):
    return ActorState(id=actor_id, kind="truck", color=color, x=x, y=y,
                      heading=heading, speed=speed, half_length=4.0, half_width=1.25)


def building(entity_id="bld_1", x=20.0, y=10.0, heading=0.0, enabled=True):
    return MapEntityState(id=entity_id, kind="building", x=x, y=y,
                          heading=heading, enabled=enabled)


@pytest.fixture
def empty_road():
    return PhysicalCondition(map=straight_route(), actors=(ego(speed=2.0),))
