# -*- coding: utf-8 -*-

"""
ATTACK ZONE
===========

Breadth-first walk over the admittance graph from the target buses. A
zero-injection neighbor joins the zone and keeps the walk going; any other
neighbor joins the zone and stops there. The walk is cut after d_max levels.

The boundary is every bus adjacent to the zone but outside it. The state set
is (v, θ) for each zone or boundary bus plus the four dynamic states of each
generator sitting on one of them.
"""

from dataclasses import dataclass

import numpy as np

from errors import CaseValidationError
from grid.case_parser import GridCase
from grid.descriptor import StateLayout
from grid.network import build_ybus

D_MAX = 3
EPSILON = 1e-6


@dataclass(frozen=True)
class BusClasses:
    bus_ids: tuple
    zero_injection: frozenset
    generator_buses: tuple    # bus id of each generator, generator order

    @classmethod
    def from_case(cls, case: GridCase) -> "BusClasses":
        return cls(
            bus_ids=tuple(case.bus_ids),
            zero_injection=frozenset(case.zero_injection_buses()),
            generator_buses=tuple(g.bus for g in case.generators),
        )


@dataclass(frozen=True)
class AttackZone:
    zone: frozenset
    boundary: frozenset
    state_indices: tuple

    def to_dict(self) -> dict:
        return {
            "zone": sorted(self.zone),
            "boundary": sorted(self.boundary),
            "state_count": len(self.state_indices),
        }


def attack_zone(
    ybus: np.ndarray,
    bus_classes: BusClasses,
    targets,
    d_max: int = D_MAX,
    epsilon: float = EPSILON,
) -> AttackZone:
    ids = list(bus_classes.bus_ids)
    pos = {b: i for i, b in enumerate(ids)}
    unknown = [t for t in targets if t not in pos]
    if unknown:
        raise CaseValidationError(f"unknown target bus(es): {unknown}")
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")

    adjacent = np.abs(np.asarray(ybus)) > epsilon
    np.fill_diagonal(adjacent, False)

    def neighbors(bus):
        return [ids[j] for j in np.flatnonzero(adjacent[pos[bus]])]

    zone = set(targets)
    queue = list(dict.fromkeys(targets))
    visited = set()
    depth = 0
    while queue and depth < d_max:
        next_queue = []
        for bus in queue:
            for other in neighbors(bus):
                if other in visited:
                    continue
                zone.add(other)
                if other in bus_classes.zero_injection and other not in next_queue:
                    next_queue.append(other)
            visited.add(bus)
        queue = next_queue
        depth += 1

    boundary = {other for bus in zone for other in neighbors(bus)} - zone

    layout = StateLayout(len(bus_classes.generator_buses), len(ids))
    covered = zone | boundary
    bus_positions = sorted(pos[b] for b in covered)
    gen_positions = [k for k, b in enumerate(bus_classes.generator_buses) if b in covered]
    states = layout.generator_state_indices(gen_positions) + layout.bus_state_indices(bus_positions)
    return AttackZone(zone=frozenset(zone), boundary=frozenset(boundary), state_indices=tuple(sorted(states)))


def zone_for_case(case: GridCase, targets, d_max: int = D_MAX, epsilon: float = EPSILON) -> AttackZone:
    return attack_zone(build_ybus(case), BusClasses.from_case(case), targets, d_max, epsilon)
