# -*- coding: utf-8 -*-

"""Attack zone search over the admittance graph."""

import numpy as np
import pytest

from attacks.zone import AttackZone, BusClasses, attack_zone, zone_for_case
from errors import CaseValidationError
from grid.descriptor import StateLayout
from grid.measurements import build_measurement_matrix

# -----------------------------------------------------------------
# Synthetic chain 1-2-3-4-5, buses 2 and 3 carry no injection
# -----------------------------------------------------------------


def _chain(weak=0.0):
    y = np.zeros((5, 5), dtype=complex)
    for i in range(4):
        y[i, i + 1] = y[i + 1, i] = -10j
    y[0, 4] = y[4, 0] = weak
    np.fill_diagonal(y, -y.sum(axis=1))
    return y


CLASSES = BusClasses(bus_ids=(1, 2, 3, 4, 5), zero_injection=frozenset({2, 3}), generator_buses=(1, 5))


@pytest.mark.parametrize(
    "d_max, zone, boundary",
    [
        (3, {1, 2, 3, 4}, {5}),
        (1, {1, 2}, {3}),
        (0, {1}, {2}),
    ],
)
def test_chain_walk(d_max, zone, boundary):
    found = attack_zone(_chain(), CLASSES, [1], d_max=d_max)
    assert found.zone == zone
    assert found.boundary == boundary


def test_weak_couplings_are_ignored():
    assert attack_zone(_chain(weak=1e-9), CLASSES, [1]).zone == {1, 2, 3, 4}
    assert 5 in attack_zone(_chain(weak=1e-3), CLASSES, [1]).zone


def test_state_indices_cover_zone_generators():
    found = attack_zone(_chain(), CLASSES, [1])
    layout = StateLayout(2, 5)
    expected = layout.generator_state_indices([0, 1]) + layout.bus_state_indices(range(5))
    assert found.state_indices == tuple(sorted(expected))


def test_bad_inputs():
    with pytest.raises(CaseValidationError):
        attack_zone(_chain(), CLASSES, [9])
    with pytest.raises(ValueError):
        attack_zone(_chain(), CLASSES, [1], epsilon=0.0)


def test_to_dict():
    out = AttackZone(zone=frozenset({3, 1}), boundary=frozenset({2}), state_indices=(0, 4)).to_dict()
    assert out == {"zone": [1, 3], "boundary": [2], "state_count": 2}

# -----------------------------------------------------------------
# Bundled cases
# -----------------------------------------------------------------


def test_case39_zone(case39):
    found = zone_for_case(case39, [10, 11])
    assert found.zone == {4, 5, 6, 7, 8, 10, 11, 12, 13, 14, 15, 31, 32}
    assert found.boundary == {3, 9, 16}
    assert {5, 6, 10, 11, 12, 13, 31, 32} <= found.zone


def test_case39_zone_covers_the_targeted_rows(case39):
    # every state read by a row at bus 10 or 11 lies inside the zone
    found = zone_for_case(case39, [10, 11])
    model = build_measurement_matrix(case39)
    read = set(np.flatnonzero(np.any(model.C[14:20] != 0, axis=0)).tolist())
    assert read <= set(found.state_indices)


def test_case9_zone(case9):
    assert case9.zero_injection_buses() == {4, 6, 8}
    found = zone_for_case(case9, [5])
    assert found.zone == {1, 3, 4, 5, 6, 7, 9}
    assert found.boundary == {8}
