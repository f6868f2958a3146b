# -*- coding: utf-8 -*-

"""
Shared fixtures: a hand-written 4-bus case, the bundled WSCC 9-bus case at
its operating point, and a validated observer gain for it.
"""

import os

os.environ.setdefault("GRID_LAB_QUIET", "1")

from pathlib import Path

import numpy as np
import pytest

from attacks.context import AttackContext
from attacks.spec import AttackSpec
from attacks.zone import zone_for_case
from detection.chi2 import Chi2Detector
from estimation.gain import synthesize_gain, validate_gain
from estimation.observer import ObserverConfig
from grid.case_parser import load_case, parse_case
from grid.constraints import constraint_model
from grid.descriptor import assemble_descriptor
from grid.network import solve_power_flow

REPO_ROOT = Path(__file__).resolve().parent.parent
CASE_DIR = REPO_ROOT / "data" / "cases"

# bus 4 carries nothing, so it is a zero-injection bus
FOUR_BUS = """\
# four-bus loop used by the parser and network tests
[case]
name four_bus
base_mva 100
frequency_hz 60

[bus]
1 slack 0 0 0 0 1.02 1.1 0.9
2 PV 0 0 0 0 1.01 1.1 0.9
3 PQ 80 30 0 0 1.0 1.1 0.9
4 PQ 0 0 0 0 1.0 1.1 0.9

[branch]
1 2 0.01 0.08 0.02 0 0
2 3 0.02 0.10 0.03 150 0
3 4 0.01 0.06 0.02 0 0
4 1 0.01 0.05 0.02 0 0

[gen]
1 40 200 0 150 -150 5.0 2.0 0.9 0.2 0.8 0.25 6.0 0.5
2 40 150 0 100 -100 4.0 2.0 1.0 0.25 0.9 0.3 5.0 0.6

[renewable]
3 10 0 20

[pmu]
3 *   # both lines at bus 3
"""


# -----------------------------------------------------------------
# Small hand-written case
# -----------------------------------------------------------------

@pytest.fixture
def four_bus_text():
    return FOUR_BUS


@pytest.fixture
def four_bus_case():
    return parse_case(FOUR_BUS)


# -----------------------------------------------------------------
# Bundled cases
# -----------------------------------------------------------------

@pytest.fixture(scope="session")
def case9():
    return load_case(CASE_DIR / "case9.txt")


@pytest.fixture(scope="session")
def case39():
    return load_case(CASE_DIR / "case39.txt")


@pytest.fixture(scope="session")
def case9_pf(case9):
    return solve_power_flow(case9)


@pytest.fixture(scope="session")
def case9_sys(case9, case9_pf):
    return assemble_descriptor(case9, case9_pf)


@pytest.fixture(scope="session")
def case9_gain(case9_sys):
    gain = synthesize_gain(case9_sys)
    check = validate_gain(case9_sys, gain, dt=0.01)
    assert check.passed, check.reason
    return gain


@pytest.fixture
def case9_observer(case9_sys, case9_gain):
    return ObserverConfig(gain=case9_gain, dt=0.01, initial_estimate=case9_sys.x_op.copy())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# Bus 5 carries the load between the PMUs at 4 and 6
CASE9_TARGET_BUS = 5
CASE9_SIGMA = 1e-6


@pytest.fixture
def case9_attack_ctx(case9, case9_sys, case9_observer):
    """Factory: attack context on the 9-bus case with a tight χ² detector."""
    from pipeline_runner import rows_touching

    def make(strategy="icaa", detector=None, zone=True, **spec_fields):
        sigma = CASE9_SIGMA * np.eye(case9_sys.p)
        spec = AttackSpec(
            targets=tuple(rows_touching(case9_sys.measurement_labels, [CASE9_TARGET_BUS])),
            k_star=1,
            strategy=strategy,
            zone_targets=(CASE9_TARGET_BUS,),
            **spec_fields,
        )
        return AttackContext(
            sys=case9_sys,
            observer=case9_observer,
            spec=spec,
            detector=detector or Chi2Detector.from_sigma(sigma, m=100),
            sigma=sigma,
            constraints=constraint_model(case9),
            zone=zone_for_case(case9, [CASE9_TARGET_BUS]) if zone else None,
        )

    return make
