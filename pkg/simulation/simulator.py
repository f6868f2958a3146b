# -*- coding: utf-8 -*-

"""
GROUND-TRUTH SIMULATION
=======================

Integrates the plant over a fixed grid t_k = k·dt, k = 0..K, and records the
noisy PMU stream. Disturbance, process noise and the control input are
sampled per step and held over it. Controls are None (steady inputs), a fixed
vector, or a callable u(t, x) such as PrimaryControl.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import pandas as pd

from errors import GridLabError, StageError
from grid.descriptor import DescriptorSystem
from simulation.integrator import MIN_DT, NEWTON_MAX_ITERATIONS, NEWTON_TOLERANCE, step
from simulation.noise import DisturbanceModel, NoiseModel, measure, sample_disturbance


@dataclass(frozen=True)
class LoadStep:
    bus: int
    fraction: float
    time: float


@dataclass
class Trajectory:
    dt: float
    horizon: float
    times: np.ndarray
    states: np.ndarray         # (K+1)×n
    measurements: np.ndarray   # (K+1)×p
    inputs: np.ndarray         # (K+1)×2n_g
    disturbances: np.ndarray   # (K+1)×4N
    state_names: list = field(default_factory=list)
    measurement_names: list = field(default_factory=list)

    def __len__(self) -> int:
        return self.times.size

    def state_frame(self) -> pd.DataFrame:
        df = pd.DataFrame(self.states, columns=self.state_names or None)
        df.insert(0, "t", self.times)
        return df

    def measurement_frame(self) -> pd.DataFrame:
        df = pd.DataFrame(self.measurements, columns=self.measurement_names or None)
        df.insert(0, "t", self.times)
        return df


def step_count(dt: float, horizon: float) -> int:
    k = int(round(horizon / dt))
    if k < 0 or not np.isclose(k * dt, horizon, rtol=0, atol=1e-9 * max(1.0, horizon)):
        raise ValueError(f"horizon {horizon} is not a whole number of steps of {dt}")
    return k


def _controls_fn(sys: DescriptorSystem, controls) -> Callable[[float, np.ndarray], np.ndarray]:
    if controls is None:
        return lambda t, x: sys.u_op
    if callable(controls):
        return controls
    fixed = np.asarray(controls, dtype=float)
    return lambda t, x: fixed


def apply_events(sys: DescriptorSystem, q: np.ndarray, t: float, events) -> np.ndarray:
    if not events:
        return q
    n_bus = sys.layout.n_bus
    q = q.copy()
    for ev in events:
        if t >= ev.time:
            i = sys.case.bus_index[ev.bus]
            q[2 * n_bus + i] += ev.fraction * sys.q_bar[2 * n_bus + i]
            q[3 * n_bus + i] += ev.fraction * sys.q_bar[3 * n_bus + i]
    return q


def simulate(
    sys: DescriptorSystem,
    x0: np.ndarray,
    controls,
    disturbance: DisturbanceModel,
    noise: NoiseModel,
    dt: float,
    horizon: float,
    events=(),
    tolerance: float = NEWTON_TOLERANCE,
    max_iterations: int = NEWTON_MAX_ITERATIONS,
    min_dt: float = MIN_DT,
) -> Trajectory:
    k_total = step_count(dt, horizon)
    u_of = _controls_fn(sys, controls)
    times = np.arange(k_total + 1) * dt

    states = np.empty((k_total + 1, sys.n))
    ys = np.empty((k_total + 1, sys.p))
    us = np.empty((k_total + 1, sys.B_u.shape[1]))
    qs = np.empty((k_total + 1, sys.B_w.shape[1]))

    x = np.asarray(x0, dtype=float).copy()
    has_process_noise = bool(np.any(noise.process_cov))

    states[0] = x
    ys[0] = measure(sys, x, noise, times[0])
    us[0] = u_of(times[0], x)
    qs[0] = apply_events(sys, sample_disturbance(disturbance, times[0]), times[0], events)

    for k in range(1, k_total + 1):
        t_prev, t = times[k - 1], times[k]
        q = apply_events(sys, sample_disturbance(disturbance, t), t, events)
        w = noise.process(t_prev) if has_process_noise else None
        try:
            x = step(sys, x, us[k - 1], q, dt, process_noise=w,
                     tolerance=tolerance, max_iterations=max_iterations, min_dt=min_dt)
        except GridLabError as exc:
            raise StageError(f"simulate (t = {t:.4f} s)", k, exc) from exc
        states[k] = x
        ys[k] = measure(sys, x, noise, t)
        us[k] = u_of(t, x)
        qs[k] = q

    return Trajectory(
        dt=dt,
        horizon=horizon,
        times=times,
        states=states,
        measurements=ys,
        inputs=us,
        disturbances=qs,
        state_names=sys.layout.names(sys.case),
        measurement_names=list(sys.measurement_labels),
    )
