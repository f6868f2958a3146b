# -*- coding: utf-8 -*-

"""
DISTURBANCE AND NOISE MODELS
============================

Samples are keyed by (seed, time) so a given instant always draws the same
vector regardless of call order. Different instants are independent.
"""

from dataclasses import dataclass

import numpy as np

from grid.case_parser import GridCase
from grid.descriptor import DescriptorSystem
from grid.network import bus_injection_vectors

TIME_RESOLUTION = 1e6  # samples are keyed to the microsecond


def _rng(seed: int, t: float, stream: int) -> np.random.Generator:
    key = int(round(t * TIME_RESOLUTION))
    return np.random.default_rng(np.random.SeedSequence([int(seed), stream, key]))


def _gaussian(rng: np.random.Generator, cov: np.ndarray) -> np.ndarray:
    cov = np.asarray(cov, dtype=float)
    if cov.ndim == 1:
        return np.sqrt(cov) * rng.standard_normal(cov.size)
    diag = np.diag(cov)
    if np.count_nonzero(cov - np.diag(diag)) == 0:
        return np.sqrt(diag) * rng.standard_normal(diag.size)
    return rng.multivariate_normal(np.zeros(cov.shape[0]), cov, method="eigh")


@dataclass(frozen=True)
class DisturbanceModel:
    q_bar: np.ndarray
    sigma_q: np.ndarray
    seed: int

    def __post_init__(self):
        if np.any(np.asarray(self.sigma_q) < 0):
            raise ValueError("sigma_q must be nonnegative")
        if np.shape(self.q_bar) != np.shape(self.sigma_q):
            raise ValueError("q_bar and sigma_q must have the same shape")

    @classmethod
    def from_case(
        cls,
        case: GridCase,
        seed: int,
        renewable_std_fraction: float = 0.0,
        load_std_fraction: float = 0.0,
    ) -> "DisturbanceModel":
        p_r, q_r, p_l, q_l = bus_injection_vectors(case)
        capacity = np.zeros(case.n_bus)
        for r in case.renewables:
            capacity[case.bus_index[r.bus]] += r.capacity
        sigma = np.concatenate([
            renewable_std_fraction * capacity,
            renewable_std_fraction * capacity,
            load_std_fraction * np.abs(p_l),
            load_std_fraction * np.abs(q_l),
        ])
        return cls(q_bar=np.concatenate([p_r, q_r, p_l, q_l]), sigma_q=sigma, seed=seed)


@dataclass(frozen=True)
class NoiseModel:
    process_cov: np.ndarray       # n×n or length-n diagonal
    measurement_cov: np.ndarray   # p×p or length-p diagonal
    seed: int

    @classmethod
    def diagonal(cls, sys: DescriptorSystem, seed: int, measurement_std: float = 0.0,
                 process_std_dynamic: float = 0.0, process_std_algebraic: float = 0.0) -> "NoiseModel":
        process = np.where(sys.differential_mask, process_std_dynamic, process_std_algebraic) ** 2
        return cls(
            process_cov=process,
            measurement_cov=np.full(sys.p, measurement_std**2),
            seed=seed,
        )

    @classmethod
    def silent(cls, sys: DescriptorSystem) -> "NoiseModel":
        return cls(process_cov=np.zeros(sys.n), measurement_cov=np.zeros(sys.p), seed=0)

    def process(self, t: float) -> np.ndarray:
        return _gaussian(_rng(self.seed, t, 1), self.process_cov)

    def measurement(self, t: float) -> np.ndarray:
        return _gaussian(_rng(self.seed, t, 2), self.measurement_cov)


def sample_disturbance(model: DisturbanceModel, t: float) -> np.ndarray:
    q_bar = np.asarray(model.q_bar, dtype=float)
    sigma = np.asarray(model.sigma_q, dtype=float)
    if not np.any(sigma):
        return q_bar.copy()
    return q_bar + sigma * _rng(model.seed, t, 0).standard_normal(q_bar.size)


def measure(sys: DescriptorSystem, x: np.ndarray, noise: NoiseModel, t: float = 0.0) -> np.ndarray:
    """y = C x + w_m, with w_m drawn for instant t."""
    y = sys.C @ x
    if np.any(noise.measurement_cov):
        y = y + noise.measurement(t)
    return y
