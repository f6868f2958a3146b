# -*- coding: utf-8 -*-

"""Seeded disturbance and noise sampling."""

import numpy as np
import pytest

from grid.network import bus_injection_vectors
from simulation.noise import DisturbanceModel, NoiseModel, _gaussian, measure, sample_disturbance


def test_samples_are_keyed_by_seed_and_time(case9_sys):
    noise = NoiseModel.diagonal(case9_sys, seed=5, measurement_std=0.01, process_std_dynamic=0.001)
    np.testing.assert_array_equal(noise.measurement(0.5), noise.measurement(0.5))
    assert not np.allclose(noise.measurement(0.5), noise.measurement(0.51))
    other = NoiseModel.diagonal(case9_sys, seed=6, measurement_std=0.01)
    assert not np.allclose(noise.measurement(0.5), other.measurement(0.5))


def test_process_noise_respects_the_state_split(case9_sys):
    noise = NoiseModel.diagonal(case9_sys, seed=5, process_std_dynamic=0.001, process_std_algebraic=0.0)
    w = noise.process(1.0)
    assert np.all(w[~case9_sys.differential_mask] == 0)
    assert np.any(w[case9_sys.differential_mask] != 0)


def test_silent_noise_measures_exactly(case9_sys):
    y = measure(case9_sys, case9_sys.x_op, NoiseModel.silent(case9_sys), 0.3)
    np.testing.assert_array_equal(y, case9_sys.C @ case9_sys.x_op)


def test_disturbance_scales_with_capacity_and_load(four_bus_case):
    model = DisturbanceModel.from_case(four_bus_case, seed=1, renewable_std_fraction=0.1, load_std_fraction=0.05)
    n = four_bus_case.n_bus
    np.testing.assert_allclose(model.q_bar, np.concatenate(bus_injection_vectors(four_bus_case)))
    assert model.sigma_q[2] == pytest.approx(0.1 * 0.2)
    assert model.sigma_q[2 * n + 2] == pytest.approx(0.05 * 0.8)
    assert model.sigma_q[2 * n + 3] == 0.0


def test_zero_fractions_give_nominal_injections(four_bus_case):
    model = DisturbanceModel.from_case(four_bus_case, seed=1)
    np.testing.assert_array_equal(sample_disturbance(model, 2.0), model.q_bar)


def test_negative_sigma_rejected():
    with pytest.raises(ValueError):
        DisturbanceModel(q_bar=np.zeros(2), sigma_q=np.array([0.1, -0.1]), seed=0)


def test_full_covariance_draw(rng):
    cov = np.array([[1.0, 0.5], [0.5, 2.0]])
    draws = np.array([_gaussian(rng, cov) for _ in range(4000)])
    np.testing.assert_allclose(np.cov(draws, rowvar=False), cov, atol=0.15)
