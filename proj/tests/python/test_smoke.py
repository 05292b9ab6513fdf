import math

import numpy as np
import pytest

import cpprop

TINY_CONFIG = """
pulse:
  shape: cos2
  entry: U3c
medium:
  depth_max: 0.5
  n_z_steps: 4
  tail_buffer_fraction: 0.5
  threads: 1
"""


def test_version_string():
    assert cpprop.__version__.count(".") == 2


def test_resonant_pi_pulse_inverts():
    u = cpprop.resonant_propagator(math.pi, 0.0)
    assert abs(u.a) < 1e-15
    assert abs(abs(u.b) - 1.0) < 1e-15


def test_su2_product_is_unitary():
    u = cpprop.resonant_propagator(1.1, 0.3) @ cpprop.rosen_zener_propagator(0.4, 0.2)
    assert abs(abs(u.a) ** 2 + abs(u.b) ** 2 - 1.0) < 1e-14


def test_bad_su2_raises():
    with pytest.raises(cpprop.ConfigError):
        cpprop.SU2(1.0, 1.0)


def test_rosen_zener_transition_probability():
    p, q = 0.6, 0.7
    u = cpprop.rosen_zener_propagator(p, q)
    expected = math.sin(math.pi * p) ** 2 / math.cosh(math.pi * q) ** 2
    assert abs(abs(u.b) ** 2 - expected) < 1e-13


def test_table_lists_all_rows():
    names = cpprop.table_entries()
    assert len(names) == 36
    assert "U3a" in names and "U9c_12" in names


def test_u3a_entry_verifies():
    report = cpprop.verify_table("U3a")
    assert report["pass"] and report["exact"]
    assert report["root_residual"] < 1e-9


def test_composite_error_scales_as_sixth_power():
    phases = cpprop.expand_anagram(cpprop.entry_phases("U3a"))
    p1 = abs(cpprop.composed_a(phases, eps=0.02)) ** 2
    p2 = abs(cpprop.composed_a(phases, eps=0.04)) ** 2
    assert math.log2(p2 / p1) == pytest.approx(6.0, abs=0.1)


def test_solver_finds_n3_root():
    roots = cpprop.solve(3, "alternating", seed_density=16)
    assert len(roots) == 1
    assert roots[0][0] == pytest.approx(cpprop.entry_phases("U3a")[0], abs=1e-9)


def test_unknown_class_is_config_error():
    with pytest.raises(cpprop.ConfigError):
        cpprop.solve(3, "sideways")


def test_area_theorem_limits():
    assert cpprop.area_theorem(math.pi, 3.0) == pytest.approx(math.pi, abs=1e-12)
    assert cpprop.area_theorem(0.01, 2.0) == pytest.approx(0.01 * math.exp(-1.0), rel=1e-4)


def test_propagate_and_map_round_trip():
    run = cpprop.propagate(TINY_CONFIG)
    field = run["field"]
    assert field.shape == (len(run["alpha_z"]), field.shape[1])
    assert np.all(run["energy_residual"] < 1e-6)
    deltas = cpprop.sinh_spaced_deltas(2.0, 21, 0.05)
    perr = cpprop.perr_map(run["alpha_z"], run["tau0"], run["dt"], field, deltas, threads=1)
    assert perr.shape == (len(run["alpha_z"]), 21)
    assert perr[0, 10] < 1e-3
    width = cpprop.width_at_depth(run["alpha_z"], deltas, perr, 1e-2, 0.0)
    assert width > 0.0
    lines = cpprop.contours(run["alpha_z"], deltas, perr, 1e-2)
    assert all(line.shape[1] == 2 for line in lines)


def test_bad_config_text():
    with pytest.raises(cpprop.ConfigError):
        cpprop.propagate("pulse:\n  shape: triangle\n")
