"""Averaged potentials, pendulum data, critical points.

The independent check for fast_angle_average is plain quadrature: push
a uniform product grid in the rotated angles through x = A^{-1} xtil,
average the potential over the fast factors, and compare with the
returned one-dimensional series on the slow angle.  A uniform grid of
more than twice the largest rotated frequency is exact for trig
polynomials, so the tolerance is pure roundoff.
"""

import json
import math

import numpy as np
import pytest

from resokam.errors import ModelAssumptionError, ParameterError
from resokam.model import build_model
from resokam.resgraph import build_rotated
from resokam.secular import (TrigPotential, curvature_at, fast_angle_average,
                             standard_form, trig_eval)
from conftest import aniso_spec, iso_spec


def average_oracle(f, frame, theta):
    """Trapezoid average of f over the fast rotated angles at slow angle theta."""
    Ainv = np.asarray(frame.Ainv, dtype=float)
    n = Ainv.shape[0]
    freqs = np.array([Ainv.T @ np.asarray(m, dtype=float) for m in f.modes])
    fast_max = int(np.max(np.abs(freqs[:, 1:]))) if n > 1 else 0
    N = 2 * fast_max + 3
    grids = np.meshgrid(*([np.linspace(0.0, 2.0 * math.pi, N, endpoint=False)] * (n - 1)),
                        indexing="ij")
    phi = np.column_stack([g.ravel() for g in grids]) if n > 1 else np.zeros((1, 0))
    out = np.empty(len(theta), dtype=complex)
    for i, t in enumerate(theta):
        xtil = np.column_stack([np.full(phi.shape[0], t), phi])
        vals = f.evaluate(xtil @ Ainv.T)
        out[i] = np.mean(np.asarray(vals, dtype=complex))
    return out.real if f.real else out


@pytest.fixture(scope="module")
def iso():
    return build_model(iso_spec())


@pytest.fixture(scope="module")
def cos_pair():
    # cos x1 + cos(x1 - x2)
    return TrigPotential.from_modes({
        (1, 0): 0.5, (-1, 0): 0.5, (1, -1): 0.5, (-1, 1): 0.5})


# -- potentials ----------------------------------------------------------


def test_trig_potential_evaluate_and_degree(cos_pair):
    X = np.random.default_rng(3).uniform(0, 2 * math.pi, size=(40, 2))
    want = np.cos(X[:, 0]) + np.cos(X[:, 0] - X[:, 1])
    assert cos_pair.real
    assert np.allclose(cos_pair.evaluate(X), want, atol=1e-14)
    assert cos_pair.max_degree() == 1
    assert TrigPotential.from_modes({(3, -5): 1j, (-3, 5): -1j}).max_degree() == 5


def test_trig_potential_real_detection():
    assert not TrigPotential.from_modes({(1, 0): 1j}).real
    assert TrigPotential.from_modes({(0, 0): 2.0}).real
    # conjugate-symmetric with complex coefficients is still real-valued
    p = TrigPotential.from_modes({(2, 1): 1 + 2j, (-2, -1): 1 - 2j})
    assert p.real
    vals = p.evaluate(np.random.default_rng(0).uniform(size=(8, 2)))
    assert vals.dtype == np.float64


def test_trig_potential_from_modes_validation():
    with pytest.raises(ParameterError, match="at least one"):
        TrigPotential.from_modes({})
    with pytest.raises(ParameterError, match="dimension"):
        TrigPotential.from_modes({(1, 0): 1.0, (1, 0, 0): 1.0})


def test_trig_potential_from_file(tmp_path):
    p = tmp_path / "modes.txt"
    p.write_text("# V = cos x1\n1, 0, 0.5, 0\n-1, 0, 0.5, 0  # conj\n\n")
    f = TrigPotential.from_file(p)
    assert f.modes == {(1, 0): 0.5 + 0j, (-1, 0): 0.5 + 0j}

    bad = tmp_path / "short.txt"
    bad.write_text("1, 0, 0.5\n")
    with pytest.raises(ParameterError, match=r"short\.txt:1: expected"):
        TrigPotential.from_file(bad)

    bad.write_text("1, 0, 0.5, 0\nx, 0, 1, 0\n")
    with pytest.raises(ParameterError, match=r"short\.txt:2"):
        TrigPotential.from_file(bad)

    bad.write_text("1, 0, 0.5, 0\n1, 0, 0.25, 0\n")
    with pytest.raises(ParameterError, match="duplicate mode"):
        TrigPotential.from_file(bad)


def test_shipped_potential_config():
    f = TrigPotential.from_file("configs/potential2d.txt")
    assert f.n == 2 and f.real and len(f.modes) == 4


# -- averaging ----------------------------------------------------------


def test_fast_angle_average_keeps_parallel_modes(iso, cos_pair):
    rot = build_rotated(iso, (1, -1))
    f1 = fast_angle_average(cos_pair, rot.frame)
    assert f1 == {1: 0.5 + 0j, -1: 0.5 + 0j}
    # nothing parallel to (0, 1) in this potential
    rot2 = build_rotated(iso, (0, 1))
    assert fast_angle_average(cos_pair, rot2.frame) == {}


def test_fast_angle_average_multiples_and_constant(iso):
    f = TrigPotential.from_modes({
        (0, 0): 0.25,
        (1, 2): 0.5 - 0.5j, (-1, -2): 0.5 + 0.5j,
        (3, 6): 2j, (-3, -6): -2j,
        (1, 1): 1.0, (-1, -1): 1.0,        # not parallel to (1, 2)
        (2, 3): 0.5, (-2, -3): 0.5,
    })
    rot = build_rotated(iso, (1, 2))
    f1 = fast_angle_average(f, rot.frame)
    assert f1 == {0: 0.25 + 0j, 1: 0.5 - 0.5j, -1: 0.5 + 0.5j, 3: 2j, -3: -2j}


def test_fast_angle_average_dimension_mismatch(iso):
    rot = build_rotated(iso, (1, -1))
    with pytest.raises(ParameterError, match="dimension"):
        fast_angle_average(TrigPotential.from_modes({(1, 0, 0): 1.0}), rot.frame)


def test_fast_angle_average_vs_quadrature(iso):
    rng = np.random.default_rng(17)
    theta = np.linspace(0.0, 2.0 * math.pi, 13, endpoint=False)
    for trial in range(6):
        n = int(rng.integers(2, 4))
        modes = {}
        for _ in range(rng.integers(3, 12)):
            m = tuple(int(v) for v in rng.integers(-4, 5, size=n))
            c = complex(rng.normal(), rng.normal())
            modes[m] = modes.get(m, 0) + c
            mneg = tuple(-v for v in m)
            modes[mneg] = modes.get(mneg, 0) + c.conjugate()
        f = TrigPotential.from_modes(modes)
        k = tuple(int(v) for v in rng.integers(-3, 4, size=n))
        g = math.gcd(*(abs(v) for v in k))
        if g == 0:
            k = (1,) + (0,) * (n - 1)
        else:
            k = tuple(v // g for v in k)
            if next(v for v in k if v != 0) < 0:
                k = tuple(-v for v in k)
        spec = iso_spec() if n == 2 else {
            "family": "isotropic_quadratic", "s": [1.0] * n, "r": 0.25,
            "center": [0.0] * n,
            "domain": {"kind": "ball", "bounds": [0.0] * n + [1.0]}}
        rot = build_rotated(build_model(spec), k)
        f1 = fast_angle_average(f, rot.frame)
        have = trig_eval(f1, theta, real=f.real)
        want = average_oracle(f, rot.frame, theta)
        assert np.allclose(have, want, atol=1e-10), (trial, k)


# -- curvature and standard form ----------------------------------------------------------


def test_curvature_values(iso):
    assert curvature_at(build_rotated(iso, (1, -1)), (0.0,)) == pytest.approx(1.0)
    aniso = build_model(aniso_spec())
    # k Q k for k = (2, -1): 4*2 - 2*2*0.5 + 1 = 7, halved
    assert curvature_at(build_rotated(aniso, (2, -1)), (0.0,)) == pytest.approx(3.5)


def test_curvature_floor_enforced(iso):
    rot = build_rotated(iso, (1, -1))
    rot.d2Slow = lambda pt: np.full(np.atleast_2d(pt).shape[0], 0.9 * rot.gk2)
    with pytest.raises(ModelAssumptionError, match="convexity floor"):
        curvature_at(rot, (0.0,))


def test_standard_form_pendulum(iso, cos_pair):
    rot = build_rotated(iso, (1, -1))
    sf = standard_form(rot, cos_pair, (0.0,), eps=1e-4)
    assert sf.k == (1, -1) and not sf.degenerate and sf.real
    assert sf.f1 == {1: 0.5 + 0j, -1: 0.5 + 0j}
    assert sf.m_k == pytest.approx(1.0)
    assert sf.G0 == {j: c / sf.m_k for j, c in sf.f1.items()}
    # f1(theta) = cos theta: hyperbolic point at 0, elliptic at pi
    kinds = {c["type"]: c for c in sf.criticalPoints}
    assert kinds["max"]["theta"] == pytest.approx(0.0, abs=1e-12)
    assert kinds["min"]["theta"] == pytest.approx(math.pi, rel=1e-12)
    assert kinds["max"]["value"] == pytest.approx(1.0, rel=1e-12)
    assert sf.pendulumEnergies["separatrix"] == pytest.approx(1e-4, rel=1e-12)
    assert sf.pendulumEnergies["min"] == pytest.approx(-1e-4, rel=1e-12)
    assert set(sf.remainders.values()) == {"not computed"}


def test_standard_form_interior_critical_points(iso):
    # G0' = -sin t (1 + 4a cos t) with a = 0.3 adds roots at cos t = -5/6
    f = TrigPotential.from_modes({
        (1, -1): 0.5, (-1, 1): 0.5, (2, -2): 0.15, (-2, 2): 0.15})
    rot = build_rotated(iso, (1, -1))
    sf = standard_form(rot, f, (0.0,), eps=1e-3)
    thetas = sorted(c["theta"] for c in sf.criticalPoints)
    t_star = math.acos(-5.0 / 6.0)
    assert thetas == pytest.approx(
        [0.0, t_star, math.pi, 2.0 * math.pi - t_star], abs=1e-11)
    val = math.cos(t_star) + 0.3 * math.cos(2 * t_star)
    by_theta = {round(c["theta"], 6): c for c in sf.criticalPoints}
    assert by_theta[round(t_star, 6)]["type"] == "min"
    assert by_theta[round(t_star, 6)]["value"] == pytest.approx(val, rel=1e-10)
    # separatrix level sits at the global maximum of eps * f1
    assert sf.pendulumEnergies["separatrix"] == pytest.approx(1e-3 * 1.3, rel=1e-10)


def test_standard_form_degenerate_and_nonreal(iso, cos_pair):
    rot = build_rotated(iso, (0, 1))
    sf = standard_form(rot, cos_pair, (0.0,), eps=1e-4)
    assert sf.degenerate and sf.pendulumEnergies is None and sf.criticalPoints == ()

    # constant average only: still degenerate
    f0 = TrigPotential.from_modes({(0, 0): 2.0, (1, 0): 0.5, (-1, 0): 0.5})
    sf0 = standard_form(rot, f0, (0.0,), eps=1e-4)
    assert sf0.degenerate and sf0.f1 == {0: 2.0 + 0j}

    # complex-valued potential: averaged series reported, no pendulum
    fc = TrigPotential.from_modes({(1, -1): 1j})
    rot2 = build_rotated(iso, (1, -1))
    sfc = standard_form(rot2, fc, (0.0,), eps=1e-4)
    assert not sfc.real and not sfc.degenerate
    assert sfc.pendulumEnergies is None and sfc.criticalPoints == ()

    with pytest.raises(ParameterError, match="eps"):
        standard_form(rot, cos_pair, (0.0,), eps=1.5)


def test_standard_form_energy_scales_with_eps(iso, cos_pair):
    rot = build_rotated(iso, (1, -1))
    a = standard_form(rot, cos_pair, (0.0,), eps=1e-6)
    b = standard_form(rot, cos_pair, (0.0,), eps=2e-6)
    assert b.pendulumEnergies["separatrix"] == pytest.approx(
        2.0 * a.pendulumEnergies["separatrix"], rel=1e-14)


def test_standard_form_to_dict_roundtrips(iso, cos_pair):
    rot = build_rotated(iso, (1, -1))
    sf = standard_form(rot, cos_pair, (0.0,), eps=1e-4)
    d = json.loads(json.dumps(sf.to_dict()))
    assert d["k"] == [1, -1]
    assert d["f1"] == {"-1": [0.5, 0.0], "1": [0.5, 0.0]}
    assert d["remainders"]["nu"] == "not computed"
    assert isinstance(d["pendulumEnergies"]["separatrix"], float)
