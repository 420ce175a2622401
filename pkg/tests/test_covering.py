"""Zone classification, measure estimates, and the analytic bound.

The analytic bound oracle below re-derives the sum from scratch: the
per-pair term depends only on k, every generator pair (k, l) with l
outside Zk contributes, and for n = 2 the k-sum collapses to
(number of l) * 3 * 2^n * alpha^2 K^(n+3) * sum_k 1/|k|.
"""

import math

import numpy as np
import pytest

from resokam.covering import (SHARD, analytic_r2_bound, classify,
                              classify_batch, estimate_measures, scan2d)
from resokam.errors import DomainError
from resokam.lattice import enumerate_generators
from resokam.model import build_model, covering_params
from conftest import iso_spec


def bound_oracle_n2(model, params):
    """Independent summation of the R2 estimate for n = 2 models."""
    gens0 = [k.entries for k in enumerate_generators(2, int(params.K0))]
    count_l = len(enumerate_generators(2, int(params.K))) - 1  # G \ Zk drops only k
    per_k = [3.0 * 2 ** 2 * params.alpha ** 2 * params.K ** 5 / math.hypot(*k)
             for k in gens0]
    lbar = model.Lbar
    return lbar ** 2 * count_l * sum(per_k)


@pytest.fixture(scope="module")
def iso():
    return build_model(iso_spec())


@pytest.fixture(scope="module")
def iso_wide():
    # wide enough to contain the classification examples below
    return build_model(iso_spec(radius=1.3))


def params_for(model, eps, K=12, K0=2):
    return covering_params(model, eps=eps, K=K, K0=K0)


# -- classification ----------------------------------------------------------


def test_classify_deep_nonresonant_point(iso_wide):
    prm = params_for(iso_wide, eps=1e-24)
    lab = classify(iso_wide, prm, (1.0, 0.618))
    # oracle: min over primitive |k|_1 <= 2 of |y . k| is 0.382 at (1,-1),
    # far above alpha/(2C) = 1.548e-3
    mins = min(abs(1.0 * k.entries[0] + 0.618 * k.entries[1])
               for k in enumerate_generators(2, 2))
    assert mins == pytest.approx(0.382, abs=1e-12)
    assert prm.alpha / (2 * prm.C) < mins
    assert lab.inR0 and not lab.simpleResonances and not lab.inR2


def test_classify_on_resonance_small_alpha(iso):
    # y = (0.5, 0) sits exactly on the k = (0,1) resonance; with small
    # alpha the transverse test passes: min_l |0.5 l_1| = 0.5 over
    # l not parallel to k, against 3 alpha K^5
    prm = params_for(iso, eps=1e-37)
    thr = 3.0 * prm.alpha * prm.K ** 5 / 1.0
    assert thr < 0.5
    lab = classify(iso, prm, (0.5, 0.0))
    assert not lab.inR0
    assert [k.entries for k in lab.simpleResonances] == [(0, 1)]
    assert not lab.inR2


def test_classify_on_resonance_large_alpha(iso):
    # same point, desk-scale alpha: the l-threshold exceeds every
    # |pi-perp omega . l| so no simple resonance certifies, leaving R2
    prm = params_for(iso, eps=1e-24)
    thr = 3.0 * prm.alpha * prm.K ** 5
    assert thr > 2.0
    lab = classify(iso, prm, (0.5, 0.0))
    assert not lab.inR0
    assert lab.simpleResonances == ()
    assert lab.inR2


def test_classify_eps_zero(iso):
    # degenerate thresholds: every point is non-resonant at level 0
    prm = params_for(iso, eps=0.0)
    for y in [(0.5, 0.0), (0.3, 0.3), (0.0, 0.0)]:
        lab = classify(iso, prm, y)
        assert lab.inR0
        assert not lab.inR2


def test_classify_rejects_outside_and_mismatched(iso):
    prm = params_for(iso, eps=1e-24)
    with pytest.raises(DomainError):
        classify(iso, prm, (2.0, 0.0))
    with pytest.raises(DomainError):
        classify(iso, prm, (0.1, 0.1, 0.1))


def test_zone_cover_property(iso):
    # every sampled point carries at least one label and the labels are
    # mutually consistent with the complement definition
    prm = params_for(iso, eps=1e-24)
    pts = iso.domain.sample(np.random.default_rng(12), 2000)
    in_r0, r1mat, in_r2 = classify_batch(iso, prm, pts)
    has_r1 = r1mat.any(axis=1)
    assert np.all(in_r0 | has_r1 | in_r2)
    assert np.array_equal(in_r2, ~in_r0 & ~has_r1)


def test_label_to_dict(iso):
    prm = params_for(iso, eps=1e-24)
    d = classify(iso, prm, (0.5, 0.0)).to_dict()
    assert set(d) == {"inR0", "simpleResonances", "inR2"}
    assert d["inR2"] is True


# -- analytic bound ----------------------------------------------------------


def test_analytic_bound_matches_oracle_frozen(iso):
    prm = params_for(iso, eps=(1e-3 / 12.0 ** 11) ** 2)  # alpha = 1e-3
    assert prm.alpha == pytest.approx(1e-3, rel=1e-12)
    total, pairs = analytic_r2_bound(iso, prm)
    assert total == pytest.approx(bound_oracle_n2(iso, prm), rel=1e-12)
    assert total == pytest.approx(927.7256233544434, rel=1e-12)
    # 4 directions of norm <= 2, 91 transverse generators each
    assert len(pairs) == 4 * 91
    per = {}
    for k, l, term in pairs:
        kt, lt = tuple(k.entries), tuple(l.entries)
        per.setdefault(kt, set()).add(lt)
        assert term == pytest.approx(
            3.0 * 4.0 * prm.alpha ** 2 * prm.K ** 5 / math.hypot(*kt), rel=1e-14)
    assert set(per) == {(0, 1), (1, -1), (1, 0), (1, 1)}
    for kt, ls in per.items():
        assert len(ls) == 91 and kt not in ls


def test_analytic_bound_scales_alpha_squared(iso):
    t1, _ = analytic_r2_bound(iso, params_for(iso, eps=1e-24))
    t2, _ = analytic_r2_bound(iso, params_for(iso, eps=4e-24))
    # alpha ~ sqrt(eps) doubles, the bound ~ alpha^2 quadruples
    assert t2 / t1 == pytest.approx(4.0, rel=1e-12)


# -- Monte Carlo measures ----------------------------------------------------------


def test_measures_frozen_point(iso):
    prm = params_for(iso, eps=1e-24)
    rep = estimate_measures(iso, prm, samples=200_000, seed=7)
    assert rep.samples == 200_000
    assert rep.fractions["R0"] == 0.993435
    assert rep.fractions["R1"] == 0.0
    assert rep.fractions["R2"] == 0.006565
    se = math.sqrt(0.006565 * (1 - 0.006565) / 200_000)
    assert rep.stderr["R2"] == pytest.approx(se, rel=1e-12)
    d = rep.to_dict()
    assert d["analyticR2Bound"] > 0


def test_measures_deterministic_and_thread_invariant(iso):
    prm = params_for(iso, eps=1e-24)
    a = estimate_measures(iso, prm, samples=3 * SHARD // 2, seed=3)
    b = estimate_measures(iso, prm, samples=3 * SHARD // 2, seed=3)
    c = estimate_measures(iso, prm, samples=3 * SHARD // 2, seed=3, threads=4)
    assert a.fractions == b.fractions == c.fractions
    d = estimate_measures(iso, prm, samples=3 * SHARD // 2, seed=4)
    assert d.fractions != a.fractions


def test_measures_eps_zero_all_r0(iso):
    prm = params_for(iso, eps=0.0)
    rep = estimate_measures(iso, prm, samples=20_000, seed=1)
    assert rep.fractions["R0"] == 1.0
    assert rep.fractions["R2"] == 0.0


def test_mc_mass_below_analytic_bound(iso):
    # the bound is far from tight at desk scale; dominance is the point
    prm = params_for(iso, eps=1e-24)
    rep = estimate_measures(iso, prm, samples=50_000, seed=5)
    total, _ = analytic_r2_bound(iso, prm)
    vol = iso.domain.volume
    mc = rep.fractions["R2"] * vol
    assert mc + 3 * rep.stderr["R2"] * vol <= total


# -- 2-d scans ----------------------------------------------------------


def test_scan2d_labels(iso):
    prm = params_for(iso, eps=1e-24)
    xs, ys, labels = scan2d(iso, prm, grid=41)
    assert labels.shape == (41, 41)
    assert xs.shape == (41,) and ys.shape == (41,)
    # corners of the bbox grid are outside the ball
    assert labels[0, 0] == -1
    # center column crosses the (1,0) resonance: some non-R0 labels
    assert np.any(labels == 2)
    # each in-domain label agrees with the pointwise classifier;
    # labels[i, j] sits at (xs[i], ys[j])
    ii, jj = np.nonzero(labels >= 0)
    rng = np.random.default_rng(0)
    for t in rng.choice(len(ii), size=25, replace=False):
        i, j = ii[t], jj[t]
        lab = classify(iso, prm, (xs[i], ys[j]))
        want = 1 if lab.simpleResonances else (0 if lab.inR0 else 2)
        assert labels[i, j] == want


def test_scan2d_requires_2d(iso):
    from resokam.errors import ParameterError

    m3 = build_model({"family": "isotropic_quadratic", "s": [1.0] * 3, "r": 0.25,
                      "domain": {"kind": "ball", "bounds": [0.0, 0.0, 0.0, 1.0]}})
    prm3 = covering_params(m3, eps=1e-24, K=12, K0=2)
    with pytest.raises(ParameterError):
        scan2d(m3, prm3, grid=8)


def test_enumeration_size_warning(monkeypatch):
    import resokam.lattice as lattice

    monkeypatch.setattr(lattice, "ENUMERATION_WARN_SIZE", 10)
    with pytest.warns(RuntimeWarning, match="enumeration"):
        lattice.enumerate_generators(2, 8)
