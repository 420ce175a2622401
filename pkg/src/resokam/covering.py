"""Covering of the action domain by resonance zones.

Given cutoffs (K, K0) and the divisor threshold alpha, the domain
splits into a non-resonant zone R0 where every low mode has a large
divisor, one simply-resonant zone R1^k per generator k up to K0 where
the k-divisor is small but all transverse modes up to K stay large,
and the residual zone R2 (everything else: double resonances and
points failing both tests).  Zones may overlap; R2 is defined as the
complement of the union, so the three labels always cover.

Measures are estimated by Monte Carlo with a fixed shard size and
per-shard substreams, which makes the estimate a pure function of
(model, params, samples, seed) regardless of thread count.  The
analytic R2 area bound sums one rectangle volume per (k, l) pair and
is reported term by term.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Tuple

import numpy as np

from .errors import DomainError, ParameterError
from .lattice import ResonanceVector, enumerate_generators
from .model import ConvexModel, CoveringParams
from .rng import resolve_threads, substream

# fixed Monte Carlo shard; estimates never depend on the worker count
SHARD = 1 << 17

# ties within this distance of a threshold resolve as the non-strict inequality
_CMP_TOL = 1e-12


def _slack(threshold: float) -> float:
    return _CMP_TOL * max(1.0, abs(threshold))


@lru_cache(maxsize=64)
def _gen_matrix(n: int, K: int):
    gens = tuple(enumerate_generators(n, K))
    if gens:
        mat = np.array([g.entries for g in gens], dtype=float)
    else:
        mat = np.zeros((0, n))
    return gens, mat


@dataclass(frozen=True)
class ZoneLabel:
    inR0: bool
    simpleResonances: Tuple[ResonanceVector, ...]
    inR2: bool

    def to_dict(self) -> dict:
        return {
            "inR0": self.inR0,
            "simpleResonances": [list(k.entries) for k in self.simpleResonances],
            "inR2": self.inR2,
        }


@dataclass(frozen=True)
class MeasureReport:
    fractions: Dict[str, float]
    stderr: Dict[str, float]
    samples: int
    seed: int
    analyticR2Bound: float
    perPairTerms: tuple

    def to_dict(self) -> dict:
        return {
            "fractions": dict(self.fractions),
            "stderr": dict(self.stderr),
            "samples": self.samples,
            "seed": self.seed,
            "analyticR2Bound": self.analyticR2Bound,
            "perPairTerms": [
                [list(k.entries), list(l.entries), term]
                for k, l, term in self.perPairTerms
            ],
        }


def _r0_mask(W: np.ndarray, G0mat: np.ndarray, threshold: float) -> np.ndarray:
    if G0mat.shape[0] == 0:
        return np.ones(W.shape[0], dtype=bool)
    dots = np.abs(W @ G0mat.T)
    return np.all(dots >= threshold - _slack(threshold), axis=1)


def _r1_matrix(W: np.ndarray, gens0, GKmat: np.ndarray, params: CoveringParams) -> np.ndarray:
    """Membership matrix: column per generator k with |k|_1 <= K0.

    A point joins R1^k when its k-divisor is below alpha/C and the
    projection of omega off the k-direction keeps every generator l up
    to K (l not parallel to k) above 3*alpha*K^(n+3)/|k|.  Parallel
    integer vectors scale divisors up, so excluding the single
    primitive representative k from the l-scan is exact.
    """
    m = W.shape[0]
    out = np.zeros((m, len(gens0)), dtype=bool)
    thr_a = params.alpha / params.C
    slack_a = _slack(thr_a)
    for idx, k in enumerate(gens0):
        kv = np.asarray(k.entries, dtype=float)
        dk = W @ kv
        strip = np.abs(dk) <= thr_a + slack_a
        if not np.any(strip):
            continue
        rows = np.flatnonzero(strip)
        Ws = W[rows]
        proj = Ws - np.outer((Ws @ kv) / (k.norm2 ** 2), kv)
        keep = ~np.all(GKmat == kv, axis=1)
        Lmat = GKmat[keep]
        if Lmat.shape[0] == 0:
            out[rows, idx] = True
            continue
        thr_b = 3.0 * params.alpha * float(params.K) ** (params.n + 3) / k.norm2
        mins = np.abs(proj @ Lmat.T).min(axis=1)
        out[rows[mins >= thr_b - _slack(thr_b)], idx] = True
    return out


def classify_batch(model: ConvexModel, params: CoveringParams, Y: np.ndarray):
    """Vectorized zone membership: (inR0, r1 matrix, inR2) per row of Y."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    W = model.omega(Y)
    gens0, G0mat = _gen_matrix(params.n, params.K0)
    _, GKmat = _gen_matrix(params.n, params.K)
    inR0 = _r0_mask(W, G0mat, params.alpha / (2.0 * params.C))
    r1 = _r1_matrix(W, gens0, GKmat, params)
    inR2 = ~(inR0 | r1.any(axis=1))
    return inR0, r1, inR2


def classify(model: ConvexModel, params: CoveringParams, y) -> ZoneLabel:
    """Zone label of a single action point; the point must lie in B."""
    y = np.asarray(y, dtype=float).reshape(1, -1)
    if y.shape[1] != model.n:
        raise DomainError(f"point has dimension {y.shape[1]}, model has {model.n}")
    if not bool(model.domain.contains(y)[0]):
        raise DomainError(f"point {y[0].tolist()} lies outside the action domain")
    inR0, r1, inR2 = classify_batch(model, params, y)
    gens0, _ = _gen_matrix(params.n, params.K0)
    ks = tuple(gens0[j] for j in np.flatnonzero(r1[0]))
    return ZoneLabel(inR0=bool(inR0[0]), simpleResonances=ks, inR2=bool(inR2[0]))


def analytic_r2_bound(model: ConvexModel, params: CoveringParams):
    """Area bound for R2: one rectangle per (k, l) pair, pulled back to B.

    Each pair contributes Lbar^n * 3 * 2^n * M^(n-2) * alpha^2 *
    K^(n+3) / |k|; the bound does not depend on l beyond the count of
    admissible l, but the per-pair breakdown is kept for reporting.
    """
    n = params.n
    gens0, _ = _gen_matrix(n, params.K0)
    gensK, _ = _gen_matrix(n, params.K)
    pref = (model.Lbar ** n) * 3.0 * (2.0 ** n) * (model.M ** (n - 2)) \
        * params.alpha ** 2 * float(params.K) ** (n + 3)
    terms = []
    total = 0.0
    for k in gens0:
        per = pref / k.norm2
        for l in gensK:
            if l == k:
                continue
            terms.append((k, l, per))
            total += per
    return total, tuple(terms)


def _shard_counts(model, params, count, seed, shard_idx) -> np.ndarray:
    rng = substream(seed, "measure", shard_idx)
    Y = model.domain.sample(rng, count)
    inR0, r1, inR2 = classify_batch(model, params, Y)
    has_r1 = r1.any(axis=1)
    return np.array([inR0.sum(), has_r1.sum(), inR2.sum()], dtype=np.int64)


def estimate_measures(model: ConvexModel, params: CoveringParams, samples: int,
                      seed: int, threads: int = None) -> MeasureReport:
    """Monte Carlo zone fractions over B with binomial standard errors.

    The sample budget is cut into fixed-size shards, one substream per
    shard; per-shard integer counts are merged by addition, so the
    report is identical for any thread count.
    """
    if samples < 1:
        raise ParameterError("samples must be >= 1")
    nthreads = resolve_threads(threads)
    plan = []
    left = samples
    idx = 0
    while left > 0:
        take = min(SHARD, left)
        plan.append((idx, take))
        left -= take
        idx += 1

    counts = np.zeros(3, dtype=np.int64)
    if nthreads == 1 or len(plan) == 1:
        for i, take in plan:
            counts += _shard_counts(model, params, take, seed, i)
    else:
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            for c in pool.map(lambda t: _shard_counts(model, params, t[1], seed, t[0]), plan):
                counts += c

    names = ("R0", "R1", "R2")
    fractions = {}
    stderr = {}
    for name, c in zip(names, counts):
        p = float(c) / samples
        fractions[name] = p
        stderr[name] = float(np.sqrt(p * (1.0 - p) / samples))
    total, terms = analytic_r2_bound(model, params)
    return MeasureReport(fractions=fractions, stderr=stderr, samples=samples,
                         seed=seed, analyticR2Bound=total, perPairTerms=terms)


def scan2d(model: ConvexModel, params: CoveringParams, grid: int, axis=(0, 1)):
    """Zone label on a grid of cell centers over the bounding box (n = 2).

    Labels: 0 = R0, 1 = simply resonant (shown with priority where
    zones overlap), 2 = R2, -1 = outside B.  Returns (xs, ys, labels)
    with labels[i, j] at point (xs[i], ys[j]).
    """
    if model.n != 2:
        raise ParameterError("scan2d requires a 2-dimensional model")
    if tuple(axis) != (0, 1):
        raise ParameterError("scan2d on n=2 supports axis 0,1 only")
    if grid < 1:
        raise ParameterError("grid must be >= 1")
    lo, hi = model.domain.bbox()
    xs = lo[0] + (np.arange(grid) + 0.5) * (hi[0] - lo[0]) / grid
    ys = lo[1] + (np.arange(grid) + 0.5) * (hi[1] - lo[1]) / grid
    X, Yg = np.meshgrid(xs, ys, indexing="ij")
    P = np.column_stack([X.ravel(), Yg.ravel()])
    inside = model.domain.contains(P)
    labels = np.full(P.shape[0], -1, dtype=np.int8)
    if np.any(inside):
        inR0, r1, inR2 = classify_batch(model, params, P[inside])
        has_r1 = r1.any(axis=1)
        lab = np.where(has_r1, 1, np.where(inR0, 0, 2)).astype(np.int8)
        labels[np.flatnonzero(inside)] = lab
    return xs, ys, labels.reshape(grid, grid)
