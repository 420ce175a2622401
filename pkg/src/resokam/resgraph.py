"""Simple-resonance graphs in the rotated frame.

After the unimodular change y = A^T ytil the resonance k becomes the
first coordinate direction: the slow derivative dSlow = omega(A^T ytil)
. k is strictly increasing in ytil_1 with slope at least gamma |k|^2,
so each level set {dSlow = varpi} is the graph of a function eta(varpi,
yhat) over the remaining actions.  This module builds rotated models,
tiles the projected base with half-open cubes, solves for the graphs by
bracketed monotone root-finding, certifies the contraction estimates
behind the graph construction, and samples the resonant slab for the
transverse non-resonance check.

Roots are bracketed by the closed-form outer interval of the ytil_1
section of the (3/2) rTilde neighborhood of the domain image: the graph
is known to stay in that set, and monotonicity turns any interval
containing the section into a valid bracket, with no need for a
previously located zero.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from .errors import (BracketError, DomainError, InvariantViolation,
                     ModelAssumptionError, ParameterError)
from .geometry import TransformedDomain
from .lattice import ResonanceVector, UnimodularFrame, enumerate_generators, unimodular_completion
from .model import ConvexModel, CoveringParams
from .rng import resolve_threads, substream

_BISECT_ITERS = 44
_SECANT_ITERS = 24
_SUBGRID = 3        # detection samples per cube dimension
_BLOCK = 512        # fixed column block; work partition never affects values
TOL_ABS = 1e-12     # frequency units
TOL_REL = 1e-13     # times gamma |k|^2 times bracket width


class RotatedModel:
    """Model composed with the frame substitution y = A^T ytil."""

    def __init__(self, model: ConvexModel, frame: UnimodularFrame):
        self.model = model
        self.frame = frame
        self._A = np.array(frame.A, dtype=float)
        self._kv = np.array(frame.k.entries, dtype=float)
        self.domainTilde = TransformedDomain(model.domain, frame.A, frame.Ainv)

    @property
    def k(self) -> ResonanceVector:
        return self.frame.k

    @property
    def n(self) -> int:
        return self.model.n

    @property
    def gk2(self) -> float:
        # monotonicity slope floor for dSlow along ytil_1
        return self.frame.gamma * self.frame.k.norm2 ** 2

    def to_base(self, Yt: np.ndarray) -> np.ndarray:
        return np.atleast_2d(np.asarray(Yt, dtype=float)) @ self._A

    def h0(self, Yt: np.ndarray) -> np.ndarray:
        return self.model.h(self.to_base(Yt))

    def dSlow(self, Yt: np.ndarray) -> np.ndarray:
        return self.model.omega(self.to_base(Yt)) @ self._kv

    def d2Slow(self, Yt: np.ndarray) -> np.ndarray:
        return self.model.hess_quadform(self.to_base(Yt), self._kv)

    def omega_rotated(self, Yt: np.ndarray) -> np.ndarray:
        """Frequency of the rotated model, A omega(A^T ytil), as rows."""
        return self.model.omega(self.to_base(Yt)) @ self._A.T


def build_rotated(model: ConvexModel, k, r_tilde: float = None) -> RotatedModel:
    frame = unimodular_completion(k, gamma=model.gamma, L=model.L,
                                  r=model.r, r_tilde=r_tilde)
    return RotatedModel(model, frame)


def validate_rotated(rot: RotatedModel, samples: int = 512, seed: int = 0) -> dict:
    """Sampled checks of the slow-derivative structure on the rTilde set.

    Verifies the Lipschitz bound L|k| |dy| on consecutive sample pairs
    (dy measured in base coordinates, where the frequency map carries
    the constant L; the rotated metric would pick up a factor |A| on
    top), the monotonicity increment gamma |k|^2 dy1 along the first
    axis, and the curvature floor gamma |k|^2 pointwise.  Violations
    carry witnesses; an empty list means all checks passed.
    """
    rng = substream(seed, "validate", 1)
    pts = rot.domainTilde.sample(rng, samples, delta=rot.frame.r_tilde_k)
    Lk = rot.frame.L * rot.frame.k.norm2
    gk2 = rot.gk2
    violations = []

    d = rot.dSlow(pts)
    pairs_a, pairs_b = pts[:-1:2], pts[1::2]
    lhs = np.abs(d[:-1:2] - d[1::2])
    rhs = Lk * np.linalg.norm(rot.to_base(pairs_a) - rot.to_base(pairs_b), axis=1)
    bad = lhs > rhs * (1 + 1e-9) + 1e-12
    if np.any(bad):
        i = int(np.argmax(bad))
        violations.append({"check": "dSlow Lipschitz L|k|", "lhs": float(lhs[i]),
                           "rhs": float(rhs[i]), "witness": pairs_a[i].tolist()})

    h1 = 1e-3 * rot.frame.r_tilde_k
    shifted = pts.copy()
    shifted[:, 0] += h1
    inc = rot.dSlow(shifted) - d
    floor = gk2 * h1
    bad = inc < floor * (1 - 1e-9) - 1e-12
    if np.any(bad):
        i = int(np.argmax(bad))
        violations.append({"check": "slow monotonicity gamma|k|^2", "lhs": float(inc[i]),
                           "rhs": float(floor), "witness": pts[i].tolist()})

    d2 = rot.d2Slow(pts)
    bad = d2 < gk2 * (1 - 1e-9)
    if np.any(bad):
        i = int(np.argmax(bad))
        violations.append({"check": "d2Slow >= gamma|k|^2", "lhs": float(d2[i]),
                           "rhs": float(gk2), "witness": pts[i].tolist()})

    return {
        "k": list(rot.k.entries),
        "samples": int(samples),
        "seed": int(seed),
        "violations": violations,
        "checks": {
            "lipschitz_max_ratio": float(np.max(lhs / np.maximum(rhs, 1e-300))) if len(lhs) else 0.0,
            "d2slow_min": float(np.min(d2)),
            "d2slow_floor": float(gk2),
        },
    }


# -- cube decomposition ----------------------------------------------------------


@dataclass(frozen=True)
class CubeGrid:
    """Half-open cubes frak_r * (j + [0,1)^(n-1)) tiling the projected base."""

    frak_r: float
    J: Tuple[Tuple[int, ...], ...]
    n: int  # ambient dimension; cubes live in n-1 coordinates

    def subgrid(self, per: int):
        """Uniform per^(n-1) interior points of every cube, with the cube
        index of each output row.  Row order is J order crossed with the
        row-major offset order, so grids are reproducible."""
        if per < 1:
            raise ParameterError("perCube must be >= 1")
        d = self.n - 1
        offs = np.array(list(itertools.product(range(per), repeat=d)), dtype=float)
        offs = (offs + 0.5) / per
        if not self.J:
            return np.zeros((0, d)), np.zeros(0, dtype=int)
        J = np.array(self.J, dtype=float)
        pts = (J[:, None, :] + offs[None, :, :]).reshape(-1, d) * self.frak_r
        owner = np.repeat(np.arange(len(self.J)), offs.shape[0])
        return pts, owner

    def centers(self) -> np.ndarray:
        J = np.array(self.J, dtype=float) if self.J else np.zeros((0, self.n - 1))
        return (J + 0.5) * self.frak_r


def cube_decomposition(rot: RotatedModel) -> CubeGrid:
    """Cubes whose slab carries a zero of dSlow.

    Every candidate cube inside the projected (5/4) rTilde neighborhood
    is probed on a 3^(n-1) interior sub-grid: a cube is kept when some
    probe line has a sign change of dSlow across the inner closed-form
    interval of its ytil_1 section.  Thin intersections between probe
    points, or zeros in the sliver outside the inner interval, can be
    missed; that is a sampling limitation of the detector, not of the
    graphs.
    """
    frame = rot.frame
    delta = 1.25 * frame.r_tilde_k
    lo, hi = rot.domainTilde.bbox(delta)
    fr = frame.frak_r
    d = rot.n - 1
    ranges = []
    total = 1
    for i in range(d):
        j0 = math.floor(lo[1 + i] / fr) - 1
        j1 = math.ceil(hi[1 + i] / fr) + 1
        ranges.append(range(j0, j1))
        total *= max(1, j1 - j0)
    if total > 2_000_000:
        raise ParameterError(f"cube candidate count {total} is unreasonably large; "
                             "check r, k, and the domain size")

    cand = list(itertools.product(*ranges))
    if not cand:
        return CubeGrid(frak_r=fr, J=(), n=rot.n)
    grid = CubeGrid(frak_r=fr, J=tuple(cand), n=rot.n)
    pts, owner = grid.subgrid(_SUBGRID)
    a, b, ok = rot.domainTilde.section_inner(pts, delta)
    hit = np.zeros(len(cand), dtype=bool)
    if np.any(ok):
        rows = np.flatnonzero(ok)
        Pa = np.column_stack([a[rows], pts[rows]])
        Pb = np.column_stack([b[rows], pts[rows]])
        ga = rot.dSlow(Pa)
        gb = rot.dSlow(Pb)
        sign_change = (ga <= 0.0) & (gb >= 0.0)
        np.logical_or.at(hit, owner[rows], sign_change)
    J = tuple(sorted(c for c, h in zip(cand, hit) if h))
    return CubeGrid(frak_r=fr, J=J, n=rot.n)


# -- monotone root solving ----------------------------------------------------------


def _sections(rot: RotatedModel, Yhat: np.ndarray, delta: float):
    a, b, ok = rot.domainTilde.section_outer(Yhat, delta)
    if not np.all(ok):
        i = int(np.argmin(ok))
        raise BracketError(
            f"empty ytil_1 section of the {delta:.6g}-neighborhood at yhat = "
            f"{np.atleast_2d(Yhat)[i].tolist()}")
    return a, b


def _solve_monotone(g, a, b, fa, fb):
    """Vectorized root of an increasing g with g(a) <= 0 <= g(b).

    Bisection shrinks the bracket, then bracket-clipped secant polishes;
    the returned point is the best evaluated one, so the residual is an
    actually observed value, not an extrapolation.
    """
    xb = np.where(np.abs(fa) <= np.abs(fb), a, b)
    fbest = np.where(np.abs(fa) <= np.abs(fb), fa, fb)
    for _ in range(_BISECT_ITERS):
        m = 0.5 * (a + b)
        fm = g(m)
        better = np.abs(fm) < np.abs(fbest)
        xb = np.where(better, m, xb)
        fbest = np.where(better, fm, fbest)
        neg = fm <= 0.0
        a = np.where(neg, m, a)
        fa = np.where(neg, fm, fa)
        b = np.where(neg, b, m)
        fb = np.where(neg, fb, fm)
    x0, f0, x1, f1 = a, fa, b, fb
    for _ in range(_SECANT_ITERS):
        den = f1 - f0
        safe = den != 0.0
        x2 = x1 - np.where(safe, f1 * (x1 - x0) / np.where(safe, den, 1.0), 0.0)
        x2 = np.clip(x2, a, b)
        f2 = g(x2)
        better = np.abs(f2) < np.abs(fbest)
        xb = np.where(better, x2, xb)
        fbest = np.where(better, f2, fbest)
        neg = f2 <= 0.0
        a = np.where(neg, x2, a)
        b = np.where(neg, b, x2)
        x0, f0 = x1, f1
        x1, f1 = x2, f2
    return xb, np.abs(fbest)


def _solve_columns(rot: RotatedModel, varpis: np.ndarray, Yhat: np.ndarray,
                   a: np.ndarray, b: np.ndarray):
    """Solve dSlow(., yhat) = varpi for every (varpi, column) pair."""
    nv, nb = varpis.size, Yhat.shape[0]
    gk2 = rot.gk2
    tol_f = 1e-9 * max(1.0, gk2)

    A2 = np.repeat(a[None, :], nv, axis=0).ravel()
    B2 = np.repeat(b[None, :], nv, axis=0).ravel()
    V = np.repeat(varpis, nb)
    YH = np.tile(Yhat, (nv, 1))

    def g(t):
        return rot.dSlow(np.column_stack([t, YH])) - V

    fa = g(A2)
    fb = g(B2)
    if np.any(fa > fb + tol_f):
        i = int(np.argmax(fa - fb))
        raise ModelAssumptionError(
            f"dSlow decreasing across the bracket at varpi = {V[i]:.6g}, "
            f"yhat = {YH[i].tolist()}")
    bad = (fa > tol_f) | (fb < -tol_f)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise BracketError(
            f"no sign change of dSlow - varpi on the section at varpi = "
            f"{V[i]:.6g}, yhat = {YH[i].tolist()} "
            f"(endpoints {fa[i]:.3e}, {fb[i]:.3e})")
    eta, res = _solve_monotone(g, A2, B2, fa, fb)
    return eta.reshape(nv, nb), res.reshape(nv, nb)


def solver_tolerance(rot: RotatedModel, width) -> np.ndarray:
    return TOL_ABS + TOL_REL * rot.gk2 * np.asarray(width, dtype=float)


def solve_eta(rot: RotatedModel, varpi: float, yhat) -> float:
    """The unique ytil_1 with dSlow(ytil_1, yhat) = varpi.

    The bracket is the full ytil_1 section of the (3/2) rTilde
    neighborhood at yhat; monotonicity makes the root unique and the
    endpoint signs a precondition.
    """
    yhat = np.atleast_2d(np.asarray(yhat, dtype=float))
    a, b = _sections(rot, yhat, 1.5 * rot.frame.r_tilde_k)
    eta, _ = _solve_columns(rot, np.array([float(varpi)]), yhat, a, b)
    return float(eta[0, 0])


# -- graphs ----------------------------------------------------------


@dataclass(frozen=True)
class ResonanceGraph:
    frame: UnimodularFrame
    varpiGrid: np.ndarray        # (nv,)
    baseGrid: np.ndarray         # (nb, n-1)
    eta: np.ndarray              # (nv, nb)
    residuals: np.ndarray        # (nv, nb)
    J: Tuple[Tuple[int, ...], ...]
    cubes: CubeGrid
    solverTol: np.ndarray        # (nb,) declared residual tolerance per column
    cubeOf: np.ndarray           # (nb,) index into J

    def summary(self) -> dict:
        nv, nb = self.eta.shape
        out = {
            "k": list(self.frame.k.entries),
            "nVarpi": int(nv),
            "nBase": int(nb),
            "cubes": [list(j) for j in self.J],
            "frak_r": self.cubes.frak_r,
            "varpi0": self.frame.varpi0,
        }
        if nb and nv:
            dv = np.diff(self.varpiGrid)
            de = np.diff(self.eta, axis=0)
            out["maxResidual"] = float(self.residuals.max())
            out["solverTolMax"] = float(self.solverTol.max())
            out["etaMin"] = float(self.eta.min())
            out["etaMax"] = float(self.eta.max())
            if nv > 1:
                rate = de / dv[:, None]
                out["maxRate"] = float(rate.max())
                out["rateBound"] = 1.0 / (self.frame.gamma * self.frame.k.norm2 ** 2)
        else:
            out["maxResidual"] = None
            out["degenerate"] = True
        return out


def build_graph(rot: RotatedModel, nVarpi: int, perCube: int,
                threads: int = None, cubes: CubeGrid = None) -> ResonanceGraph:
    """Solve the graph on a uniform varpi grid over per-cube sub-grids.

    Work is cut into fixed-size column blocks; the block computations
    are elementwise, so any thread count produces the same bits.  All
    stored values are re-checked against the graph invariants before
    returning; the first violation aborts with a witness.
    """
    if nVarpi < 2:
        raise ParameterError("nVarpi must be >= 2")
    if perCube < 1:
        raise ParameterError("perCube must be >= 1")
    frame = rot.frame
    if cubes is None:
        cubes = cube_decomposition(rot)
    varpis = np.linspace(-frame.varpi0, frame.varpi0, nVarpi)
    Yhat, owner = cubes.subgrid(perCube)
    nb = Yhat.shape[0]
    eta = np.zeros((nVarpi, nb))
    res = np.zeros((nVarpi, nb))
    widths = np.zeros(nb)

    def run_block(lo_idx):
        hi_idx = min(nb, lo_idx + _BLOCK)
        cols = Yhat[lo_idx:hi_idx]
        a, b = _sections(rot, cols, 1.5 * frame.r_tilde_k)
        e, r = _solve_columns(rot, varpis, cols, a, b)
        return lo_idx, hi_idx, e, r, b - a

    blocks = list(range(0, nb, _BLOCK))
    nthreads = resolve_threads(threads)
    if nthreads == 1 or len(blocks) <= 1:
        results = map(run_block, blocks)
        for lo_idx, hi_idx, e, r, w in results:
            eta[:, lo_idx:hi_idx] = e
            res[:, lo_idx:hi_idx] = r
            widths[lo_idx:hi_idx] = w
    else:
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            for lo_idx, hi_idx, e, r, w in pool.map(run_block, blocks):
                eta[:, lo_idx:hi_idx] = e
                res[:, lo_idx:hi_idx] = r
                widths[lo_idx:hi_idx] = w

    tol = solver_tolerance(rot, widths)
    graph = ResonanceGraph(frame=frame, varpiGrid=varpis, baseGrid=Yhat,
                           eta=eta, residuals=res, J=cubes.J, cubes=cubes,
                           solverTol=tol, cubeOf=owner)
    _check_graph(rot, graph)
    return graph


def _check_graph(rot: RotatedModel, graph: ResonanceGraph) -> None:
    nv, nb = graph.eta.shape
    if nb == 0:
        return
    over = graph.residuals > graph.solverTol[None, :]
    if np.any(over):
        vi, bi = np.unravel_index(int(np.argmax(over)), over.shape)
        raise InvariantViolation(
            "residual exceeds the solver tolerance",
            witness={"varpi": float(graph.varpiGrid[vi]),
                     "yhat": graph.baseGrid[bi].tolist(),
                     "residual": float(graph.residuals[vi, bi]),
                     "tolerance": float(graph.solverTol[bi])})
    if nv > 1:
        dv = np.diff(graph.varpiGrid)[:, None]
        de = np.diff(graph.eta, axis=0)
        if np.any(de < -1e-13):
            vi, bi = np.unravel_index(int(np.argmin(de)), de.shape)
            raise InvariantViolation(
                "eta is not monotone in varpi",
                witness={"varpi": float(graph.varpiGrid[vi]),
                         "yhat": graph.baseGrid[bi].tolist(),
                         "increment": float(de[vi, bi])})
        cap = dv / rot.gk2 * (1.0 + 1e-6)
        if np.any(de > cap + 1e-15):
            vi, bi = np.unravel_index(int(np.argmax(de - cap)), de.shape)
            raise InvariantViolation(
                "eta increment exceeds the rate 1/(gamma |k|^2)",
                witness={"varpi": float(graph.varpiGrid[vi]),
                         "yhat": graph.baseGrid[bi].tolist(),
                         "increment": float(de[vi, bi]),
                         "cap": float(cap[vi, 0])})
    pts = np.column_stack([graph.eta.ravel(),
                           np.tile(graph.baseGrid, (nv, 1))])
    d = rot.domainTilde.dist(pts)
    lim = 1.5 * rot.frame.r_tilde_k * (1.0 + 1e-9) + 1e-15
    if np.any(d > lim):
        i = int(np.argmax(d))
        vi, bi = divmod(i, nb)
        raise InvariantViolation(
            "graph point escapes the (3/2) rTilde neighborhood",
            witness={"varpi": float(graph.varpiGrid[vi]),
                     "yhat": graph.baseGrid[bi].tolist(),
                     "eta": float(graph.eta[vi, bi]),
                     "dist": float(d[i]), "limit": float(lim)})


# -- contraction certificate ----------------------------------------------------------


def _ball_grid(center: np.ndarray, radius: float) -> np.ndarray:
    """Deterministic grid filling of a small ball (dimension n-1)."""
    d = center.size
    per = 33 if d == 1 else (9 if d == 2 else 5)
    axis = np.linspace(-radius, radius, per)
    pts = np.array(list(itertools.product(axis, repeat=d)))
    pts = pts[np.linalg.norm(pts, axis=1) <= radius * (1 + 1e-12)]
    return center[None, :] + pts


def contraction_certificate(rot: RotatedModel, y0, max_iters: int = 50) -> dict:
    """Certify the estimates that make the graph map a contraction at y0.

    y0 must be a zero of dSlow (a point of the varpi = 0 graph).  The
    certificate checks, on dense deterministic grids, (a) that the slow
    derivative stays below half its guaranteed slope growth over the
    r_hat ball of adjacent actions, and (b) that the curvature varies by
    at most half the slope floor over the product neighborhood; it then
    runs the Newton-like iteration with frozen curvature and reports the
    observed contraction factor.
    """
    frame = rot.frame
    y0 = np.asarray(y0, dtype=float)
    if y0.size != rot.n:
        raise DomainError("y0 must be a full rotated-space point")
    y10, yhat0 = float(y0[0]), y0[1:]
    gk2 = rot.gk2
    d0 = float(rot.dSlow(y0[None, :])[0])
    if abs(d0) > 1e-9 * max(1.0, gk2):
        raise DomainError(f"y0 is not on the varpi = 0 graph: dSlow(y0) = {d0:.3e}")

    r_hat = frame.r_hat
    r1 = r_hat / frame.t_k
    bound_a = 0.5 * gk2 * r1
    bound_b = 0.5 * gk2

    YH = _ball_grid(yhat0, r_hat)
    pts_a = np.column_stack([np.full(YH.shape[0], y10), YH])
    vals_a = np.abs(rot.dSlow(pts_a))
    ia = int(np.argmax(vals_a))
    sup_a = float(vals_a[ia])

    t_axis = np.linspace(y10 - r1, y10 + r1, 17)
    prod = np.column_stack([
        np.repeat(t_axis, YH.shape[0]),
        np.tile(YH, (t_axis.size, 1)),
    ])
    d2_ref = float(rot.d2Slow(y0[None, :])[0])
    vals_b = np.abs(rot.d2Slow(prod) - d2_ref)
    ib = int(np.argmax(vals_b))
    sup_b = float(vals_b[ib])

    # frozen-curvature iteration toward the varpi = 0 graph over the ball
    eta = np.full(YH.shape[0], y10)
    deltas = []
    for _ in range(max_iters):
        step = rot.dSlow(np.column_stack([eta, YH])) / d2_ref
        eta = eta - step
        deltas.append(float(np.max(np.abs(step))))
        if deltas[-1] <= 1e-15 * max(1.0, abs(y10)):
            break
    factor = 0.0
    if len(deltas) > 1 and deltas[0] > 0:
        ratios = [deltas[i + 1] / deltas[i] for i in range(len(deltas) - 1)
                  if deltas[i] > 0]
        factor = max(ratios) if ratios else 0.0

    pass_a = sup_a <= bound_a
    pass_b = sup_b <= bound_b
    return {
        "k": list(frame.k.entries),
        "y0": y0.tolist(),
        "r_hat": r_hat,
        "r1": r1,
        "estimateA": {"sup": sup_a, "bound": bound_a, "margin": bound_a - sup_a,
                      "pass": bool(pass_a), "witness": pts_a[ia].tolist()},
        "estimateB": {"sup": sup_b, "bound": bound_b, "margin": bound_b - sup_b,
                      "pass": bool(pass_b), "witness": prod[ib].tolist()},
        "iteration": {"steps": len(deltas), "deltas": deltas,
                      "empiricalFactor": factor,
                      "converged": bool(deltas and deltas[-1] <= 1e-15 * max(1.0, abs(y10)))},
        "passed": bool(pass_a and pass_b and factor <= 0.5),
    }


# -- transverse non-resonance on the slab ----------------------------------------------------------


@dataclass(frozen=True)
class NonresReport:
    k: ResonanceVector
    samples: int
    seed: int
    threshold: float
    passFraction: float
    worstMargin: float
    worstIndex: int
    worstPoint: tuple
    worstEll: tuple
    spotChecks: tuple     # first few sampled points with margin and argmin ell
    violations: tuple     # failing points, worst first, capped
    margins: np.ndarray   # full per-sample margins (not serialized)
    points: np.ndarray    # full sampled rotated points (not serialized)
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "k": list(self.k.entries),
            "samples": self.samples,
            "seed": self.seed,
            "threshold": self.threshold,
            "passFraction": self.passFraction,
            "worstMargin": self.worstMargin,
            "worstIndex": self.worstIndex,
            "worstPoint": list(self.worstPoint),
            "worstEll": list(self.worstEll),
            "spotChecks": [dict(s) for s in self.spotChecks],
            "violations": [dict(v) for v in self.violations],
            "degenerate": self.degenerate,
        }


def _accumulated_dots(W: np.ndarray, Lmat: np.ndarray) -> np.ndarray:
    # coordinate-by-coordinate accumulation: entry (p, l) is the exact
    # left-to-right sum W[p,0]*L[l,0] + W[p,1]*L[l,1] + ..., reproducible
    # by scalar arithmetic in the same order
    acc = np.outer(W[:, 0], Lmat[:, 0])
    for i in range(1, W.shape[1]):
        acc += np.outer(W[:, i], Lmat[:, i])
    return acc


def check_nonresonance(rot: RotatedModel, params: CoveringParams, samples: int,
                       seed: int, cubes: CubeGrid = None, spot: int = 10) -> NonresReport:
    """Sample the resonant slab and test the rotated frequency off e1.

    Points are drawn with yhat uniform over the detected cubes and
    ytil_1 uniform across the slab between the graphs at -alpha/C and
    +alpha/C.  Each point's margin is min over generators l up to K
    (excluding the slow direction) of |A omega(A^T ytil) . l| minus the
    threshold 2 alpha K^(n+3) / |k|.  Negative margins are reported
    with their minimizing l.
    """
    if samples < 1:
        raise ParameterError("samples must be >= 1")
    frame = rot.frame
    slab = params.alpha / params.C
    if slab > frame.varpi0 * (1 + 1e-12):
        raise ParameterError(
            f"alpha/C = {slab:.6g} exceeds varpi0 = {frame.varpi0:.6g}; "
            "the slab leaves the certified graph neighborhood")
    if cubes is None:
        cubes = cube_decomposition(rot)
    thr = 2.0 * params.alpha * float(params.K) ** (params.n + 3) / frame.k.norm2
    if not cubes.J:
        return NonresReport(k=frame.k, samples=0, seed=seed, threshold=thr,
                            passFraction=float("nan"), worstMargin=float("nan"),
                            worstIndex=-1, worstPoint=(), worstEll=(),
                            spotChecks=(), violations=(), margins=np.zeros(0),
                            points=np.zeros((0, rot.n)), degenerate=True)

    rng = substream(seed, "nonres")
    Jarr = np.array(cubes.J, dtype=float)
    j_idx = rng.integers(0, len(cubes.J), size=samples)
    offs = rng.random((samples, rot.n - 1))
    u = rng.random(samples)
    Yhat = (Jarr[j_idx] + offs) * cubes.frak_r

    a, b = _sections(rot, Yhat, 1.5 * frame.r_tilde_k)
    pair, _ = _solve_columns(rot, np.array([-slab, slab]), Yhat, a, b)
    y1 = pair[0] + u * (pair[1] - pair[0])
    pts = np.column_stack([y1, Yhat])

    gens = enumerate_generators(rot.n, params.K)
    e1 = (1,) + (0,) * (rot.n - 1)
    Lmat = np.array([g.entries for g in gens if g.entries != e1], dtype=float)
    W = rot.omega_rotated(pts)
    dots = np.abs(_accumulated_dots(W, Lmat))
    arg = np.argmin(dots, axis=1)
    mins = dots[np.arange(samples), arg]
    margins = mins - thr
    ok = margins >= -1e-12 * max(1.0, thr)

    order = np.argsort(margins, kind="stable")
    worst = int(order[0])
    ells = [tuple(int(v) for v in Lmat[arg[i]]) for i in range(samples)]

    def entry(i):
        return {"index": int(i), "point": pts[i].tolist(),
                "margin": float(margins[i]), "minEll": list(ells[i])}

    violations = tuple(entry(i) for i in order[:20] if not ok[i])
    spot_checks = tuple(entry(i) for i in range(min(spot, samples)))
    return NonresReport(
        k=frame.k, samples=samples, seed=seed, threshold=thr,
        passFraction=float(np.count_nonzero(ok)) / samples,
        worstMargin=float(margins[worst]), worstIndex=worst,
        worstPoint=tuple(pts[worst]), worstEll=ells[worst],
        spotChecks=spot_checks, violations=violations,
        margins=margins, points=pts)
