"""First-order secular data along a simple resonance.

Averaging the perturbation over the fast angles of the rotated frame
keeps exactly the Fourier modes parallel to k: the surviving series
f1(theta) = sum_j fhat_{jk} e^{i j theta} is one-dimensional.  Together
with the curvature m_k of the slow action at the graph point it gives
the leading one-degree-of-freedom model m_k p^2 + eps f1(q), whose
normalized potential G0 = f1/m_k and separatrix level are the data
needed downstream.  Higher-order remainders are reported as not
computed, never as zeros.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from .errors import ModelAssumptionError, ParameterError
from .lattice import UnimodularFrame
from .resgraph import RotatedModel, solve_eta

_CRIT_GRID = 4096
_CRIT_BISECT = 80


@dataclass(frozen=True)
class TrigPotential:
    """Finite Fourier series on the n-torus.

    modes maps integer n-tuples to complex coefficients; real is True
    when the stored coefficients are conjugate-symmetric, so the series
    is a real-valued function.
    """

    n: int
    modes: dict
    real: bool

    @classmethod
    def from_modes(cls, modes: Dict[tuple, complex]) -> "TrigPotential":
        if not modes:
            raise ParameterError("potential needs at least one mode")
        clean = {}
        n = None
        for m, c in modes.items():
            m = tuple(int(v) for v in m)
            if n is None:
                n = len(m)
            elif len(m) != n:
                raise ParameterError("all modes must have the same dimension")
            if m in clean:
                raise ParameterError(f"duplicate mode {m}")
            clean[m] = complex(c)
        real = all(
            abs(clean[m] - clean.get(tuple(-v for v in m), 0.0).conjugate()) <= 1e-12
            for m in clean
        )
        return cls(n=n, modes=clean, real=real)

    @classmethod
    def from_file(cls, path) -> "TrigPotential":
        """Parse lines `m1,...,mn, re, im`; # starts a comment."""
        modes = {}
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                parts = [p.strip() for p in line.split(",")]
                if len(parts) < 4:
                    raise ParameterError(
                        f"{path}:{lineno}: expected m1,...,mn,re,im")
                try:
                    m = tuple(int(p) for p in parts[:-2])
                    c = complex(float(parts[-2]), float(parts[-1]))
                except ValueError as exc:
                    raise ParameterError(f"{path}:{lineno}: {exc}") from None
                if m in modes:
                    raise ParameterError(f"{path}:{lineno}: duplicate mode {m}")
                modes[m] = c
        return cls.from_modes(modes)

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.zeros(X.shape[0], dtype=complex)
        for m, c in self.modes.items():
            out += c * np.exp(1j * (X @ np.asarray(m, dtype=float)))
        return out.real if self.real else out

    def max_degree(self) -> int:
        return max(max(abs(v) for v in m) if m else 0 for m in self.modes)


def fast_angle_average(f: TrigPotential, frame: UnimodularFrame) -> Dict[int, complex]:
    """Modes of f parallel to k, reindexed by the integer multiple j.

    Under x = A^{-1} xtil a mode m acquires frequency A^{-T} m, which
    is fast-angle free exactly when m = j k; the average is then the
    one-dimensional series {j: fhat_{jk}} including j = 0.
    """
    k = frame.k.entries
    if f.n != len(k):
        raise ParameterError(f"potential dimension {f.n} != frame dimension {len(k)}")
    pivot = next(i for i, v in enumerate(k) if v != 0)
    out: Dict[int, complex] = {}
    for m, c in f.modes.items():
        if m[pivot] % k[pivot] != 0:
            continue
        j = m[pivot] // k[pivot]
        if all(mv == j * kv for mv, kv in zip(m, k)):
            out[j] = c
    return out


def trig_eval(coeffs: Dict[int, complex], theta: np.ndarray, real: bool = True) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    out = np.zeros(theta.shape, dtype=complex)
    for j, c in coeffs.items():
        out = out + c * np.exp(1j * j * theta)
    return out.real if real else out


def _trig_derivative(coeffs: Dict[int, complex], order: int = 1) -> Dict[int, complex]:
    return {j: c * (1j * j) ** order for j, c in coeffs.items() if j != 0}


def curvature_at(rot: RotatedModel, yhat0) -> float:
    """Half the slow curvature at the varpi = 0 graph point over yhat0."""
    yhat0 = np.asarray(yhat0, dtype=float).reshape(-1)
    eta0 = solve_eta(rot, 0.0, yhat0)
    pt = np.concatenate([[eta0], yhat0])[None, :]
    m_k = 0.5 * float(rot.d2Slow(pt)[0])
    floor = 0.5 * rot.gk2
    if m_k < floor * (1 - 1e-9):
        raise ModelAssumptionError(
            f"curvature {m_k:.6g} below the convexity floor {floor:.6g}")
    return m_k


def _critical_points(G0: Dict[int, complex]):
    """Zeros of G0' on [0, 2pi) by dense grid plus bisection refinement."""
    d1 = _trig_derivative(G0, 1)
    if not d1:
        return ()
    d2 = _trig_derivative(G0, 2)
    theta = np.linspace(0.0, 2.0 * math.pi, _CRIT_GRID, endpoint=False)
    g = trig_eval(d1, np.concatenate([theta, theta[:1] + 2.0 * math.pi]), real=True)
    crits = []
    for i in range(_CRIT_GRID):
        ga, gb = g[i], g[i + 1]
        if ga == 0.0:
            crits.append(theta[i])
            continue
        if ga * gb < 0.0:
            a, b = theta[i], theta[i] + 2.0 * math.pi / _CRIT_GRID
            fa = ga
            for _ in range(_CRIT_BISECT):
                mid = 0.5 * (a + b)
                fm = float(trig_eval(d1, np.array([mid]), real=True)[0])
                if fa * fm <= 0.0:
                    b = mid
                else:
                    a, fa = mid, fm
            crits.append(0.5 * (a + b))
    out = []
    scale = max(1.0, max(abs(c) for c in G0.values()))
    for t in crits:
        val = float(trig_eval(G0, np.array([t]), real=True)[0])
        curv = float(trig_eval(d2, np.array([t]), real=True)[0])
        if abs(curv) <= 1e-9 * scale:
            kind = "degenerate"
        else:
            kind = "min" if curv > 0 else "max"
        out.append({"theta": float(t), "value": val, "type": kind})
    return tuple(out)


@dataclass(frozen=True)
class StandardFormData:
    k: tuple
    f1: Dict[int, complex]
    m_k: float
    G0: Dict[int, complex]
    criticalPoints: tuple
    pendulumEnergies: dict      # None when the resonance is degenerate
    degenerate: bool
    real: bool
    eps: float
    yhat0: tuple
    remainders: dict = field(default_factory=lambda: {
        "nu": "not computed",
        "G": "not computed",
        "O(|yhat - yhat0|)": "not computed",
        "O(|ytil1|)": "not computed",
    })

    def to_dict(self) -> dict:
        def cmap(d):
            return {str(j): [c.real, c.imag] for j, c in sorted(d.items())}
        return {
            "k": list(self.k),
            "f1": cmap(self.f1),
            "m_k": self.m_k,
            "G0": cmap(self.G0),
            "criticalPoints": [dict(c) for c in self.criticalPoints],
            "pendulumEnergies": dict(self.pendulumEnergies) if self.pendulumEnergies else None,
            "degenerate": self.degenerate,
            "real": self.real,
            "eps": self.eps,
            "yhat0": list(self.yhat0),
            "remainders": dict(self.remainders),
        }


def standard_form(rot: RotatedModel, f: TrigPotential, yhat0, eps: float) -> StandardFormData:
    """Leading pendulum data m_k p^2 + eps f1(q) at the resonance k.

    Degenerate resonances (no non-constant parallel mode) produce a
    report without pendulum structure rather than an error.  Energy
    levels scale linearly in eps; the separatrix sits at the value of
    eps * f1 at its maximizer, the hyperbolic equilibrium of the
    leading model.
    """
    if not (0.0 <= eps <= 1.0):
        raise ParameterError("eps must lie in [0, 1]")
    f1 = fast_angle_average(f, rot.frame)
    m_k = curvature_at(rot, yhat0)
    G0 = {j: c / m_k for j, c in f1.items()}
    degenerate = all(j == 0 or abs(c) == 0.0 for j, c in f1.items())
    # the pendulum picture needs a real non-constant averaged potential
    structured = f.real and not degenerate
    crits = _critical_points(G0) if structured else ()
    if not structured:
        energies = None
    else:
        theta = np.linspace(0.0, 2.0 * math.pi, _CRIT_GRID, endpoint=False)
        vals = trig_eval(f1, theta, real=True)
        cand = np.concatenate([vals, [m_k * c["value"] for c in crits]])
        fmin, fmax = float(cand.min()), float(cand.max())
        energies = {
            "min": eps * fmin,
            "max": eps * fmax,
            "separatrix": eps * fmax,
        }
    yhat0 = tuple(float(v) for v in np.asarray(yhat0, dtype=float).reshape(-1))
    return StandardFormData(
        k=tuple(rot.frame.k.entries), f1=f1, m_k=m_k, G0=G0,
        criticalPoints=crits, pendulumEnergies=energies,
        degenerate=degenerate, real=f.real, eps=float(eps), yhat0=yhat0)
