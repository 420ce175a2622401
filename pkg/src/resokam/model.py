"""Convex frequency maps with certified constants.

A model is h(y) on a box or ball B together with the constants used by
the covering estimates: gamma (convexity modulus), L and Lbar (the two
Lipschitz constants of the frequency map and its inverse) and
M = sup |omega| over the 2r-extension of B.  Built-in families carry
closed-form constants; external evaluators must declare theirs and are
spot-checked by sampling.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, ModelAssumptionError, ParameterError
from .rng import substream

try:
    import tomllib  # python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib


# ---------------------------------------------------------------------------
# domains


@dataclass(frozen=True)
class Box:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    kind = "box"

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise DomainError("box bounds have mismatched lengths")
        if any(not (a < b) for a, b in zip(self.lo, self.hi)):
            raise DomainError("box needs lo < hi in every coordinate")

    @property
    def n(self) -> int:
        return len(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod(np.asarray(self.hi) - np.asarray(self.lo)))

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.lo, float), np.asarray(self.hi, float)

    def dist(self, Y: np.ndarray) -> np.ndarray:
        Y = np.atleast_2d(np.asarray(Y, float))
        lo, hi = self.bbox()
        d = np.maximum(np.maximum(lo - Y, Y - hi), 0.0)
        return np.sqrt(np.sum(d * d, axis=1))

    def contains(self, Y: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        return self.dist(Y) <= tol

    def sample(self, rng: np.random.Generator, m: int) -> np.ndarray:
        lo, hi = self.bbox()
        return lo + rng.random((m, self.n)) * (hi - lo)

    def corners(self) -> np.ndarray:
        lo, hi = self.bbox()
        n = self.n
        out = np.empty((2 ** n, n))
        for i in range(2 ** n):
            for j in range(n):
                out[i, j] = hi[j] if (i >> j) & 1 else lo[j]
        return out


@dataclass(frozen=True)
class Ball:
    center: tuple[float, ...]
    radius: float

    kind = "ball"

    def __post_init__(self):
        if not (self.radius > 0):
            raise DomainError("ball radius must be positive")

    @property
    def n(self) -> int:
        return len(self.center)

    @property
    def volume(self) -> float:
        n = self.n
        return float(math.pi ** (n / 2) / math.gamma(n / 2 + 1) * self.radius ** n)

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        c = np.asarray(self.center, float)
        return c - self.radius, c + self.radius

    def dist(self, Y: np.ndarray) -> np.ndarray:
        Y = np.atleast_2d(np.asarray(Y, float))
        d = np.linalg.norm(Y - np.asarray(self.center, float), axis=1) - self.radius
        return np.maximum(d, 0.0)

    def contains(self, Y: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        return self.dist(Y) <= tol

    def sample(self, rng: np.random.Generator, m: int) -> np.ndarray:
        # rejection from the bounding box; chunk sizes depend only on how
        # many points are still missing, so the draw sequence is
        # reproducible
        lo, hi = self.bbox()
        out = np.empty((m, self.n))
        have = 0
        while have < m:
            want = m - have
            chunk = max(1024, int(want * 2.0))
            pts = lo + rng.random((chunk, self.n)) * (hi - lo)
            keep = pts[self.dist(pts) <= 0.0]
            take = min(want, keep.shape[0])
            out[have : have + take] = keep[:take]
            have += take
        return out


def _sample_extension(domain, rng: np.random.Generator, m: int, delta: float) -> np.ndarray:
    """Uniform sample of the real delta-neighbourhood of the domain."""
    lo, hi = domain.bbox()
    lo, hi = lo - delta, hi + delta
    out = np.empty((m, domain.n))
    have = 0
    while have < m:
        want = m - have
        chunk = max(1024, int(want * 2.0))
        pts = lo + rng.random((chunk, domain.n)) * (hi - lo)
        keep = pts[domain.dist(pts) <= delta]
        take = min(want, keep.shape[0])
        out[have : have + take] = keep[:take]
        have += take
    return out


# ---------------------------------------------------------------------------
# models


@dataclass
class ConvexModel:
    """Frequency map omega = grad h with certified constants on domain B."""

    n: int
    domain: Box | Ball
    r: float
    s: tuple[float, ...]
    gamma: float
    L: float
    Lbar: float
    M: float
    family: str
    meta: dict = field(default_factory=dict)
    h: Callable = None
    omega: Callable = None          # (m, n) -> (m, n)
    hessian: Callable = None        # (n,) -> (n, n)
    hess_quadform: Callable = None  # (m, n), (n,) -> (m,)

    @property
    def s_hat(self) -> float:
        return max(self.s) / min(self.s)

    def omega_at(self, y) -> np.ndarray:
        return self.omega(np.atleast_2d(np.asarray(y, float)))[0]

    def spec_dict(self) -> dict:
        d = {
            "family": self.family,
            "domain": {
                "kind": self.domain.kind,
                "bounds": ([list(self.domain.lo), list(self.domain.hi)]
                           if self.domain.kind == "box"
                           else [*self.domain.center, self.domain.radius]),
            },
            "r": self.r,
            "s": list(self.s),
            "declared": {"gamma": self.gamma, "L": self.L,
                         "Lbar": self.Lbar, "M": self.M},
        }
        d.update({k: v for k, v in self.meta.items() if k in ("Q", "c", "center")})
        return d


def _max_qnorm_ball(Q: np.ndarray, c: np.ndarray, rho: float) -> float:
    """max |Q y| over the ball |y - c| <= rho, exact via the KKT secular
    equation in the eigenbasis of Q."""
    lam, V = np.linalg.eigh(Q)
    lam2 = lam ** 2
    cc = V.T @ c
    top = float(lam2.max())
    if np.linalg.norm(cc) == 0.0:
        return math.sqrt(top) * rho

    def psi(mu):
        return float(np.sum((cc * lam2 / (mu - lam2)) ** 2))

    at_top = np.isclose(lam2, top)
    if np.all(cc[at_top] == 0.0):
        # center orthogonal to the leading eigenspace: possibly the hard case
        safe = top * (1 + 1e-14) + 1e-300
        if psi(safe) <= rho * rho:
            y = np.where(at_top, 0.0, top * cc / np.where(at_top, 1.0, top - lam2))
            w2 = rho * rho - float(np.sum((y - cc) ** 2))
            return math.sqrt(float(np.sum(lam2 * y * y)) + top * max(w2, 0.0))
    # normal case: psi decreases from +inf on (top, inf); bisect
    lo = top * (1 + 1e-15)
    hi = top + top * float(np.linalg.norm(cc)) / rho + 1.0
    while psi(hi) > rho * rho:
        hi = top + 2.0 * (hi - top)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= top:
            mid = np.nextafter(top, hi)
        if psi(mid) > rho * rho:
            lo = mid
        else:
            hi = mid
    mu = hi
    y = mu * cc / (mu - lam2)
    return math.sqrt(float(np.sum(lam2 * y * y)))


def _coord_ranges_extended(domain, delta: float) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = domain.bbox()
    return lo - delta, hi + delta


def _quadratic_evaluators(Q: np.ndarray, y0: np.ndarray):
    def h(Y):
        Z = np.atleast_2d(np.asarray(Y, float)) - y0
        return 0.5 * np.einsum("mi,ij,mj->m", Z, Q, Z)

    def omega(Y):
        return (np.atleast_2d(np.asarray(Y, float)) - y0) @ Q

    def hessian(y):
        return Q.copy()

    qf_cache = {}

    def hess_quadform(Y, v):
        key = tuple(np.asarray(v, float))
        if key not in qf_cache:
            vv = np.asarray(v, float)
            qf_cache[key] = float(vv @ Q @ vv)
        m = np.atleast_2d(np.asarray(Y, float)).shape[0]
        return np.full(m, qf_cache[key])

    return h, omega, hessian, hess_quadform


def _quartic_evaluators(c: float, y0: np.ndarray):
    def h(Y):
        Z = np.atleast_2d(np.asarray(Y, float)) - y0
        return 0.5 * np.sum(Z * Z, axis=1) + c * np.sum(Z ** 4, axis=1)

    def omega(Y):
        Z = np.atleast_2d(np.asarray(Y, float)) - y0
        return Z + 4.0 * c * Z ** 3

    def hessian(y):
        z = np.asarray(y, float) - y0
        return np.diag(1.0 + 12.0 * c * z * z)

    def hess_quadform(Y, v):
        Z = np.atleast_2d(np.asarray(Y, float)) - y0
        vv = np.asarray(v, float)
        return (1.0 + 12.0 * c * Z * Z) @ (vv * vv)

    return h, omega, hessian, hess_quadform


def _parse_domain(n: int, spec: dict) -> Box | Ball:
    kind = spec.get("kind")
    bounds = spec.get("bounds")
    if kind == "box":
        arr = np.asarray(bounds, float)
        if arr.shape != (2, n) and arr.shape != (n, 2):
            raise DomainError(f"box bounds must be [[lo...],[hi...]] for n = {n}")
        if arr.shape == (n, 2):
            arr = arr.T
        return Box(tuple(arr[0]), tuple(arr[1]))
    if kind == "ball":
        vals = [float(v) for v in bounds]
        if len(vals) != n + 1:
            raise DomainError(f"ball bounds must be [c1..cn, radius] for n = {n}")
        return Ball(tuple(vals[:n]), vals[n])
    raise DomainError(f"unknown domain kind {kind!r}")


def build_model(spec: dict) -> ConvexModel:
    """Construct a ConvexModel from a parsed spec dictionary.

    Closed-form constants are attached for the built-in families; any
    declared constants override them and are then gated by a sampling
    check (see validate_constants).
    """
    family = spec.get("family")
    if family not in ("isotropic_quadratic", "anisotropic_quadratic", "quartic"):
        raise DomainError(f"unknown family {family!r}")
    s = tuple(float(v) for v in spec.get("s", ()))
    if not s or any(not (v > 0) for v in s):
        raise DomainError("s must be a vector of positive weights")
    n = len(s)
    r = float(spec.get("r", 0))
    if not (r > 0):
        raise DomainError("r must be positive")
    domain = _parse_domain(n, spec.get("domain", {}))
    if domain.n != n:
        raise DomainError("domain dimension does not match s")
    y0 = np.asarray(spec.get("center", np.zeros(n)), float)
    if y0.shape != (n,):
        raise DomainError("center must have length n")

    lo_e, hi_e = _coord_ranges_extended(domain, 2.0 * r)
    if family == "quartic":
        c = float(spec.get("c", 0.0))
        if c < 0:
            raise ModelAssumptionError("quartic coefficient c < 0 is non-convex")
        # separable h: the Hessian is diag(1 + 12 c z_i^2), so the exact
        # spectrum bounds over the extension come from the per-coordinate
        # extremes of z_i^2 (the bbox ranges are per-coordinate exact for
        # balls too, and each extreme is attained inside the set)
        z_lo, z_hi = lo_e - y0, hi_e - y0
        sq_max = np.maximum(z_lo ** 2, z_hi ** 2)
        sq_min = np.where((z_lo <= 0) & (z_hi >= 0), 0.0, np.minimum(z_lo ** 2, z_hi ** 2))
        gamma = 1.0 + 12.0 * c * float(sq_min.min())
        L = 1.0 + 12.0 * c * float(sq_max.max())
        Lbar = 1.0 / gamma
        g = lambda t: t + 4.0 * c * t ** 3
        if domain.kind == "ball":
            # |omega(z)| <= g(|z|) termwise, with equality on the axes,
            # so the radial bound at the far point is exact when centered
            R = float(np.linalg.norm(np.asarray(domain.center) - y0)) + domain.radius + 2.0 * r
            M = g(R)
        else:
            # corner of the rectangular extension; an upper bound for the
            # rounded extension, exact for boxes when c = 0
            M = math.sqrt(float(np.sum(g(np.sqrt(sq_max)) ** 2)))
        h, omega, hessian, hq = _quartic_evaluators(c, y0)
        meta = {"c": c, "center": list(y0)}
    else:
        if family == "isotropic_quadratic":
            Q = np.eye(n)
        else:
            Q = np.asarray(spec.get("Q"), float)
            if Q.shape != (n, n):
                raise DomainError(f"Q must be {n}x{n}")
            if not np.allclose(Q, Q.T, rtol=0, atol=1e-12):
                raise DomainError("Q must be symmetric")
        lam = np.linalg.eigvalsh(Q)
        if lam[0] <= 0:
            raise ModelAssumptionError(
                f"Q is not positive definite (min eigenvalue {lam[0]:.6g})"
            )
        gamma, L = float(lam[0]), float(lam[-1])
        Lbar = 1.0 / gamma
        if family == "isotropic_quadratic":
            if domain.kind == "ball":
                M = float(np.linalg.norm(np.asarray(domain.center) - y0)) + domain.radius + 2.0 * r
            else:
                M = float(np.max(np.linalg.norm(domain.corners() - y0, axis=1))) + 2.0 * r
        else:
            if domain.kind == "ball":
                M = _max_qnorm_ball(Q, np.asarray(domain.center) - y0, domain.radius + 2.0 * r)
            else:
                M = max(
                    _max_qnorm_ball(Q, corner - y0, 2.0 * r)
                    for corner in domain.corners()
                )
        h, omega, hessian, hq = _quadratic_evaluators(Q, y0)
        meta = {"Q": Q.tolist(), "center": list(y0)}

    declared = spec.get("declared", {})
    model = ConvexModel(
        n=n, domain=domain, r=r, s=s,
        gamma=float(declared.get("gamma", gamma)),
        L=float(declared.get("L", L)),
        Lbar=float(declared.get("Lbar", Lbar)),
        M=float(declared.get("M", M)),
        family=family, meta=meta,
        h=h, omega=omega, hessian=hessian, hess_quadform=hq,
    )
    if declared:
        _gate(model)
    return model


def build_model_external(
    h: Callable,
    omega: Callable,
    hessian: Callable,
    domain: Box | Ball,
    r: float,
    s: Sequence[float],
    declared: dict,
    hess_quadform: Callable | None = None,
) -> ConvexModel:
    """Wrap external evaluators; declared constants are sampled before use."""
    s = tuple(float(v) for v in s)
    if hess_quadform is None:
        def hess_quadform(Y, v):
            Y = np.atleast_2d(np.asarray(Y, float))
            vv = np.asarray(v, float)
            return np.array([float(vv @ hessian(y) @ vv) for y in Y])
    model = ConvexModel(
        n=domain.n, domain=domain, r=float(r), s=s,
        gamma=float(declared["gamma"]), L=float(declared["L"]),
        Lbar=float(declared["Lbar"]), M=float(declared["M"]),
        family="external", meta={},
        h=h, omega=omega, hessian=hessian, hess_quadform=hess_quadform,
    )
    _gate(model)
    return model


_GATE_SAMPLES = 256
_GATE_SEED = 0


def _gate(model: ConvexModel) -> None:
    rep = validate_constants(model, _GATE_SAMPLES, _GATE_SEED)
    if rep["violations"]:
        names = ", ".join(v["constant"] for v in rep["violations"])
        raise ModelAssumptionError(f"declared constants fail validation: {names}")


def validate_constants(model: ConvexModel, samples: int, seed: int) -> dict:
    """Spot-check gamma, L, Lbar, M on the real 2r-extension of B.

    Returns a report with empirical extrema, witnesses and a violation
    list; it never raises on a violation (callers decide).
    """
    if samples < 2:
        raise ParameterError("validate needs at least 2 samples")
    rng = substream(seed, "validate")
    Y = _sample_extension(model.domain, rng, samples, 2.0 * model.r)
    H = np.stack([model.hessian(y) for y in Y])
    asym = float(np.max(np.abs(H - np.transpose(H, (0, 2, 1)))))
    eigs = np.linalg.eigvalsh(H)[:, 0]
    i_min = int(np.argmin(eigs))
    W = model.omega(Y)
    norms = np.linalg.norm(W, axis=1)
    i_sup = int(np.argmax(norms))
    half = samples // 2
    A, B = Y[:half], Y[half : 2 * half]
    num = np.linalg.norm(model.omega(A) - model.omega(B), axis=1)
    den = np.linalg.norm(A - B, axis=1)
    good = den > 1e-12
    ratios = num[good] / den[good]
    i_lo = int(np.argmin(ratios))
    i_hi = int(np.argmax(ratios))

    tol = 1e-9
    violations = []
    if eigs[i_min] < model.gamma * (1 - tol) - 1e-15:
        violations.append({"constant": "gamma", "declared": model.gamma,
                           "empirical": float(eigs[i_min]), "witness": Y[i_min].tolist()})
    if ratios.size and ratios[i_hi] > model.L * (1 + tol) + 1e-15:
        violations.append({"constant": "L", "declared": model.L,
                           "empirical": float(ratios[i_hi]), "witness": A[i_hi].tolist()})
    if ratios.size and ratios[i_lo] < (1.0 / model.Lbar) * (1 - tol) - 1e-15:
        violations.append({"constant": "Lbar", "declared": model.Lbar,
                           "empirical": float(ratios[i_lo]), "witness": A[i_lo].tolist()})
    if norms[i_sup] > model.M * (1 + tol) + 1e-15:
        violations.append({"constant": "M", "declared": model.M,
                           "empirical": float(norms[i_sup]), "witness": Y[i_sup].tolist()})
    return {
        "samples": samples,
        "min_hessian_eig": float(eigs[i_min]),
        "min_hessian_eig_witness": Y[i_min].tolist(),
        "hessian_asymmetry": asym,
        "lip_ratio_min": float(ratios[i_lo]) if ratios.size else None,
        "lip_ratio_max": float(ratios[i_hi]) if ratios.size else None,
        "sup_omega": float(norms[i_sup]),
        "sup_omega_witness": Y[i_sup].tolist(),
        "declared": {"gamma": model.gamma, "L": model.L,
                     "Lbar": model.Lbar, "M": model.M},
        "violations": violations,
    }


# ---------------------------------------------------------------------------
# covering parameters


@dataclass(frozen=True)
class CoveringParams:
    n: int
    eps: float
    K: float
    K0: float
    s_hat: float
    nu: float
    alpha: float
    c1: float
    C: float
    b: int

    def to_dict(self) -> dict:
        return asdict(self)


def k_from_eps(eps: float, s_hat: float) -> tuple[float, float]:
    """K = max(12 s_hat, ceil(ln(eps)^2)) with K0 = K / (6 s_hat)."""
    if not (0 < eps <= 1):
        raise ParameterError("K_from_eps requires 0 < eps <= 1")
    K = float(max(12.0 * s_hat, math.ceil(math.log(eps) ** 2)))
    return K, K / (6.0 * s_hat)


def covering_params(
    model: ConvexModel,
    eps: float,
    K: float | None = None,
    K0: float | None = None,
    K_from_eps: bool = False,
) -> CoveringParams:
    """Derive (nu, alpha, c1, C, b) and enforce the K-chain inequalities.

    Each failed inequality is reported by name.  eps = 0 is allowed and
    degenerates every threshold to zero.
    """
    if not (0 <= eps <= 1):
        raise ParameterError(f"eps must lie in [0, 1], got {eps}")
    n = model.n
    s_hat = model.s_hat
    if K_from_eps:
        K, K0 = k_from_eps(eps, s_hat)
    if K is None or K0 is None:
        raise ParameterError("K and K0 are required unless K_from_eps is set")
    K, K0 = float(K), float(K0)
    if not (6.0 * K0 >= 12.0):
        raise ParameterError(f"constraint 6*K0 >= 12 violated: K0 = {K0}")
    if not (6.0 * s_hat * K0 >= 6.0 * K0):
        raise ParameterError(f"constraint 6*sHat*K0 >= 6*K0 violated: sHat = {s_hat}")
    if not (K >= 6.0 * s_hat * K0):
        raise ParameterError(
            f"constraint K >= 6*sHat*K0 violated: K = {K}, 6*sHat*K0 = {6.0 * s_hat * K0}"
        )
    nu = 4.5 * n + 2.0
    alpha = math.sqrt(eps) * K ** nu
    c1 = 5.0 * n * float((n - 1) ** (n - 1)) if n > 1 else 5.0
    C = 12.0 * c1 * n * model.L / model.gamma
    return CoveringParams(
        n=n, eps=float(eps), K=K, K0=K0, s_hat=s_hat,
        nu=nu, alpha=alpha, c1=c1, C=C, b=11 * n + 6,
    )


# ---------------------------------------------------------------------------
# file loading


def load_structured(path: str) -> dict:
    """Read a TOML (default) or JSON config file."""
    if str(path).endswith(".json"):
        with open(path, "r") as fh:
            return json.load(fh)
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def load_model(path: str) -> ConvexModel:
    return build_model(load_structured(path))


def load_params(model: ConvexModel, path: str) -> CoveringParams:
    spec = load_structured(path)
    return covering_params(
        model,
        eps=spec.get("eps"),
        K=spec.get("K"),
        K0=spec.get("K0"),
        K_from_eps=bool(spec.get("K_from_eps", False)),
    )
