"""Geometry of domains seen through a resonance frame.

The frame substitutes y = A^T ytil, so the base domain B becomes its
linear image A^{-T}(B) in the new coordinates.  Downstream work (cube
decompositions, solve brackets, certificate sampling) needs Euclidean
geometry of that image: exact point-to-set distances, bounding boxes,
and the interval cut out of a line parallel to the first axis.

Distances are computed from the structure of the preimage rather than
by generic optimization: a box image is handled by enumerating active
bound patterns of the constrained least-squares projection, a ball
image by the axis-aligned ellipsoid projection in the SVD basis of the
map.  Both are exact up to bisection tolerance and fully vectorized
over query points.
"""

from __future__ import annotations

import itertools

import numpy as np

from .errors import DomainError
from .model import Ball, Box

_LAMBDA_ITERS = 100


class TransformedDomain:
    """Image of a model domain under ytil = A^{-T} y.

    ``A`` and ``Ainv`` are the integer frame matrices (row tuples or
    arrays); ``Ainv`` is derived if omitted, which is exact enough for
    unimodular A but callers holding a frame should pass both.
    """

    def __init__(self, domain, A, Ainv=None):
        if not isinstance(domain, (Box, Ball)):
            raise DomainError(f"unsupported domain kind: {type(domain).__name__}")
        self.domain = domain
        self.A = np.asarray(A, dtype=float)
        n = self.A.shape[0]
        if self.A.shape != (n, n) or domain.n != n:
            raise DomainError("frame matrix shape does not match domain dimension")
        if Ainv is None:
            Ainv = np.linalg.inv(self.A)
        self.Ainv = np.asarray(Ainv, dtype=float)
        # column form of the forward map: image point = T @ (base point)
        self.T = self.Ainv.T.copy()
        self._box_patterns = None
        self._ell = None
        self._sig = None
        self._colnorm = None

    @property
    def n(self) -> int:
        return self.domain.n

    # -- coordinate transport ------------------------------------------------

    def to_base(self, Yt: np.ndarray) -> np.ndarray:
        """Rows of rotated points back to base coordinates, y = A^T ytil."""
        return np.asarray(Yt, dtype=float) @ self.A

    def from_base(self, Y: np.ndarray) -> np.ndarray:
        return np.asarray(Y, dtype=float) @ self.Ainv

    # -- bounding box ----------------------------------------------------------

    def bbox(self, delta: float = 0.0):
        """Axis-aligned bounds of the image, inflated by ``delta``."""
        if self.domain.kind == "box":
            lo = np.asarray(self.domain.lo)
            hi = np.asarray(self.domain.hi)
            lo_img = np.minimum(self.T * lo, self.T * hi).sum(axis=1)
            hi_img = np.maximum(self.T * lo, self.T * hi).sum(axis=1)
        else:
            c_img = self.T @ np.asarray(self.domain.center)
            half = self.domain.radius * np.linalg.norm(self.T, axis=1)
            lo_img = c_img - half
            hi_img = c_img + half
        return lo_img - delta, hi_img + delta

    # -- exact distance --------------------------------------------------------

    def dist(self, Yt: np.ndarray) -> np.ndarray:
        """Euclidean distance from each row to the image set (0 inside)."""
        P = np.atleast_2d(np.asarray(Yt, dtype=float))
        if self.domain.kind == "box":
            return self._dist_box(P)
        return self._dist_ball(P)

    def contains(self, Yt: np.ndarray, delta: float = 0.0, tol: float = 1e-12) -> np.ndarray:
        if delta == 0.0:
            # exact: pull back and test the base box/ball directly
            return self.domain.contains(self.to_base(np.atleast_2d(Yt)), tol=tol)
        return self.dist(Yt) <= delta * (1.0 + tol)

    def _patterns(self):
        # one entry per active-bound pattern of the projection onto T(Box):
        # digit 0 = coordinate free, 1 = pinned at lo, 2 = pinned at hi
        if self._box_patterns is None:
            lo = np.asarray(self.domain.lo)
            hi = np.asarray(self.domain.hi)
            n = self.n
            pats = []
            for digits in itertools.product((0, 1, 2), repeat=n):
                free = [i for i, d in enumerate(digits) if d == 0]
                pinned = [i for i, d in enumerate(digits) if d != 0]
                vals = np.array([lo[i] if digits[i] == 1 else hi[i] for i in pinned])
                offset = self.T[:, pinned] @ vals if pinned else np.zeros(n)
                Tf = self.T[:, free]
                pinv = np.linalg.pinv(Tf) if free else None
                pats.append((np.array(free, dtype=int), Tf, pinv, offset,
                             lo[free] if free else None, hi[free] if free else None))
            self._box_patterns = pats
        return self._box_patterns

    def _dist_box(self, P: np.ndarray) -> np.ndarray:
        # min |p - T x| over the box.  For the true active set the reduced
        # unconstrained solution is feasible and optimal; clipping every
        # pattern keeps all candidates feasible, so the minimum is exact.
        best = np.full(P.shape[0], np.inf)
        for free, Tf, pinv, offset, flo, fhi in self._patterns():
            Q = P - offset
            if free.size:
                Xf = Q @ pinv.T
                np.clip(Xf, flo, fhi, out=Xf)
                R = Q - Xf @ Tf.T
            else:
                R = Q
            np.minimum(best, np.einsum("ij,ij->i", R, R), out=best)
        return np.sqrt(best)

    def _ellipsoid(self):
        if self._ell is None:
            U, s, _ = np.linalg.svd(self.T)
            c_img = self.T @ np.asarray(self.domain.center)
            self._ell = (U, self.domain.radius * s, c_img)
        return self._ell

    def _dist_ball(self, P: np.ndarray) -> np.ndarray:
        # in the left singular basis the image is an axis-aligned ellipsoid
        # with semi-axes a_i = rho * sigma_i; project by solving
        # sum (a_i z_i / (a_i^2 + lam))^2 = 1 for lam >= 0 per outside point
        U, a, c_img = self._ellipsoid()
        Z = (P - c_img) @ U
        a2 = a * a
        lhs = np.einsum("ij,j->i", Z * Z, 1.0 / a2)
        out = np.zeros(P.shape[0])
        mask = lhs > 1.0
        if not np.any(mask):
            return out
        Zo = Z[mask]
        az2 = (a * Zo) ** 2
        lam_lo = np.zeros(Zo.shape[0])
        lam_hi = np.sqrt(az2.sum(axis=1)) + 1.0
        for _ in range(_LAMBDA_ITERS):
            lam = 0.5 * (lam_lo + lam_hi)
            phi = (az2 / (a2 + lam[:, None]) ** 2).sum(axis=1)
            hi_side = phi > 1.0
            lam_lo = np.where(hi_side, lam, lam_lo)
            lam_hi = np.where(hi_side, lam_hi, lam)
        lam = 0.5 * (lam_lo + lam_hi)
        X = Zo * a2 / (a2 + lam[:, None])
        out[mask] = np.linalg.norm(X - Zo, axis=1)
        return out

    # -- first-axis sections -----------------------------------------------------
    #
    # The ytil_1 section of the delta-fattened image is an interval.  It
    # is bracketed between two closed-form intervals: an inner one that
    # is contained in the true section and an outer one that contains
    # it.  For a ball image both come from chords of scaled copies of
    # the ellipsoid (support-function comparison gives the scale
    # factors 1 + delta sigma_min(A)/rho from below and
    # 1 + delta sigma_max(A)/rho from above); for a box image the base
    # constraints are linear in ytil_1, and the outer interval relaxes
    # each constraint by delta times the norm of its column of A.
    # Inner sections are for conservative detection, outer sections for
    # root brackets: the graph point always lies inside the outer one.

    def _sigma_A(self):
        if self._sig is None:
            s = np.linalg.svd(self.A, compute_uv=False)
            self._sig = (float(s[-1]), float(s[0]))
        return self._sig

    def _ball_section(self, Yhat: np.ndarray, radius: float):
        # chord of |A^T (t, yhat) - c| <= radius, quadratic in t
        c = np.asarray(self.domain.center)
        W = Yhat @ self.A[1:, :] - c
        kv = self.A[0, :]
        aa = float(kv @ kv)
        bb = W @ kv
        cc = np.einsum("ij,ij->i", W, W) - radius * radius
        disc = bb * bb - aa * cc
        ok = disc >= 0.0
        root = np.sqrt(np.maximum(disc, 0.0))
        lo = np.where(ok, (-bb - root) / aa, 1.0)
        hi = np.where(ok, (-bb + root) / aa, -1.0)
        return lo, hi, ok

    def _box_section(self, Yhat: np.ndarray, relax: float):
        # intersect lo_i - relax*g_i <= (A^T (t, yhat))_i <= hi_i + relax*g_i
        lo_b = np.asarray(self.domain.lo) - relax * self._col_norms()
        hi_b = np.asarray(self.domain.hi) + relax * self._col_norms()
        U = Yhat @ self.A[1:, :]
        kv = self.A[0, :]
        m = Yhat.shape[0]
        lo = np.full(m, -np.inf)
        hi = np.full(m, np.inf)
        ok = np.ones(m, dtype=bool)
        for i in range(self.n):
            ki = kv[i]
            if ki == 0.0:
                ok &= (U[:, i] >= lo_b[i]) & (U[:, i] <= hi_b[i])
                continue
            t0 = (lo_b[i] - U[:, i]) / ki
            t1 = (hi_b[i] - U[:, i]) / ki
            lo = np.maximum(lo, np.minimum(t0, t1))
            hi = np.minimum(hi, np.maximum(t0, t1))
        ok &= lo <= hi
        return np.where(ok, lo, 1.0), np.where(ok, hi, -1.0), ok

    def _col_norms(self):
        if self._colnorm is None:
            self._colnorm = np.linalg.norm(self.A, axis=0)
        return self._colnorm

    def section_inner(self, Yhat: np.ndarray, delta: float):
        """Closed-form interval contained in the true delta-section."""
        Yhat = np.atleast_2d(np.asarray(Yhat, dtype=float))
        if self.domain.kind == "ball":
            smin, _ = self._sigma_A()
            return self._ball_section(Yhat, self.domain.radius + delta * smin)
        return self._box_section(Yhat, 0.0)

    def section_outer(self, Yhat: np.ndarray, delta: float):
        """Closed-form interval containing the true delta-section."""
        Yhat = np.atleast_2d(np.asarray(Yhat, dtype=float))
        if self.domain.kind == "ball":
            _, smax = self._sigma_A()
            return self._ball_section(Yhat, self.domain.radius + delta * smax)
        return self._box_section(Yhat, delta)

    # -- sampling --------------------------------------------------------------

    def sample(self, rng, m: int, delta: float = 0.0) -> np.ndarray:
        """Uniform points of the (inflated) image by bbox rejection."""
        lo, hi = self.bbox(delta)
        out = np.empty((m, self.n))
        got = 0
        while got < m:
            want = m - got
            chunk = max(1024, 2 * want)
            cand = rng.uniform(lo, hi, size=(chunk, self.n))
            if delta == 0.0:
                keep = cand[self.contains(cand)]
            else:
                keep = cand[self.dist(cand) <= delta]
            take = min(want, keep.shape[0])
            out[got:got + take] = keep[:take]
            got += take
        return out
