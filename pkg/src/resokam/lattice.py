"""Primitive resonance vectors and unimodular frames.

Everything integer in this module is exact: Python integers do not
overflow, so the certificates below (determinant, row bounds, inverse
bounds) are statements about the returned matrices, not floating-point
approximations.

A vector k in Z^n is a generator when gcd(k_1, ..., k_n) = 1 and the
first non-zero entry is strictly positive; one representative per
rational direction.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Sequence

from .errors import CertificationError, DomainError

# Enumerations larger than this trigger a RuntimeWarning (not an error).
ENUMERATION_WARN_SIZE = 1_000_000


def _as_int_tuple(entries: Iterable) -> tuple[int, ...]:
    out = []
    for v in entries:
        i = int(v)
        if i != v:
            raise DomainError(f"non-integer entry {v!r} in lattice vector")
        out.append(i)
    return tuple(out)


@dataclass(frozen=True)
class ResonanceVector:
    """A primitive integer vector, normalized so its first non-zero entry
    is positive."""

    entries: tuple[int, ...]

    def __post_init__(self):
        k = _as_int_tuple(self.entries)
        object.__setattr__(self, "entries", k)
        if len(k) == 0:
            raise DomainError("empty lattice vector")
        if all(v == 0 for v in k):
            raise DomainError("zero vector is not a generator")
        if math.gcd(*k) != 1:
            raise DomainError(f"{k} is not primitive (gcd != 1)")
        first = next(v for v in k if v != 0)
        if first < 0:
            raise DomainError(f"{k}: first non-zero entry must be positive")

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def norm1(self) -> int:
        return sum(abs(v) for v in self.entries)

    @property
    def norm_inf(self) -> int:
        return max(abs(v) for v in self.entries)

    @property
    def norm2(self) -> float:
        return math.sqrt(sum(v * v for v in self.entries))

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)


def weighted_norm(k: Sequence[int], s: Sequence[float]) -> float:
    """|k|_s = sum_i s_i |k_i| for positive weights s."""
    if len(s) != len(k):
        raise DomainError(f"weight vector has length {len(s)}, expected {len(k)}")
    if any(not (w > 0) for w in s):
        raise DomainError("weights must be strictly positive")
    return float(sum(w * abs(int(v)) for w, v in zip(s, k)))


def enumerate_generators(n: int, K: float, s: Sequence[float] | None = None) -> list[ResonanceVector]:
    """All generators with |k|_1 <= K (or |k|_s <= K), in lexicographic order.

    The recursion below walks entries in ascending order with a running
    norm budget, so the output is lexicographically sorted by
    construction and needs no post-sort.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if not (K >= 1) and s is None:
        raise DomainError(f"K must be >= 1, got {K}")
    if s is not None:
        if len(s) != n:
            raise DomainError(f"weight vector has length {len(s)}, expected {n}")
        if any(not (w > 0) for w in s):
            raise DomainError("weights must be strictly positive")
        if not (K > 0):
            raise DomainError(f"K must be positive, got {K}")
    weights = [1.0] * n if s is None else [float(w) for w in s]

    out: list[ResonanceVector] = []
    entry = [0] * n
    warned = False

    def rec(i: int, budget: float, g: int, seen_positive: bool):
        nonlocal warned
        if i == n:
            if g == 1 and seen_positive:
                out.append(ResonanceVector(tuple(entry)))
                if not warned and len(out) > ENUMERATION_WARN_SIZE:
                    warned = True
                    warnings.warn(
                        f"generator enumeration exceeds {ENUMERATION_WARN_SIZE} vectors",
                        RuntimeWarning,
                    )
            return
        m = int(budget / weights[i] + 1e-12)
        for v in range(-m, m + 1):
            if v != 0 and not seen_positive and v < 0:
                continue  # first non-zero entry must be positive
            entry[i] = v
            rec(i + 1, budget - weights[i] * abs(v), math.gcd(g, v), seen_positive or v > 0)
        entry[i] = 0

    rec(0, float(K), 0, False)
    return out


# ---------------------------------------------------------------------------
# exact linear algebra over Z


def _det_int(rows: Sequence[Sequence[int]]) -> int:
    """Exact determinant by fraction-free (Bareiss) elimination."""
    a = [list(r) for r in rows]
    n = len(a)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for i in range(n - 1):
        if a[i][i] == 0:
            piv = next((r for r in range(i + 1, n) if a[r][i] != 0), None)
            if piv is None:
                return 0
            a[i], a[piv] = a[piv], a[i]
            sign = -sign
        for r in range(i + 1, n):
            for c in range(i + 1, n):
                a[r][c] = (a[r][c] * a[i][i] - a[r][i] * a[i][c]) // prev
            a[r][i] = 0
        prev = a[i][i]
    return sign * a[-1][-1]


def _inv_det_one(rows: Sequence[Sequence[int]]) -> list[list[int]]:
    """Inverse of an integer matrix with determinant 1 (equals the adjugate)."""
    n = len(rows)
    inv = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [[rows[r][c] for c in range(n) if c != i] for r in range(n) if r != j]
            cof = _det_int(minor) if n > 1 else 1
            inv[i][j] = cof if (i + j) % 2 == 0 else -cof
    return inv


def _ext_gcd(a: int, b: int) -> tuple[int, int, int]:
    """(g, x, y) with a*x + b*y = g = gcd(a, b) >= 0."""
    old_r, r = a, b
    old_x, x = 1, 0
    old_y, y = 0, 1
    while r != 0:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_x, x = x, old_x - q * x
        old_y, y = y, old_y - q * y
    if old_r < 0:
        return -old_r, -old_x, -old_y
    return old_r, old_x, old_y


def _bezout_min(g: int, m: int) -> tuple[int, int]:
    """(a, b) with a*g + b*m = 1 and |a| <= max(1, |m|/2).

    The coefficient bound keeps the completed matrix rows within the
    sup-norm certificate below.
    """
    _, x, _ = _ext_gcd(g, m)
    if m == 0:
        return (1 if g == 1 else -1), 0
    mm = abs(m)
    a = x % mm
    if a > mm // 2:
        a -= mm
    return a, (1 - a * g) // m


def _gl_complete(k: Sequence[int]) -> list[list[int]]:
    """Integer matrix with first row k, |det| = 1 and remaining rows bounded
    by |k|_inf in sup norm.  Induction on the last coordinate."""
    n = len(k)
    if n == 1:
        return [[k[0]]]
    kp, kn = k[:-1], k[-1]
    g = math.gcd(*kp) if len(kp) > 1 else abs(kp[0])
    if g == 0:
        # leading block is zero, so k = (0, ..., 0, +-1)
        rows = [list(k)]
        for i in range(n - 1):
            e = [0] * n
            e[i] = 1
            rows.append(e)
        return rows
    u = [v // g for v in kp]
    U = _gl_complete(u)
    a, b = _bezout_min(g, kn)
    rows = [list(k)]
    for i in range(1, n - 1):
        rows.append(list(U[i]) + [0])
    rows.append([-b * v for v in u] + [a])
    return rows


def _sl_complete(k: Sequence[int]) -> list[list[int]]:
    rows = _gl_complete(k)
    if _det_int(rows) == -1:
        rows[1] = [-v for v in rows[1]]
    return rows


def _certify(rows: Sequence[Sequence[int]], k: tuple[int, ...]) -> list[list[int]]:
    """Exact certificate for a completion; returns the integer inverse.

    Raises CertificationError naming the first violated bound.
    """
    n = len(k)
    if tuple(rows[0]) != k:
        raise CertificationError("first row differs from k")
    det = _det_int(rows)
    if det != 1:
        raise CertificationError(f"determinant is {det}, expected 1")
    kinf = max(abs(v) for v in k)
    sub_inf = max((abs(v) for r in rows[1:] for v in r), default=0)
    if sub_inf > kinf:
        raise CertificationError(
            f"sub-row bound violated: |Ahat|_inf = {sub_inf} > |k|_inf = {kinf}"
        )
    a_inf = max(max(abs(v) for v in r) for r in rows)
    if a_inf != kinf:
        raise CertificationError(f"|A|_inf = {a_inf} differs from |k|_inf = {kinf}")
    inv = _inv_det_one(rows)
    for i in range(n):
        for j in range(n):
            acc = sum(rows[i][t] * inv[t][j] for t in range(n))
            if acc != (1 if i == j else 0):
                raise CertificationError("A * Ainv != I")
    inv_inf = max(max(abs(v) for v in r) for r in inv)
    # |Ainv|_inf <= (n-1)^((n-1)/2) * |k|_inf^(n-1), compared via squares to
    # stay in integer arithmetic
    if inv_inf * inv_inf > (n - 1) ** (n - 1) * kinf ** (2 * (n - 1)):
        raise CertificationError(
            f"inverse bound violated: |Ainv|_inf = {inv_inf} exceeds "
            f"(n-1)^((n-1)/2) * |k|_inf^(n-1)"
        )
    return inv


def _exhaustive_completion(k: tuple[int, ...]) -> list[list[int]]:
    """Brute-force fallback for n <= 3: search integer rows with entries
    bounded by |k|_inf for a certifiable completion."""
    n = len(k)
    if n > 3:
        raise CertificationError("exhaustive completion fallback limited to n <= 3")
    m = max(abs(v) for v in k)
    rng = range(-m, m + 1)
    if n == 1:
        return [[1]]
    if n == 2:
        for r2 in product(rng, repeat=2):
            rows = [list(k), list(r2)]
            if _det_int(rows) == 1:
                return rows
        raise CertificationError("exhaustive search found no completion")
    for r2 in product(rng, repeat=3):
        for r3 in product(rng, repeat=3):
            rows = [list(k), list(r2), list(r3)]
            if _det_int(rows) == 1:
                return rows
    raise CertificationError("exhaustive search found no completion")


@dataclass(frozen=True)
class UnimodularFrame:
    """An SL(n, Z) change of basis adapted to a resonance k, together with
    the real radii used by the rotated model.

    A has first row k; the symplectic lift maps (y, x) to
    (A^T ytilde, A^-1 xtilde) so the slow angle is xtilde_1 = k . x.
    """

    k: ResonanceVector
    A: tuple[tuple[int, ...], ...]
    Ainv: tuple[tuple[int, ...], ...]
    gamma: float
    L: float
    r: float
    r_tilde_k: float  # analyticity radius r / (n |k|_inf) of the rotated model
    r_tilde: float    # chosen working radius, 0 < r_tilde <= r_tilde_k
    t_k: float
    t_tilde: float
    frak_r: float     # edge of the cubes tiling the slow-variable slab
    varpi0: float     # half-width of the admissible frequency offsets
    r_hat: float


def unimodular_completion(
    k,
    gamma: float = 1.0,
    L: float = 1.0,
    r: float = 1.0,
    r_tilde: float | None = None,
) -> UnimodularFrame:
    """Complete k to A in SL(n, Z) and certify the frame bounds exactly.

    The construction is an induction on the last coordinate (Bezout step
    against the gcd of the leading block); if its certificate ever failed
    the exhaustive n <= 3 search would take over.
    """
    kv = k if isinstance(k, ResonanceVector) else ResonanceVector(_as_int_tuple(k))
    if not (gamma > 0 and L > 0 and r > 0):
        raise DomainError("gamma, L, r must be positive")
    rows = _sl_complete(kv.entries)
    try:
        inv = _certify(rows, kv.entries)
    except CertificationError:
        if kv.n > 3:
            raise
        rows = _exhaustive_completion(kv.entries)
        inv = _certify(rows, kv.entries)

    n = kv.n
    r_tilde_k = r / (n * kv.norm_inf)
    if r_tilde is None:
        r_tilde = r_tilde_k
    if not (0 < r_tilde <= r_tilde_k * (1 + 1e-12)):
        raise DomainError(
            f"r_tilde = {r_tilde} outside (0, r/(n |k|_inf)] = (0, {r_tilde_k}]"
        )
    knorm = kv.norm2
    t_k = gamma * knorm / (2.0 * L)
    t_tilde = min(1.0, t_k)
    frak_r = t_tilde * r / (8.0 * n ** 1.5 * knorm)
    varpi0 = math.sqrt(n) * L * knorm * frak_r
    r_hat = t_tilde ** 2 * r_tilde / (512.0 * n)
    return UnimodularFrame(
        k=kv,
        A=tuple(tuple(row) for row in rows),
        Ainv=tuple(tuple(row) for row in inv),
        gamma=float(gamma),
        L=float(L),
        r=float(r),
        r_tilde_k=r_tilde_k,
        r_tilde=float(r_tilde),
        t_k=t_k,
        t_tilde=t_tilde,
        frak_r=frak_r,
        varpi0=varpi0,
        r_hat=r_hat,
    )
