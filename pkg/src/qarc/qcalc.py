"""Scalar q-arithmetic and the Schur multiplier symbols.

All symbols here depend on the index pair ``(j, k)`` only through ``j - k``;
:class:`DifferenceSymbol` exploits that to build whole symbol matrices from
a single profile vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

# |q - 1| below this switches q_integer to the geometric-sum form
STABILITY_THRESHOLD = 1e-6
_LOG_FLOAT_MAX = math.log(np.finfo(float).max)
# explicit terms summed before the integral bound on the zeta(2) tail
TAIL_TERMS = 1_000_000


class QOverflowError(ArithmeticError):
    """A q-integer (or a power of q) is not representable as a float."""

    def __init__(self, n, q, what="q-integer"):
        self.n = n
        self.q = q
        super().__init__(f"{what} overflow for n={n}, q={q!r}")


@dataclass(frozen=True)
class QDeformation:
    q: float

    def __post_init__(self):
        q = float(self.q)
        if not (0.0 < q <= 1.0) or math.isnan(q):
            raise ValueError(f"q must lie in (0, 1], got {self.q!r}")
        object.__setattr__(self, "q", q)

    @property
    def is_classical(self) -> bool:
        return self.q == 1.0

    def __float__(self):
        return self.q


def as_q(q) -> QDeformation:
    return q if isinstance(q, QDeformation) else QDeformation(q)


def _check_power(n: int, q: float) -> None:
    if n > 0 and q < 1.0 and n * -math.log(q) > _LOG_FLOAT_MAX:
        raise QOverflowError(n, q, what="q-power")


def q_integer(n: int, q) -> float:
    """Return the q-integer ``[n]_q = (q^n - q^-n) / (q - q^-1)``.

    For ``q == 1`` this is ``n`` exactly.  Near ``q = 1`` the ratio form is
    0/0, so the finite geometric sum ``sum_k q^(|n|-1-2k)`` is used instead.

    Raises
    ------
    QOverflowError
        If ``q^-(|n|-1)`` exceeds the float range.
    """
    q = as_q(q).q
    n = int(n)
    if n == 0:
        return 0.0
    sign = 1.0 if n > 0 else -1.0
    m = abs(n)
    if q == 1.0 or m == 1:
        return sign * m
    _check_power(m - 1, q)
    if abs(q - 1.0) < STABILITY_THRESHOLD:
        exps = (m - 1) - 2 * np.arange(m, dtype=float)
        return sign * math.fsum(np.power(q, exps))
    # q^-(m-1) * (1 - q^2m) / (1 - q^2), with expm1 for the small differences
    lq = math.log(q)
    value = math.exp(-(m - 1) * lq) * (math.expm1(2 * m * lq) / math.expm1(2 * lq))
    if not math.isfinite(value):
        raise QOverflowError(n, q)
    return sign * value


def q_integers(ns, q) -> np.ndarray:
    """Vectorized :func:`q_integer` over an integer array."""
    q = as_q(q).q
    ns = np.asarray(ns, dtype=np.int64)
    if q == 1.0:
        return ns.astype(float)
    if ns.size == 0:
        return np.zeros(ns.shape)
    m = np.abs(ns)
    top = int(m.max())
    if abs(q - 1.0) < STABILITY_THRESHOLD:
        # one table of [m]_q for m = 0..top, each an exact geometric sum
        table = np.array([abs(q_integer(k, q)) for k in range(top + 1)])
        return np.sign(ns) * table[m]
    _check_power(top - 1, q)
    lq = math.log(q)
    with np.errstate(over="raise"):
        try:
            vals = np.exp(-(m - 1) * lq) * (np.expm1(2 * m * lq) / math.expm1(2 * lq))
        except FloatingPointError:
            raise QOverflowError(top, q) from None
    if not np.all(np.isfinite(vals)):
        raise QOverflowError(top, q)
    vals[m == 1] = 1.0
    return np.sign(ns) * vals


def delta_q(j: int, k: int, q) -> complex:
    """Symbol of the q-derivative: ``i [j-k]_q``."""
    return 1j * q_integer(j - k, q)


def psi_q(j: int, k: int, q) -> complex:
    """Symbol of the q-integral: ``-i / [j-k]_q`` off the diagonal, 0 on it."""
    if j == k:
        return 0j
    return -1j / q_integer(j - k, q)


def gamma_M(j: int, k: int, M: int) -> float:
    """Fejer (triangular window) symbol."""
    d = abs(j - k)
    if d > M:
        return 0.0
    return (M + 1 - d) / (M + 1)


def kronecker(j: int, k: int) -> float:
    return 1.0 if j == k else 0.0


@dataclass(frozen=True)
class DifferenceSymbol:
    """A symbol ``mu(j, k) = profile(j - k)``.

    ``profile`` maps an integer array of differences to values, so a
    ``(2W+1) x (2W+1)`` symbol matrix costs one call on ``4W+1`` points.
    """

    profile: Callable[[np.ndarray], np.ndarray]
    name: str = "symbol"

    def __call__(self, j, k):
        return complex(self.profile(np.array([j - k]))[0])

    def matrix(self, W: int) -> np.ndarray:
        diffs = np.arange(-2 * W, 2 * W + 1)
        values = np.asarray(self.profile(diffs), dtype=complex)
        idx = np.arange(-W, W + 1)
        return values[(idx[:, None] - idx[None, :]) + 2 * W]


def delta_symbol(q) -> DifferenceSymbol:
    q = as_q(q)
    return DifferenceSymbol(lambda d: 1j * q_integers(d, q), name=f"delta_q(q={q.q})")


def psi_symbol(q) -> DifferenceSymbol:
    q = as_q(q)

    def profile(d):
        qi = q_integers(d, q)
        out = np.zeros(d.shape, dtype=complex)
        nz = d != 0
        out[nz] = -1j / qi[nz]
        return out

    return DifferenceSymbol(profile, name=f"psi_q(q={q.q})")


def gamma_symbol(M: int) -> DifferenceSymbol:
    def profile(d):
        return np.clip((M + 1 - np.abs(d)) / (M + 1), 0.0, None)

    return DifferenceSymbol(profile, name=f"gamma_M(M={M})")


def kronecker_symbol() -> DifferenceSymbol:
    return DifferenceSymbol(lambda d: (d == 0).astype(float), name="kronecker")


@dataclass(frozen=True)
class ApproxConstant:
    """Certified upper bound ``value`` on the Fejer approximation constant.

    ``tail_lo <= sum_{k>M} 1/k^2 <= tail_hi``; ``value`` is computed from
    ``tail_hi`` and rounded upward.
    """

    M: int
    value: float
    tail_lo: float
    tail_hi: float


def _up(x: float) -> float:
    return math.nextafter(x, math.inf)


def _down(x: float) -> float:
    return math.nextafter(x, -math.inf)


def _zeta2_tail(M: int, terms: int = TAIL_TERMS) -> tuple[float, float]:
    k = np.arange(M + 1, M + terms + 1, dtype=float)
    partial = math.fsum(1.0 / (k * k))
    # each term is within one rounding of 1/k^2, fsum adds half an ulp
    slack = 2.0 * np.finfo(float).eps * partial
    K = M + terms
    return _down(partial - slack + 1.0 / (K + 1)), _up(partial + slack + 1.0 / K)


def _eps_from_tail(M: int, tail_hi: float) -> float:
    inner = _up(M / (M + 1) ** 2) + tail_hi
    return _up(math.sqrt(_up(2.0 * _up(inner))))


# epsilon_M shares one explicit tail sum per block of this many M values
EPS_BLOCK = 1024


def epsilon_M(M: int) -> ApproxConstant:
    """Approximation constant ``sqrt(2 (M/(M+1)^2 + sum_{k>M} 1/k^2))``."""
    M = int(M)
    if M < 0:
        raise ValueError(f"M must be non-negative, got {M}")
    return _epsilon_block(M // EPS_BLOCK)[M % EPS_BLOCK]


@lru_cache(maxsize=64)
def _epsilon_block(b: int) -> tuple[ApproxConstant, ...]:
    lo, hi = _zeta2_tail((b + 1) * EPS_BLOCK)
    return tuple(_recurse_down(b * EPS_BLOCK, (b + 1) * EPS_BLOCK, lo, hi)[:EPS_BLOCK])


def _recurse_down(M_min: int, M_max: int, lo: float, hi: float) -> list[ApproxConstant]:
    """``epsilon`` for ``M_min..M_max`` from a tail bracket at ``M_max``.

    Uses ``tail(M) = tail(M+1) + 1/(M+1)^2`` with outward rounding.
    """
    out = [None] * (M_max - M_min + 1)
    for M in range(M_max, M_min - 1, -1):
        out[M - M_min] = ApproxConstant(M=M, value=_eps_from_tail(M, hi), tail_lo=lo, tail_hi=hi)
        if M > 0:
            t = 1.0 / (M * M)
            lo, hi = _down(lo + _down(t)), _up(hi + _up(t))
    return out


def epsilon_table(M_max: int) -> list[ApproxConstant]:
    """``epsilon_M`` for ``M = 0..M_max``."""
    return [epsilon_M(M) for M in range(M_max + 1)]
