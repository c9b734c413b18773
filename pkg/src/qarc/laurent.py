"""Laurent polynomials on the unit circle.

A :class:`LaurentPoly` is a finitely supported family of complex coefficients
``alpha_n``, standing for ``f(e^{i theta}) = sum_n alpha_n e^{i n theta}``.
The polynomials with frequencies in ``[-M, M]`` form the spectral band
``A_M``.  The q-calculus maps act diagonally on frequencies.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .qcalc import _check_power, as_q, epsilon_M, q_integers

PRUNE_TOL = 1e-15


class LaurentPoly:
    """Immutable Laurent polynomial with sparse integer-indexed coefficients."""

    __slots__ = ("_coeffs",)

    def __init__(self, coeffs: Mapping[int, complex] | None = None, prune: float = PRUNE_TOL):
        clean = {}
        for n, a in (coeffs or {}).items():
            a = complex(a)
            if abs(a) > prune:
                clean[int(n)] = a
        self._coeffs = MappingProxyType(dict(sorted(clean.items())))

    @classmethod
    def monomial(cls, n: int, coeff: complex = 1.0) -> "LaurentPoly":
        return cls({n: coeff})

    @classmethod
    def constant(cls, c: complex = 1.0) -> "LaurentPoly":
        return cls({0: c})

    @classmethod
    def from_dense(cls, values, offset: int) -> "LaurentPoly":
        """Build from an array whose entry ``i`` is the coefficient of ``z^(i+offset)``."""
        return cls({i + offset: v for i, v in enumerate(np.asarray(values)) if v != 0})

    @property
    def coeffs(self) -> Mapping[int, complex]:
        return self._coeffs

    def __getitem__(self, n: int) -> complex:
        return self._coeffs.get(n, 0j)

    def band(self) -> int:
        if not self._coeffs:
            return 0
        return max(abs(n) for n in self._coeffs)

    def to_dense(self, M: int | None = None) -> np.ndarray:
        """Coefficients of frequencies ``-M..M`` as an array of length ``2M+1``."""
        M = self.band() if M is None else M
        out = np.zeros(2 * M + 1, dtype=complex)
        for n, a in self._coeffs.items():
            if abs(n) > M:
                raise ValueError(f"frequency {n} outside band {M}")
            out[n + M] = a
        return out

    def map_frequencies(self, factors) -> "LaurentPoly":
        """Multiply ``alpha_n`` by ``factors(n_array)`` (a vectorized function).

        Only exact zeros are dropped: a diagonal map creates no rounding
        noise, and pruning would break identities such as ``d_q int_q g = g``
        when ``1/[n]_q`` is below the threshold.
        """
        if not self._coeffs:
            return self
        ns = np.fromiter(self._coeffs.keys(), dtype=np.int64)
        vals = np.fromiter(self._coeffs.values(), dtype=complex)
        return LaurentPoly(dict(zip(ns.tolist(), vals * factors(ns))), prune=0.0)

    def __add__(self, other):
        other = _coerce(other)
        out = dict(self._coeffs)
        for n, a in other._coeffs.items():
            out[n] = out.get(n, 0j) + a
        return LaurentPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly({n: -a for n, a in self._coeffs.items()})

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, LaurentPoly):
            return multiply(self, other)
        return LaurentPoly({n: a * other for n, a in self._coeffs.items()})

    def __rmul__(self, other):
        return self * other

    def __eq__(self, other):
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        return dict(self._coeffs) == dict(other._coeffs)

    def __hash__(self):
        return hash(tuple(self._coeffs.items()))

    def allclose(self, other: "LaurentPoly", rtol=1e-12, atol=0.0) -> bool:
        M = max(self.band(), other.band())
        a, b = self.to_dense(M), other.to_dense(M)
        scale = max(np.abs(a).max(initial=0.0), np.abs(b).max(initial=0.0))
        return bool(np.all(np.abs(a - b) <= atol + rtol * scale))

    def __repr__(self):
        terms = ", ".join(f"{n}: {a:.6g}" for n, a in self._coeffs.items())
        return f"LaurentPoly({{{terms}}})"

    def to_json(self) -> dict:
        return {"coeffs": [[n, a.real, a.imag] for n, a in self._coeffs.items()]}

    @classmethod
    def from_json(cls, obj) -> "LaurentPoly":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls({int(n): complex(re, im) for n, re, im in obj["coeffs"]})


def _coerce(x) -> LaurentPoly:
    return x if isinstance(x, LaurentPoly) else LaurentPoly.constant(x)


def random_poly(band: int, rng: np.random.Generator, self_adjoint: bool = False) -> LaurentPoly:
    """Standard complex gaussian coefficients on ``-band..band``."""
    c = rng.standard_normal(2 * band + 1) + 1j * rng.standard_normal(2 * band + 1)
    f = LaurentPoly.from_dense(c, -band)
    if self_adjoint:
        f = 0.5 * (f + adjoint(f))
    return f


def evaluate(f: LaurentPoly, theta: float) -> complex:
    """Evaluate ``f(e^{i theta})`` by Horner's rule in ``e^{i theta}`` and ``e^{-i theta}``."""
    w = complex(math.cos(theta), math.sin(theta))
    if not f.coeffs:
        return 0j
    M = f.band()
    pos = 0j
    for n in range(M, 0, -1):
        pos = (pos + f[n]) * w
    neg = 0j
    wbar = w.conjugate()
    for n in range(M, 0, -1):
        neg = (neg + f[-n]) * wbar
    return f[0] + pos + neg


eval = evaluate  # noqa: A001


def grid_values(f: LaurentPoly, N: int) -> np.ndarray:
    """Values at ``theta_k = 2 pi k / N`` for ``k = 0..N-1`` (requires ``N > 2 band``)."""
    M = f.band()
    if N <= 2 * M:
        raise ValueError(f"grid size N={N} must exceed 2*band={2 * M}")
    buf = np.zeros(N, dtype=complex)
    for n, a in f.coeffs.items():
        buf[n % N] += a
    return np.fft.ifft(buf) * N


@dataclass(frozen=True)
class SupNormCert:
    """Two-sided bracket ``grid_max <= ||f||_inf <= corrected_upper``."""

    grid_max: float
    corrected_upper: float
    grid_size: int
    degree: int


def default_grid(M: int) -> int:
    return max(4096, 16 * M)


def fft_error_bound(f: LaurentPoly, N: int) -> float:
    """Bound on the rounding error of one value from :func:`grid_values`."""
    l1 = math.fsum(abs(a) for a in f.coeffs.values())
    return 4.0 * np.finfo(float).eps * math.log2(max(N, 2)) * l1


def sup_norm(f: LaurentPoly, N: int | None = None) -> SupNormCert:
    """Certified sup-norm bracket from an equispaced grid.

    For a trigonometric polynomial of degree M the sup is attained within
    ``pi/N`` of a grid point, where ``|f|`` is at least ``||f|| cos(M pi/N)``.
    """
    M = f.band()
    N = default_grid(M) if N is None else int(N)
    gmax = float(np.abs(grid_values(f, N)).max())
    fft_err = fft_error_bound(f, N)
    return SupNormCert(gmax, (gmax + fft_err) / math.cos(math.pi * M / N), N, M)


def multiply(f: LaurentPoly, g: LaurentPoly) -> LaurentPoly:
    if not f.coeffs or not g.coeffs:
        return LaurentPoly()
    fmin, fmax = min(f.coeffs), max(f.coeffs)
    gmin, gmax = min(g.coeffs), max(g.coeffs)
    a = np.array([f[n] for n in range(fmin, fmax + 1)])
    b = np.array([g[n] for n in range(gmin, gmax + 1)])
    return LaurentPoly.from_dense(np.convolve(a, b), fmin + gmin)


def adjoint(f: LaurentPoly) -> LaurentPoly:
    return LaurentPoly({-n: a.conjugate() for n, a in f.coeffs.items()})


def sigma(f: LaurentPoly, q, power: int = 1) -> LaurentPoly:
    """The automorphism ``z^n -> q^n z^n`` (``power=-1`` gives its inverse)."""
    if power not in (1, -1):
        raise ValueError("power must be +1 or -1")
    q = as_q(q)
    if f.coeffs:
        worst = -min(f.coeffs) if power == 1 else max(f.coeffs)
        _check_power(worst, q.q)
    return f.map_frequencies(lambda n: np.power(q.q, (power * n).astype(float)))


def d_q(f: LaurentPoly, q) -> LaurentPoly:
    """q-derivative: ``z^n -> i [n]_q z^n``."""
    return f.map_frequencies(lambda n: 1j * q_integers(n, q))


def q_integral(f: LaurentPoly, q) -> LaurentPoly:
    """q-integral: ``z^n -> -i z^n / [n]_q`` for ``n != 0``; kills constants."""

    def factors(n):
        out = np.zeros(n.shape, dtype=complex)
        nz = n != 0
        out[nz] = -1j / q_integers(n[nz], q)
        return out

    return f.map_frequencies(factors)


def fejer(f: LaurentPoly, M: int) -> LaurentPoly:
    """Cesaro (Fejer) truncation onto the band ``A_M``."""
    return f.map_frequencies(lambda n: np.clip((M + 1 - np.abs(n)) / (M + 1), 0.0, None))


def haar(f: LaurentPoly) -> complex:
    return f[0]


def seminorm_bracket(f: LaurentPoly, q, N: int | None = None) -> SupNormCert:
    """Sup-norm bracket of ``d_q f``, i.e. of the Lipschitz seminorm ``L_q(f)``."""
    return sup_norm(d_q(f, q), N)


def fejer_error_bound(f: LaurentPoly, M: int, q) -> float:
    """Right-hand side ``eps_M * L_q(f)`` with the certified upper bracket of ``L_q``."""
    return epsilon_M(M).value * seminorm_bracket(f, q).corrected_upper
