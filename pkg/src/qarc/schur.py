"""Finite-window matrix model of bounded operators on l^2(Z).

An operator is represented by its compression to indices ``[-W, W]``.
Schur multipliers act entrywise, so applying one and then compressing is
the same as compressing and then applying it; every norm inequality for
Schur multipliers therefore holds verbatim for the compressions tested here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .laurent import LaurentPoly
from .qcalc import DifferenceSymbol

Symbol = Union[DifferenceSymbol, Callable[[int, int], complex], np.ndarray]

POWER_TOL = 1e-10
POWER_MAX_ITER = 100_000
SVD_MAX_WINDOW = 64


class PowerIterationError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class BandedOperator:
    W: int
    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=complex)
        n = 2 * self.W + 1
        if a.shape != (n, n):
            raise ValueError(f"entries must be {n}x{n} for window {self.W}, got {a.shape}")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.W, self.W + 1)

    def entry(self, j: int, k: int) -> complex:
        return complex(self.entries[j + self.W, k + self.W])

    def adjoint(self) -> "BandedOperator":
        return BandedOperator(self.W, self.entries.conj().T)

    def __add__(self, other):
        return BandedOperator(self.W, self.entries + other.entries)

    def __sub__(self, other):
        return BandedOperator(self.W, self.entries - other.entries)

    def __matmul__(self, other):
        return BandedOperator(self.W, self.entries @ other.entries)

    def to_json(self) -> dict:
        rows = [[[z.real, z.imag] for z in row] for row in self.entries]
        return {"W": self.W, "entries": rows}

    @classmethod
    def from_json(cls, obj) -> "BandedOperator":
        a = np.array(obj["entries"], dtype=float)
        return cls(int(obj["W"]), a[..., 0] + 1j * a[..., 1])


def identity(W: int) -> BandedOperator:
    return BandedOperator(W, np.eye(2 * W + 1))


def matrix_unit(W: int, j: int, k: int) -> BandedOperator:
    a = np.zeros((2 * W + 1, 2 * W + 1), dtype=complex)
    a[j + W, k + W] = 1.0
    return BandedOperator(W, a)


def diagonal(values) -> BandedOperator:
    values = np.asarray(values, dtype=complex)
    return BandedOperator((len(values) - 1) // 2, np.diag(values))


def shift(W: int, power: int = 1) -> BandedOperator:
    """Compression of the bilateral shift ``U^power`` (``U e_k = e_{k+1}``)."""
    return BandedOperator(W, np.eye(2 * W + 1, k=-power))


def compress(f: LaurentPoly, W: int) -> BandedOperator:
    """Compression of the Laurent operator of ``f``: entry ``(j, k)`` is ``alpha_{j-k}``."""
    idx = np.arange(-W, W + 1)
    diff = idx[:, None] - idx[None, :]
    a = np.zeros(diff.shape, dtype=complex)
    for n, c in f.coeffs.items():
        a[diff == n] = c
    return BandedOperator(W, a)


def symbol_matrix(symbol: Symbol, W: int) -> np.ndarray:
    n = 2 * W + 1
    if isinstance(symbol, np.ndarray):
        if symbol.shape != (n, n):
            raise ValueError(f"symbol matrix must be {n}x{n}")
        return symbol
    if isinstance(symbol, DifferenceSymbol):
        return symbol.matrix(W)
    idx = range(-W, W + 1)
    return np.array([[symbol(j, k) for k in idx] for j in idx], dtype=complex)


def schur_apply(symbol: Symbol, T: BandedOperator) -> BandedOperator:
    """Entrywise product ``(mu(j, k) T_jk)`` on the window of ``T``."""
    return BandedOperator(T.W, symbol_matrix(symbol, T.W) * T.entries)


def conditional_expectation(T: BandedOperator) -> BandedOperator:
    return BandedOperator(T.W, np.diag(np.diag(T.entries)))


def power_norm(T: BandedOperator, tol: float = POWER_TOL, max_iter: int = POWER_MAX_ITER) -> float:
    """Largest singular value by power iteration on ``T* T``.

    Starts from a fixed vector, so the result is reproducible.  Converged
    when the Rayleigh quotient changes by less than ``tol`` (relative).
    """
    A = T.entries
    n = A.shape[0]
    if not np.any(A):
        return 0.0
    rng = np.random.default_rng(0)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for it in range(1, max_iter + 1):
        w = A.conj().T @ (A @ v)
        new = float(np.vdot(v, w).real)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            # start vector in the kernel; perturb deterministically
            v = np.ones(n, dtype=complex) / np.sqrt(n)
            continue
        v = w / nw
        if abs(new - lam) <= tol * abs(new):
            return float(np.sqrt(max(new, 0.0)))
        lam = new
    raise PowerIterationError(f"power iteration did not converge in {max_iter} steps (last {lam!r})")


def op_norm(T: BandedOperator, method: str = "auto") -> float:
    """Operator norm of the compression (largest singular value).

    ``method="auto"`` uses a full SVD for ``W <= 64`` and power iteration
    above that; ``"power"`` and ``"svd"`` force one or the other.
    """
    if method == "auto":
        method = "svd" if T.W <= SVD_MAX_WINDOW else "power"
    if method == "svd":
        return float(np.linalg.norm(T.entries, ord=2))
    if method == "power":
        return power_norm(T)
    raise ValueError(f"unknown method {method!r}")


ENSEMBLES = ("gaussian", "sparse", "rank_one")


def random_operator(W: int, seed: int, ensemble: str = "gaussian") -> BandedOperator:
    """Deterministic random compression for property tests."""
    rng = np.random.default_rng([seed, W, ENSEMBLES.index(ensemble)])
    n = 2 * W + 1
    if ensemble == "gaussian":
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    elif ensemble == "sparse":
        mask = rng.random((n, n)) < 0.1
        a = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) * mask
    else:
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        a = np.outer(v, v.conj())
    return BandedOperator(W, a)
