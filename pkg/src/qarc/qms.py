"""Quantum-metric quantities on spectral bands.

The Monge-Kantorovich distance between two evaluation states on ``A_M`` is
computed as a linear program over self-adjoint, mean-zero ``f`` in ``A_M``
with ``|d_q f| <= 1`` imposed on an ``N``-point grid.  The grid relaxation
is certified from above through the LP dual; the optimizer, rescaled by
``cos(pi M / N)`` to be feasible off the grid, certifies it from below.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass

import highspy
import numpy as np

from .laurent import LaurentPoly, d_q, sup_norm
from .qcalc import QDeformation, as_q, epsilon_M, q_integer, q_integers

TWO_PI = 2.0 * math.pi
POINCARE = math.pi / math.sqrt(3.0)
DIAMETER_BOUND = 2.0 * math.pi / math.sqrt(3.0)


class DiameterBoundViolation(AssertionError):
    pass


@dataclass(frozen=True)
class SpectralBand:
    M: int
    q: QDeformation

    def __post_init__(self):
        if self.M < 0:
            raise ValueError(f"band half-width must be non-negative, got {self.M}")
        object.__setattr__(self, "q", as_q(self.q))

    @property
    def dimension(self) -> int:
        return 2 * self.M + 1


@dataclass(frozen=True)
class EvalState:
    theta: float

    def __post_init__(self):
        if not (0.0 <= self.theta < TWO_PI):
            raise ValueError(f"state angle must lie in [0, 2pi), got {self.theta!r}")

    def __call__(self, f: LaurentPoly) -> complex:
        from .laurent import evaluate

        return evaluate(f, self.theta)


def default_mk_grid(M: int) -> int:
    return max(8 * M, 1024)


@dataclass(frozen=True)
class MKProblem:
    band: SpectralBand
    state_a: EvalState
    state_b: EvalState
    N: int = 0

    def __post_init__(self):
        if self.N == 0:
            object.__setattr__(self, "N", default_mk_grid(self.band.M))
        if self.N <= 2 * self.band.M:
            raise ValueError(f"grid N={self.N} must exceed 2M={2 * self.band.M}")


@dataclass
class MKResult:
    lp_value: float
    lower: float
    upper: float
    optimizer: LaurentPoly
    iterations: int = 0

    def to_json(self) -> dict:
        return {
            "lp_value": self.lp_value,
            "lower": self.lower,
            "upper": self.upper,
            "iterations": self.iterations,
            "optimizer": self.optimizer.to_json(),
        }


def seminorm_Lq(f: LaurentPoly, q, N: int | None = None) -> tuple[float, float]:
    """Bracket ``(lower, upper)`` on ``L_q(f) = ||d_q f||_inf``."""
    cert = sup_norm(d_q(f, q), N)
    return cert.grid_max, cert.corrected_upper


def _odd_witness(M: int, qi: np.ndarray, y: np.ndarray, center: float, sign: float) -> LaurentPoly:
    # f(theta) = sign * sum_n b_n sin(n (theta - center)), b_n = y_n / [n]_q
    b = sign * y / qi
    coeffs = {}
    for n in range(1, M + 1):
        phase = complex(math.cos(n * center), -math.sin(n * center))
        coeffs[n] = b[n - 1] * phase / 2j
        coeffs[-n] = -b[n - 1] * phase.conjugate() / 2j
    return LaurentPoly(coeffs)


def _half_grid(N: int) -> np.ndarray:
    return TWO_PI * np.arange(N // 2 + 1) / N


def _canonical_pair(ta: float, tb: float) -> tuple[float, float, float]:
    """Half-arc ``s`` in ``[0, pi/2]``, center and sign mapping the pair to ``(+s, -s)``."""
    d = (ta - tb) % TWO_PI
    if d <= math.pi:
        return d / 2.0, (tb + d / 2.0) % TWO_PI, 1.0
    arc = TWO_PI - d
    return arc / 2.0, (ta + arc / 2.0) % TWO_PI, -1.0


# cuts are added only for violations beyond the solver's primal tolerance
MK_CUT_TOL = 1e-7
MK_MAX_ROUNDS = 2000


class LPError(RuntimeError):
    """The LP solver failed; ``iterations`` counts simplex iterations spent."""

    def __init__(self, message: str, iterations: int = 0):
        self.iterations = iterations
        super().__init__(message)


def _new_solver(M: int, obj: np.ndarray) -> highspy.Highs:
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("threads", 1)
    h.setOptionValue("random_seed", 0)
    inf = highspy.kHighsInf
    h.addVars(M, np.full(M, -inf), np.full(M, inf))
    h.changeColsCost(M, np.arange(M, dtype=np.int32), -obj)
    return h


def _add_cuts(h: highspy.Highs, C: np.ndarray, rows: np.ndarray) -> None:
    k, M = len(rows), C.shape[1]
    starts = np.arange(0, k * M, M, dtype=np.int32)
    index = np.tile(np.arange(M, dtype=np.int32), k)
    h.addRows(k, -np.ones(k), np.ones(k), k * M, starts, index, C[rows].ravel())


def mk_distance(p: MKProblem) -> MKResult:
    """Monge-Kantorovich distance bracket between two evaluation states on ``A_M``.

    The metric is rotation and reflection invariant, so the states are moved
    to ``+s`` and ``-s`` (``2s`` the arc between them); the optimal ``f`` can
    then be taken odd, ``f = sum b_n sin(n theta)``, and ``g = d_q f`` is the
    even cosine polynomial ``sum [n]_q b_n cos(n theta)``.  With
    ``y_n = [n]_q b_n`` the grid LP reads

        max  sum_n y_n 2 sin(n s) / [n]_q   s.t.  |g(theta_k)| <= 1,

    ``theta_k`` ranging over the half grid ``2 pi k / N``, ``0 <= k <= N/2``.
    It is solved by cutting planes with a warm-started dual simplex (HiGHS):
    local maxima of ``|g|`` that violate the bound are added as rows until
    none remain.

    ``upper`` is certified from the row multipliers ``w`` by weak duality,
    ``||w||_1 + sqrt(2) sec(pi M/N) ||C^T w - c||_2``, and holds whatever
    the solver's accuracy.  ``lower`` is the objective of the witness scaled
    to be grid feasible, times ``cos(pi M/N)``, which makes it truly feasible.
    """
    M, N = p.band.M, p.N
    s, center, sign = _canonical_pair(p.state_a.theta, p.state_b.theta)
    if M == 0 or s == 0.0:
        return MKResult(0.0, 0.0, 0.0, LaurentPoly())
    n = np.arange(1, M + 1)
    qi = q_integers(n, p.band.q)
    obj = 2.0 * np.sin(n * s) / qi
    C = np.cos(np.outer(_half_grid(N), n))  # row k evaluates g at theta_k
    K = C.shape[0]
    active = np.zeros(K, dtype=bool)
    start = np.unique(np.round(np.linspace(0, K - 1, min(K, 4 * M + 1))).astype(int))
    active[start] = True
    h = _new_solver(M, obj)
    _add_cuts(h, C, start)
    order = list(start)
    iterations = 0
    for _ in range(MK_MAX_ROUNDS):
        status = h.run()
        model_status = h.getModelStatus()
        iterations = h.getInfo().simplex_iteration_count
        if status == highspy.HighsStatus.kError or model_status != highspy.HighsModelStatus.kOptimal:
            if model_status == highspy.HighsModelStatus.kUnbounded:
                raise LPError("grid LP unbounded", iterations)
            raise LPError(f"LP solver stopped with status {h.modelStatusToString(model_status)}", iterations)
        y = np.array(h.getSolution().col_value)
        g = np.abs(C @ y)
        viol = (g > 1.0 + MK_CUT_TOL) & ~active
        if not viol.any():
            break
        # local maxima of |g| among violators, by grid neighbours
        left = np.concatenate([[g[1]], g[:-1]])
        right = np.concatenate([g[1:], [g[-2]]])
        peaks = np.flatnonzero(viol & (g >= left) & (g >= right))
        if peaks.size == 0:
            peaks = np.flatnonzero(viol)[:1]
        _add_cuts(h, C, peaks)
        active[peaks] = True
        order.extend(int(i) for i in peaks)
    else:
        raise LPError(f"no convergence after {MK_MAX_ROUNDS} cutting-plane rounds", iterations)
    w = -np.array(h.getSolution().row_dual)
    resid = float(np.linalg.norm(C[order].T @ w - obj))
    secant = 1.0 / math.cos(math.pi * M / N)
    # ||y||_2 <= sqrt(2) sec(pi M/N) for every grid-feasible y (Parseval)
    upper = _up(math.fsum(np.abs(w)) + math.sqrt(2.0) * secant * resid)
    scale = max(1.0, float(g.max()))
    lower = min(upper, math.fsum(obj * y) / scale) / secant
    f = _odd_witness(M, qi, y / scale, center, sign)
    return MKResult(float(obj @ y), lower, upper, f, int(iterations))


def _up(x: float) -> float:
    return math.nextafter(x, math.inf)


def mk_between(M: int, q, theta_a: float, theta_b: float, N: int | None = None) -> MKResult:
    band = SpectralBand(M, as_q(q))
    return mk_distance(MKProblem(band, EvalState(theta_a % TWO_PI), EvalState(theta_b % TWO_PI), N or 0))


def diameter_scan(band: SpectralBand, angles, N: int | None = None) -> float:
    """Largest MK upper bracket over all pairs of ``angles``.

    Raises :class:`DiameterBoundViolation` if it exceeds ``2 pi / sqrt 3``.
    """
    angles = [a % TWO_PI for a in angles]
    if len(angles) < 2:
        raise ValueError("diameter_scan needs at least two angles")
    best = 0.0
    for a, b in itertools.combinations(angles, 2):
        r = mk_distance(MKProblem(band, EvalState(a), EvalState(b), N or 0))
        best = max(best, r.upper)
    if best > DIAMETER_BOUND + 1e-6:
        raise DiameterBoundViolation(f"MK upper bracket {best} exceeds 2pi/sqrt3")
    return best


def leibniz_ratio(n: int, q) -> float:
    """``[2n]_q / (2 [n]_q)``; unbounded in ``n`` when ``q < 1``."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    return q_integer(2 * n, q) / (2.0 * q_integer(n, q))


def leibniz_ratios(ns, q) -> np.ndarray:
    """Vectorized :func:`leibniz_ratio` over an array of positive integers."""
    ns = np.asarray(ns, dtype=np.int64)
    if ns.size and ns.min() < 1:
        raise ValueError("n must be a positive integer")
    return q_integers(2 * ns, q) / (2.0 * q_integers(ns, q))


def chi_bounds(M: int, q, q0) -> tuple[float, float]:
    """Bracket on the norm of ``(d_q)_M - (d_q0)_M`` acting on ``(A_M, sup norm)``.

    The lower end is witnessed by monomials; the upper end uses
    ``|alpha_n| <= ||f||_inf`` termwise.
    """
    ns = np.arange(-M, M + 1)
    diff = np.abs(q_integers(ns, q) - q_integers(ns, q0))
    return float(diff.max()), float(math.fsum(diff))


@dataclass(frozen=True)
class GHBoundReport:
    q: float
    q0: float
    M: int
    chi_lower: float
    chi_upper: float
    band_bound: float
    epsM: float
    total_upper: float

    CSV_FIELDS = ("q", "M", "chi_lower", "chi_upper", "band_bound", "eps_M", "total_upper")

    def to_json(self) -> dict:
        return asdict(self)

    def csv_row(self) -> tuple:
        return (self.q, self.M, self.chi_lower, self.chi_upper, self.band_bound, self.epsM, self.total_upper)


def band_bound_from_chi(chi: float) -> float:
    # |1 - 1/C| with C = chi pi/sqrt3 + 1, in a form that stays nonzero for tiny chi
    x = chi * POINCARE
    return DIAMETER_BOUND * x / (1.0 + x)


def gh_band_bound(M: int, q, q0) -> GHBoundReport:
    """Upper bound on the complete Gromov-Hausdorff distance between the q and q0 circles.

    Composes the band comparison ``(A_M, L_q)`` vs ``(A_M, L_q0)`` (identity
    maps, Lipschitz constant ``chi * pi/sqrt3 + 1``) with the Fejer
    approximation of each circle by its band.
    """
    q, q0 = as_q(q), as_q(q0)
    lo, hi = chi_bounds(M, q, q0)
    band = band_bound_from_chi(hi)
    eps = epsilon_M(M).value
    return GHBoundReport(q.q, q0.q, M, lo, hi, band, eps, 2.0 * eps + band)


def continuity_scan(q0, q_list, M_list) -> list[GHBoundReport]:
    """For each q, the report minimizing ``total_upper`` over ``M_list``."""
    rows = []
    for q in q_list:
        reports = [gh_band_bound(M, q, q0) for M in M_list]
        rows.append(min(reports, key=lambda r: (r.total_upper, r.M)))
    return rows
