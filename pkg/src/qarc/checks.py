"""Property checks shared by ``qarc verify`` and the acceptance tests.

Each check runs at one of two sizes: ``full`` uses the sample counts and
parameter grids of the acceptance criteria, ``quick`` a reduced version of
the same property that fits a one-minute budget in total.  Every check is
deterministic given ``seed``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import laurent as lp
from . import qms, schur
from .laurent import LaurentPoly
from .qcalc import (
    delta_symbol,
    epsilon_M,
    epsilon_table,
    gamma_symbol,
    psi_symbol,
    q_integer,
    q_integers,
)

POINCARE = math.pi / math.sqrt(3.0)
ACCEPTANCE_QS = (0.2, 0.5, 0.9, 1.0 - 1e-7, 1.0)
ARC_N = 8192
# lp_value carries the solver's primal feasibility tolerance
ARC_MONOTONE_RTOL = 1e-7


@dataclass(frozen=True)
class CheckResult:
    name: str
    module: str
    criterion: int | None
    passed: bool
    detail: str
    seconds: float
    budget: float | None = None

    @property
    def within_budget(self) -> bool:
        return self.budget is None or self.seconds <= self.budget

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "module": self.module,
            "criterion": self.criterion,
            "passed": self.passed,
            "detail": self.detail,
            "seconds": round(self.seconds, 3),
        }


@dataclass(frozen=True)
class Check:
    name: str
    module: str
    func: Callable[[bool, int], tuple[bool, str]]
    criterion: int | None = None
    # wall-clock budget in seconds for the full size
    budget: float | None = None

    def run(self, full: bool = False, seed: int = 0) -> CheckResult:
        t0 = time.perf_counter()
        passed, detail = self.func(full, seed)
        dt = time.perf_counter() - t0
        return CheckResult(self.name, self.module, self.criterion, bool(passed), detail, dt,
                           self.budget if full else None)


REGISTRY: dict[str, Check] = {}


def check(name: str, module: str, criterion: int | None = None, budget: float | None = None):
    def register(func):
        REGISTRY[name] = Check(name, module, func, criterion, budget)
        return func

    return register


def acceptance_check(criterion: int) -> Check:
    for c in REGISTRY.values():
        if c.criterion == criterion:
            return c
    raise KeyError(f"no check registered for criterion {criterion}")


def run_checks(full: bool = False, seed: int = 0, names=None) -> list[CheckResult]:
    selected = REGISTRY.values() if names is None else [REGISTRY[n] for n in names]
    return [c.run(full, seed) for c in selected]


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng([seed, *key])


def _coeff_close(a: LaurentPoly, b: LaurentPoly, rtol: float) -> bool:
    M = max(a.band(), b.band())
    x, y = a.to_dense(M), b.to_dense(M)
    scale = max(np.abs(x).max(initial=0.0), np.abs(y).max(initial=0.0), 1e-300)
    return bool(np.all(np.abs(x - y) <= rtol * scale))


# acceptance criteria ---------------------------------------------------------


@check("fundamental_theorem", "laurent+schur", criterion=1, budget=60)
def _fundamental_theorem(full, seed):
    n_poly, n_mat = (500, 500) if full else (60, 40)
    bad = []
    for qi, q in enumerate(ACCEPTANCE_QS):
        rng = _rng(seed, 1, qi)
        for i in range(n_poly):
            f = lp.random_poly(int(rng.integers(0, 33)), rng)
            h = LaurentPoly.constant(lp.haar(f))
            if not _coeff_close(f - lp.q_integral(lp.d_q(f, q), q), h, 1e-12):
                bad.append(("f - int d f", q, i))
            if not _coeff_close(f - lp.d_q(lp.q_integral(f, q), q), h, 1e-12):
                bad.append(("g - d int g", q, i))
        dsym, psym = delta_symbol(q), psi_symbol(q)
        for i in range(n_mat):
            W = int(rng.integers(1, 65))
            T = schur.random_operator(W, seed * 100_003 + i, schur.ENSEMBLES[i % 3])
            E = schur.conditional_expectation(T).entries
            tol = 1e-12 * np.abs(T.entries)
            lhs1 = T.entries - schur.schur_apply(psym, schur.schur_apply(dsym, T)).entries
            lhs2 = T.entries - schur.schur_apply(dsym, schur.schur_apply(psym, T)).entries
            if not np.all(np.abs(lhs1 - E) <= tol):
                bad.append(("T - psi delta T", q, i))
            if not np.all(np.abs(lhs2 - E) <= tol):
                bad.append(("S - delta psi S", q, i))
    total = len(ACCEPTANCE_QS) * (n_poly + n_mat)
    return not bad, f"{total} polynomial/matrix cases x 2 identities, {len(bad)} failures {bad[:3]}"


@check("psi_bound", "schur", criterion=2, budget=120)
def _psi_bound(full, seed):
    per_ensemble = 200 if full else 20
    Ws, qs = (4, 16, 64), (0.2, 0.5, 0.9, 1.0)
    worst, violations, count = 0.0, 0, 0
    for e, ens in enumerate(schur.ENSEMBLES):
        for i in range(per_ensemble):
            W, q = Ws[i % 3], qs[(i // 3) % 4]
            T = schur.random_operator(W, seed * 100_003 + i, ens)
            lhs = schur.op_norm(schur.schur_apply(psi_symbol(q), T))
            rhs = POINCARE * schur.op_norm(T)
            worst = max(worst, lhs / rhs)
            violations += lhs > rhs * (1 + 1e-9)
            count += 1
    return violations == 0, f"{count} matrices, max ratio/(pi/sqrt3) = {worst:.6f}, {violations} violations"


@check("fejer_approximation", "laurent", criterion=3, budget=120)
def _fejer_approximation(full, seed):
    per = 200 if full else 25
    violations, worst, count = 0, 0.0, 0
    for Mi, M in enumerate((1, 4, 16, 64)):
        eps = epsilon_M(M).value
        for qi, q in enumerate((0.3, 0.7, 1.0)):
            rng = _rng(seed, 3, Mi, qi)
            for _ in range(per):
                f = lp.random_poly(int(rng.integers(1, 65)), rng)
                lhs = lp.sup_norm(f - lp.fejer(f, M)).grid_max
                rhs = eps * lp.seminorm_bracket(f, q).corrected_upper
                worst = max(worst, lhs / rhs)
                violations += lhs > rhs
                count += 1
    return violations == 0, f"{count} polynomials, max lhs/rhs = {worst:.4f}, {violations} violations"


@check("diameter", "qms", criterion=4, budget=300)
def _diameter(full, seed):
    Ms = (4, 16, 64) if full else (4, 16)
    angles = [2 * math.pi * k / 8 for k in range(8)]
    rows, ok = [], True
    for M in Ms:
        for q in (0.5, 1.0):
            band = qms.SpectralBand(M, q)
            try:
                d = qms.diameter_scan(band, angles)
            except qms.DiameterBoundViolation as exc:
                ok = False
                rows.append(f"M={M} q={q}: {exc}")
                continue
            rows.append(f"M={M} q={q}: {d:.6f}")
    return ok, f"max upper brackets (bound {qms.DIAMETER_BOUND:.6f}): " + "; ".join(rows)


@check("arc_length_recovery", "qms", criterion=5, budget=1200)
def _arc_length(full, seed):
    Ms = (16, 64, 256) if full else (16, 64)
    ok, rows = True, []
    for delta in (math.pi / 4, math.pi / 2, math.pi):
        arc = min(delta, 2 * math.pi - delta)
        values = []
        for M in Ms:
            r = qms.mk_between(M, 1.0, 0.0, delta, ARC_N)
            tol = 2 * epsilon_M(M).value + 0.01
            err = abs(r.lp_value - arc)
            ok &= err <= tol
            values.append(r.lp_value)
            rows.append(f"d={delta:.4f} M={M}: {r.lp_value:.9f} err {err:.3g} <= {tol:.4f}")
        mono = all(b >= a - ARC_MONOTONE_RTOL * abs(a) for a, b in zip(values, values[1:]))
        ok &= mono
        rows.append(f"d={delta:.4f} monotone={mono}")
    return ok, "; ".join(rows)


@check("leibniz_failure", "qms", criterion=6, budget=1)
def _leibniz(full, seed):
    ns = np.arange(4, 501)
    r = qms.leibniz_ratios(ns, 0.5)
    grows = bool(np.all(r >= 4.0))
    tail = ns >= 20
    asym = float(np.abs(r[tail] * 2 * 0.5 ** ns[tail] - 1.0).max())
    top = 10**6 if full else 10**5
    classical = bool(np.all(qms.leibniz_ratios(np.arange(1, top + 1), 1.0) == 1.0))
    ok = grows and asym <= 0.01 and classical
    return ok, (f"q=0.5: min ratio n>=4 {r.min():.4f}, max |2 q^n ratio - 1| n>=20 {asym:.2e}; "
                f"q=1 ratio == 1 for n <= {top}: {classical}")


@check("twist_continuity", "qms", criterion=7, budget=60)
def _twist_continuity(full, seed):
    Ms = list(range(0, 257))
    qs = (0.9, 0.99, 0.999)
    rows = qms.continuity_scan(1.0, qs, Ms)
    bounds = [r.total_upper for r in rows]
    floor = min(2 * e.value for e in epsilon_table(256))
    decreasing = bounds[0] > bounds[1] > bounds[2] > floor
    bad = []
    for M in Ms:
        b_far = qms.gh_band_bound(M, 0.9, 1.0).band_bound
        b_near = qms.gh_band_bound(M, 0.999, 1.0).band_bound
        # chi vanishes identically for M <= 1, where both sides are 0
        if not (b_near < 0.1 * b_far or b_near == b_far == 0.0):
            bad.append(M)
    detail = (f"bounds {[round(b, 6) for b in bounds]} floor {floor:.6f} decreasing={decreasing}; "
              f"band_bound(0.999) < band_bound(0.9)/10 fails for {len(bad)} of {len(Ms)} M"
              + (f" (first M={bad[0]})" if bad else ""))
    return decreasing and not bad, detail


@check("mk_metric_axioms", "qms", criterion=8, budget=180)
def _metric_axioms(full, seed):
    angles = [2 * math.pi * k / 8 for k in range(8)]
    d = {(a, b): qms.mk_between(16, 0.7, angles[a], angles[b]) for a in range(8) for b in range(8)}
    sym = max(abs(d[a, b].lp_value - d[b, a].lp_value) for a in range(8) for b in range(8))
    diag = all(d[a, a].lp_value == d[a, a].upper == d[a, a].lower == 0.0 for a in range(8))
    tri = min(d[a, c].upper + d[c, b].upper - d[a, b].lower
              for a in range(8) for b in range(8) for c in range(8))
    ok = sym <= 1e-8 and diag and tri >= 0.0
    return ok, f"symmetry gap {sym:.3g}, diagonal exactly zero {diag}, min triangle slack {tri:.3g}"


@check("sup_norm_oracle", "laurent", criterion=9, budget=60)
def _sup_norm_oracle(full, seed):
    count = 1000 if full else 150
    rng = _rng(seed, 9)
    violations, tightest = 0, math.inf
    for _ in range(count):
        M = int(rng.integers(1, 65))
        f = lp.random_poly(M, rng)
        # small grids stress the correction factor
        N = int(rng.integers(2 * M + 1, 16 * M + 3))
        cert = lp.sup_norm(f, N)
        fine = float(np.abs(lp.grid_values(f, 100 * N)).max())
        # the fine grid contains the coarse one; both FFTs carry rounding
        slack = lp.fft_error_bound(f, N) + lp.fft_error_bound(f, 100 * N)
        violations += not (cert.grid_max <= fine + slack and fine <= cert.corrected_upper)
        tightest = min(tightest, cert.corrected_upper - fine)
    return violations == 0, f"{count} polynomials, {violations} violations, min upper - fine max {tightest:.3g}"


# module invariants -----------------------------------------------------------


def _representable(q: float, limit: int = 500) -> int:
    """Largest ``n <= limit`` with ``[n]_q`` finite."""
    if q == 1.0:
        return limit
    return min(limit, int(math.log(np.finfo(float).max) / -math.log(q)))


@check("q_integer_identities", "qcalc")
def _q_integer_identities(full, seed):
    anti = dominates = True
    for q in np.linspace(0.05, 1.0, 20 if full else 5):
        ns = np.arange(-_representable(q), _representable(q) + 1)
        vals = q_integers(ns, q)
        anti &= np.array_equal(q_integers(-ns, q), -vals)
        dominates &= bool(np.all(np.abs(vals) >= np.abs(ns)))
    pascal = 0.0
    for q in (0.3, 0.7, 0.99, 1.0):
        for n in range(-50, 51, 1 if full else 7):
            for m in range(-50, 51, 1 if full else 7):
                t1, t2 = q**n * q_integer(m, q), q_integer(n, q) * q ** (-m)
                scale = max(1.0, abs(t1), abs(t2))
                pascal = max(pascal, abs(q_integer(n + m, q) - (t1 + t2)) / scale)
    q_edge = 1.0 - 1e-6
    branch = max(abs(q_integer(n, q_edge) - math.fsum(q_edge ** (n - 1 - 2 * k) for k in range(n))) / n
                 for n in range(1, 201))
    ok = anti and dominates and pascal <= 1e-10 and branch <= 1e-12
    return ok, (f"antisymmetry {anti}, |[n]|>=|n| {dominates}, q-Pascal rel err {pascal:.2e}, "
                f"branch gap at 1-1e-6 {branch:.2e}")


@check("epsilon_constant", "qcalc")
def _epsilon(full, seed):
    table = epsilon_table(10_000 if full else 1_000)
    values = [e.value for e in table]
    decreasing = all(b < a for a, b in zip(values, values[1:]))
    e0 = epsilon_M(0)
    exact0 = math.pi / math.sqrt(3.0)
    e0_ok = e0.value >= exact0 and e0.value - exact0 < 1e-9 and e0.tail_lo <= e0.tail_hi
    e256 = epsilon_M(256).value
    ok = decreasing and e0_ok and 0.1240 <= e256 <= 0.1255
    return ok, f"strictly decreasing {decreasing}, eps_0 {e0.value:.9f} vs pi/sqrt3, eps_256 {e256:.6f}"


@check("calculus_identities", "laurent")
def _calculus(full, seed):
    rng = _rng(seed, 20)
    pairs = 100 if full else 20
    fails = []
    for q in (0.3, 0.7, 0.99, 1.0):
        for i in range(pairs):
            f = lp.random_poly(int(rng.integers(0, 21)), rng)
            g = lp.random_poly(int(rng.integers(0, 21)), rng)
            lhs = lp.d_q(f * g, q)
            rhs = lp.sigma(f, q) * lp.d_q(g, q) + lp.d_q(f, q) * lp.sigma(g, q, -1)
            if not _coeff_close(lhs, rhs, 1e-12):
                fails.append(("leibniz", q, i))
            if not _coeff_close(lp.d_q(lp.adjoint(f), q), lp.adjoint(lp.d_q(f, q)), 1e-12):
                fails.append(("star", q, i))
            if not _coeff_close(lp.sigma(lp.adjoint(f), q), lp.adjoint(lp.sigma(f, q, -1)), 1e-12):
                fails.append(("sigma star", q, i))
    return not fails, f"{4 * pairs} pairs, {len(fails)} failures {fails[:3]}"


@check("function_estimates", "laurent")
def _function_estimates(full, seed):
    rng = _rng(seed, 21)
    count = 200 if full else 40
    bad = {"poincare": 0, "fejer contraction": 0, "fourier bound": 0}
    for i in range(count):
        q = (0.3, 0.7, 1.0)[i % 3]
        f = lp.random_poly(int(rng.integers(1, 65)), rng)
        cert = lp.sup_norm(f)
        centered = f - LaurentPoly.constant(lp.haar(f))
        if lp.sup_norm(centered).grid_max > POINCARE * lp.seminorm_bracket(f, q).corrected_upper:
            bad["poincare"] += 1
        for M in (1, 4, 16, 64):
            if lp.sup_norm(lp.fejer(f, M)).grid_max > cert.corrected_upper:
                bad["fejer contraction"] += 1
        if max(abs(a) for a in f.coeffs.values()) > cert.corrected_upper:
            bad["fourier bound"] += 1
    return not any(bad.values()), f"{count} polynomials, violations {bad}"


@check("operator_estimates", "schur")
def _operator_estimates(full, seed):
    count = 60 if full else 15
    bad = {"fejer contraction": 0, "poincare": 0, "eps_M": 0, "star": 0, "bimodule": 0, "power vs svd": 0}
    rng = _rng(seed, 22)
    for i in range(count):
        W = (4, 16, 32)[i % 3]
        q = (0.2, 0.5, 0.9, 1.0)[i % 4]
        M = (1, 4, 16)[(i // 3) % 3]
        T = schur.random_operator(W, seed * 100_003 + 7 * i, schur.ENSEMBLES[i % 3])
        if i % 2:
            # compressions of Laurent operators keep both sides moderate
            T = schur.compress(lp.random_poly(min(M + 3, W), rng), W)
        dsym = delta_symbol(q)
        dT = schur.schur_apply(dsym, T)
        nT = schur.op_norm(T)
        if schur.op_norm(schur.schur_apply(gamma_symbol(M), T)) > nT * (1 + 1e-9):
            bad["fejer contraction"] += 1
        off = T - schur.conditional_expectation(T)
        if schur.op_norm(off) > POINCARE * schur.op_norm(dT) * (1 + 1e-9):
            bad["poincare"] += 1
        lhs = schur.op_norm(T - schur.schur_apply(gamma_symbol(M), T))
        if lhs > epsilon_M(M).value * schur.op_norm(dT) * (1 + 1e-9):
            bad["eps_M"] += 1
        if not np.allclose(schur.schur_apply(dsym, T.adjoint()).entries, dT.adjoint().entries,
                           rtol=1e-12, atol=0.0):
            bad["star"] += 1
        D1 = schur.diagonal(rng.standard_normal(2 * W + 1) + 1j * rng.standard_normal(2 * W + 1))
        D2 = schur.diagonal(rng.standard_normal(2 * W + 1))
        a = schur.schur_apply(dsym, D1 @ T @ D2).entries
        b = (D1 @ dT @ D2).entries
        if not np.allclose(a, b, rtol=1e-10, atol=1e-12 * np.abs(b).max()):
            bad["bimodule"] += 1
        if abs(schur.op_norm(T, "power") - schur.op_norm(T, "svd")) > 1e-6 * nT:
            bad["power vs svd"] += 1
    return not any(bad.values()), f"{count} operators, violations {bad}"


@check("mk_invariances", "qms")
def _mk_invariances(full, seed):
    rng = _rng(seed, 23)
    count = 12 if full else 4
    rot, pos = 0.0, math.inf
    for _ in range(count):
        M = int(rng.integers(1, 17))
        q = float(rng.choice([0.5, 0.8, 1.0]))
        a, b, shift = rng.uniform(0, 2 * math.pi, 3)
        if abs(math.remainder(a - b, 2 * math.pi)) < 0.1:
            b = (a + 0.5) % (2 * math.pi)
        r1 = qms.mk_between(M, q, a, b)
        r2 = qms.mk_between(M, q, a + shift, b + shift)
        rot = max(rot, abs(r1.lp_value - r2.lp_value))
        pos = min(pos, r1.lower)
    ok = rot <= 1e-8 and pos >= 1e-6
    return ok, f"{count} pairs, rotation gap {rot:.3g}, min lower bracket for |d| >= 0.1 {pos:.4g}"


@check("gh_bounds", "qms")
def _gh_bounds(full, seed):
    ok = True
    for M in range(0, 65 if full else 17):
        for q in (0.5, 0.9, 0.99, 1.0):
            lo, hi = qms.chi_bounds(M, q, 1.0)
            rep = qms.gh_band_bound(M, q, 1.0)
            ok &= lo <= hi
            ok &= (rep.band_bound == 0.0) == (rep.chi_upper == 0.0)
            ok &= rep.total_upper == 2 * rep.epsM + rep.band_bound
        same = qms.gh_band_bound(M, 0.5, 0.5)
        ok &= same.band_bound == 0.0 and same.total_upper == 2 * same.epsM
    # |ratio - q^-n / 2| = q^n / 2 exactly; checked in relative form
    lb = [abs(2 * q**n * qms.leibniz_ratio(n, q) - 1.0) for q in (0.3, 0.5, 0.8) for n in (100, 200)]
    ok &= max(lb) < 1e-9
    return ok, f"chi bracket ordered, band_bound = 0 iff chi = 0, leibniz max |2 q^n ratio - 1| {max(lb):.2e}"
