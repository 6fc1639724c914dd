"""Parameter search: lattice sweeps, local refinement, unit-success optima,
fidelity/success-probability frontiers, baselines and improvement maps.

The lattice stage runs on :mod:`qprotect.batch`.  Whenever the feedback
angles are free they are set to their exact per-outcome optimum instead of
being gridded, since G does not depend on them.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Dict, Iterator, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from . import batch
from .scheme import ControlParams, Ensemble, check_noise, protect, wrap_angle

PARAM_NAMES = ("alpha", "p", "p1", "p2", "gamma_plus", "gamma_minus")
ANGLE_PARAMS = frozenset({"alpha", "gamma_plus", "gamma_minus"})
STRENGTH_STEP = 0.02
ANGLE_STEP = math.pi / 60
GRID_CAP = 10 ** 8
CHUNK = 1 << 16
BISECTOR_ALPHA = -math.pi / 2


class BaselineKind(str, enum.Enum):
    GQCC = "gqcc"
    QCC = "qcc"
    HELSTROM = "helstrom"
    FFC = "ffc"
    PRIOR_BLIND = "prior-blind"


@dataclass(frozen=True)
class AxisSpec:
    lo: float
    hi: float
    step: float

    def __post_init__(self):
        if not (self.lo <= self.hi and self.step > 0):
            raise ValueError(f"invalid axis {self}")

    def values(self, periodic: bool = False) -> np.ndarray:
        n = int(math.floor((self.hi - self.lo) / self.step + 1e-9))
        vals = self.lo + self.step * np.arange(n + 1)
        if periodic and n > 0 and abs(vals[-1] - vals[0] - 2 * math.pi) < 1e-9:
            vals = vals[:-1]
        return vals

    @classmethod
    def point(cls, value: float) -> "AxisSpec":
        return cls(value, value, 1.0)

    @classmethod
    def parse(cls, text: str) -> "AxisSpec":
        """``lo:hi:step`` or a single value."""
        parts = [float(v) for v in text.split(":")]
        if len(parts) == 1:
            return cls.point(parts[0])
        if len(parts) != 3:
            raise ValueError(f"axis must be lo:hi:step, got {text!r}")
        return cls(*parts)


def _angle_axis() -> AxisSpec:
    return AxisSpec(-math.pi, math.pi, ANGLE_STEP)


def _strength_axis() -> AxisSpec:
    return AxisSpec(0.0, 1.0, STRENGTH_STEP)


@dataclass(frozen=True)
class GridSpec:
    alpha: AxisSpec = field(default_factory=_angle_axis)
    p: AxisSpec = field(default_factory=_strength_axis)
    p1: AxisSpec = field(default_factory=_strength_axis)
    p2: AxisSpec = field(default_factory=_strength_axis)
    gamma_plus: AxisSpec = field(default_factory=_angle_axis)
    gamma_minus: AxisSpec = field(default_factory=_angle_axis)
    paper_range: bool = False
    definite: bool = False

    def axis(self, name: str) -> np.ndarray:
        if self.definite and name in ("p1", "p2"):
            return np.zeros(1)
        vals = getattr(self, name).values(periodic=name in ANGLE_PARAMS)
        if name in ANGLE_PARAMS:
            vals = np.array([wrap_angle(v) for v in vals])
        if self.paper_range and name == "p":
            vals = vals[vals <= 0.5 + 1e-12]
        return vals

    def axes(self, names: Sequence[str] = PARAM_NAMES) -> List[np.ndarray]:
        return [self.axis(n) for n in names]

    def size(self, names: Sequence[str] = PARAM_NAMES) -> int:
        return int(np.prod([len(a) for a in self.axes(names)]))

    @property
    def p_max(self) -> float:
        return 0.5 if self.paper_range else 1.0

    def pin(self, **values: float) -> "GridSpec":
        return replace(self, **{k: AxisSpec.point(v) for k, v in values.items()})


@dataclass(frozen=True)
class Optimum:
    params: ControlParams
    F: float
    G: float
    objective: str


class HelstromBasis(NamedTuple):
    alpha: float
    degenerate: bool


def helstrom_angle(e: Ensemble) -> HelstromBasis:
    """Basis angle whose ``V_+`` is the positive eigenvector of ``s+ rho+ - s- rho-``.

    A vanishing eigenvalue gap has no preferred basis; the bisector angle is
    returned with ``degenerate=True``.
    """
    lam = e.s_plus * np.outer(e.psi_plus, e.psi_plus.conj()) - e.s_minus * np.outer(e.psi_minus, e.psi_minus.conj())
    w, v = np.linalg.eigh(lam)
    if w[1] - w[0] < 1e-12:
        return HelstromBasis(BISECTOR_ALPHA, True)
    top = v[:, 1]
    # coordinates in the |+-> frame, then the in-plane polar angle of its Bloch vector
    a, b = (top[0] + top[1]) / math.sqrt(2), (top[0] - top[1]) / math.sqrt(2)
    x = 2 * (a.conjugate() * b).real
    y = 2 * (a.conjugate() * b).imag
    z = abs(a) ** 2 - abs(b) ** 2
    beta = math.atan2(x * math.cos(e.phi) + y * math.sin(e.phi), z)
    return HelstromBasis(wrap_angle(beta - math.pi / 2), False)


def baseline_alpha(e: Ensemble, kind: BaselineKind, qcc_alpha: float = BISECTOR_ALPHA) -> Optional[float]:
    """Pinned basis angle of a baseline, or None when the angle is free."""
    kind = BaselineKind(kind)
    if kind in (BaselineKind.QCC, BaselineKind.FFC):
        return qcc_alpha
    if kind is BaselineKind.HELSTROM:
        return helstrom_angle(e).alpha
    return None


# ---------------------------------------------------------------------------
# parallel plumbing


def _parallel_map(func, items, jobs: int):
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [func(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items))


def default_jobs() -> int:
    env = os.environ.get("QPROTECT_JOBS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _lattice_values(axes, start, stop):
    idx = np.arange(start, stop)
    coords = np.unravel_index(idx, [len(a) for a in axes])
    return idx, [a[c] for a, c in zip(axes, coords)]


# ---------------------------------------------------------------------------
# sweep

SWEEP_COLUMNS = ("f_plus", "f_minus", "g_plus", "g_minus", "F", "G")


@dataclass
class SweepChunk:
    """Lattice points ``[start, start + len)`` in lattice order."""

    start: int
    params: np.ndarray  # (n, 6)
    values: np.ndarray  # (n, 6): f_plus, f_minus, g_plus, g_minus, F, G
    degenerate: np.ndarray  # (n,) bool

    def records(self) -> Iterator[Tuple[ControlParams, Tuple[float, ...], Optional[str]]]:
        for k in range(len(self.params)):
            err = "degenerate" if self.degenerate[k] else None
            yield ControlParams(*map(float, self.params[k])), tuple(map(float, self.values[k])), err


def _sweep_chunk(task) -> SweepChunk:
    theta, s_plus, r, axes, start, stop = task
    _, vals = _lattice_values(axes, start, stop)
    out = batch.evaluate(theta, s_plus, r, *vals)
    values = np.stack([np.broadcast_to(v, (stop - start,)) for v in out], axis=1)
    degenerate = np.isnan(values[:, 4])
    return SweepChunk(start, np.stack(vals, axis=1), values, degenerate)


def sweep_chunks(e: Ensemble, r: float, grid: GridSpec, jobs: int = 1, cap: int = GRID_CAP,
                 chunk: int = CHUNK) -> Iterator[SweepChunk]:
    """Evaluate every lattice point (last parameter varies fastest), in lattice order."""
    check_noise(r)
    axes = grid.axes()
    total = grid.size()
    if total > cap:
        raise ValueError(f"grid has {total} points, above the cap of {cap}")
    tasks = [(e.theta, e.s_plus, r, axes, s, min(total, s + chunk)) for s in range(0, total, chunk)]
    # bounded batches keep memory flat while preserving order
    step = max(1, jobs) * 4
    for b in range(0, len(tasks), step):
        yield from _parallel_map(_sweep_chunk, tasks[b:b + step], jobs)


def sweep(e: Ensemble, r: float, grid: GridSpec, jobs: int = 1, cap: int = GRID_CAP):
    """Stream ``(ControlParams, (f+, f-, g+, g-, F, G), error)`` per lattice point."""
    for ch in sweep_chunks(e, r, grid, jobs, cap):
        yield from ch.records()


# ---------------------------------------------------------------------------
# local refinement


def _objective_value(F, G, objective, g_target, g_band, f_floor, penalty):
    if math.isnan(F):
        return -math.inf
    if objective == "F":
        val = F
        if g_target is not None:
            val -= penalty * abs(G - g_target)
        if g_band is not None:
            lo, hi = g_band
            val -= penalty * (max(0.0, lo - G) + max(0.0, G - hi))
        return val
    if objective == "G":
        return G - penalty * max(0.0, (f_floor or 0.0) - F)
    raise ValueError(f"unknown objective {objective!r}")


def refine(
    e: Ensemble,
    r: float,
    seed: ControlParams,
    objective: str = "F",
    free: Sequence[str] = ("alpha", "p", "p1", "p2"),
    optimize_gamma: bool = True,
    g_target: Optional[float] = None,
    g_band: Optional[Tuple[float, float]] = None,
    f_floor: Optional[float] = None,
    penalty: float = 1e3,
    p_max: float = 1.0,
    max_iter: int = 2000,
    xatol: float = 1e-10,
) -> Optimum:
    """Nelder-Mead polish of ``seed`` over the ``free`` parameters.

    ``objective`` is ``"F"`` (optionally penalized by ``penalty * |G - g_target|``
    or by the distance of G from ``g_band``) or ``"G"`` (penalized below
    ``f_floor``).  With ``optimize_gamma`` the feedback angles take their exact
    optimum at every evaluation; otherwise they stay at the seed's values
    unless listed in ``free``.  Strengths are clipped to ``[0, p_max]``
    (``p1``, ``p2`` to ``[0, 1]``).  The seed is returned unchanged if the
    search does not beat it.
    """
    free = tuple(free)
    base = dict(zip(PARAM_NAMES, seed.as_tuple()))
    theta, s_plus = e.theta, e.s_plus
    bounds = []
    for name in free:
        if name in ANGLE_PARAMS:
            bounds.append((None, None))
        else:
            bounds.append((0.0, p_max if name == "p" else 1.0))

    def params_of(x):
        vals = dict(base)
        vals.update(zip(free, x))
        return vals

    def evaluate(vals):
        args = (theta, s_plus, r, vals["alpha"], vals["p"], vals["p1"], vals["p2"])
        if optimize_gamma:
            F, G, gp, gm = batch.best_rotations_scalar(*args)
            vals["gamma_plus"], vals["gamma_minus"] = gp, gm
        else:
            F, G = batch.evaluate_scalar(*args, vals["gamma_plus"], vals["gamma_minus"])
        return F, G

    def score(vals):
        F, G = evaluate(vals)
        return _objective_value(F, G, objective, g_target, g_band, f_floor, penalty)

    def clipped(x):
        return [min(hi, max(lo, v)) if lo is not None else v for v, (lo, hi) in zip(x, bounds)]

    seed_vals = dict(base)
    seed_score = score(seed_vals)
    best_vals = seed_vals
    if free:
        x0 = np.array([base[n] for n in free], dtype=float)
        simplex = [x0]
        for k, name in enumerate(free):
            h = ANGLE_STEP if name in ANGLE_PARAMS else STRENGTH_STEP
            lo, hi = bounds[k]
            v = x0.copy()
            v[k] = v[k] + h if hi is None or v[k] + h <= hi else v[k] - h
            simplex.append(v)
        res = minimize(
            lambda x: -score(params_of(clipped(x))),
            x0,
            method="Nelder-Mead",
            bounds=bounds if any(b[0] is not None for b in bounds) else None,
            options={"initial_simplex": np.array(simplex), "xatol": xatol, "fatol": math.inf,
                     "maxiter": max_iter, "maxfev": 4 * max_iter},
        )
        cand = params_of(clipped(res.x))
        cand_score = score(cand)
        if cand_score > seed_score:
            best_vals = cand
    params = ControlParams.wrapped(*(best_vals[n] for n in PARAM_NAMES))
    result = protect(e, params, r)
    return Optimum(params, result.F, result.G, objective)


# ---------------------------------------------------------------------------
# unit-success optima


def _profiled_grid(e: Ensemble, r: float, alphas, ps, p1s, p2s, optimize_gamma: bool):
    """``(F, G, gp, gm, (A, P, P1, P2))`` over the outer-product lattice (alpha slowest)."""
    A, P, P1, P2 = np.meshgrid(alphas, ps, p1s, p2s, indexing="ij")
    A, P, P1, P2 = (v.ravel() for v in (A, P, P1, P2))
    if optimize_gamma:
        F, G, gp, gm = batch.best_rotations(e.theta, e.s_plus, r, A, P, P1, P2)
    else:
        gp = gm = np.zeros_like(A)
        F, G = batch.evaluate(e.theta, e.s_plus, r, A, P, P1, P2, gp, gm)[4:]
    return np.broadcast_to(F, A.shape), np.broadcast_to(G, A.shape), gp, gm, (A, P, P1, P2)


def _argmax(values) -> int:
    v = np.where(np.isnan(values), -np.inf, values)
    return int(np.argmax(v))


def definite_optimum(
    e: Ensemble,
    r: float,
    baseline: BaselineKind = BaselineKind.GQCC,
    grid: Optional[GridSpec] = None,
    qcc_alpha: float = BISECTOR_ALPHA,
) -> Optimum:
    """Best fidelity with both postweak strengths pinned to zero (G = 1).

    Grid seed over the baseline's free parameters followed by :func:`refine`.
    The full family is also refined from the pinned baselines' optima, so it
    can never come out below them.
    """
    check_noise(r)
    kind = BaselineKind(baseline)
    grid = grid or GridSpec()
    if kind is BaselineKind.PRIOR_BLIND:
        blind = _equal_prior_optimum(e.theta, e.phi, r, grid, qcc_alpha)
        res = protect(e, blind, r)
        return Optimum(blind, res.F, res.G, f"definite/{kind.value}")
    pinned_alpha = baseline_alpha(e, kind, qcc_alpha)
    optimize_gamma = kind is not BaselineKind.FFC
    alphas = grid.axis("alpha") if pinned_alpha is None else np.array([pinned_alpha])
    if pinned_alpha is None:
        extra = [qcc_alpha, helstrom_angle(e).alpha]
        alphas = np.concatenate([alphas, [a for a in extra if not np.any(np.isclose(alphas, a, atol=1e-15))]])
    ps = grid.axis("p")
    F, G, gp, gm, (A, P, _, _) = _profiled_grid(e, r, alphas, ps, [0.0], [0.0], optimize_gamma)
    k = _argmax(F)
    seed = ControlParams.wrapped(A[k], P[k], 0.0, 0.0, gp[k], gm[k])
    free = ("p",) if pinned_alpha is not None else ("alpha", "p")
    best = refine(e, r, seed, "F", free=free, optimize_gamma=optimize_gamma, p_max=grid.p_max)
    if kind is BaselineKind.GQCC:
        for other in (BaselineKind.QCC, BaselineKind.HELSTROM):
            o = definite_optimum(e, r, other, grid, qcc_alpha)
            cand = refine(e, r, o.params, "F", free=free, p_max=grid.p_max)
            if cand.F > best.F:
                best = cand
    return Optimum(best.params, best.F, best.G, f"definite/{kind.value}")


@lru_cache(maxsize=4096)
def _equal_prior_optimum_cached(theta, phi, r, grid, qcc_alpha) -> ControlParams:
    return definite_optimum(Ensemble(theta, phi, 0.5), r, BaselineKind.GQCC, grid, qcc_alpha).params


def _equal_prior_optimum(theta, phi, r, grid, qcc_alpha) -> ControlParams:
    return _equal_prior_optimum_cached(float(theta), float(phi), float(r), grid, float(qcc_alpha))


# ---------------------------------------------------------------------------
# frontiers


@dataclass(frozen=True)
class FrontierPoint:
    g_target: float
    F_best: float
    G: float
    params: ControlParams


@dataclass
class Frontier:
    bins: int
    raw: List[Optional[FrontierPoint]]  # per bin, None for an empty bin
    unit_success: Optimum
    baseline: str

    @property
    def points(self) -> List[FrontierPoint]:
        """Non-dominated bin points, ordered by G."""
        pts = [p for p in self.raw if p is not None]
        keep = []
        for a in pts:
            dominated = any(
                b is not a and b.F_best >= a.F_best and b.G >= a.G and (b.F_best > a.F_best or b.G > a.G)
                for b in pts
            )
            if not dominated:
                keep.append(a)
        return keep

    def bin_of(self, g: float) -> int:
        return bin_index(np.array([g]), self.bins)[0]


def bin_index(G: np.ndarray, bins: int) -> np.ndarray:
    """Bin ``k`` covers ``(k/bins, (k+1)/bins]``; ``-1`` for G <= 0 or NaN."""
    k = np.ceil(np.where(np.isnan(G), 0.0, G) * bins - 1e-12).astype(int) - 1
    k = np.minimum(k, bins - 1)
    return np.where(np.isnan(G) | (G <= 0), -1, k)


def _pareto_chunk(task):
    theta, s_plus, r, axes, optimize_gamma, bins, start, stop = task
    idx, (A, P, P1, P2) = _lattice_values(axes, start, stop)
    if optimize_gamma:
        F, G, gp, gm = batch.best_rotations(theta, s_plus, r, A, P, P1, P2)
    else:
        gp = gm = np.zeros_like(A)
        F, G = batch.evaluate(theta, s_plus, r, A, P, P1, P2, gp, gm)[4:]
    F = np.where(np.isnan(F), -np.inf, F)
    k = bin_index(G, bins)
    ok = k >= 0
    best_F = np.full(bins, -np.inf)
    best_i = np.full(bins, -1)
    if ok.any():
        # per bin: highest F, lowest index on ties
        order = np.lexsort((idx[ok], -F[ok], k[ok]))
        kk = k[ok][order]
        first = np.r_[True, kk[1:] != kk[:-1]]
        sel = order[first]
        best_F[k[ok][sel]] = F[ok][sel]
        best_i[k[ok][sel]] = idx[ok][sel]
    return best_F, best_i


def pareto(
    e: Ensemble,
    r: float,
    bins: int = 100,
    grid: Optional[GridSpec] = None,
    baseline: BaselineKind = BaselineKind.GQCC,
    seeds: Sequence[ControlParams] = (),
    qcc_alpha: float = BISECTOR_ALPHA,
    jobs: int = 1,
    refine_points: bool = True,
    cap: int = GRID_CAP,
) -> Frontier:
    """Best fidelity per success-probability bin over ``(0, 1]``.

    ``seeds`` are extra feasible parameter sets (for instance another
    baseline's frontier) considered alongside the lattice.
    """
    if bins < 2:
        raise ValueError("bins must be at least 2")
    check_noise(r)
    kind = BaselineKind(baseline)
    if kind is BaselineKind.PRIOR_BLIND:
        raise ValueError("the prior-blind baseline has no frontier")
    grid = grid or GridSpec()
    pinned_alpha = baseline_alpha(e, kind, qcc_alpha)
    optimize_gamma = kind is not BaselineKind.FFC
    alphas = grid.axis("alpha") if pinned_alpha is None else np.array([pinned_alpha])
    if pinned_alpha is None:
        extra = [qcc_alpha, helstrom_angle(e).alpha]
        alphas = np.concatenate([alphas, [a for a in extra if not np.any(np.isclose(alphas, a, atol=1e-15))]])
    axes = [alphas, grid.axis("p"), grid.axis("p1"), grid.axis("p2")]
    total = int(np.prod([len(a) for a in axes]))
    if total > cap:
        raise ValueError(f"grid has {total} points, above the cap of {cap}")
    tasks = [(e.theta, e.s_plus, r, axes, optimize_gamma, bins, s, min(total, s + CHUNK))
             for s in range(0, total, CHUNK)]
    best_F = np.full(bins, -np.inf)
    best_i = np.full(bins, -1)
    for cF, ci in _parallel_map(_pareto_chunk, tasks, jobs):
        better = cF > best_F
        best_F = np.where(better, cF, best_F)
        best_i = np.where(better, ci, best_i)

    def lattice_params(i):
        _, (a, p, p1, p2) = _lattice_values(axes, i, i + 1)
        vals = (float(a[0]), float(p[0]), float(p1[0]), float(p2[0]))
        if optimize_gamma:
            _, _, gp, gm = batch.best_rotations_scalar(e.theta, e.s_plus, r, *vals)
        else:
            gp = gm = 0.0
        return ControlParams.wrapped(*vals, gp, gm)

    cand: List[Optional[ControlParams]] = [lattice_params(int(i)) if i >= 0 else None for i in best_i]
    for s in seeds:
        res = protect(e, s, r)
        k = int(bin_index(np.array([res.G]), bins)[0])
        if k >= 0 and res.F > best_F[k]:
            best_F[k], cand[k] = res.F, s
    free = ("p", "p1", "p2") if pinned_alpha is not None else ("alpha", "p", "p1", "p2")
    raw: List[Optional[FrontierPoint]] = []
    for k, c in enumerate(cand):
        if c is None:
            raw.append(None)
            continue
        lo, hi = k / bins, (k + 1) / bins
        base = protect(e, c, r)
        best = Optimum(c, base.F, base.G, "F")
        if refine_points:
            o = refine(e, r, c, "F", free=free, optimize_gamma=optimize_gamma,
                       g_band=(lo + 1e-12, hi), p_max=grid.p_max)
            if lo < o.G <= hi and o.F > best.F:
                best = o
        raw.append(FrontierPoint((k + 0.5) / bins, best.F, best.G, best.params))
    unit = definite_optimum(e, r, kind, grid, qcc_alpha)
    return Frontier(bins, raw, unit, kind.value)


def compare(e: Ensemble, r: float, baseline: BaselineKind = BaselineKind.QCC, bins: int = 100,
            grid: Optional[GridSpec] = None, qcc_alpha: float = BISECTOR_ALPHA, jobs: int = 1):
    """Paired frontiers ``(full family, baseline)``.

    The baseline's frontier points seed the full family's search; they are
    feasible for it, so the full frontier is never below the baseline's.
    """
    base = pareto(e, r, bins, grid, baseline, qcc_alpha=qcc_alpha, jobs=jobs)
    seeds = [p.params for p in base.raw if p is not None] + [base.unit_success.params]
    full = pareto(e, r, bins, grid, BaselineKind.GQCC, seeds=seeds, qcc_alpha=qcc_alpha, jobs=jobs)
    return full, base


def improvement(e: Ensemble, r: float, g_target: float = 1.0,
                baseline: BaselineKind = BaselineKind.QCC, bins: int = 100,
                grid: Optional[GridSpec] = None, qcc_alpha: float = BISECTOR_ALPHA,
                jobs: int = 1) -> Optional[float]:
    """Fidelity gain of the full family over ``baseline`` at success probability ``g_target``.

    ``g_target = 1`` compares unit-success optima directly; otherwise the
    frontiers' bins containing ``g_target`` are compared, and None marks an
    empty bin on either side.
    """
    if not 0 < g_target <= 1:
        raise ValueError("g_target must lie in (0, 1]")
    if g_target == 1.0:
        full = definite_optimum(e, r, BaselineKind.GQCC, grid, qcc_alpha)
        base = definite_optimum(e, r, baseline, grid, qcc_alpha)
        return full.F - base.F
    full, base = compare(e, r, baseline, bins, grid, qcc_alpha, jobs)
    k = full.bin_of(g_target)
    a, b = full.raw[k], base.raw[k]
    if a is None or b is None:
        return None
    return a.F_best - b.F_best


# ---------------------------------------------------------------------------
# heatmaps

HEATMAP_QUANTITIES = ("delta", "F_opt", "alpha_opt")
HEATMAP_AXES = ("s_plus", "theta", "r", "phi")


def _heatmap_cell(task):
    values, quantity, baseline, grid, qcc_alpha = task
    e = Ensemble(values["theta"], values["phi"], values["s_plus"])
    r = values["r"]
    full = definite_optimum(e, r, BaselineKind.GQCC, grid, qcc_alpha)
    if quantity == "F_opt":
        return full.F
    if quantity == "alpha_opt":
        return full.params.alpha
    return full.F - definite_optimum(e, r, baseline, grid, qcc_alpha).F


def _heatmap_row(task):
    rows, quantity, baseline, grid, qcc_alpha = task
    return [_heatmap_cell((v, quantity, baseline, grid, qcc_alpha)) for v in rows]


def heatmap(
    axis1: Tuple[str, Sequence[float]],
    axis2: Tuple[str, Sequence[float]],
    fixed: Dict[str, float],
    quantity: str = "delta",
    baseline: BaselineKind = BaselineKind.QCC,
    grid: Optional[GridSpec] = None,
    qcc_alpha: float = BISECTOR_ALPHA,
    jobs: int = 1,
) -> np.ndarray:
    """Matrix of unit-success quantities; rows follow ``axis1``, columns ``axis2``."""
    if quantity not in HEATMAP_QUANTITIES:
        raise ValueError(f"quantity must be one of {HEATMAP_QUANTITIES}")
    (n1, v1), (n2, v2) = axis1, axis2
    for n in (n1, n2):
        if n not in HEATMAP_AXES:
            raise ValueError(f"heatmap axis must be one of {HEATMAP_AXES}, got {n!r}")
    base = {"phi": 0.0, **fixed}
    missing = {"theta", "s_plus", "r"} - set(base) - {n1, n2}
    if missing:
        raise ValueError(f"missing fixed values for {sorted(missing)}")
    grid = grid or GridSpec()
    grid = replace(grid, definite=True)
    kind = BaselineKind(baseline)
    tasks = []
    for a in v1:
        row = [{**base, n1: float(a), n2: float(b)} for b in v2]
        tasks.append((row, quantity, kind, grid, qcc_alpha))
    return np.array(_parallel_map(_heatmap_row, tasks, jobs), dtype=float).reshape(len(v1), len(v2))
