"""Analytic equal-prior, unit-success formulas and their check against simulation.

The formulas are evaluated exactly as written, in terms of their own angle
``alpha_cf`` (the angle between ``|psi_+>`` and ``|V_+>``).  They are not
assumed to agree with the operator pipeline: :func:`validate_closed_forms`
measures the disagreement and reports it.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from . import oracle
from .scheme import Ensemble, check_noise


def _bracket(r, alpha, p):
    """Cosine coefficient of the reduced fidelity."""
    s2 = np.sin(alpha) ** 2
    c2 = np.cos(alpha) ** 2
    return s2 * (np.sqrt(p * (1 - p) * (1 - r)) - 0.5) - c2 * (1 - p) * r + 0.5


def _sine_coeff(r, alpha, p):
    return np.sin(alpha) * (p + r - p * r - 0.5)


def reduced_fidelity(r, alpha_cf, p, gamma):
    """Equal-prior definite fidelity as a function of ``(r, alpha_cf, p, gamma)``.

    Broadcasts over arrays.  Not clamped: values outside ``[0, 1]`` are
    possible and are a symptom worth reporting.
    """
    return (np.sin(gamma) * _sine_coeff(r, alpha_cf, p)
            + np.cos(gamma) * _bracket(r, alpha_cf, p) + 0.5)


def optimal_gamma(r: float, alpha_cf: float, p: float) -> float:
    """Feedback angle maximizing :func:`reduced_fidelity`.

    The single-argument arctangent leaves a pi ambiguity; both candidates are
    evaluated and the better one is returned (wrapped to ``[-pi, pi)``).
    """
    num = float(_sine_coeff(r, alpha_cf, p))
    den = float(_bracket(r, alpha_cf, p))
    if num == 0.0 and den == 0.0:
        return 0.0
    base = math.pi / 2 if den == 0.0 else math.atan(num / den)
    candidates = [base, base + math.pi if base < 0 else base - math.pi]
    values = [float(reduced_fidelity(r, alpha_cf, p, g)) for g in candidates]
    best = candidates[int(np.argmax(values))]
    return -math.pi if best >= math.pi else best


def fidelity_at_optimal_gamma(r, alpha_cf, p):
    """``sqrt(sine_coeff^2 + bracket^2) + 1/2``; broadcasts."""
    return np.hypot(_sine_coeff(r, alpha_cf, p), _bracket(r, alpha_cf, p)) + 0.5


@dataclass
class QuarticData:
    x: Tuple[float, ...]
    y: Tuple[float, ...]
    coefficients: Tuple[float, ...]  # c4 .. c0
    real_roots_in_unit_interval: List[float]
    degree: int
    flags: List[str] = field(default_factory=list)

    def poly(self, z):
        return np.polyval(self.coefficients, z)


def quartic_coefficients(r: float, alpha_cf: float):
    """``(x1..x5, y1..y5, (c4..c0))`` as printed for the optimal-strength condition."""
    s, c = math.sin(alpha_cf), math.cos(alpha_cf)
    x1 = (1 - r) * s
    x2 = (r - 0.5) * s
    x3 = math.sqrt(1 - r) * s * s
    x4 = r * c * c
    x5 = (0.5 - r) * c * c
    y1 = x1 ** 2 - x3 ** 2 + x4 ** 2
    y2 = x1 * x2 + x4 * x5 + x3 ** 2 / 2
    y3 = 2 * x3 * x4
    y4 = x3 * x5 - 3 * x3 * x4 / 2
    y5 = -x3 * x5 / 2
    coeffs = (
        y1 ** 2 + y3 ** 2,
        2 * y3 * y4 + 2 * y1 * y2 - y1 ** 2,
        y4 ** 2 + 2 * y3 * y5 - 2 * y1 * y2 + y2 ** 2,
        2 * y4 * y5 - y2 ** 2,
        y5 ** 2,
    )
    return (x1, x2, x3, x4, x5), (y1, y2, y3, y4, y5), coeffs


def companion_roots(coeffs: Sequence[float], rel_tol: float = 1e-12) -> Tuple[np.ndarray, int]:
    """Roots from the eigenvalues of the companion matrix.

    Leading coefficients below ``rel_tol`` times the largest one are dropped,
    so a degenerate quartic is solved at its true degree.  Returns the roots
    and the degree used (``-1`` for the zero polynomial).
    """
    coeffs = [float(v) for v in coeffs]
    scale = max((abs(v) for v in coeffs), default=0.0)
    if scale == 0.0:
        return np.array([]), -1
    while abs(coeffs[0]) <= rel_tol * scale:
        coeffs.pop(0)
    degree = len(coeffs) - 1
    if degree == 0:
        return np.array([]), 0
    monic = np.array(coeffs[1:]) / coeffs[0]
    comp = np.zeros((degree, degree))
    comp[0, :] = -monic
    comp[1:, :-1] = np.eye(degree - 1)
    return np.linalg.eigvals(comp), degree


def optimal_p(r: float, alpha_cf: float, p_max: float = 1.0, grid_step: float = 1e-6):
    """Preweak strength from the quartic condition.

    Real roots in ``(0, p_max]`` and the interval endpoints are the
    candidates; the one maximizing :func:`fidelity_at_optimal_gamma` wins.
    Returns ``(p, QuarticData)``.
    """
    check_noise(r)
    x, y, coeffs = quartic_coefficients(r, alpha_cf)
    roots, degree = companion_roots(coeffs)
    flags = []
    if degree < 4:
        flags.append(f"degenerate quartic (degree {degree})")
    scale = max(1.0, abs(coeffs[0]))
    # A multiple root splits into a small complex cluster (eigenvalue error
    # ~ eps**(1/k)), so acceptance is by residual at the real part, not by
    # the size of the imaginary part.
    real = sorted({
        float(z.real) for z in roots
        if 0 < z.real <= p_max and abs(np.polyval(coeffs, z.real)) < 1e-9 * scale
    })
    data = QuarticData(x, y, coeffs, real, degree, flags)
    if degree == -1:
        grid = np.arange(0, p_max + grid_step / 2, grid_step)
        vals = fidelity_at_optimal_gamma(r, alpha_cf, grid)
        flags.append("zero polynomial; grid argmax used")
        return float(grid[int(np.argmax(vals))]), data
    candidates = [0.0, *real, p_max]
    vals = [float(fidelity_at_optimal_gamma(r, alpha_cf, z)) for z in candidates]
    return candidates[int(np.argmax(vals))], data


def grid_optimal_p(r: float, alpha_cf: float, step: float = 1e-6, p_max: float = 1.0) -> float:
    grid = np.arange(0, p_max + step / 2, step)
    return float(grid[int(np.argmax(fidelity_at_optimal_gamma(r, alpha_cf, grid)))])


# Candidate relations between the simulator's basis angle and ``alpha_cf``,
# as (forward, inverse) pairs in (angle, theta).
ALPHA_MAPS: Dict[str, Tuple[Callable, Callable]] = {
    "alpha": (lambda a, t: a, lambda a, t: a),
    "alpha+pi/2-theta": (lambda a, t: a + math.pi / 2 - t, lambda a, t: a - math.pi / 2 + t),
    "-theta-alpha": (lambda a, t: -t - a, lambda a, t: -t - a),
    "alpha+2theta": (lambda a, t: a + 2 * t, lambda a, t: a - 2 * t),
}


@dataclass
class Discrepancy:
    formula: str
    params: Dict[str, float]
    closed_form: float
    oracle: float
    gap: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


@dataclass
class DiscrepancyReport:
    records: List[Discrepancy]
    map_rms: List[Tuple[str, float]]  # sorted, best first
    flags: List[str] = field(default_factory=list)

    @property
    def best_map(self) -> str:
        return self.map_rms[0][0] if self.map_rms else ""

    def to_jsonl(self) -> str:
        return "".join(rec.to_json() + "\n" for rec in self.records)


def _record(formula, params, closed, truth) -> Discrepancy:
    closed, truth = float(closed), float(truth)
    return Discrepancy(formula, {k: float(v) for k, v in params.items()}, closed, truth, abs(closed - truth))


def _simulated_F(e: Ensemble, r, alpha, p, gamma):
    # unit-success scheme with a shared feedback angle
    return oracle.evaluate_grid(e.theta, e.phi, 0.5, r, (alpha, p, 0.0, 0.0, gamma, gamma))[4]


def validate_closed_forms(
    e: Ensemble,
    r: float,
    alphas: Sequence[float] = tuple(np.linspace(-math.pi, math.pi, 13)[:-1]),
    ps: Sequence[float] = tuple(np.linspace(0, 1, 11)),
    gammas: Sequence[float] = tuple(np.linspace(-math.pi, math.pi, 13)[:-1]),
    tol: float = 1e-8,
) -> DiscrepancyReport:
    """Compare the reduced fidelity with the simulator on an ``(alpha, p, gamma)`` lattice.

    Every candidate angle map is scored by RMS residual; lattice points of the
    best map whose gap exceeds ``tol`` become records, as does every point
    where the closed form leaves ``[0, 1]``.  The complete-damping anchor
    (``r = 1, p = 1/2, gamma = pi/2, sin(alpha_cf) = 1``) is always recorded
    for every map, whatever ``r`` is: there the formula gives 1 while any
    fixed-output strategy is capped at ``(1 + |cos theta|)/2``.
    """
    if abs(e.s_plus - 0.5) > 1e-12:
        raise ValueError("closed forms assume equal priors (s_plus = 1/2)")
    check_noise(r)
    A, P, Gm = np.meshgrid(np.asarray(alphas), np.asarray(ps), np.asarray(gammas), indexing="ij")
    A, P, Gm = A.ravel(), P.ravel(), Gm.ravel()
    sim = _simulated_F(e, r, A, P, Gm)
    rms = []
    closed_by_map = {}
    for name, (fwd, _) in ALPHA_MAPS.items():
        closed = reduced_fidelity(r, fwd(A, e.theta), P, Gm)
        closed_by_map[name] = closed
        rms.append((name, float(np.sqrt(np.mean((closed - sim) ** 2)))))
    rms.sort(key=lambda t: t[1])
    best = rms[0][0]
    flags, records = [], []
    closed = closed_by_map[best]
    for k in range(len(A)):
        out_of_range = not (0.0 <= closed[k] <= 1.0)
        if abs(closed[k] - sim[k]) > tol or out_of_range:
            params = {"theta": e.theta, "r": r, "alpha": A[k], "alpha_cf": ALPHA_MAPS[best][0](A[k], e.theta),
                      "p": P[k], "gamma": Gm[k]}
            records.append(_record(f"reduced_fidelity[{best}]", params, closed[k], sim[k]))
            if out_of_range:
                flags.append(f"reduced_fidelity outside [0,1] at lattice index {k}")
    for name, (_, inv) in ALPHA_MAPS.items():
        alpha = math.remainder(inv(math.pi / 2, e.theta), 2 * math.pi)
        truth = float(_simulated_F(e, 1.0, alpha, 0.5, math.pi / 2))
        params = {"theta": e.theta, "r": 1.0, "alpha": alpha, "alpha_cf": math.pi / 2, "p": 0.5,
                  "gamma": math.pi / 2, "fixed_output_bound": (1 + abs(math.cos(e.theta))) / 2}
        records.append(_record(f"reduced_fidelity[{name}]/complete-damping", params,
                               reduced_fidelity(1.0, math.pi / 2, 0.5, math.pi / 2), truth))
    return DiscrepancyReport(records, rms, flags)


def check_optimal_gamma(r: float, alpha_cf: float, p: float, step: float = 1e-3):
    """``(closed-form gamma, grid argmax gamma, angular gap)``."""
    g = optimal_gamma(r, alpha_cf, p)
    grid = -math.pi + step * np.arange(int(2 * math.pi / step))
    g_grid = float(grid[int(np.argmax(reduced_fidelity(r, alpha_cf, p, grid)))])
    gap = abs(math.remainder(g - g_grid, 2 * math.pi))
    return g, g_grid, gap


def check_optimal_p(r: float, alpha_cf: float, step: float = 1e-6, tol: float = 1e-4):
    """Compare the quartic's ``p`` against a fine grid.

    Returns ``(p_quartic, p_grid, data, record)`` where ``record`` is a
    :class:`Discrepancy` when they differ by more than ``tol`` and the
    quartic's choice is strictly worse (by over 1e-12) than the grid's; on a
    flat maximum the argmax location is arbitrary and not a disagreement.
    """
    p, data = optimal_p(r, alpha_cf)
    p_grid = grid_optimal_p(r, alpha_cf, step)
    record = None
    worse = float(fidelity_at_optimal_gamma(r, alpha_cf, p_grid) - fidelity_at_optimal_gamma(r, alpha_cf, p))
    if abs(p - p_grid) > tol and worse > 1e-12:
        record = _record("optimal_p", {"r": r, "alpha_cf": alpha_cf}, p, p_grid)
    return p, p_grid, data, record
