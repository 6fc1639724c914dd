import json
import math

import numpy as np
import pytest

from qprotect import closed_form as cf
from qprotect.scheme import Ensemble


@pytest.mark.parametrize("args,expected", [
    ((0.0, 0.0, 0.5, 0.0), 1.0),
    ((1.0, math.pi / 2, 0.5, math.pi / 2), 1.0),
    ((1.0, math.pi / 2, 0.0, 0.0), 0.5),
])
def test_reduced_fidelity_examples(args, expected):
    assert float(cf.reduced_fidelity(*args)) == pytest.approx(expected, abs=1e-15)


def test_reduced_fidelity_range(rng):
    r, a, p, g = rng.uniform(0, 1, 5000), rng.uniform(-math.pi, math.pi, 5000), rng.uniform(0, 1, 5000), \
        rng.uniform(-math.pi, math.pi, 5000)
    vals = cf.reduced_fidelity(r, a, p, g)
    assert np.all(vals >= -0.5) and np.all(vals <= 1.5)


def test_optimal_gamma_examples():
    assert cf.optimal_gamma(0.4, 0.0, 0.3) == 0.0
    assert cf.optimal_gamma(1.0, math.pi / 2, 0.5) == pytest.approx(math.pi / 2, abs=1e-15)


def test_optimal_gamma_matches_grid_on_random_points(rng):
    worst = 0.0
    for _ in range(200):
        r, a, p = rng.uniform(0, 1), rng.uniform(-math.pi, math.pi), rng.uniform(0, 1)
        g, _, gap = cf.check_optimal_gamma(r, a, p)
        worst = max(worst, gap)
        grid = np.arange(-math.pi, math.pi, 1e-3)
        assert float(cf.reduced_fidelity(r, a, p, g)) >= np.max(cf.reduced_fidelity(r, a, p, grid)) - 1e-9
    assert worst < 1e-3


def test_fidelity_at_optimal_gamma(rng):
    for _ in range(1000):
        r, a, p = rng.uniform(0, 1), rng.uniform(-math.pi, math.pi), rng.uniform(0, 1)
        direct = float(cf.reduced_fidelity(r, a, p, cf.optimal_gamma(r, a, p)))
        assert float(cf.fidelity_at_optimal_gamma(r, a, p)) == pytest.approx(direct, abs=1e-10)
    assert float(cf.fidelity_at_optimal_gamma(0.3, 0.0, 0.2)) == pytest.approx(
        float(cf.reduced_fidelity(0.3, 0.0, 0.2, 0.0)), abs=1e-12)
    for a in (-2.0, 0.3, 1.5):
        assert float(cf.fidelity_at_optimal_gamma(0.0, a, 0.5)) == pytest.approx(1.0, abs=1e-12)


def test_quartic_coefficients_as_transcribed():
    r, a = 0.35, 0.8
    (x1, x2, x3, x4, x5), (y1, y2, y3, y4, y5), c = cf.quartic_coefficients(r, a)
    s, co = math.sin(a), math.cos(a)
    assert (x1, x2, x3, x4, x5) == pytest.approx(
        ((1 - r) * s, (r - 0.5) * s, math.sqrt(1 - r) * s * s, r * co * co, (0.5 - r) * co * co))
    assert c == pytest.approx((y1 ** 2 + y3 ** 2, 2 * y3 * y4 + 2 * y1 * y2 - y1 ** 2,
                               y4 ** 2 + 2 * y3 * y5 - 2 * y1 * y2 + y2 ** 2, 2 * y4 * y5 - y2 ** 2, y5 ** 2))


def test_companion_roots_known_polynomial():
    roots, degree = cf.companion_roots([0.0, 1.0, -3.0, 2.0])  # leading zero dropped: z^2 - 3z + 2
    assert degree == 2
    assert sorted(roots.real) == pytest.approx([1.0, 2.0])
    assert cf.companion_roots([0, 0, 0])[1] == -1


def test_zero_angle_degenerates_the_quartic():
    _, (y1, y2, y3, y4, y5), _ = cf.quartic_coefficients(0.4, 0.0)
    assert y3 == y4 == y5 == 0
    # no interior stationary point: the endpoint candidates carry the answer
    p, _ = cf.optimal_p(0.4, 0.0)
    assert p == pytest.approx(cf.grid_optimal_p(0.4, 0.0), abs=1e-4)


def test_optimal_p_against_fine_grid(rng):
    report = []
    for _ in range(100):
        r, a = float(rng.uniform(0, 1)), float(rng.uniform(-math.pi, math.pi))
        p, p_grid, data, record = cf.check_optimal_p(r, a)
        scale = max(1.0, abs(data.coefficients[0]))
        for z in data.real_roots_in_unit_interval:
            assert abs(data.poly(z)) < 1e-9 * scale
        if record is not None:
            report.append(record)
            continue
        coarse = np.arange(0, 1 + 5e-5, 1e-4)
        assert float(cf.fidelity_at_optimal_gamma(r, a, p)) >= np.max(cf.fidelity_at_optimal_gamma(r, a, coarse)) - 1e-6
    # each mismatch is itemized rather than silently accepted
    assert all(rec.formula == "optimal_p" and rec.gap > 1e-4 for rec in report)


def test_optimal_p_at_zero_noise():
    """The quartic is c (p - 1/2)^4 here; the clustered eigenvalues must still yield p = 1/2."""
    for a in (0.4, 1.2, -2.5):
        p, data = cf.optimal_p(0.0, a)
        assert p == pytest.approx(0.5, abs=1e-3)
        assert cf.check_optimal_p(0.0, a)[3] is None
        assert float(cf.fidelity_at_optimal_gamma(0.0, a, p)) == pytest.approx(
            float(cf.fidelity_at_optimal_gamma(0.0, a, cf.grid_optimal_p(0.0, a))), abs=1e-9)


def test_validation_report_contents():
    e = Ensemble(math.pi / 3, 0.0, 0.5)
    report = cf.validate_closed_forms(e, 0.6)
    names = [m for m, _ in report.map_rms]
    assert set(names) == set(cf.ALPHA_MAPS)
    rms = [v for _, v in report.map_rms]
    assert rms == sorted(rms)
    anchors = [rec for rec in report.records if rec.formula.endswith("/complete-damping")]
    assert len(anchors) == len(cf.ALPHA_MAPS)
    for rec in anchors:
        assert rec.closed_form == pytest.approx(1.0)
        assert rec.oracle <= rec.params["fixed_output_bound"] + 1e-12
        assert rec.gap == abs(rec.closed_form - rec.oracle) and rec.gap > 0.1
    line = json.loads(report.to_jsonl().splitlines()[0])
    assert set(line) == {"formula", "params", "closed_form", "oracle", "gap"}


def test_identity_point_agrees_under_every_map():
    e = Ensemble(1.1, 0.0, 0.5)
    report = cf.validate_closed_forms(e, 0.0, alphas=[0.3, -1.0], ps=[0.5], gammas=[0.0])
    assert all(v < 1e-12 for _, v in report.map_rms)
    assert all(rec.formula.endswith("/complete-damping") for rec in report.records)


def test_validation_requires_equal_priors():
    with pytest.raises(ValueError):
        cf.validate_closed_forms(Ensemble(1.0, 0.0, 0.3), 0.5)
