"""Polynomial and linear-algebra kernels against independent references.

The polynomial oracles here go through numpy's companion-matrix root finder
and dense grid search, which share no code with the closed-form kernels
under test.
"""
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from symtensor import (
    ClippedEigenvaluesWarning,
    PinvOptions,
    QuarticCoefficients,
    build_coordinate_quartic,
    least_squares,
    pseudoinverse,
    qr_orthogonal_factor,
    quartic_global_min,
    real_cubic_roots,
    symmetric_psd_factor,
)

from _oracles import cubic_discriminant, quartic_grid_min


def roots_oracle_quartic_min(c):
    """Minimize a quartic by companion-matrix roots of its derivative."""
    crit = np.roots([4.0 * c[0], 3.0 * c[1], 2.0 * c[2], c[3]])
    real = crit[np.abs(crit.imag) <= 1e-8 * (1.0 + np.abs(crit))].real
    vals = np.polyval(c, real)
    i = int(np.argmin(vals))
    return float(real[i]), float(vals[i])


# --------------------------------------------------------------------- #
# Cubic roots                                                            #
# --------------------------------------------------------------------- #


def test_cubic_known_roots():
    np.testing.assert_allclose(real_cubic_roots(1, 0, 0, -1), [1.0], atol=1e-12)
    np.testing.assert_allclose(real_cubic_roots(1, 0, -1, 0), [-1.0, 0.0, 1.0], atol=1e-12)
    np.testing.assert_allclose(real_cubic_roots(4, 0, 4, 0), [0.0], atol=1e-12)


def test_cubic_multiple_roots_reported_once():
    # (x-1)^3 and (x-1)^2 (x+2)
    np.testing.assert_allclose(real_cubic_roots(1, -3, 3, -1), [1.0], atol=1e-7)
    np.testing.assert_allclose(real_cubic_roots(1, 0, -3, 2), [-2.0, 1.0], atol=1e-7)


def test_cubic_degenerate_degrees():
    np.testing.assert_allclose(real_cubic_roots(0, 1, 0, -4), [-2.0, 2.0], atol=1e-12)
    np.testing.assert_allclose(real_cubic_roots(0, 1, -2, 1), [1.0], atol=1e-12)
    assert real_cubic_roots(0, 1, 0, 1).size == 0  # x^2 + 1
    np.testing.assert_allclose(real_cubic_roots(0, 0, 2, -6), [3.0], atol=1e-12)
    with pytest.raises(ValueError):
        real_cubic_roots(0, 0, 0, 1)
    with pytest.raises(ValueError):
        real_cubic_roots(0, 0, 0, 0)


def test_cubic_random_residuals_and_counts():
    """Each root nearly annihilates the cubic; count follows the discriminant."""
    rng = np.random.default_rng(100)
    checked_counts = 0
    for _ in range(1000):
        c3, c2, c1, c0 = rng.standard_normal(4)
        if abs(c3) < 1e-3:
            c3 += np.sign(c3 or 1.0)
        roots = real_cubic_roots(c3, c2, c1, c0)
        assert roots.size >= 1
        scale = max(abs(c3), abs(c2), abs(c1), abs(c0))
        for rho in roots:
            val = ((c3 * rho + c2) * rho + c1) * rho + c0
            assert abs(val) <= 1e-8 * scale
        disc = cubic_discriminant(c2 / c3, c1 / c3, c0 / c3)
        if abs(disc) > 1e-9:
            checked_counts += 1
            assert roots.size == (1 if disc > 0 else 3)
    assert checked_counts > 900


def test_cubic_roots_sorted():
    roots = real_cubic_roots(1.0, -6.0, 11.0, -6.0)  # (x-1)(x-2)(x-3)
    np.testing.assert_allclose(roots, [1.0, 2.0, 3.0], atol=1e-10)


# --------------------------------------------------------------------- #
# Quartic minimization                                                   #
# --------------------------------------------------------------------- #


def test_quartic_known_minima():
    # (4 - x^2)^2 + 2 (6 - 3x)^2 expands to x^4 + 10 x^2 - 72 x + 88
    x, v = quartic_global_min(QuarticCoefficients(1, 0, 10, -72, 88))
    assert abs(x - 2.0) < 1e-10
    assert abs(v) < 1e-10

    assert quartic_global_min(QuarticCoefficients(1, 0, 0, 0, 0)) == (0.0, 0.0)

    x, v = quartic_global_min(QuarticCoefficients(1, 0, 2, 0, 1))
    assert x == 0.0
    assert v == 1.0


def test_quartic_symmetric_tie_breaks_to_smaller_x():
    # x^4 - 2 x^2 has minima at -1 and 1 with equal value
    x, v = quartic_global_min(QuarticCoefficients(1, 0, -2, 0, 0))
    assert x == -1.0
    assert abs(v + 1.0) < 1e-12


def test_quartic_degenerate_quadratic():
    x, v = quartic_global_min(QuarticCoefficients(0, 0, 2, -4, 0))
    assert abs(x - 1.0) < 1e-14
    assert abs(v + 2.0) < 1e-14


def test_quartic_rejects_non_coercive():
    with pytest.raises(ValueError):
        quartic_global_min(QuarticCoefficients(0, 1, 0, 0, 0))
    with pytest.raises(ValueError):
        quartic_global_min(QuarticCoefficients(-1, 0, 0, 0, 0))
    with pytest.raises(ValueError):
        quartic_global_min(QuarticCoefficients(0, 0, -1, 0, 0))


def test_quartic_against_grid_and_roots_oracle():
    """1000 random coercive quartics vs grid search and companion roots."""
    rng = np.random.default_rng(101)
    for _ in range(1000):
        c4 = rng.uniform(1e-3, 10.0)
        c3, c2, c1, c0 = 5.0 * rng.standard_normal(4)
        q = QuarticCoefficients(c4, c3, c2, c1, c0)
        x, v = quartic_global_min(q)
        xo, vo = roots_oracle_quartic_min(np.array(q.as_tuple()))
        assert abs(x - xo) <= 1e-6 or abs(v - vo) <= 1e-8 * (1.0 + abs(vo))
    # a thinner sample against the very slow dense grid; the root bound
    # keeps minimizers inside the grid window
    done = 0
    while done < 50:
        c4 = rng.uniform(1e-2, 10.0)
        c3, c2, c1, c0 = 5.0 * rng.standard_normal(4)
        if 1.0 + max(3 * abs(c3), 2 * abs(c2), abs(c1)) / (4 * c4) > 19.0:
            continue
        done += 1
        q = QuarticCoefficients(c4, c3, c2, c1, c0)
        x, v = quartic_global_min(q)
        xg, vg = quartic_grid_min(q.as_tuple())
        assert abs(x - xg) <= 1e-3 or abs(v - vg) <= 1e-8 * (1.0 + abs(vg))


def test_quartic_minimum_is_at_critical_point():
    rng = np.random.default_rng(102)
    for _ in range(200):
        q = QuarticCoefficients(rng.uniform(0.1, 5.0), *rng.standard_normal(4))
        x, v = quartic_global_min(q)
        deriv = ((4 * q.c4 * x + 3 * q.c3) * x + 2 * q.c2) * x + q.c1
        assert abs(deriv) <= 1e-6 * (1.0 + abs(x) ** 3)
        assert q.evaluate(x) == pytest.approx(v, abs=1e-9, rel=1e-9)


# --------------------------------------------------------------------- #
# Coordinate quartic construction                                        #
# --------------------------------------------------------------------- #


def test_build_coordinate_quartic_known():
    y = np.array([[4.0, 6.0], [6.0, 9.0]])
    q = build_coordinate_quartic(y, np.array([0.0, 3.0]), 0)
    assert q.as_tuple() == (1.0, 0.0, 10.0, -72.0, 88.0)


def test_build_coordinate_quartic_one_dim():
    q = build_coordinate_quartic(np.array([[-1.0]]), np.array([0.0]), 0)
    assert q.as_tuple() == (1.0, 0.0, 2.0, 0.0, 1.0)


def test_build_coordinate_quartic_zero_matrix():
    x = np.array([2.0, 1.0, -1.0])
    q = build_coordinate_quartic(np.zeros((3, 3)), x, 1)
    assert q.as_tuple() == (1.0, 0.0, 2.0 * (4.0 + 1.0), 0.0, 0.0)


def test_build_coordinate_quartic_matches_objective():
    """The coefficients reproduce the x_i-dependent part of ||y - xx^T||^2."""
    rng = np.random.default_rng(103)
    y = rng.standard_normal((4, 4))
    x = rng.standard_normal(4)
    i = 2

    def explicit(s):
        z = x.copy()
        z[i] = s
        full = float(np.sum((y - np.outer(z, z)) ** 2))
        rest = 0.0
        for a in range(4):
            for b in range(4):
                if a != i and b != i:
                    rest += (y[a, b] - z[a] * z[b]) ** 2
        return full - rest

    q = build_coordinate_quartic(y, x, i)
    for s in (-2.0, -0.5, 0.0, 1.0, 3.0):
        assert q.evaluate(s) == pytest.approx(explicit(s), rel=1e-12, abs=1e-12)


def test_build_coordinate_quartic_validates():
    with pytest.raises(ValueError):
        build_coordinate_quartic(np.zeros((2, 3)), np.zeros(2), 0)
    with pytest.raises(ValueError):
        build_coordinate_quartic(np.zeros((2, 2)), np.zeros(2), 2)


# --------------------------------------------------------------------- #
# Least squares / pseudoinverse / QR                                     #
# --------------------------------------------------------------------- #


def test_least_squares_identity_and_mean():
    rhs = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_allclose(least_squares(np.eye(2), rhs), rhs, atol=1e-14)
    x = least_squares(np.array([[1.0], [1.0]]), np.array([[1.0], [3.0]]))
    np.testing.assert_allclose(x, [[2.0]], atol=1e-14)


def test_least_squares_zero_column_min_norm():
    m = np.array([[1.0, 0.0], [0.0, 0.0], [2.0, 0.0]])
    x = least_squares(m, np.array([[1.0], [1.0], [2.0]]))
    assert abs(x[1, 0]) < 1e-14


def test_least_squares_dimension_mismatch():
    with pytest.raises(ValueError):
        least_squares(np.ones((3, 2)), np.ones((4, 1)))


def test_least_squares_perturbation_optimality():
    rng = np.random.default_rng(104)
    m = rng.standard_normal((10, 4))
    rhs = rng.standard_normal((10, 2))
    x = least_squares(m, rhs)
    base = float(np.sum((rhs - m @ x) ** 2))
    for _ in range(100):
        d = rng.standard_normal(x.shape)
        d *= 1e-4 / np.linalg.norm(d)
        perturbed = float(np.sum((rhs - m @ (x + d)) ** 2))
        assert perturbed >= base - 1e-12


@pytest.mark.parametrize("shape", [(3, 3), (10, 7), (7, 10), (50, 50), (50, 30)])
def test_pseudoinverse_penrose_conditions(shape):
    rng = np.random.default_rng(105)
    m = rng.standard_normal(shape)
    p = pseudoinverse(m)
    scale = np.linalg.norm(m)
    assert np.linalg.norm(m @ p @ m - m) <= 1e-9 * scale
    assert np.linalg.norm(p @ m @ p - p) <= 1e-9 * np.linalg.norm(p)
    assert np.linalg.norm((m @ p).T - m @ p) <= 1e-9
    assert np.linalg.norm((p @ m).T - p @ m) <= 1e-9


def test_pseudoinverse_known_values():
    np.testing.assert_allclose(
        pseudoinverse(np.diag([2.0, 4.0])), np.diag([0.5, 0.25]), atol=1e-14
    )
    u = np.array([3.0, 4.0]) / 5.0
    v = np.array([1.0, 2.0, 2.0]) / 3.0
    np.testing.assert_allclose(pseudoinverse(np.outer(u, v)), np.outer(v, u), atol=1e-12)
    np.testing.assert_array_equal(pseudoinverse(np.zeros((2, 3))), np.zeros((3, 2)))


def test_pseudoinverse_cutoff_drops_small_singular_values():
    m = np.diag([1.0, 1e-6])
    strict = pseudoinverse(m, PinvOptions(cutoff=1e-3))
    np.testing.assert_allclose(strict, np.diag([1.0, 0.0]), atol=1e-12)
    loose = pseudoinverse(m)
    np.testing.assert_allclose(loose, np.diag([1.0, 1e6]), rtol=1e-9)


def test_pinv_options_validation():
    with pytest.raises(ValueError):
        PinvOptions(cutoff=0.0)
    with pytest.raises(ValueError):
        PinvOptions(cutoff=-1.0)


def test_qr_known_column():
    np.testing.assert_allclose(
        qr_orthogonal_factor(np.array([[3.0], [4.0]])), np.array([[0.6], [0.8]]), atol=1e-14
    )


def test_qr_orthonormal_and_sign_fixed():
    rng = np.random.default_rng(106)
    p = rng.standard_normal((8, 5))
    q = qr_orthogonal_factor(p)
    np.testing.assert_allclose(q.T @ q, np.eye(5), atol=1e-12)
    # already-orthonormal input comes back unchanged
    np.testing.assert_allclose(qr_orthogonal_factor(q), q, atol=1e-12)


def test_qr_rejects_wide():
    with pytest.raises(ValueError):
        qr_orthogonal_factor(np.ones((2, 3)))


# --------------------------------------------------------------------- #
# Symmetric PSD factorization                                            #
# --------------------------------------------------------------------- #


def test_psd_factor_diagonal():
    e = symmetric_psd_factor(np.diag([4.0, 1.0]), 2)
    np.testing.assert_allclose(e @ e.T, np.diag([4.0, 1.0]), atol=1e-12)
    np.testing.assert_allclose(np.abs(e), np.diag([2.0, 1.0]), atol=1e-12)


def test_psd_factor_rank_one():
    v = np.array([1.0, -2.0, 0.5])
    e = symmetric_psd_factor(np.outer(v, v), 1)
    np.testing.assert_allclose(e @ e.T, np.outer(v, v), atol=1e-12)


def test_psd_factor_clips_with_warning():
    with pytest.warns(ClippedEigenvaluesWarning) as rec:
        e = symmetric_psd_factor(np.diag([1.0, -1.0]), 2)
    np.testing.assert_allclose(e @ e.T, np.diag([1.0, 0.0]), atol=1e-12)
    assert rec[0].message.count == 1
    assert rec[0].message.clipped_mass == pytest.approx(1.0)


def test_psd_factor_roundoff_negatives_are_silent(recwarn):
    rng = np.random.default_rng(107)
    a = rng.standard_normal((6, 3))
    t = a @ a.T  # PSD up to roundoff; tiny negative eigenvalues possible
    e = symmetric_psd_factor(t, 3)
    np.testing.assert_allclose(e @ e.T, t, atol=1e-10)
    assert not any(isinstance(w.message, ClippedEigenvaluesWarning) for w in recwarn.list)


def test_psd_factor_truncation_error_equals_discarded_mass():
    rng = np.random.default_rng(108)
    q = np.linalg.qr(rng.standard_normal((8, 8)))[0]
    lam = np.array([9.0, 4.0, 1.0, 0.25, 0.01, -0.5, -2.0, 0.0])
    t = (q * lam) @ q.T
    for r in (2, 4, 6):
        with np.testing.suppress_warnings() as sup:
            sup.filter(ClippedEigenvaluesWarning)
            e = symmetric_psd_factor(t, r)
        kept = np.sort(np.clip(lam, 0.0, None))[::-1][:r]
        expected_sq = float(np.sum(lam**2) - np.sum(kept**2))
        err_sq = float(np.sum((t - e @ e.T) ** 2))
        assert err_sq == pytest.approx(expected_sq, rel=1e-10, abs=1e-12)


def test_psd_factor_rejects_asymmetric():
    with pytest.raises(ValueError, match="symmetric"):
        symmetric_psd_factor(np.array([[1.0, 2.0], [0.0, 1.0]]), 1)


def test_psd_factor_rank_bounds():
    with pytest.raises(ValueError):
        symmetric_psd_factor(np.eye(3), 0)
    with pytest.raises(ValueError):
        symmetric_psd_factor(np.eye(3), 4)


# --------------------------------------------------------------------- #
# Compiled kernels vs the pure-Python backend                            #
# --------------------------------------------------------------------- #

_BACKEND_PROBE = r"""
import json, sys
import numpy as np
from symtensor import _kernels

rng = np.random.default_rng(7)
out = {"numba": _kernels.NUMBA_ENABLED, "cubic": [], "quartic": [], "sweep": []}
for _ in range(200):
    p, q, r = rng.standard_normal(3) * 3
    out["cubic"].append(list(_kernels.cubic_roots(p, q, r)))
for _ in range(200):
    c4 = rng.uniform(0.01, 10.0)
    c3, c2, c1, c0 = rng.standard_normal(4) * 4
    out["quartic"].append(list(_kernels.quartic_min(c4, c3, c2, c1, c0)))
for _ in range(20):
    a = rng.standard_normal(6)
    y = rng.standard_normal((6, 6))
    _kernels.coordinate_sweep(a, y, 2)
    out["sweep"].append(a.tolist())
json.dump(out, sys.stdout)
"""


def _probe_backend(no_numba: bool):
    env = dict(os.environ, SYMTENSOR_NO_NUMBA="1" if no_numba else "")
    res = subprocess.run(
        [sys.executable, "-c", _BACKEND_PROBE], env=env, capture_output=True, text=True
    )
    assert res.returncode == 0, res.stderr
    return json.loads(res.stdout)


def test_numba_and_python_backends_agree():
    """Same source, two backends: results agree to roundoff everywhere."""
    jit = _probe_backend(no_numba=False)
    pure = _probe_backend(no_numba=True)
    assert pure["numba"] is False
    for a, b in zip(jit["cubic"], pure["cubic"]):
        assert a[0] == b[0]  # identical root counts
        np.testing.assert_allclose(a[1:], b[1:], rtol=1e-12, atol=1e-12)
    for a, b in zip(jit["quartic"], pure["quartic"]):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)
    for a, b in zip(jit["sweep"], pure["sweep"]):
        np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-12)


def test_sweep_against_roots_oracle():
    """One full coordinate sweep vs per-coordinate companion-matrix solves."""
    from symtensor import _kernels

    rng = np.random.default_rng(109)
    a0 = rng.standard_normal(5)
    y = rng.standard_normal((5, 5))

    expect = a0.copy()
    for i in range(5):
        others = np.arange(5) != i
        xo = expect[others]
        c2 = 2.0 * float(xo @ xo) - 2.0 * y[i, i]
        c1 = -2.0 * float((y[others, i] + y[i, others]) @ xo)
        expect[i] = roots_oracle_quartic_min(np.array([1.0, 0.0, c2, c1, 0.0]))[0]

    got = a0.copy()
    _kernels.coordinate_sweep(got, y, 1)
    np.testing.assert_allclose(got, expect, rtol=1e-9, atol=1e-12)
