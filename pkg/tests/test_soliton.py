import cmath
import warnings

import mpmath
import numpy as np
import pytest

from hfsc import _kernels, build_model, validate_spectrum
from hfsc import soliton as S
from hfsc.errors import ConditioningError, DomainTooLargeError, InvalidParameterError
from hfsc.model import SpaceTimePoint, SpectrumEntry


def mp_nsoliton(spectrum, model, x, y, t, dps=40):
    """High-precision oracle: explicit formula with an mpmath inverse."""
    with mpmath.workdps(dps):
        xt = mpmath.mpf(x) + mpmath.mpf(model.k) * mpmath.mpf(y)
        a4 = mpmath.mpf(model.alpha4)
        sig = [mpmath.mpc(e.sigma) for e in spectrum]
        a = [mpmath.mpc(e.a) for e in spectrum]
        b = [mpmath.mpc(e.b) for e in spectrum]
        th = [1j * s * xt - 1j * a4 * s**2 * mpmath.mpf(t) for s in sig]
        n = len(sig)
        M = mpmath.matrix(n, n)
        for k in range(n):
            for j in range(n):
                M[k, j] = (
                    mpmath.conj(a[k]) * a[j] * mpmath.exp(mpmath.conj(th[k]) + th[j])
                    + mpmath.conj(b[k]) * b[j] * mpmath.exp(-mpmath.conj(th[k]) - th[j])
                ) / (sig[j] - mpmath.conj(sig[k]))
        Mi = M**-1
        u = 0
        for k in range(n):
            for j in range(n):
                u += b[k] * mpmath.conj(a[j]) * mpmath.exp(mpmath.conj(th[j]) - th[k]) * Mi[k, j]
        return complex(-2 * u)


# ------------------------------------------------------------ phase

def test_phase_examples(model):
    e = SpectrumEntry(1j, 1, 1)
    assert S.phase(e, SpaceTimePoint(0, 0, 0), model).theta == 0
    assert S.phase(e, SpaceTimePoint(1, 0, 0), model).theta == pytest.approx(-1, abs=1e-15)


def test_phase_derived_example(model):
    # oracle: mpmath complex arithmetic
    with mpmath.workdps(30):
        s = mpmath.mpc(0.2, 0.3)
        ref = complex(1j * s * 2 - 1j * (-6) * s**2 * mpmath.mpf("0.5"))
    assert ref == pytest.approx(-0.96 + 0.25j, abs=1e-15)
    got = S.phase(SpectrumEntry(0.2 + 0.3j, 1, 1), SpaceTimePoint(1, 1, 0.5), model).theta
    assert got == pytest.approx(ref, abs=1e-14)


def test_phase_guard(model):
    with pytest.raises(DomainTooLargeError, match="sigma"):
        S.phase(SpectrumEntry(1j, 1, 1), SpaceTimePoint(301, 0, 0), model)
    with pytest.raises(DomainTooLargeError, match="entry 0"):
        S.nsoliton_field(validate_spectrum([(1j, 1, 1)]), model, 301.0)


# ------------------------------------------------------------ M matrix

def test_m_matrix_examples(model):
    o = SpaceTimePoint(0, 0, 0)
    mm = S.build_m_matrix(validate_spectrum([(1j, 1, 1)]), o, model)
    assert mm.m[0, 0] == pytest.approx(-1j, abs=1e-15)
    mm = S.build_m_matrix(validate_spectrum([(0.2 + 0.3j, 1, 0.5)]), o, model)
    assert mm.m[0, 0] == pytest.approx(-(1.25 / 0.6) * 1j, abs=1e-14)
    mm = S.build_m_matrix(validate_spectrum([(1j, 1, 1), (2j, 1, 1)]), o, model)
    expected = np.array([[-1j, -2j / 3], [-2j / 3, -0.5j]])
    np.testing.assert_allclose(mm.m, expected, atol=1e-15)
    assert not mm.ill_conditioned and mm.cond_estimate >= 1


def test_m_matrix_anti_hermitian(model, rng):
    for _ in range(50):
        n = int(rng.integers(1, 5))
        sig = rng.uniform(-0.5, 0.5, n) + 1j * rng.uniform(0.1, 1, n)
        sp = validate_spectrum(
            zip(sig, rng.normal(size=n) + 1j * rng.normal(size=n), rng.normal(size=n) + 1j * rng.normal(size=n))
        )
        p = SpaceTimePoint(*rng.uniform(-5, 5, 3))
        m = S.build_m_matrix(sp, p, model).m
        np.testing.assert_allclose(m, -m.conj().T, rtol=1e-13, atol=1e-13 * np.abs(m).max())


# ------------------------------------------------------------ point evaluators

def test_nsoliton_example(model):
    sp = validate_spectrum([(1j, 1, 1)])
    o = SpaceTimePoint(0, 0, 0)
    assert S.eval_nsoliton(sp, o, model).u == pytest.approx(-2j, abs=1e-15)
    assert S.eval_one_soliton(sp[0], o, model).u == pytest.approx(-2j, abs=1e-15)


def test_nsoliton_peak_one_soliton(model, one_soliton):
    # analytic peak 2 Im(sigma) = 0.6; oracle: dense grid maximisation
    x = np.linspace(-10, 10, 200001)
    assert np.abs(S.nsoliton_field(one_soliton, model, x, 0, 0)).max() == pytest.approx(0.6, abs=1e-9)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_nsoliton_against_mpmath(model, rng, n):
    for _ in range(5):
        sig = rng.uniform(-0.5, 0.5, n) + 1j * rng.uniform(0.2, 1, n)
        a = rng.normal(size=n) + 1j * rng.normal(size=n)
        b = rng.normal(size=n) + 1j * rng.normal(size=n)
        sp = validate_spectrum(zip(sig, a, b))
        x, y, t = rng.uniform(-4, 4), rng.uniform(-2, 2), rng.uniform(-1, 1)
        got = complex(S.nsoliton_field(sp, model, x, y, t))
        cond = S.build_m_matrix(sp, SpaceTimePoint(x, y, t), model).cond_estimate
        # backward-stable solve: error ~ eps * cond
        assert got == pytest.approx(mp_nsoliton(sp, model, x, y, t), abs=max(1e-12, 1e-14 * cond))


def test_specializations_on_grid(model, one_soliton, collision):
    X, T = np.meshgrid(np.linspace(-20, 20, 50), np.linspace(-5, 5, 50), indexing="ij")
    g = S.nsoliton_field(collision, model, X, 0.0, T)
    two = S.two_soliton_field(collision, model, X, 0.0, T)
    assert np.abs(g - two).max() < 1e-12
    g = S.nsoliton_field(one_soliton, model, X, 0.3, T)
    one = S.one_soliton_field(one_soliton[0], model, X, 0.3, T)
    assert np.abs(g - one).max() < 1e-12


def test_sech_normal_form(model):
    entry = SpectrumEntry(0.2 + 0.3j, 1.7 * cmath.exp(0.4j), 1.0)
    X, T = np.meshgrid(np.linspace(-20, 20, 81), np.linspace(-3, 3, 31), indexing="ij")
    sech = S.sech_one_soliton_field(entry, model, X, 0.0, T)
    np.testing.assert_allclose(sech, S.one_soliton_field(entry, model, X, 0.0, T), rtol=0, atol=1e-12)
    with pytest.raises(InvalidParameterError):
        S.sech_one_soliton_field(SpectrumEntry(0.3j, 1, 0.5), model, 0.0)


def test_constant_on_characteristic(model, one_soliton):
    s1 = one_soliton[0].sigma.real
    t = np.linspace(-3, 3, 13)
    for c in (-1.0, 0.0, 1.155, 2.5):
        x = c + 2 * model.alpha4 * s1 * t
        amp = np.abs(S.nsoliton_field(one_soliton, model, x, 0.0, t))
        assert np.ptp(amp) < 1e-13


def test_two_soliton_needs_two(model, one_soliton):
    with pytest.raises(InvalidParameterError):
        S.two_soliton_field(one_soliton, model, 0.0)
    with pytest.raises(InvalidParameterError):
        S.field(validate_spectrum([(1j, 1, 1), (2j, 1, 1)]), model, 0.0, evaluator="one")
    with pytest.raises(InvalidParameterError):
        S.field(one_soliton, model, 0.0, evaluator="nope")


def test_bound_state_moves_at_group_speed(model, breather_moving):
    t = np.linspace(0, 20, 41)
    x = np.linspace(-40, 15, 5501)
    X, T = np.meshgrid(x, t)
    amp = np.abs(S.nsoliton_field(breather_moving, model, X, 0.0, T))
    # centre of |u|^2 moves rigidly even while the profile breathes
    centre = (amp**2 * X).sum(axis=1) / (amp**2).sum(axis=1)
    v = np.polyfit(t, centre, 1)[0]
    assert v == pytest.approx(-1.2, rel=0.02)


def test_collision_asymptotic_peaks(model, collision):
    x = np.linspace(0, 140, 28001)
    amp = np.abs(S.nsoliton_field(collision, model, x, 0.0, -30.0))
    left, right = amp[x < 70], amp[x >= 70]
    assert left.max() == pytest.approx(0.6, rel=1e-3)
    assert right.max() == pytest.approx(1.0, rel=1e-3)


# ------------------------------------------------------------ properties

def _random_spectrum(rng, n):
    sig = rng.uniform(-0.5, 0.5, n) + 1j * rng.uniform(0.1, 1, n)
    a = rng.normal(size=n) + 1j * rng.normal(size=n)
    b = rng.normal(size=n) + 1j * rng.normal(size=n)
    return validate_spectrum(zip(sig, a, b))


def test_phase_covariance(model, rng):
    phi = np.pi / 3
    for _ in range(30):
        sp = _random_spectrum(rng, int(rng.integers(1, 4)))
        x, t = rng.uniform(-5, 5, 20), rng.uniform(-1, 1, 20)
        u = S.nsoliton_field(sp, model, x, 0.0, t)
        ur = S.nsoliton_field(sp.scaled(a_factor=cmath.exp(1j * phi)), model, x, 0.0, t)
        np.testing.assert_allclose(ur, np.exp(-1j * phi) * u, atol=1e-12)


def test_amplitude_scaling_translates(model, rng):
    for _ in range(30):
        sp = _random_spectrum(rng, 1)
        lam = float(rng.uniform(0.2, 5))
        eta = sp[0].sigma.imag
        x, t = rng.uniform(-5, 5, 20), rng.uniform(-1, 1, 20)
        scaled = sp.scaled(a_factor=lam, b_factor=1 / lam)
        lhs = np.abs(S.nsoliton_field(scaled, model, x, 0.0, t))
        rhs = np.abs(S.nsoliton_field(sp, model, x - np.log(lam) / eta, 0.0, t))
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_depends_on_xt_only(rng):
    for _ in range(30):
        m = build_model(*rng.uniform(0.5, 1.5, 3), rng.uniform(-1, 1))
        sp = _random_spectrum(rng, int(rng.integers(1, 4)))
        x, y, t, d = (rng.uniform(-3, 3, 10) for _ in range(4))
        np.testing.assert_allclose(
            S.nsoliton_field(sp, m, x + m.k * d, y - d, t), S.nsoliton_field(sp, m, x, y, t), atol=1e-12
        )


# ------------------------------------------------------------ backends

@pytest.mark.skipif(_kernels.nsoliton_numba is None, reason="numba unavailable")
def test_backends_agree(model, rng):
    for n in (1, 2, 3, 5):
        sp = _random_spectrum(rng, n)
        x, t = rng.uniform(-10, 10, 500), rng.uniform(-2, 2, 500)
        u1 = S.nsoliton_field(sp, model, x, 0, t, kernel=_kernels.nsoliton_numba)
        u2 = S.nsoliton_field(sp, model, x, 0, t, kernel=_kernels.nsoliton_numpy)
        c1 = _kernels.nsoliton_numba(sp.sigma, sp.a, sp.b, x, t, model.alpha4)[1]
        c2 = _kernels.nsoliton_numpy(sp.sigma, sp.a, sp.b, x, t, model.alpha4)[1]
        np.testing.assert_allclose(c1, c2, rtol=1e-6)
        assert np.all(np.abs(u1 - u2) <= np.maximum(1e-13, 1e-14 * c1))


def test_cond_estimate_reported(model):
    # nearly coincident zeros: M close to singular
    sp = validate_spectrum([(1j, 1, 1), (1j + 1e-9, 1, 1)])
    with pytest.raises(ConditioningError) as exc:
        S.nsoliton_field(sp, model, 0.0)
    assert exc.value.cond > 1e15
    sp = validate_spectrum([(1j, 1, 1), (1j + 3e-6, 1, 1)])
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        S.nsoliton_field(sp, model, 0.0)
    assert any(issubclass(w.category, S.ConditioningWarning) for w in rec)
    mm = S.build_m_matrix(sp, SpaceTimePoint(0, 0, 0), model)
    assert mm.ill_conditioned


def test_two_soliton_conditioning(model):
    sp = validate_spectrum([(1j, 1, 1), (1j + 1e-9, 1, 1)])
    with pytest.raises(ConditioningError):
        S.two_soliton_field(sp, model, 0.0)


# ------------------------------------------------------------ grids

def test_grid_single_point(model, collision):
    g = S.GridSpec((S.Axis("x", 0.7, 0.7, 1),), {"y": 0.2, "t": -0.4})
    fg = S.eval_grid(collision, model, g)
    assert fg.values.shape == (1,)
    assert fg.values[0] == S.eval_nsoliton(collision, SpaceTimePoint(0.7, 0.2, -0.4), model).u


def test_grid_row_major(model, one_soliton):
    g = S.GridSpec((S.Axis("t", 0, 1, 3), S.Axis("x", -1, 1, 4)), {"y": 0.0})
    fg = S.eval_grid(one_soliton, model, g)
    x, y, t = g.coordinates()
    assert list(t[:4]) == [0, 0, 0, 0] and list(x[:4]) == list(np.linspace(-1, 1, 4))
    arr = fg.array()
    assert arr.shape == (3, 4)
    assert arr[2, 1] == S.eval_nsoliton(one_soliton, SpaceTimePoint(-1 / 3, 0, 1), model).u


def test_grid_errors(model):
    with pytest.raises(InvalidParameterError):
        S.GridSpec(())
    with pytest.raises(InvalidParameterError):
        S.Axis("z", 0, 1, 2)
    with pytest.raises(InvalidParameterError):
        S.Axis("x", 0, 1, 0)
    with pytest.raises(InvalidParameterError):
        S.GridSpec((S.Axis("x", 0, 1, 2),), {"x": 1.0})


def test_grid_overflow_names_node(model):
    sp = validate_spectrum([(1j, 1, 1)])
    g = S.GridSpec((S.Axis("x", 0, 400, 5),))
    with pytest.raises(DomainTooLargeError, match=r"x=400\.0"):
        S.eval_grid(sp, model, g)


def test_one_soliton_grid_ridge(model, one_soliton):
    g = S.GridSpec((S.Axis("x", -30, 30, 1201), S.Axis("t", -30, 30, 601)), {"y": 0.0})
    fg = S.eval_grid(one_soliton, model, g)
    amp = np.abs(fg.array())
    assert amp.max() == pytest.approx(0.6, abs=5e-6)
    # a single ridge: one maximum per time slice while the peak is inside
    t = fg.axis("t")
    inside = np.abs(2 * model.alpha4 * 0.2 * t) < 25
    for row in amp.T[inside]:
        assert row.max() == pytest.approx(0.6, abs=5e-3)


@pytest.mark.parametrize("flag, expected", [("1", "numpy"), ("true", "numpy"), ("0", None)])
def test_backend_env_flag(flag, expected):
    import os
    import subprocess
    import sys

    env = dict(os.environ, HFSC_DISABLE_NUMBA=flag)
    out = subprocess.run(
        [sys.executable, "-c", "from hfsc import _kernels; print(_kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    ).stdout.strip()
    assert out == (expected or ("numba" if _kernels.nsoliton_numba is not None else "numpy"))
