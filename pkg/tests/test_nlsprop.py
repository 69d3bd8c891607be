import cmath
from dataclasses import replace

import numpy as np
import pytest

from hfsc import nlsprop as P
from hfsc import _kernels
from hfsc.errors import BlowUpError, DomainTooSmallError, InvalidParameterError

# measured l_inf error 2.74e-6 (one-soliton, [-60, 60], 1024 modes, dt = 1e-3, t: 0 -> 5); frozen at 2x
ONE_SOLITON_LINF_BOUND = 5.5e-6


def test_init_accepts_wide_domain(model, one_soliton):
    st = P.init_from_closed_form(one_soliton, model, (-60, 60), 1024, 0.0)
    assert st.field.shape == (1024,) and st.time == 0.0
    assert np.abs(st.field[:8]).max() < 1e-8


def test_init_rejects_narrow_domain(model, one_soliton):
    with pytest.raises(DomainTooSmallError) as exc:
        P.init_from_closed_form(one_soliton, model, (-10, 10), 1024, 0.0)
    hw = exc.value.suggested_half_width
    # tail exp(-0.6 r) reaches 1e-10 at r ~ 38.4, plus the centre offset ln(2)/0.6
    assert hw == pytest.approx(np.log(1e10) / 0.6 + np.log(2) / 0.6, rel=1e-12)
    P.init_from_closed_form(one_soliton, model, (-hw - 1, hw + 1), 1024, 0.0)


@pytest.mark.parametrize("n", [32, 1000, 63])
def test_mode_count_rules(model, one_soliton, n):
    with pytest.raises(InvalidParameterError):
        P.init_from_closed_form(one_soliton, model, (-60, 60), n, 0.0)


def test_wavenumber_layout(model, one_soliton):
    st = P.init_from_closed_form(one_soliton, model, (-60, 60), 64, 0.0)
    k = st.wavenumbers
    dk = 2 * np.pi / 120
    assert k[0] == 0 and k[1] == pytest.approx(dk)
    assert k[31] == pytest.approx(31 * dk) and k[32] == pytest.approx(-32 * dk) and k[63] == pytest.approx(-dk)


def _plane_state(model, A=0.8, m=3, n=128, L=40.0):
    x = -L / 2 + L / n * np.arange(n)
    kappa = 2 * np.pi * m / L
    u = A * np.exp(1j * kappa * x)
    return P.PropagationState((-L / 2, L / 2), n, u.astype(complex), 0.0, model), kappa, x


def test_step_zero(model):
    st = P.PropagationState((-10, 10), 64, np.zeros(64, complex), 0.0, model)
    out = P.step(st, 0.01)
    assert np.all(out.field == 0) and out.time == 0.01


def test_step_plane_wave(model):
    A = 0.8
    st, kappa, x = _plane_state(model, A)
    # exact solution of the reduced equation for constant |u|
    w = model.c * kappa**2 + model.alpha4 * A**2
    dt = 0.01
    one = P.step(st, dt)
    np.testing.assert_allclose(one.field, A * np.exp(1j * (kappa * x - w * dt)), atol=1e-13)
    stepper = P.SplitStepper(st, dt)
    u = st.field.copy()
    stepper.advance(u, 100)
    np.testing.assert_allclose(u, A * np.exp(1j * (kappa * x - w * 100 * dt)), atol=1e-12)


def test_step_preserves_mass(model, collision):
    st = P.init_from_closed_form(collision, model, (-60, 60), 1024, 0.0)
    out = P.step(st, 0.01)
    assert abs(out.mass() - st.mass()) / st.mass() < 1e-12


def test_step_guards(model):
    st = P.PropagationState((-10, 10), 64, np.zeros(64, complex), 0.0, model)
    with pytest.raises(InvalidParameterError):
        P.step(st, 0.02)
    with pytest.raises(InvalidParameterError):
        P.step(st, 0.0)
    bad = np.zeros(64, complex)
    bad[5] = np.nan
    with pytest.raises(BlowUpError) as exc:
        P.step(replace(st, field=bad), 0.01)
    assert exc.value.step == 1


@pytest.mark.skipif(_kernels.nonlinear_rotate_numba is None, reason="numba unavailable")
def test_rotation_backends_agree(rng):
    u = rng.normal(size=257) + 1j * rng.normal(size=257)
    a, b = u.copy(), u.copy()
    _kernels.nonlinear_rotate_numba(a, 0.37)
    _kernels.nonlinear_rotate_numpy(b, 0.37)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-14)


def _run(spectrum, model, domain, n, t0, t1, dt):
    st = P.init_from_closed_form(spectrum, model, domain, n, t0)
    return P.propagate(st, t1, dt, spectrum)


def test_propagate_one_soliton(model, one_soliton):
    final, rep = _run(one_soliton, model, (-60, 60), 1024, 0.0, 5.0, 1e-3)
    assert final.time == 5.0 and rep.steps == 5000
    assert rep.l_inf_error < ONE_SOLITON_LINF_BOUND
    assert rep.mass_drift < 1e-10


def test_propagate_dt_order(model, one_soliton):
    errs = [_run(one_soliton, model, (-60, 60), 1024, 0.0, 2.0, dt)[1].l_inf_error for dt in (2e-3, 1e-3)]
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.3)


def test_propagate_two_soliton_collision(model, collision):
    _, rep = _run(collision, model, (-80, 80), 2048, -10.0, 10.0, 2.5e-4)
    assert rep.l_inf_error < 1e-4
    assert rep.mass_drift < 1e-10


def test_fractional_last_step(model, one_soliton):
    final, rep = _run(one_soliton, model, (-60, 60), 1024, 0.0, 0.0105, 1e-3)
    assert rep.steps == 11 and final.time == 0.0105
    assert rep.l_inf_error < 1e-7


def test_spatial_error_spectrally_small(model, one_soliton):
    e1 = _run(one_soliton, model, (-60, 60), 1024, 0.0, 1.0, 1e-3)[1].l_inf_error
    e2 = _run(one_soliton, model, (-60, 60), 2048, 0.0, 1.0, 1e-3)[1].l_inf_error
    assert abs(e2 - e1) / e1 < 0.1


def test_mass_drift_long_run(model, one_soliton):
    st = P.init_from_closed_form(one_soliton, model, (-60, 60), 1024, 0.0)
    _, rep = P.propagate(st, 10.0, 1e-3)
    assert rep.steps == 10000 and rep.mass_drift < 1e-10


def test_phase_covariance(model, one_soliton):
    phi = np.pi / 3
    rot = one_soliton.scaled(a_factor=cmath.exp(1j * phi))
    f0, _ = _run(one_soliton, model, (-60, 60), 1024, 0.0, 1.0, 1e-3)
    f1, _ = _run(rot, model, (-60, 60), 1024, 0.0, 1.0, 1e-3)
    np.testing.assert_allclose(f1.field, np.exp(-1j * phi) * f0.field, rtol=0, atol=1e-10)


def test_boundary_contamination(model, one_soliton):
    st = P.init_from_closed_form(one_soliton, model, (-40, 60), 1024, 0.0)
    with pytest.raises(DomainTooSmallError):
        P.propagate(st, 41.155 / 2.4, 1e-2)


def test_propagate_requires_future(model, one_soliton):
    st = P.init_from_closed_form(one_soliton, model, (-60, 60), 1024, 0.0)
    with pytest.raises(InvalidParameterError):
        P.propagate(st, 0.0, 1e-3)


def test_three_resolution_order(model, one_soliton):
    errs = [_run(one_soliton, model, (-60, 60), 1024, 0.0, 2.0, dt)[1].l_inf_error for dt in (4e-3, 2e-3, 1e-3)]
    for coarse, fine in zip(errs, errs[1:]):
        assert np.log2(coarse / fine) == pytest.approx(2.0, abs=0.3)


def test_error_monotone_in_resolution(model, one_soliton):
    runs = [(256, 4e-3), (512, 2e-3), (1024, 1e-3)]
    errs = [_run(one_soliton, model, (-60, 60), n, 0.0, 1.0, dt)[1].l_inf_error for n, dt in runs]
    assert errs[0] > errs[1] > errs[2]
