"""Strang split-step Fourier integrator for the reduced equation

    i u_t + c u_{x~x~} - alpha4 |u|^2 u = 0

on a periodic domain.  Used as a dynamical oracle for the closed forms.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import _kernels
from .errors import BlowUpError, DomainTooSmallError, InvalidParameterError
from .model import PhysicalModel, SolitonSpectrum
from .soliton import nsoliton_field

MIN_MODES = 64
DT_MAX = 0.01
EDGE_NODES = 8
EDGE_TOL = 1e-8
TAIL_TOL = 1e-10

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


@dataclass(frozen=True)
class PropagationState:
    domain: tuple
    n_modes: int
    field: np.ndarray
    time: float
    model: PhysicalModel

    @property
    def length(self):
        return self.domain[1] - self.domain[0]

    @property
    def dx(self):
        return self.length / self.n_modes

    @property
    def x(self):
        # periodic grid, right endpoint excluded
        return self.domain[0] + self.dx * np.arange(self.n_modes)

    @property
    def wavenumbers(self):
        # 0, 1, ..., n/2-1, -n/2, ..., -1 scaled by 2*pi/L
        return 2.0 * np.pi * np.fft.fftfreq(self.n_modes, d=1.0 / self.n_modes) / self.length

    def mass(self):
        return mass_periodic(self.field, self.dx)


@dataclass
class PropagationReport:
    final_time: float
    l_inf_error: float
    l2_error: float
    mass_initial: float
    mass_final: float
    mass_drift: float
    steps: int
    wall_time: float

    def to_dict(self):
        return asdict(self)


def mass_periodic(u, dx):
    # trapezoid on the closed periodic grid: node sum times dx
    return float(np.sum(np.abs(u) ** 2) * dx)


def _check_modes(n_modes):
    if n_modes < MIN_MODES or n_modes & (n_modes - 1):
        raise InvalidParameterError(f"n_modes must be a power of two >= {MIN_MODES}, got {n_modes}")


def suggested_half_width(spectrum: SolitonSpectrum, model: PhysicalModel, t0: float, domain):
    """Half-width where the slowest sech tail (rate 2 min Im sigma) reaches 1e-10."""
    eta = spectrum.sigma.imag.min()
    # peak positions from the lattice of the one-soliton centres
    centres = [
        2 * model.alpha4 * e.sigma.real * t0 + math.log(abs(e.b) / abs(e.a)) / (2 * e.sigma.imag)
        for e in spectrum
    ]
    mid = 0.5 * (domain[0] + domain[1])
    reach = max(abs(c - mid) for c in centres)
    return reach + math.log(1.0 / TAIL_TOL) / (2 * eta)


def init_from_closed_form(spectrum: SolitonSpectrum, model: PhysicalModel, domain, n_modes: int, t0: float = 0.0):
    _check_modes(int(n_modes))
    lo, hi = float(domain[0]), float(domain[1])
    if not hi > lo:
        raise InvalidParameterError(f"domain must satisfy min < max, got {domain}")
    n_modes = int(n_modes)
    dx = (hi - lo) / n_modes
    x = lo + dx * np.arange(n_modes)
    u = np.asarray(nsoliton_field(spectrum, model, x, 0.0, t0), dtype=np.complex128)
    edge = max(np.abs(u[:EDGE_NODES]).max(), np.abs(u[-EDGE_NODES:]).max())
    if edge >= EDGE_TOL:
        hw = suggested_half_width(spectrum, model, t0, (lo, hi))
        raise DomainTooSmallError(
            f"field is {edge:.3g} >= {EDGE_TOL:g} near the boundary of [{lo:g}, {hi:g}]; "
            f"use a half-width of at least {hw:.4g}",
            suggested_half_width=hw,
        )
    return PropagationState((lo, hi), n_modes, u, float(t0), model)


class SplitStepper:
    """Precomputes the linear propagator for a fixed ``dt``."""

    def __init__(self, state: PropagationState, dt: float, rotate=None):
        if not 0 < dt <= DT_MAX:
            raise InvalidParameterError(f"dt must lie in (0, {DT_MAX}], got {dt}")
        self.dt = float(dt)
        self.linear = np.exp(-1j * state.model.c * state.wavenumbers**2 * self.dt)
        self.half_coef = 0.5 * state.model.alpha4 * self.dt
        self.rotate = rotate or _kernels.nonlinear_rotate

    def advance(self, u, nsteps=1, start_step=0):
        for n in range(nsteps):
            self.rotate(u, self.half_coef)
            u[:] = np.fft.ifft(self.linear * np.fft.fft(u))
            self.rotate(u, self.half_coef)
            if ((n & 63) == 63 or n == nsteps - 1) and not np.all(np.isfinite(u)):
                raise BlowUpError(f"non-finite field at step {start_step + n + 1}", step=start_step + n + 1)
        return u


def step(state: PropagationState, dt: float) -> PropagationState:
    u = state.field.copy()
    SplitStepper(state, dt).advance(u)
    return replace(state, field=u, time=state.time + dt)


def propagate(state: PropagationState, t_final: float, dt: float, spectrum: SolitonSpectrum = None):
    """Step to ``t_final`` (last step shortened); compare with the closed form when ``spectrum`` is given."""
    if not t_final > state.time:
        raise InvalidParameterError(f"t_final = {t_final} must exceed the current time {state.time}")
    t_start = time.perf_counter()
    span = t_final - state.time
    nfull = int(math.floor(span / dt + 1e-9))
    rest = span - nfull * dt
    u = state.field.copy()
    stepper = SplitStepper(state, dt)
    stepper.advance(u, nfull)
    steps = nfull
    if rest > 1e-12 * dt:
        SplitStepper(state, rest).advance(u, 1, start_step=steps)
        steps += 1
    if not np.all(np.isfinite(u)):
        raise BlowUpError(f"non-finite field after {steps} steps", step=steps)
    final = replace(state, field=u, time=float(t_final))
    peak = int(np.argmax(np.abs(u)))
    if peak < EDGE_NODES or peak >= state.n_modes - EDGE_NODES:
        raise DomainTooSmallError(
            f"peak reached node {peak}, within {EDGE_NODES} nodes of the boundary",
            suggested_half_width=None,
        )
    m0, m1 = state.mass(), final.mass()
    if spectrum is not None:
        exact = nsoliton_field(spectrum, state.model, final.x, 0.0, t_final)
        diff = np.abs(u - exact)
        linf = float(diff.max())
        l2 = float(np.sqrt(np.sum(diff**2) * state.dx))
    else:
        linf = l2 = float("nan")
    report = PropagationReport(
        float(t_final), linf, l2, m0, m1, abs(m1 - m0) / m0 if m0 else 0.0, steps, time.perf_counter() - t_start
    )
    return final, report
