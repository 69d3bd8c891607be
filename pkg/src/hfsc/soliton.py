"""Closed-form N-soliton fields on points and grids."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from dataclasses import field as dc_field
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .errors import ConditioningError, DomainTooLargeError, InvalidParameterError
from .model import PhysicalModel, SolitonSpectrum, SpaceTimePoint, SpectrumEntry

PHASE_GUARD = 300.0
COND_WARN = 1e12
COND_FAIL = 1e15
DET_FLOOR = 1e-14

EVALUATORS = ("general", "one", "two")


class ConditioningWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class PhaseValue:
    theta: complex


@dataclass(frozen=True)
class MMatrix:
    m: np.ndarray
    cond_estimate: float
    ill_conditioned: bool


@dataclass(frozen=True)
class FieldSample:
    u: complex
    point: SpaceTimePoint


def _broadcast(model, x, y, t):
    x, y, t = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float), np.asarray(t, float))
    return model.xt(x, y), t, x, y


def _guard(sigma, xt, t, alpha4, x=None, y=None):
    # Re(theta_j) = -Im(s_j) x~ + alpha4 Im(s_j^2) t
    re = -sigma.imag[None, :] * xt.reshape(-1)[:, None] + alpha4 * (sigma**2).imag[None, :] * t.reshape(-1)[:, None]
    bad = np.abs(re) > PHASE_GUARD
    if bad.any():
        p, j = np.argwhere(bad)[0]
        if x is not None:
            where = f"(x={float(x.reshape(-1)[p])!r}, y={float(y.reshape(-1)[p])!r}, t={float(t.reshape(-1)[p])!r})"
        else:
            where = f"(x~={float(xt.reshape(-1)[p])!r}, t={float(t.reshape(-1)[p])!r})"
        raise DomainTooLargeError(
            f"|Re theta| = {abs(re[p, j]):.6g} > {PHASE_GUARD:g} for spectrum entry {j} "
            f"(sigma={sigma[j]}) at {where}"
        )


def phase(entry: SpectrumEntry, point: SpaceTimePoint, model: PhysicalModel) -> PhaseValue:
    s = complex(entry.sigma)
    theta = 1j * s * point.xt(model) - 1j * model.alpha4 * s * s * point.t
    if abs(theta.real) > PHASE_GUARD:
        raise DomainTooLargeError(
            f"|Re theta| = {abs(theta.real):.6g} > {PHASE_GUARD:g} for sigma={s} at {point}"
        )
    return PhaseValue(theta)


def _scaled_cond(m):
    s = 1.0 / np.sqrt(np.abs(np.diag(m)))
    ms = m * s[:, None] * s[None, :]
    return float(np.linalg.cond(ms, 1).real)


def build_m_matrix(spectrum: SolitonSpectrum, point: SpaceTimePoint, model: PhysicalModel) -> MMatrix:
    theta = np.array([phase(e, point, model).theta for e in spectrum], dtype=np.complex128)
    sigma, a, b = spectrum.sigma, spectrum.a, spectrum.b
    ep = a * np.exp(theta)
    em = b * np.exp(-theta)
    m = (np.conj(ep)[:, None] * ep[None, :] + np.conj(em)[:, None] * em[None, :]) / (
        sigma[None, :] - np.conj(sigma)[:, None]
    )
    cond = _scaled_cond(m)
    return MMatrix(m, cond, cond > COND_WARN)


def _check_cond(cond, xt, t):
    worst = int(np.argmax(cond))
    if cond[worst] > COND_FAIL or not np.isfinite(cond[worst]):
        raise ConditioningError(
            f"M is numerically singular (cond ~ {cond[worst]:.3g}) at x~={float(xt[worst])!r}, t={float(t[worst])!r}",
            cond=float(cond[worst]),
        )
    if cond[worst] > COND_WARN:
        warnings.warn(
            f"M ill-conditioned (cond ~ {cond[worst]:.3g}) at x~={float(xt[worst])!r}, t={float(t[worst])!r}",
            ConditioningWarning,
            stacklevel=3,
        )


def nsoliton_field(spectrum: SolitonSpectrum, model: PhysicalModel, x, y=0.0, t=0.0, *, kernel=None):
    """General N-soliton field on broadcast arrays ``x, y, t``."""
    xt, tt, xb, yb = _broadcast(model, x, y, t)
    sigma, a, b = spectrum.sigma, spectrum.a, spectrum.b
    _guard(sigma, xt, tt, model.alpha4, xb, yb)
    flat_x = np.ascontiguousarray(xt.reshape(-1))
    flat_t = np.ascontiguousarray(tt.reshape(-1))
    kernel = kernel or _kernels.nsoliton
    u, cond = kernel(sigma, a, b, flat_x, flat_t, float(model.alpha4))
    if cond.size:
        _check_cond(cond, flat_x, flat_t)
    return u.reshape(xt.shape)


def one_soliton_field(entry: SpectrumEntry, model: PhysicalModel, x, y=0.0, t=0.0):
    xt, tt, xb, yb = _broadcast(model, x, y, t)
    s, a, b = complex(entry.sigma), complex(entry.a), complex(entry.b)
    _guard(np.array([s]), xt, tt, model.alpha4, xb, yb)
    theta = 1j * s * xt - 1j * model.alpha4 * s * s * tt
    re = theta.real
    num = -2.0 * np.conj(a) * b * (s - np.conj(s)) * np.exp(-2j * theta.imag)
    den = abs(a) ** 2 * np.exp(2.0 * re) + abs(b) ** 2 * np.exp(-2.0 * re)
    return num / den


def sech_one_soliton_field(entry: SpectrumEntry, model: PhysicalModel, x, y=0.0, t=0.0):
    """sech normal form; valid only for b == 1 with |a|^2 = exp(2 xi)."""
    if entry.b != 1:
        raise InvalidParameterError("sech normal form requires b = 1")
    xt, tt, _, _ = _broadcast(model, x, y, t)
    s, a = complex(entry.sigma), complex(entry.a)
    s1, s2 = s.real, s.imag
    xi = np.log(abs(a))
    a4 = model.alpha4
    arg = -2.0 * s2 * xt + 4.0 * a4 * s1 * s2 * tt + xi
    ph = -2j * s1 * xt + 2j * a4 * s1**2 * tt - 2j * a4 * s2**2 * tt
    return -2j * np.conj(a) * s2 * np.exp(-xi) * np.exp(ph) / np.cosh(arg)


def two_soliton_field(spectrum: SolitonSpectrum, model: PhysicalModel, x, y=0.0, t=0.0):
    """Two-soliton field through the explicit 2x2 inverse."""
    if spectrum.N != 2:
        raise InvalidParameterError(f"two-soliton evaluator needs N = 2, got N = {spectrum.N}")
    xt, tt, xb, yb = _broadcast(model, x, y, t)
    sigma, a, b = spectrum.sigma, spectrum.a, spectrum.b
    _guard(sigma, xt, tt, model.alpha4, xb, yb)
    th = [1j * sigma[j] * xt - 1j * model.alpha4 * sigma[j] ** 2 * tt for j in (0, 1)]
    ep = [a[j] * np.exp(th[j]) for j in (0, 1)]
    em = [b[j] * np.exp(-th[j]) for j in (0, 1)]

    def m(k, j):
        return (np.conj(ep[k]) * ep[j] + np.conj(em[k]) * em[j]) / (sigma[j] - np.conj(sigma[k]))

    m11, m12, m21, m22 = m(0, 0), m(0, 1), m(1, 0), m(1, 1)
    # Jacobi scaling keeps m11*m22 finite near the phase guard.
    s1 = 1.0 / np.sqrt(np.abs(m11))
    s2 = 1.0 / np.sqrt(np.abs(m22))
    m11, m12, m21, m22 = m11 * s1 * s1, m12 * s1 * s2, m21 * s2 * s1, m22 * s2 * s2
    det = m11 * m22 - m12 * m21
    if np.any(np.abs(det) < DET_FLOOR):
        raise ConditioningError(f"2x2 determinant below {DET_FLOOR:g} (relative to entry scale)")
    p1, p2 = em[0] * s1, em[1] * s2
    q1, q2 = np.conj(ep[0]) * s1, np.conj(ep[1]) * s2
    num = p1 * m22 * q1 - p1 * m12 * q2 - p2 * m21 * q1 + p2 * m11 * q2
    return -2.0 * num / det


def field(spectrum: SolitonSpectrum, model: PhysicalModel, x, y=0.0, t=0.0, evaluator: str = "general"):
    if evaluator == "general":
        return nsoliton_field(spectrum, model, x, y, t)
    if evaluator == "one":
        if spectrum.N != 1:
            raise InvalidParameterError(f"one-soliton evaluator needs N = 1, got N = {spectrum.N}")
        return one_soliton_field(spectrum[0], model, x, y, t)
    if evaluator == "two":
        return two_soliton_field(spectrum, model, x, y, t)
    raise InvalidParameterError(f"unknown evaluator {evaluator!r}; choose from {EVALUATORS}")


def sampler(spectrum: SolitonSpectrum, model: PhysicalModel, evaluator: str = "general"):
    """Vectorized callable (x, y, t) -> u, for the verification routines."""

    def u(x, y, t):
        return field(spectrum, model, x, y, t, evaluator)

    return u


def eval_nsoliton(spectrum, point: SpaceTimePoint, model) -> FieldSample:
    return FieldSample(complex(nsoliton_field(spectrum, model, point.x, point.y, point.t)), point)


def eval_one_soliton(entry, point: SpaceTimePoint, model) -> FieldSample:
    if isinstance(entry, SolitonSpectrum):
        if entry.N != 1:
            raise InvalidParameterError(f"one-soliton evaluator needs N = 1, got N = {entry.N}")
        entry = entry[0]
    return FieldSample(complex(one_soliton_field(entry, model, point.x, point.y, point.t)), point)


def eval_two_soliton(spectrum, point: SpaceTimePoint, model) -> FieldSample:
    return FieldSample(complex(two_soliton_field(spectrum, model, point.x, point.y, point.t)), point)


# ---------------------------------------------------------------- grids

AXIS_NAMES = ("x", "y", "t")


@dataclass(frozen=True)
class Axis:
    name: str
    min: float
    max: float
    count: int

    def __post_init__(self):
        if self.name not in AXIS_NAMES:
            raise InvalidParameterError(f"axis name must be one of {AXIS_NAMES}, got {self.name!r}")
        if int(self.count) != self.count or self.count < 1:
            raise InvalidParameterError(f"axis {self.name}: count must be an integer >= 1")
        if not (np.isfinite(self.min) and np.isfinite(self.max)):
            raise InvalidParameterError(f"axis {self.name}: bounds must be finite")

    def values(self) -> np.ndarray:
        return np.linspace(float(self.min), float(self.max), int(self.count))


@dataclass(frozen=True)
class GridSpec:
    axes: tuple
    fixed: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if not self.axes:
            raise InvalidParameterError("grid needs at least one axis")
        names = [ax.name for ax in self.axes]
        if len(set(names)) != len(names):
            raise InvalidParameterError(f"duplicate axis in {names}")
        for name in self.fixed:
            if name not in AXIS_NAMES:
                raise InvalidParameterError(f"fixed coordinate must be one of {AXIS_NAMES}, got {name!r}")
            if name in names:
                raise InvalidParameterError(f"{name!r} is both an axis and fixed")

    @property
    def shape(self):
        return tuple(int(ax.count) for ax in self.axes)

    def coordinates(self):
        """Flattened (x, y, t) per node, row-major over axes in declaration order."""
        mesh = np.meshgrid(*[ax.values() for ax in self.axes], indexing="ij")
        coords = {ax.name: g.reshape(-1) for ax, g in zip(self.axes, mesh)}
        n = int(np.prod(self.shape))
        return tuple(coords.get(nm, np.full(n, float(self.fixed.get(nm, 0.0)))) for nm in AXIS_NAMES)


@dataclass
class FieldGrid:
    grid: GridSpec
    values: np.ndarray
    model: PhysicalModel
    spectrum: SolitonSpectrum
    evaluator: str = "general"

    @property
    def shape(self):
        return self.grid.shape

    def axis(self, name) -> np.ndarray:
        for ax in self.grid.axes:
            if ax.name == name:
                return ax.values()
        raise KeyError(name)

    def array(self) -> np.ndarray:
        return self.values.reshape(self.shape)


def eval_grid(spectrum, model, grid: GridSpec, evaluator: str = "general") -> FieldGrid:
    x, y, t = grid.coordinates()
    values = field(spectrum, model, x, y, t, evaluator)
    return FieldGrid(grid, np.asarray(values, dtype=np.complex128), model, spectrum, evaluator)
