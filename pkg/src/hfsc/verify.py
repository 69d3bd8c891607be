"""Independent numerical checks of closed-form fields.

Samplers are vectorized callables ``u(x, y, t)`` returning complex arrays.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainTooSmallError, InvalidParameterError, NumericalError, PeakCountError, TrackingError
from .model import PhysicalModel, SpaceTimePoint

Sampler = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]

DEFAULT_H = 1e-3
SIGMA_CAP = 1e3
DECAY_TOL = 1e-10

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


def _steps(h):
    if np.ndim(h) == 0:
        h = (h, h, h)
    hx, hy, ht = (float(v) for v in h)
    if min(hx, hy, ht) <= 0:
        raise InvalidParameterError(f"finite-difference steps must be positive, got {h}")
    return hx, hy, ht


def _call(sampler, x, y, t):
    u = np.asarray(sampler(x, y, t), dtype=np.complex128)
    if not np.all(np.isfinite(u)):
        raise NumericalError("sampler returned non-finite values on the finite-difference stencil")
    return u


def pde_residual(sampler: Sampler, model: PhysicalModel, x, y, t, h=DEFAULT_H) -> np.ndarray:
    """i u_t + a1 u_xx + a2 u_yy + a3 u_xy - a4 |u|^2 u by central differences."""
    hx, hy, ht = _steps(h)
    x, y, t = np.broadcast_arrays(*(np.asarray(v, float) for v in (x, y, t)))
    u0 = _call(sampler, x, y, t)
    u_t = (_call(sampler, x, y, t + ht) - _call(sampler, x, y, t - ht)) / (2 * ht)
    u_xx = (_call(sampler, x + hx, y, t) - 2 * u0 + _call(sampler, x - hx, y, t)) / hx**2
    u_yy = (_call(sampler, x, y + hy, t) - 2 * u0 + _call(sampler, x, y - hy, t)) / hy**2
    u_xy = (
        _call(sampler, x + hx, y + hy, t)
        - _call(sampler, x + hx, y - hy, t)
        - _call(sampler, x - hx, y + hy, t)
        + _call(sampler, x - hx, y - hy, t)
    ) / (4 * hx * hy)
    return (
        1j * u_t
        + model.alpha1 * u_xx
        + model.alpha2 * u_yy
        + model.alpha3 * u_xy
        - model.alpha4 * np.abs(u0) ** 2 * u0
    )


def fd_residual(sampler: Sampler, point: SpaceTimePoint, model: PhysicalModel, h=DEFAULT_H) -> complex:
    return complex(pde_residual(sampler, model, point.x, point.y, point.t, h))


@dataclass
class ResidualReport:
    max_abs: float
    rms: float
    h: Tuple[float, float, float]
    n_points: int
    order: Optional[float] = None
    coarse_max_abs: Optional[float] = None

    def to_dict(self):
        return asdict(self)


def residual_norms(sampler: Sampler, model: PhysicalModel, x, y, t, h=DEFAULT_H, coarse_h=None) -> ResidualReport:
    """Max/RMS residual over sample nodes; with ``coarse_h`` also the empirical order."""
    r = np.abs(pde_residual(sampler, model, x, y, t, h)).reshape(-1)
    report = ResidualReport(float(r.max()), float(np.sqrt(np.mean(r**2))), _steps(h), int(r.size))
    if coarse_h is not None:
        rc = np.abs(pde_residual(sampler, model, x, y, t, coarse_h)).reshape(-1)
        report.coarse_max_abs = float(rc.max())
        report.order = empirical_order(report.coarse_max_abs, report.max_abs, _steps(coarse_h)[0] / _steps(h)[0])
    return report


def empirical_order(coarse_err, fine_err, ratio=2.0):
    if fine_err == 0.0 or coarse_err == 0.0:
        return float("nan")
    return float(np.log(coarse_err / fine_err) / np.log(ratio))


# ------------------------------------------------------------ Lax pair

LAMBDA = np.diag([1.0 + 0j, -1.0 + 0j])


def lax_u(u, sigma):
    """Spatial Lax matrix i*sigma*Lambda + i*Q."""
    u = np.asarray(u, dtype=np.complex128)
    U = np.zeros(u.shape + (2, 2), dtype=np.complex128)
    U[..., 0, 0] = 1j * sigma
    U[..., 1, 1] = -1j * sigma
    U[..., 0, 1] = 1j * np.conj(u)
    U[..., 1, 0] = 1j * u
    return U


def lax_v(u, u_x, sigma, alpha4):
    """Temporal Lax matrix -i*alpha4*sigma^2*Lambda + V1."""
    u = np.asarray(u, dtype=np.complex128)
    u_x = np.asarray(u_x, dtype=np.complex128)
    V = np.zeros(u.shape + (2, 2), dtype=np.complex128)
    uu = np.abs(u) ** 2
    V[..., 0, 0] = -1j * alpha4 * sigma**2 + 0.5j * alpha4 * uu
    V[..., 1, 1] = 1j * alpha4 * sigma**2 - 0.5j * alpha4 * uu
    V[..., 0, 1] = -1j * alpha4 * sigma * np.conj(u) - 0.5 * alpha4 * np.conj(u_x)
    V[..., 1, 0] = -1j * alpha4 * sigma * u + 0.5 * alpha4 * u_x
    return V


def zero_curvature_matrix(sampler: Sampler, sigma, model: PhysicalModel, x, y, t, h=DEFAULT_H):
    """U_t - V_x~ + [U, V] on broadcast arrays, derivatives by central differences.

    x~ is shifted through ``x`` at fixed ``y``.
    """
    sigma = complex(sigma)
    if abs(sigma) > SIGMA_CAP:
        raise InvalidParameterError(f"|sigma| = {abs(sigma):.3g} exceeds {SIGMA_CAP:g}")
    if h <= 0:
        raise InvalidParameterError("h must be positive")
    x, y, t = np.broadcast_arrays(*(np.asarray(v, float) for v in (x, y, t)))
    a4 = model.alpha4

    def u_at(dx=0.0, dt=0.0):
        return _call(sampler, x + dx, y, t + dt)

    def v_at(dx):
        ux = (u_at(dx + h) - u_at(dx - h)) / (2 * h)
        return lax_v(u_at(dx), ux, sigma, a4)

    u0 = u_at()
    U = lax_u(u0, sigma)
    V = v_at(0.0)
    U_t = (lax_u(u_at(dt=h), sigma) - lax_u(u_at(dt=-h), sigma)) / (2 * h)
    V_x = (v_at(h) - v_at(-h)) / (2 * h)
    return U_t - V_x + U @ V - V @ U


def zero_curvature_residual(sampler: Sampler, sigma, point: SpaceTimePoint, model: PhysicalModel, h=DEFAULT_H) -> float:
    z = zero_curvature_matrix(sampler, sigma, model, point.x, point.y, point.t, h)
    return float(np.linalg.norm(z))


def corrupted(sampler: Sampler, model: PhysicalModel, eps=0.01) -> Sampler:
    """Test hook: u * (1 + eps * x~), no longer a solution."""

    def bad(x, y, t):
        return sampler(x, y, t) * (1.0 + eps * model.xt(np.asarray(x, float), np.asarray(y, float)))

    return bad


# ------------------------------------------------------------ mass

def mass(u, dx) -> float:
    """Trapezoid quadrature of |u|^2 on a uniform line with spacing ``dx``.

    Standard L2 invariant of NLS-type equations.
    """
    u = np.asarray(u)
    if u.size < 2:
        raise InvalidParameterError("mass needs at least two nodes")
    edge = max(abs(u[0]), abs(u[-1]))
    if edge >= DECAY_TOL:
        raise DomainTooSmallError(f"field has not decayed at the line ends (|u| = {edge:.3g} >= {DECAY_TOL:g})")
    return float(_trapezoid(np.abs(u) ** 2, dx=dx))


# ------------------------------------------------------------ features

@dataclass
class FeatureReport:
    peak_amplitude: float
    peak_trajectory: List[Tuple[float, float]]
    fitted_velocity: float
    pre_amplitudes: Optional[List[float]] = None
    post_amplitudes: Optional[List[float]] = None
    oscillation_period: Optional[float] = None
    autocorrelation_peak: Optional[float] = None

    def to_dict(self):
        return asdict(self)


def refine_peak(f, i, x):
    """Vertex of the parabola through (i-1, i, i+1)."""
    dx = x[1] - x[0]
    fl, fc, fr = f[i - 1], f[i], f[i + 1]
    curv = fl - 2 * fc + fr
    if curv >= 0:
        return float(x[i]), float(fc)
    off = 0.5 * (fl - fr) / curv
    return float(x[i] + off * dx), float(fc - 0.125 * (fl - fr) ** 2 / curv)


def find_peaks(f, x, n, slice_index=None):
    """The ``n`` highest interior local maxima of ``f``, refined, sorted by position."""
    interior = np.flatnonzero((f[1:-1] > f[:-2]) & (f[1:-1] >= f[2:])) + 1
    top = int(np.argmax(f))
    if top == 0 or top == f.size - 1:
        raise TrackingError(f"peak touches the domain boundary in slice {slice_index}", slice_index)
    if interior.size < n:
        raise PeakCountError(f"found {interior.size} peaks in slice {slice_index}, need {n}", slice_index)
    chosen = interior[np.argsort(f[interior])[::-1][:n]]
    peaks = [refine_peak(f, i, x) for i in chosen]
    return sorted(peaks)


def slice_peak(f, x, slice_index=None, tie_rtol=1e-3):
    """Location and height of the dominant maximum of one slice.

    Maxima within ``tie_rtol`` of the top height are averaged, so a symmetric
    double-humped profile reports its midpoint instead of flipping sides.
    """
    peaks = find_peaks(f, x, 1, slice_index)
    top = peaks[0][1]
    interior = np.flatnonzero((f[1:-1] > f[:-2]) & (f[1:-1] >= f[2:])) + 1
    ties = [refine_peak(f, i, x) for i in interior if f[i] >= (1 - 2 * tie_rtol) * top]
    ties = [p for p in ties if p[1] >= (1 - tie_rtol) * top]
    if len(ties) > 1:
        return float(np.mean([p[0] for p in ties])), float(max(p[1] for p in ties))
    return peaks[0]


def _movie(movie):
    """-> (t, x~, |u| with shape (nt, nx))."""
    names = [ax.name for ax in movie.grid.axes]
    if "x" not in names or "t" not in names or len(names) != 2:
        raise InvalidParameterError(f"feature movie needs exactly the axes x and t, got {names}")
    amp = np.abs(movie.array())
    if names.index("t") == 1:
        amp = amp.T
    y = float(movie.grid.fixed.get("y", 0.0))
    xt = movie.model.xt(movie.axis("x"), y)
    return movie.axis("t"), xt, amp


def dominant_period(series, dt, pad=16):
    """Period of the strongest nonzero frequency (Hann window, zero padding, parabolic refinement)."""
    s = np.asarray(series, float)
    s = (s - s.mean()) * np.hanning(s.size)
    nfft = pad * s.size
    spec = np.abs(np.fft.rfft(s, nfft))
    freqs = np.fft.rfftfreq(nfft, dt)
    i = int(np.argmax(spec[1:])) + 1
    if 0 < i < spec.size - 1:
        l, c, r = np.log(spec[i - 1 : i + 2] + 1e-300)
        off = 0.5 * (l - r) / (l - 2 * c + r)
    else:
        off = 0.0
    f = freqs[i] + off * (freqs[1] - freqs[0])
    return float(1.0 / f)


def autocorrelation(series, max_lag=None):
    """Pearson correlation of the series with itself shifted by each lag."""
    s = np.asarray(series, float)
    n = s.size
    max_lag = n // 2 if max_lag is None else max_lag
    out = np.empty(max_lag + 1)
    for lag in range(max_lag + 1):
        a, b = s[: n - lag], s[lag:]
        out[lag] = np.corrcoef(a, b)[0, 1] if lag else 1.0
    return out


def secondary_peak(ac):
    """Highest autocorrelation after the first dip below zero."""
    below = np.flatnonzero(ac < 0)
    if below.size == 0:
        return float("nan")
    return float(ac[below[0] :].max())


def track_features(movie, n_peaks=1, breather=False) -> FeatureReport:
    t, xt, amp = _movie(movie)
    if t.size < 8:
        raise InvalidParameterError(f"feature tracking needs >= 8 time slices, got {t.size}")
    traj = []
    heights = []
    for i in range(t.size):
        xp, hp = slice_peak(amp[i], xt, i)
        traj.append((float(t[i]), xp))
        heights.append(hp)
    tr = np.array(traj)
    velocity, intercept = np.polyfit(tr[:, 0], tr[:, 1], 1)
    report = FeatureReport(float(max(heights)), traj, float(velocity))
    if n_peaks >= 2:
        report.pre_amplitudes, report.post_amplitudes = _collision_amplitudes(t, xt, amp, n_peaks)
    if breather:
        xc = intercept + velocity * t
        series = np.array([np.interp(xc[i], xt, amp[i]) for i in range(t.size)])
        dt = t[1] - t[0]
        report.oscillation_period = dominant_period(series, dt)
        report.autocorrelation_peak = secondary_peak(autocorrelation(series))
    return report


def _collision_amplitudes(t, xt, amp, n):
    """Per-soliton amplitudes in the first and last slice, matched by velocity."""

    def slice_velocities(i, j):
        a = find_peaks(amp[i], xt, n, i)
        b = find_peaks(amp[j], xt, n, j)
        vel = []
        for xa, _ in a:
            xb = min(b, key=lambda p: abs(p[0] - xa))[0]
            vel.append((xb - xa) / (t[j] - t[i]))
        return a, vel

    pre, v_pre = slice_velocities(0, 1)
    post, v_post = slice_velocities(t.size - 1, t.size - 2)
    pre_amp, post_amp = [], []
    used = set()
    for (_, h), v in sorted(zip(pre, v_pre), key=lambda q: q[1]):
        k = min((k for k in range(n) if k not in used), key=lambda k: abs(v_post[k] - v))
        used.add(k)
        pre_amp.append(float(h))
        post_amp.append(float(post[k][1]))
    return pre_amp, post_amp


# ------------------------------------------------------------ report

@dataclass
class Check:
    name: str
    value: float
    tolerance: float
    passed: bool
    comparison: str = "<"
    note: str = ""


@dataclass
class VerificationReport:
    checks: List[Check] = field(default_factory=list)
    residual: Optional[ResidualReport] = None

    def add(self, name, value, tolerance, comparison="<", note=""):
        if comparison == "<":
            ok = value < tolerance
        elif comparison == ">":
            ok = value > tolerance
        elif comparison == "within":
            lo, hi = tolerance
            ok = lo <= value <= hi
        else:
            raise ValueError(comparison)
        ok = bool(ok and np.all(np.isfinite(value)))
        self.checks.append(Check(name, float(value), tolerance, ok, comparison, note))
        return ok

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    @property
    def failed(self):
        return [c.name for c in self.checks if not c.passed]

    def to_dict(self):
        d = {"passed": self.passed, "failed": self.failed, "checks": [asdict(c) for c in self.checks]}
        if self.residual is not None:
            d["residual"] = self.residual.to_dict()
        return d
