"""Physical coefficients, the x~ = x + k*y reduction, and discrete spectral data."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

import numpy as np

from .errors import (
    DegenerateModelError,
    DegenerateVectorError,
    HalfPlaneError,
    InvalidParameterError,
    SimpleZeroError,
)

CONSTRAINT_RTOL = 1e-12
DEGENERATE_C_ATOL = 1e-14
DISTINCT_ATOL = 1e-10


def _finite(name, value):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise InvalidParameterError(f"{name} must be a real number, got {value!r}") from None
    if not math.isfinite(value):
        raise InvalidParameterError(f"{name} must be finite, got {value!r}")
    return value


def derive_alphas(kappa, mu, mu1, mu2, mu3):
    """Lattice parameters -> (alpha1, alpha2, alpha3, alpha4).

    alpha4 is the crystal-field value 2*kappa^4*mu3.  It generally disagrees
    with the integrability constraint used by :func:`build_model`.
    """
    kappa, mu, mu1, mu2, mu3 = (
        _finite(n, v) for n, v in zip(("kappa", "mu", "mu1", "mu2", "mu3"), (kappa, mu, mu1, mu2, mu3))
    )
    k4 = kappa**4
    return (k4 * (mu + mu2), k4 * (mu1 + mu2), 2.0 * k4 * mu2, 2.0 * k4 * mu3)


@dataclass(frozen=True)
class MicroParameters:
    kappa: float
    mu: float
    mu1: float
    mu2: float
    mu3: float

    def alphas(self):
        return derive_alphas(self.kappa, self.mu, self.mu1, self.mu2, self.mu3)


@dataclass(frozen=True)
class PhysicalModel:
    """Coefficients of the (2+1)-d equation plus the reduction slope ``k``.

    Build through :func:`build_model` or :func:`model_from_micro`; ``alpha4``
    and ``c`` are always derived.
    """

    alpha1: float
    alpha2: float
    alpha3: float
    k: float
    c: float = field(init=False)
    alpha4: float = field(init=False)
    micro: Optional[MicroParameters] = None

    def __post_init__(self):
        for name in ("alpha1", "alpha2", "alpha3", "k"):
            object.__setattr__(self, name, _finite(name, getattr(self, name)))
        c = self.alpha1 + self.alpha2 * self.k**2 + self.alpha3 * self.k
        if abs(c) <= DEGENERATE_C_ATOL:
            raise DegenerateModelError(
                f"reduced dispersion c = alpha1 + alpha2*k^2 + alpha3*k vanishes (c = {c!r})"
            )
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "alpha4", -2.0 * c)
        if self.micro is not None:
            a1, a2, a3, _ = self.micro.alphas()
            for name, want in (("alpha1", a1), ("alpha2", a2), ("alpha3", a3)):
                got = getattr(self, name)
                if not math.isclose(got, want, rel_tol=CONSTRAINT_RTOL, abs_tol=1e-300):
                    raise InvalidParameterError(
                        f"{name} = {got!r} inconsistent with lattice parameters ({want!r})"
                    )

    @property
    def micro_alpha4(self):
        """Crystal-field alpha4 = 2*kappa^4*mu3, for comparison only."""
        return None if self.micro is None else self.micro.alphas()[3]

    def xt(self, x, y):
        return x + self.k * y


def build_model(alpha1, alpha2, alpha3, k, micro: Optional[MicroParameters] = None) -> PhysicalModel:
    return PhysicalModel(alpha1, alpha2, alpha3, k, micro=micro)


def model_from_micro(kappa, mu, mu1, mu2, mu3, k) -> PhysicalModel:
    micro = MicroParameters(*(float(v) for v in (kappa, mu, mu1, mu2, mu3)))
    a1, a2, a3, _ = micro.alphas()
    return build_model(a1, a2, a3, k, micro=micro)


@dataclass(frozen=True)
class SpaceTimePoint:
    x: float
    y: float = 0.0
    t: float = 0.0

    def __post_init__(self):
        for name in ("x", "y", "t"):
            object.__setattr__(self, name, _finite(name, getattr(self, name)))

    def xt(self, model: PhysicalModel) -> float:
        return self.x + model.k * self.y


@dataclass(frozen=True)
class SpectrumEntry:
    sigma: complex
    a: complex
    b: complex


@dataclass(frozen=True)
class SolitonSpectrum:
    entries: tuple

    @property
    def N(self) -> int:
        return len(self.entries)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    @property
    def sigma(self) -> np.ndarray:
        return np.array([e.sigma for e in self.entries], dtype=np.complex128)

    @property
    def a(self) -> np.ndarray:
        return np.array([e.a for e in self.entries], dtype=np.complex128)

    @property
    def b(self) -> np.ndarray:
        return np.array([e.b for e in self.entries], dtype=np.complex128)

    def scaled(self, a_factor=1.0, b_factor=1.0) -> "SolitonSpectrum":
        return SolitonSpectrum(
            tuple(SpectrumEntry(e.sigma, e.a * a_factor, e.b * b_factor) for e in self.entries)
        )


def _as_complex(name, value):
    if isinstance(value, (list, tuple)) and len(value) == 2:
        value = complex(_finite(name, value[0]), _finite(name, value[1]))
    try:
        z = complex(value)
    except (TypeError, ValueError):
        raise InvalidParameterError(f"{name} must be a complex number, got {value!r}") from None
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise InvalidParameterError(f"{name} must be finite, got {value!r}")
    return z


def validate_spectrum(raw: Iterable) -> SolitonSpectrum:
    """Check half-plane, distinctness and nondegenerate vectors.

    ``raw`` items may be :class:`SpectrumEntry`, mappings with keys
    ``sigma``/``a``/``b``, or ``(sigma, a, b)`` triples.
    """
    entries = []
    for j, item in enumerate(raw):
        if isinstance(item, SpectrumEntry):
            s, a, b = item.sigma, item.a, item.b
        elif isinstance(item, Mapping):
            try:
                s, a, b = item["sigma"], item["a"], item["b"]
            except KeyError as exc:
                raise InvalidParameterError(f"spectrum entry {j} missing {exc.args[0]!r}") from None
        else:
            s, a, b = item
        s = _as_complex(f"entry {j} sigma", s)
        a = _as_complex(f"entry {j} a", a)
        b = _as_complex(f"entry {j} b", b)
        if s.imag <= 0.0:
            raise HalfPlaneError(f"entry {j}: Im(sigma) = {s.imag!r} must be > 0")
        if a == 0 or b == 0:
            raise DegenerateVectorError(f"entry {j}: a and b must both be nonzero (a={a}, b={b})")
        for i, prev in enumerate(entries):
            if abs(prev.sigma - s) < DISTINCT_ATOL:
                raise SimpleZeroError(f"entries {i} and {j} share sigma = {s} (zeros must be simple)")
        entries.append(SpectrumEntry(s, a, b))
    if not entries:
        raise InvalidParameterError("spectrum must contain at least one entry")
    return SolitonSpectrum(tuple(entries))
