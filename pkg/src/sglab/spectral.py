"""Periodic grid, spectral transforms, derivatives, and the norm kit.

Everything lives on the side-1 torus [0,1)^2 sampled on an n-by-n uniform
grid (n a power of two). Angular wavenumbers are k = 2*pi*(p, q) with
integer frequencies p, q in [-n/2, n/2). The FFT convention is numpy's:
forward transform unscaled, inverse scaled by 1/n^2, so the mathematical
Fourier coefficient of mode (p, q) is fft2(values)[p, q] / n^2 and
Parseval reads ||f||_L2^2 = sum_k |fft2(f)[k] / n^2|^2.

Sobolev norms are homogeneous: ||f||_Hs = (sum_{k != 0} |k|^{2s} |c_k|^2)^{1/2}
with |k| = 2*pi*sqrt(p^2+q^2). This makes the interpolation inequalities
exact with constant 1 (Hoelder on the spectral weights).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "TorusGrid",
    "ScalarField",
    "NormKind",
    "derivative",
    "inv_laplacian",
    "perp_gradient",
    "norm",
    "dealias",
    "MeanViolationError",
]


class MeanViolationError(ValueError):
    """Raised when an operation requiring a mean-zero field gets one that isn't.

    Carries the measured mean in args[1].
    """

    def __init__(self, message: str, measured_mean: float):
        super().__init__(message, measured_mean)
        self.measured_mean = measured_mean


@lru_cache(maxsize=32)
def _grid_cache(n: int):
    freqs = np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)  # integer p in [-n/2, n/2)
    p, q = np.meshgrid(freqs, freqs, indexing="ij")
    k_mag = 2.0 * np.pi * np.sqrt(p.astype(float) ** 2 + q.astype(float) ** 2)
    mask = np.abs(np.maximum(np.abs(p), np.abs(q))) <= n / 3.0  # 2/3-rule keep-mask
    for a in (freqs, p, q, k_mag, mask):
        a.setflags(write=False)
    return freqs, p, q, k_mag, mask


@dataclass(frozen=True)
class TorusGrid:
    """Uniform n x n discretization of [0,1)^2, n a power of two, n >= 8."""

    n: int

    def __post_init__(self):
        n = self.n
        if n < 8 or (n & (n - 1)) != 0:
            raise ValueError(f"grid size must be a power of two >= 8, got {n}")

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def freqs(self) -> np.ndarray:
        return _grid_cache(self.n)[0]

    @property
    def k_mag(self) -> np.ndarray:
        """|k| = 2*pi*sqrt(p^2+q^2) per frequency pair; zero only at (0,0)."""
        return _grid_cache(self.n)[3]

    def freq_pair(self):
        """Integer frequency arrays (p, q), meshgrid indexing='ij'."""
        c = _grid_cache(self.n)
        return c[1], c[2]

    def dealias_mask(self) -> np.ndarray:
        return _grid_cache(self.n)[4]

    def points(self):
        """Sample coordinates (X, Y), each n x n, x index outer."""
        x = np.arange(self.n) * self.h
        return np.meshgrid(x, x, indexing="ij")


class ScalarField:
    """Real periodic grid function with an on-demand cached spectral transform.

    values is an (n, n) float64 array, row-major over (x, y) samples: the
    first index is x, the second y. Fields are immutable after construction;
    every operation returns a new field, so instances are safe to share
    across workers. The spectral cache is filled at most once and the fill
    is idempotent (numpy FFT of fixed bits is deterministic).
    """

    __slots__ = ("grid", "_values", "_spectral")

    def __init__(self, grid: TorusGrid, values: np.ndarray, _spectral: np.ndarray | None = None):
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (grid.n, grid.n):
            raise ValueError(f"values shape {values.shape} != grid {(grid.n, grid.n)}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        values = values.copy()
        values.setflags(write=False)
        self.grid = grid
        self._values = values
        self._spectral = _spectral

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def spectral(self) -> np.ndarray:
        """Unnormalized DFT coefficients fft2(values); cached."""
        if self._spectral is None:
            spec = np.fft.fft2(self._values)
            spec.setflags(write=False)
            self._spectral = spec
        return self._spectral

    @classmethod
    def from_spectral(cls, grid: TorusGrid, spec: np.ndarray) -> "ScalarField":
        """Build a field from unnormalized DFT coefficients.

        The coefficients must be Hermitian up to roundoff (the imaginary
        part of the inverse transform is dropped). They are cached on the
        new field, so spectral pipelines avoid a redundant forward FFT.
        """
        vals = np.real(np.fft.ifft2(spec))
        spec = np.array(spec, dtype=np.complex128, copy=True)
        spec.setflags(write=False)
        return cls(grid, vals, _spectral=spec)

    @classmethod
    def from_function(cls, grid: TorusGrid, fn) -> "ScalarField":
        X, Y = grid.points()
        return cls(grid, fn(X, Y))

    @classmethod
    def zeros(cls, grid: TorusGrid) -> "ScalarField":
        return cls(grid, np.zeros((grid.n, grid.n)))

    def mean(self) -> float:
        return float(np.mean(self._values))

    def __add__(self, other):
        if isinstance(other, ScalarField):
            return ScalarField(self.grid, self._values + other._values)
        return ScalarField(self.grid, self._values + other)

    def __sub__(self, other):
        if isinstance(other, ScalarField):
            return ScalarField(self.grid, self._values - other._values)
        return ScalarField(self.grid, self._values - other)

    def __mul__(self, other):
        if isinstance(other, ScalarField):
            # pointwise product; callers dealias quadratic terms themselves
            return ScalarField(self.grid, self._values * other._values)
        return ScalarField(self.grid, self._values * other)

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.grid, -self._values)


@dataclass(frozen=True)
class NormKind:
    """Norm selector: tag in {L2, Linf, Hs, Hminus1, W1inf, Calpha, GradLinf}.

    Hs carries the order s; Calpha carries the Hoelder exponent alpha
    (default 1/2). Hs/Hminus1 require mean-zero fields.
    """

    tag: str
    s: float = 0.0
    alpha: float = 0.5

    @staticmethod
    def Hs(s: float) -> "NormKind":
        return NormKind("Hs", s=s)

    @staticmethod
    def Calpha(alpha: float = 0.5) -> "NormKind":
        if not 0.0 < alpha < 1.0:
            raise ValueError(f"alpha must lie in (0,1), got {alpha}")
        return NormKind("Calpha", alpha=alpha)


# Singletons for the parameter-free kinds.
NormKind.L2 = NormKind("L2")
NormKind.Linf = NormKind("Linf")
NormKind.Hminus1 = NormKind("Hs", s=-1.0)
NormKind.W1inf = NormKind("W1inf")
NormKind.GradLinf = NormKind("GradLinf")


def _require_mean_zero(f: ScalarField, rel_tol: float = 1e-10) -> None:
    m = f.mean()
    scale = float(np.sqrt(np.mean(f.values**2)))
    # absolute floor keeps roundoff-scale means of tiny difference fields
    # (e.g. converged solver updates) from tripping the guard
    tol = rel_tol * scale + 1e-15 * (1.0 + float(np.max(np.abs(f.values))))
    if abs(m) > tol:
        raise MeanViolationError(
            f"field mean {m:.3e} exceeds tolerance {tol:.3e}", m
        )


def derivative(f: ScalarField, order: tuple[int, int]) -> ScalarField:
    """Spectral partial derivative d_x^a d_y^b f for a multi-index with a+b <= 2."""
    a, b = order
    if a < 0 or b < 0 or a + b > 2:
        raise ValueError(f"unsupported derivative order {order}: need a, b >= 0 and a+b <= 2")
    if a == 0 and b == 0:
        return f
    p, q = f.grid.freq_pair()
    mult = (2j * np.pi * p) ** a * (2j * np.pi * q) ** b
    # Odd-order derivatives of the (real-coefficient) Nyquist modes have no
    # real representative on the grid; taking the real part of the inverse
    # transform drops them, which is the standard convention.
    return ScalarField.from_spectral(f.grid, mult * f.spectral)


def inv_laplacian(f: ScalarField) -> ScalarField:
    """Solve Laplace(g) = f spectrally on mean-zero f; <g> = 0."""
    _require_mean_zero(f)
    k2 = (f.grid.k_mag) ** 2
    inv = np.zeros_like(k2)
    nz = k2 > 0
    inv[nz] = -1.0 / k2[nz]
    return ScalarField.from_spectral(f.grid, inv * f.spectral)


def perp_gradient(psi: ScalarField) -> tuple[ScalarField, ScalarField]:
    """Divergence-free rotation: u = (-d_y psi, d_x psi)."""
    return -derivative(psi, (0, 1)), derivative(psi, (1, 0))


def dealias(f: ScalarField) -> ScalarField:
    """Zero all modes with max(|p|,|q|) > n/3 (2/3-rule); idempotent."""
    return ScalarField.from_spectral(f.grid, f.spectral * f.grid.dealias_mask())


def _coeffs(f: ScalarField) -> np.ndarray:
    return f.spectral / f.grid.n**2


def _grad_values(f: ScalarField) -> tuple[np.ndarray, np.ndarray]:
    return derivative(f, (1, 0)).values, derivative(f, (0, 1)).values


def _holder_seminorm(f: ScalarField, alpha: float) -> float:
    """Discrete C^alpha seminorm over dyadic offsets along axes and diagonals.

    Offsets are h*2^j, j = 0..log2(n/2); distances are torus geodesic.
    """
    n = f.grid.n
    h = f.grid.h
    v = f.values
    best = 0.0
    j = 0
    while (1 << j) <= n // 2:
        s = (1 << j) * h
        d = min(s, 1.0 - s)
        step = 1 << j
        ax = max(
            float(np.max(np.abs(v - np.roll(v, step, axis=0)))),
            float(np.max(np.abs(v - np.roll(v, step, axis=1)))),
        )
        diag = max(
            float(np.max(np.abs(v - np.roll(v, (step, step), axis=(0, 1))))),
            float(np.max(np.abs(v - np.roll(v, (step, -step), axis=(0, 1))))),
        )
        if d > 0:
            best = max(best, ax / d**alpha, diag / (np.sqrt(2.0) * d) ** alpha)
        j += 1
    return best


def norm(f: ScalarField, kind: NormKind) -> float:
    """Norms per the kit: grid-sample L2/Linf, homogeneous spectral Hs,
    W1inf = Linf + GradLinf, Calpha = Linf + discrete Hoelder seminorm."""
    tag = kind.tag
    if tag == "L2":
        return float(np.sqrt(np.mean(f.values**2)))
    if tag == "Linf":
        return float(np.max(np.abs(f.values)))
    if tag == "Hs":
        _require_mean_zero(f)
        c2 = np.abs(_coeffs(f)) ** 2
        km = f.grid.k_mag
        nz = km > 0
        return float(np.sqrt(np.sum(km[nz] ** (2.0 * kind.s) * c2[nz])))
    if tag == "GradLinf":
        gx, gy = _grad_values(f)
        return float(np.max(np.hypot(gx, gy)))
    if tag == "W1inf":
        return norm(f, NormKind.Linf) + norm(f, NormKind.GradLinf)
    if tag == "Calpha":
        return norm(f, NormKind.Linf) + _holder_seminorm(f, kind.alpha)
    raise ValueError(f"unknown norm kind {tag!r}")
