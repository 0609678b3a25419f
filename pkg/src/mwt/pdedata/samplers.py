"""Random input functions on the unit interval / square."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
import scipy.linalg

from mwt.errors import CovarianceError, ShapeError, SpecError


@dataclass(frozen=True)
class GrfSpec:
    """Gaussian measure with covariance ``sigma2 * (-Laplacian + tau**2 I)**(-alpha)``.

    Periodic fields use Laplacian eigenvalues ``4 pi^2 |m|^2``; non-periodic ones
    use the Neumann cosine basis with eigenvalues ``pi^2 |m|^2``.
    """

    sigma2: float = 1.0
    tau: float = 1.0
    alpha: float = 2.0
    dim: int = 1
    periodic: bool = True

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise SpecError(f"dimension must be 1 or 2, got {self.dim}")
        if not (self.sigma2 > 0 and self.tau > 0):
            raise SpecError("sigma2 and tau must be positive")
        if not self.alpha > self.dim / 2:
            raise SpecError(f"alpha must exceed dim/2 = {self.dim / 2} for a trace-class covariance")

    def eigenvalue(self, m2):
        """Covariance eigenvalue for squared mode magnitude ``m2``."""
        lap = (4.0 if self.periodic else 1.0) * math.pi ** 2 * np.asarray(m2, dtype=float)
        return self.sigma2 * (lap + self.tau ** 2) ** (-self.alpha)

    def to_dict(self):
        return asdict(self)


KDV_GRF = GrfSpec(sigma2=7.0 ** 4, tau=7.0, alpha=2.5)
BURGERS_GRF = GrfSpec(sigma2=5.0 ** 4, tau=5.0, alpha=2.0)
DARCY_GRF = GrfSpec(sigma2=1.0, tau=3.0, alpha=2.0, dim=2, periodic=False)


def _power_of_two(n):
    if n < 1 or n & (n - 1):
        raise ShapeError(f"resolution {n} is not a power of two")


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def sample_grf(spec: GrfSpec, resolution: int, seed) -> np.ndarray:
    """One draw of the field on the grid ``i / resolution`` (periodic) or
    ``i / resolution, i = 0..resolution`` (Neumann, ``resolution + 1`` points).

    Periodic draws filter real white noise in Fourier space, so the discrete
    Fourier coefficient ``c_m = fft(u)[m] / n**dim`` has ``E|c_m|^2 = lambda_m``.
    """
    rng = _rng(seed)
    n = int(resolution)
    if spec.periodic:
        _power_of_two(n)
        freq = np.fft.fftfreq(n, d=1.0 / n)
        grids = np.meshgrid(*([freq] * spec.dim), indexing="ij")
        m2 = sum(g ** 2 for g in grids)
        white = rng.standard_normal((n,) * spec.dim)
        coef = np.fft.fftn(white) * np.sqrt(spec.eigenvalue(m2))
        return np.real(np.fft.ifftn(coef)) * n ** (spec.dim / 2)
    # Neumann: cosine series evaluated on the closed vertex grid
    x = np.arange(n + 1) / n
    modes = np.arange(n + 1)
    basis = np.cos(math.pi * np.outer(modes, x))
    grids = np.meshgrid(*([modes] * spec.dim), indexing="ij")
    m2 = sum(g ** 2 for g in grids)
    xi = rng.standard_normal(m2.shape) * np.sqrt(spec.eigenvalue(m2))
    if spec.dim == 1:
        return xi @ basis
    return basis.T @ xi @ basis


def sqexp_gram(length: float, period: float, resolution: int) -> np.ndarray:
    x = np.arange(resolution) / resolution
    diff = x[:, None] - x[None, :]
    return np.exp(-2.0 * np.sin(math.pi * diff / period) ** 2 / length ** 2)


def sample_sqexp_periodic(length: float, period: float, resolution: int, seed) -> np.ndarray:
    """Draw from the periodic squared-exponential Gaussian process on ``i / n``."""
    if not (length > 0 and period > 0):
        raise SpecError("length scale and period must be positive")
    z = _rng(seed).standard_normal(resolution)
    if abs(1.0 / period - round(1.0 / period)) < 1e-12:
        # the Gram matrix is circulant, so its symmetric square root is diagonal in Fourier space
        x = np.arange(resolution) / resolution
        col = np.exp(-2.0 * np.sin(math.pi * x / period) ** 2 / length ** 2)
        evals = np.fft.rfft(col).real
        if not np.all(np.isfinite(evals)):
            raise CovarianceError("non-finite covariance spectrum")
        return np.fft.irfft(np.sqrt(np.clip(evals, 0.0, None)) * np.fft.rfft(z), resolution)
    K = sqexp_gram(length, period, resolution)
    try:
        evals, evecs = scipy.linalg.eigh(K)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise CovarianceError(f"eigen-decomposition failed: {exc}") from exc
    if not np.all(np.isfinite(evals)):
        raise CovarianceError("non-finite covariance spectrum")
    return evecs @ (np.sqrt(np.clip(evals, 0.0, None)) * z)


def smooth_cutoff(lam: float) -> int:
    return int(math.ceil(1.0 / lam - 1e-12))


def sample_smooth_random(lam: float, resolution: int, seed) -> np.ndarray:
    """Band-limited periodic random function with modes ``|m| <= ceil(1/lam)``.

    Normalized to unit empirical standard deviation.
    """
    if not 0 < lam <= 1:
        raise SpecError(f"lambda must lie in (0, 1], got {lam}")
    n = int(resolution)
    cutoff = min(smooth_cutoff(lam), n // 2 - 1)
    rng = _rng(seed)
    coef = np.zeros(n // 2 + 1, dtype=complex)
    coef[0] = rng.standard_normal()
    coef[1:cutoff + 1] = rng.standard_normal(cutoff) + 1j * rng.standard_normal(cutoff)
    u = np.fft.irfft(coef, n)
    std = u.std()
    return u / std if std > 0 else u
