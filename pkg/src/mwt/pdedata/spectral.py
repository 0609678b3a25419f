"""Periodic pseudo-spectral solvers with fourth-order exponential time differencing.

The linear part is diagonal in Fourier space and integrated exactly; the
phi-function coefficients are evaluated by a contour mean over ``M`` points on
a unit circle around each ``h * L`` to avoid cancellation for small arguments.
States are real arrays of shape ``(n,)`` or ``(batch, n)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from mwt.errors import ShapeError, SolverDivergenceError

KDV_RESOLUTION = 1024
BURGERS_RESOLUTION = 8192


@dataclass(frozen=True)
class EtdCoefficients:
    E: np.ndarray
    E2: np.ndarray
    Q: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    f3: np.ndarray


def etdrk4_coefficients(L: np.ndarray, h: float, M: int = 32) -> EtdCoefficients:
    L = np.asarray(L, dtype=complex)
    roots = np.exp(2j * math.pi * (np.arange(1, M + 1) - 0.5) / M)
    z = h * L[..., None] + roots
    ez = np.exp(z)
    ez2 = np.exp(z / 2)
    z3 = z ** 3
    return EtdCoefficients(
        E=np.exp(h * L),
        E2=np.exp(h * L / 2),
        Q=h * np.mean((ez2 - 1) / z, axis=-1),
        f1=h * np.mean((-4 - z + ez * (4 - 3 * z + z ** 2)) / z3, axis=-1),
        f2=h * np.mean((2 + z + ez * (z - 2)) / z3, axis=-1),
        f3=h * np.mean((-4 - 3 * z - z ** 2 + ez * (4 - z)) / z3, axis=-1),
    )


def etdrk4(u0, L, nonlinear, T: float, dt: float, n_out=None):
    """Integrate ``v_t = L v + N(v)`` in Fourier space from ``u0`` to time ``T``.

    ``nonlinear(v_hat) -> N_hat`` acts on rfft coefficients. The step is shrunk so
    that an integer number of steps lands exactly on ``T``.
    """
    u0 = np.asarray(u0, dtype=float)
    n = u0.shape[-1]
    steps = max(1, int(math.ceil(T / dt - 1e-9)))
    h = T / steps
    c = etdrk4_coefficients(L, h)
    v = np.fft.rfft(u0, axis=-1)
    for step in range(steps):
        Nv = nonlinear(v)
        a = c.E2 * v + c.Q * Nv
        Na = nonlinear(a)
        b = c.E2 * v + c.Q * Na
        Nb = nonlinear(b)
        cc = c.E2 * a + c.Q * (2 * Nb - Nv)
        Nc = nonlinear(cc)
        v = c.E * v + Nv * c.f1 + 2 * (Na + Nb) * c.f2 + Nc * c.f3
        if step % 64 == 0 and not np.all(np.isfinite(v)):
            raise SolverDivergenceError(f"non-finite state after {step + 1} steps")
    u = np.fft.irfft(v, n, axis=-1)
    if not np.all(np.isfinite(u)):
        raise SolverDivergenceError("non-finite state at final time")
    return u


def _dealias_mask(n):
    m = np.arange(n // 2 + 1)
    return (m <= n // 3).astype(float)


def _check_grid(u0, minimum):
    u0 = np.asarray(u0, dtype=float)
    n = u0.shape[-1]
    if n & (n - 1) or n < minimum:
        raise ShapeError(f"solver grid must be a power of two >= {minimum}, got {n}")
    return u0, n


def solve_kdv(u0, T: float = 1.0, dt: float = 1e-5):
    """KdV ``u_t = -0.5 u u_x - u_xxx`` on the periodic unit interval.

    ``u0`` holds samples on ``i / n`` with ``n >= 1024``. The mean is conserved,
    so advection by the mean joins the exactly integrated linear part; left in
    the nonlinear term it rotates every mode at its own fast frequency, which
    the stage polynomials of the integrator cannot follow.
    """
    u0, n = _check_grid(u0, KDV_RESOLUTION)
    k = 2 * math.pi * np.arange(n // 2 + 1)
    mean = u0.mean(axis=-1, keepdims=True)
    L = 1j * k ** 3 - 0.5j * mean * k
    ik = -0.25j * k * _dealias_mask(n)

    def nonlinear(v):
        u = np.fft.irfft(v, n, axis=-1) - mean
        return ik * np.fft.rfft(u * u, axis=-1)

    return etdrk4(u0, L, nonlinear, T, dt)


def solve_burgers(u0, nu: float = 0.1, T: float = 1.0, dt: float = 1e-3):
    """Viscous Burgers ``u_t + u u_x = nu u_xx`` on the periodic interval (0, 2 pi).

    ``u0`` holds samples on ``2 pi i / n`` with ``n >= 8192``.
    """
    u0, n = _check_grid(u0, BURGERS_RESOLUTION)
    k = np.arange(n // 2 + 1, dtype=float)
    L = -nu * k ** 2
    ik = -0.5j * k * _dealias_mask(n)

    def nonlinear(v):
        u = np.fft.irfft(v, n, axis=-1)
        return ik * np.fft.rfft(u * u, axis=-1)

    return etdrk4(u0, L, nonlinear, T, dt)
