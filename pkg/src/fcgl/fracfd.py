"""One-dimensional Riesz fractional finite-difference operators.

Centered fractional finite differences of order 2 and 4 on a uniform grid
of inner points, for the Riesz derivative of order ``alpha`` in (1, 2].
The resulting operator is a dense, real, symmetric, negative-definite
Toeplitz matrix; it is stored by its (unscaled) coefficient vector and
factorized with a standard symmetric eigensolver.

The module also evaluates the continuous Riesz derivative of polynomials
that vanish (with enough derivatives) at both endpoints, which is what the
manufactured sources of the solver need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg


def riesz_coeffs_order2(alpha: float, n: int) -> np.ndarray:
    """Coefficients g_0..g_{n-1} of the second-order Riesz approximation.

    Computed through the stable recurrence

        g_0 = Gamma(alpha+1) / Gamma(alpha/2+1)^2,
        g_k = (1 - (alpha+1)/(alpha/2+k)) * g_{k-1},

    which avoids the over/underflowing gamma ratios of the direct formula.
    For ``alpha = 2`` this reduces to the classical [2, -1, 0, ...] stencil.
    """
    _check_alpha(alpha)
    if n < 1:
        raise ValueError(f"need at least one grid point, got n={n}")
    g = np.empty(n)
    g[0] = math.gamma(alpha + 1.0) / math.gamma(alpha / 2.0 + 1.0) ** 2
    if n > 1:
        k = np.arange(1, n)
        g[1:] = g[0] * np.cumprod(1.0 - (alpha + 1.0) / (alpha / 2.0 + k))
    return g


def riesz_coeffs_order4(alpha: float, n: int) -> np.ndarray:
    """Coefficients of the fourth-order (extrapolated) Riesz approximation.

    ghat_k = (4/3) g_k for odd k, and (4/3) g_k - (1/3) g_{k/2} / 2^alpha
    for even k (k = 0 included).  Reduces to the classical pentadiagonal
    stencil [5/2, -4/3, 1/12, 0, ...] for ``alpha = 2``.
    """
    g = riesz_coeffs_order2(alpha, n)
    ghat = (4.0 / 3.0) * g
    half = g[: (n - 1) // 2 + 1] / 2.0**alpha
    ghat[::2] -= (1.0 / 3.0) * half
    return ghat


@dataclass(frozen=True)
class FracOperator:
    """One-direction Riesz finite-difference operator.

    The implied dense matrix is ``D = -(1/h^alpha) * Toeplitz(coeffs)``:
    real, symmetric, Toeplitz and negative definite.  ``coeffs`` holds the
    dimensionless g (or ghat) vector in double precision.
    """

    alpha: float
    fd_order: int
    n: int
    h: float
    coeffs: np.ndarray

    @property
    def first_column(self) -> np.ndarray:
        """First column of the dense matrix, i.e. -coeffs / h^alpha."""
        return -self.coeffs / self.h**self.alpha

    def dense(self) -> np.ndarray:
        return scipy.linalg.toeplitz(self.first_column)

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Matvec D v along the last axis, FFT-based (O(n log n))."""
        col = self.first_column
        out = scipy.linalg.matmul_toeplitz((col, col), np.atleast_1d(v).T).T
        return out if np.ndim(v) > 1 else np.asarray(out).reshape(-1)


def build_operator(alpha: float, fd_order: int, n: int, h: float) -> FracOperator:
    """Construct the FD operator for one direction.

    ``fd_order`` selects the second- or fourth-order coefficient set;
    ``h`` is the (positive) grid step.
    """
    if fd_order == 2:
        coeffs = riesz_coeffs_order2(alpha, n)
    elif fd_order == 4:
        coeffs = riesz_coeffs_order4(alpha, n)
    else:
        raise ValueError(f"fd_order must be 2 or 4, got {fd_order}")
    if h <= 0:
        raise ValueError(f"grid step must be positive, got h={h}")
    coeffs.flags.writeable = False
    return FracOperator(alpha=alpha, fd_order=fd_order, n=n, h=h, coeffs=coeffs)


@dataclass(frozen=True)
class SpectralFactor:
    """Orthogonal eigenvector matrix and (negative) eigenvalues of one operator."""

    q: np.ndarray
    eigenvalues: np.ndarray


def eigendecompose(op: FracOperator) -> SpectralFactor:
    """Factorize D = Q diag(lambda) Q^T with Q real orthogonal.

    All eigenvalues are strictly negative (the matrix is negative definite
    by diagonal dominance); a non-negative eigenvalue indicates a broken
    operator and raises.
    """
    lam, q = np.linalg.eigh(op.dense())
    if lam.max() >= 0.0:
        raise ArithmeticError(
            f"operator expected negative definite, found eigenvalue {lam.max():.3e} "
            f"(alpha={op.alpha}, fd_order={op.fd_order}, n={op.n})"
        )
    lam.flags.writeable = False
    q.flags.writeable = False
    return SpectralFactor(q=q, eigenvalues=lam)


class BoundaryVanishingPoly:
    """Polynomial on (a, b) expanded as sum_p c_p (x-a)^p, vanishing at a and b.

    The polynomial (and enough of its derivatives) must vanish at both
    endpoints so that the one-sided fractional integrals over the real line
    reduce to integrals over (a, b).  The mirrored expansion in powers of
    (b-x) is obtained by binomial re-expansion and cached.
    """

    def __init__(self, a: float, b: float, coeffs) -> None:
        if not b > a:
            raise ValueError(f"empty interval ({a}, {b})")
        self.a = float(a)
        self.b = float(b)
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.mirrored = self._mirror(self.coeffs, self.b - self.a)

    @staticmethod
    def _mirror(c: np.ndarray, width: float) -> np.ndarray:
        # (x-a)^p = sum_q binom(p,q) width^(p-q) (-1)^q (b-x)^q
        deg = len(c) - 1
        m = np.zeros(deg + 1)
        for p, cp in enumerate(c):
            if cp == 0.0:
                continue
            for q in range(p + 1):
                m[q] += cp * math.comb(p, q) * width ** (p - q) * (-1.0) ** q
        return m

    @classmethod
    def double_root(cls, a: float, b: float, power: int) -> "BoundaryVanishingPoly":
        """The bump ((x-a)(b-x))^power, e.g. (1-x^2)^4 on (-1, 1) for power 4."""
        width = b - a
        c = np.zeros(2 * power + 1)
        for j in range(power + 1):
            c[power + j] = math.comb(power, j) * width ** (power - j) * (-1.0) ** j
        return cls(a, b, c)

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(np.asarray(x) - self.a, self.coeffs)


def riesz_exact_poly(p: BoundaryVanishingPoly, alpha: float, x) -> np.ndarray:
    """Continuous Riesz derivative of a boundary-vanishing polynomial.

    Combines the closed-form left and right Riemann-Liouville derivatives of
    the power expansions around each endpoint:

        -1/(2 cos(alpha pi/2)) * ( sum_p c_p G(p+1)/G(p+1-alpha) (x-a)^(p-alpha)
                                 + sum_q m_q G(q+1)/G(q+1-alpha) (b-x)^(q-alpha) )

    Only ``alpha`` strictly inside (1, 2) is supported; the power formula
    degenerates at alpha = 2.
    """
    if not 1.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie strictly in (1, 2), got {alpha}")
    x = np.asarray(x, dtype=float)
    if np.any(x <= p.a) or np.any(x >= p.b):
        raise ValueError("abscissa must lie strictly inside the interval")
    left = np.zeros_like(x)
    right = np.zeros_like(x)
    for k, ck in enumerate(p.coeffs):
        if ck != 0.0:
            ratio = math.gamma(k + 1.0) / math.gamma(k + 1.0 - alpha)
            left += ck * ratio * (x - p.a) ** (k - alpha)
    for k, mk in enumerate(p.mirrored):
        if mk != 0.0:
            ratio = math.gamma(k + 1.0) / math.gamma(k + 1.0 - alpha)
            right += mk * ratio * (p.b - x) ** (k - alpha)
    return -(left + right) / (2.0 * math.cos(alpha * math.pi / 2.0))


def _check_alpha(alpha: float) -> None:
    if not 1.0 < alpha <= 2.0:
        raise ValueError(f"fractional order must lie in (1, 2], got {alpha}")
