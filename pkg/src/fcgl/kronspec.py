"""Kronecker-sum operator and spectral matrix-function machinery.

The semidiscrete operator is K = A_d (+) ... (+) A_1 with A_mu = c D_mu,
where c = nu + i eta and D_mu is a one-direction Riesz FD operator.  Its
action and the actions of analytic functions f(theta K) are computed
without ever assembling K:

* ``apply_K``      -- sum of mu-mode products by the A_mu,
* ``apply_filter`` -- Tucker transform into the shared eigenbasis, Hadamard
                      product with a filter tensor f(theta Lambda), Tucker
                      transform back; exact up to roundoff,
* ``apply_exp``    -- the cheaper product form exp(theta A_d) kron ... kron
                      exp(theta A_1), one mu-mode product per direction.

Filter tensors and small matrix exponentials are cached per (function,
ell, theta) key so constant-step integrators build them exactly once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fracfd import FracOperator, SpectralFactor, eigendecompose
from .tensorops import hadamard, mu_mode_product, tucker


@dataclass(frozen=True)
class KronSumOperator:
    """K = A_d (+) ... (+) A_1 with A_mu = coefficient * D_mu, Re(coefficient) > 0."""

    coefficient: complex
    ops: tuple[FracOperator, ...]

    def __post_init__(self):
        if not self.ops:
            raise ValueError("need at least one direction")
        if self.coefficient.real <= 0:
            raise ValueError(f"diffusion coefficient must have positive real part, got {self.coefficient}")

    @property
    def d(self) -> int:
        return len(self.ops)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(op.n for op in self.ops)

    def a_matrix(self, mu: int) -> np.ndarray:
        """Dense A_mu (1-based direction index)."""
        return self.coefficient * self.ops[mu - 1].dense()


def apply_K(op: KronSumOperator, u: np.ndarray) -> np.ndarray:
    """K u realized as sum_mu u x_mu A_mu, no large matrix assembled."""
    if u.shape != op.dims:
        raise ValueError(f"state shape {u.shape} does not match operator dims {op.dims}")
    out = None
    for mu in range(1, op.d + 1):
        term = mu_mode_product(u, op.a_matrix(mu), mu)
        out = term if out is None else out + term
    return out


class SpectralCache:
    """Per-direction eigenfactors plus cached filter tensors and exponentials.

    Built once per run; afterwards read-only.  The eigen-tensor collects
    lambda_{j_1...j_d} = coefficient * sum_mu lambda^{(mu)}_{j_mu}, the
    eigenvalues of K as a direct sum of the per-direction spectra.
    """

    def __init__(self, op: KronSumOperator, factors=None):
        self.op = op
        if factors is None:
            factors = tuple(eigendecompose(o) for o in op.ops)
        self.factors: tuple[SpectralFactor, ...] = tuple(factors)
        acc = self.factors[0].eigenvalues
        for f in self.factors[1:]:
            acc = np.add.outer(acc, f.eigenvalues)
        eigen = np.asfortranarray(op.coefficient * acc)
        eigen.flags.writeable = False
        self.eigen: np.ndarray = eigen
        self._filters: dict = {}
        self._exps: dict = {}
        # dense A_mu kept for apply_K-style use without re-Toeplitzing
        self._a = [op.a_matrix(mu) for mu in range(1, op.d + 1)]

    @property
    def dims(self) -> tuple[int, ...]:
        return self.op.dims

    # -- filters ---------------------------------------------------------

    def build_filter(self, f, theta: float, key: tuple | None = None) -> np.ndarray:
        """Filter tensor F = f(theta * Lambda), elementwise.

        With ``key`` the result is cached and the identical (read-only)
        array is returned on every later call with the same key.
        """
        if key is not None and key in self._filters:
            return self._filters[key]
        with np.errstate(all="ignore"):  # non-finite results are caught below
            values = np.asfortranarray(f(theta * self.eigen))
        bad = ~np.isfinite(values)
        if bad.any():
            j = np.argwhere(bad)[0]
            lam = self.eigen[tuple(j)]
            raise ArithmeticError(
                f"filter evaluation failed at eigenvalue {lam} "
                f"(grid index {tuple(int(i) + 1 for i in j)}, theta={theta})"
            )
        values.flags.writeable = False
        if key is not None:
            self._filters[key] = values
        return values

    def resolvent_filter(self, theta: float) -> np.ndarray:
        """R_theta with entries 1 / (1 - theta * lambda); built once per theta."""
        return self.build_filter(lambda z: 1.0 / (1.0 - z), theta, key=("resolvent", 0, float(theta)))

    def phi_filter(self, ell: int, theta: float) -> np.ndarray:
        """P_{ell,theta} with entries phi_ell(theta * lambda); built once per key."""
        return self.build_filter(lambda z: phi_scalar(ell, z), theta, key=("phi", ell, float(theta)))

    # -- transforms ------------------------------------------------------

    def to_eigen(self, v: np.ndarray) -> np.ndarray:
        """Tucker transform by the transposed eigenvector matrices."""
        return tucker(v, [f.q.T for f in self.factors])

    def from_eigen(self, v: np.ndarray) -> np.ndarray:
        """Tucker transform back to grid space."""
        return tucker(v, [f.q for f in self.factors])

    def apply_filter(self, filt: np.ndarray, v: np.ndarray) -> np.ndarray:
        """f(theta K) v for the filter F = f(theta Lambda); exact up to roundoff."""
        return self.from_eigen(hadamard(filt, self.to_eigen(v)))

    # -- exponentials ----------------------------------------------------

    def small_exponential(self, mu: int, theta: float) -> np.ndarray:
        """exp(theta A_mu) = Q_mu diag(exp(theta c lambda)) Q_mu^T (cached)."""
        key = (mu, float(theta))
        if key not in self._exps:
            f = self.factors[mu - 1]
            e = expm_from_factor(f, self.op.coefficient, theta)
            e.flags.writeable = False
            self._exps[key] = e
        return self._exps[key]

    def apply_exp(self, theta: float, v: np.ndarray) -> np.ndarray:
        """exp(theta K) v via the Kronecker product of the small exponentials."""
        mats = [self.small_exponential(mu, theta) for mu in range(1, self.op.d + 1)]
        return tucker(v, mats)

    def apply_K(self, u: np.ndarray) -> np.ndarray:
        out = None
        for mu, a in enumerate(self._a, start=1):
            term = mu_mode_product(u, a, mu)
            out = term if out is None else out + term
        return out


def expm_from_factor(factor: SpectralFactor, coefficient: complex, theta: float) -> np.ndarray:
    """exp(theta * coefficient * D) through the diagonalization of D."""
    phase = np.exp(theta * coefficient * factor.eigenvalues)
    return (factor.q * phase) @ factor.q.T


_PHI_TAYLOR_TERMS = 29


def phi_scalar(ell: int, z):
    """Entire functions phi_0 = exp, phi_ell(z) = (phi_{ell-1}(z) - 1/(ell-1)!)/z.

    Total on the complex plane: a truncated Taylor series
    sum_k z^k / (k+ell)! is used for |z| <= 1 (the downward recurrence
    cancels catastrophically near the origin), the recurrence seeded by
    exp(z) elsewhere.  Vectorized over array input; phi_ell(0) = 1/ell!.
    """
    if ell < 0:
        raise ValueError(f"ell must be non-negative, got {ell}")
    z = np.asarray(z, dtype=np.complex128)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    if ell == 0:
        out = np.exp(z)
        return out[0] if scalar else out
    out = np.empty_like(z)
    small = np.abs(z) <= 1.0
    if small.any():
        zs = z[small]
        acc = np.full_like(zs, 1.0 / math.factorial(_PHI_TAYLOR_TERMS + ell))
        for k in range(_PHI_TAYLOR_TERMS - 1, -1, -1):
            acc = acc * zs + 1.0 / math.factorial(k + ell)
        out[small] = acc
    big = ~small
    if big.any():
        zb = z[big]
        acc = np.exp(zb)
        for j in range(1, ell + 1):
            acc = (acc - 1.0 / math.factorial(j - 1)) / zb
        out[big] = acc
    return out[0] if scalar else out
