"""Model definition for the space-fractional complex Ginzburg-Landau solver.

The PDE is

    u_t = (nu + i eta)(d^a1/dx1^a1 + ... + d^ad/dxd^ad) u + gamma u
          - (kappa + i zeta) |u|^2 u + s(t, x),

on a box with homogeneous exterior condition, semidiscretized on the inner
nodes of a tensor-product grid.  This module holds the parameter sets, the
two benchmark problems (a manufactured-solution problem on (-1,1)^d and a
source-free sech-pulse problem on (-10,10)^d), the nonlinearity, the exact
flow of the stiffness-free subproblem, manufactured sources, and the
discrete L2 norm.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from math import prod

import numpy as np

from . import fracfd, kronspec
from .fracfd import BoundaryVanishingPoly
from .tensorops import vec


@dataclass(frozen=True)
class FcgleParams:
    """PDE coefficients, fractional orders, domain box and final time."""

    nu: float
    eta: float
    gamma: float
    kappa: float
    zeta: float
    alphas: tuple[float, ...]
    domain: tuple[tuple[float, float], ...]
    final_time: float

    def __post_init__(self):
        if self.nu <= 0:
            raise ValueError(f"diffusion nu must be positive, got {self.nu}")
        if self.kappa <= 0:
            raise ValueError(f"nonlinear dissipation kappa must be positive, got {self.kappa}")
        if len(self.alphas) != len(self.domain):
            raise ValueError("alphas and domain must have one entry per direction")
        for alpha in self.alphas:
            if not 1.0 < alpha <= 2.0:
                raise ValueError(f"fractional order must lie in (1, 2], got {alpha}")
        for a, b in self.domain:
            if not b > a:
                raise ValueError(f"empty interval ({a}, {b})")

    @property
    def d(self) -> int:
        return len(self.alphas)

    @property
    def coefficient(self) -> complex:
        return complex(self.nu, self.eta)


SOURCE_MODES = ("none", "analytic_manufactured", "discrete_manufactured", "custom")


@dataclass(frozen=True)
class SourceSpec:
    """Source term description.

    Manufactured modes carry the target exact solution as separable factors
    time(t) * prod_mu space_mu(x_mu); the source is then whatever makes that
    the exact solution.  ``custom`` wraps an arbitrary tensor-valued
    callable ``custom_fn(t, problem)``.
    """

    mode: str = "none"
    time_value: object = None
    time_derivative: object = None
    space_factors: tuple = ()
    custom_fn: object = None

    def __post_init__(self):
        if self.mode not in SOURCE_MODES:
            raise ValueError(f"unknown source mode {self.mode!r}")
        if self.mode.endswith("manufactured"):
            if self.time_value is None or self.time_derivative is None or not self.space_factors:
                raise ValueError(f"{self.mode} source needs time factor, its derivative and space factors")
        if self.mode == "analytic_manufactured":
            for f in self.space_factors:
                if not isinstance(f, BoundaryVanishingPoly):
                    raise ValueError("analytic manufactured sources need boundary-vanishing polynomial factors")
        if self.mode == "custom" and self.custom_fn is None:
            raise ValueError("custom source needs a callable")

    @property
    def manufactured(self) -> bool:
        return self.mode.endswith("manufactured")


@dataclass
class GridProblem:
    """A parameter set semidiscretized on the inner nodes of a box grid.

    Only inner nodes are carried; the homogeneous exterior condition is
    built into the finite-difference operator.
    """

    params: FcgleParams
    shape: tuple[int, ...]
    fd_order: int
    u0: np.ndarray
    source: SourceSpec = field(default_factory=SourceSpec)

    def __post_init__(self):
        if len(self.shape) != self.params.d:
            raise ValueError("grid shape must have one entry per direction")
        self._operator = None
        self._msrc = None

    @property
    def steps(self) -> tuple[float, ...]:
        return tuple(
            (b - a) / (n + 1) for (a, b), n in zip(self.params.domain, self.shape)
        )

    @property
    def axes(self) -> tuple[np.ndarray, ...]:
        out = []
        for (a, b), n in zip(self.params.domain, self.shape):
            h = (b - a) / (n + 1)
            out.append(a + h * np.arange(1, n + 1))
        return tuple(out)

    def operator(self) -> kronspec.KronSumOperator:
        """The Kronecker-sum operator of this discretization (cached)."""
        if self._operator is None:
            ops = tuple(
                fracfd.build_operator(alpha, self.fd_order, n, h)
                for alpha, n, h in zip(self.params.alphas, self.shape, self.steps)
            )
            self._operator = kronspec.KronSumOperator(self.params.coefficient, ops)
        return self._operator


def _outer(vectors) -> np.ndarray:
    t = reduce(np.multiply.outer, vectors)
    return np.asfortranarray(np.atleast_1d(t))


def sech(x):
    """Overflow-safe hyperbolic secant."""
    e = np.exp(-np.abs(x))
    return 2.0 * e / (1.0 + e * e)


def example1_setup(d: int, n, fd_order: int = 2, source_mode: str = "discrete_manufactured") -> GridProblem:
    """Manufactured-solution benchmark on (-1, 1)^d.

    Exact solution exp(-i t) * prod_mu (1 - x_mu^2)^4 with orders
    (1.2, 1.8) in 2D and (1.2, 1.8, 1.5) in 3D.
    """
    alphas = _example_alphas(d)
    params = FcgleParams(
        nu=1.0, eta=1.0, gamma=3.0, kappa=1.0, zeta=2.0,
        alphas=alphas, domain=((-1.0, 1.0),) * d, final_time=1.0,
    )
    source = SourceSpec(
        mode=source_mode,
        time_value=lambda t: np.exp(-1j * t),
        time_derivative=lambda t: -1j * np.exp(-1j * t),
        space_factors=tuple(BoundaryVanishingPoly.double_root(-1.0, 1.0, 4) for _ in range(d)),
    )
    problem = GridProblem(params=params, shape=_shape(n, d), fd_order=fd_order,
                          u0=np.empty(0), source=source)
    x = _outer([f(ax) for f, ax in zip(source.space_factors, problem.axes)])
    problem.u0 = x.astype(np.complex128)
    return problem


def example2_setup(d: int, n, fd_order: int = 2) -> GridProblem:
    """Source-free sech-pulse benchmark on (-10, 10)^d.

    Initial condition prod_mu sech(x_mu) * exp(i sum_mu x_mu); no exact
    solution is available.
    """
    alphas = _example_alphas(d)
    params = FcgleParams(
        nu=1.0, eta=1.0, gamma=1.0, kappa=1.0, zeta=1.0,
        alphas=alphas, domain=((-10.0, 10.0),) * d, final_time=1.0,
    )
    problem = GridProblem(params=params, shape=_shape(n, d), fd_order=fd_order,
                          u0=np.empty(0), source=SourceSpec())
    problem.u0 = _outer([sech(ax) * np.exp(1j * ax) for ax in problem.axes])
    return problem


def _example_alphas(d: int) -> tuple[float, ...]:
    if d == 2:
        return (1.2, 1.8)
    if d == 3:
        return (1.2, 1.8, 1.5)
    raise ValueError(f"benchmark problems are defined for d in {{2, 3}}, got {d}")


def _shape(n, d: int) -> tuple[int, ...]:
    if np.isscalar(n):
        return (int(n),) * d
    shape = tuple(int(v) for v in n)
    if len(shape) != d:
        raise ValueError(f"expected {d} grid sizes, got {len(shape)}")
    return shape


# -- manufactured sources -------------------------------------------------

def _manufactured_state(problem: GridProblem):
    """Time-independent tensors (X, L, |X|^2 X) of a separable exact solution."""
    if problem._msrc is not None:
        return problem._msrc
    src = problem.source
    axes = problem.axes
    factor_values = [np.asarray(f(ax), dtype=np.complex128) for f, ax in zip(src.space_factors, axes)]
    x = _outer(factor_values)
    if src.mode == "discrete_manufactured":
        lin = kronspec.apply_K(problem.operator(), x)
    else:
        c = problem.params.coefficient
        lin = np.zeros_like(x)
        for mu, (f, alpha) in enumerate(zip(src.space_factors, problem.params.alphas)):
            vectors = list(factor_values)
            vectors[mu] = fracfd.riesz_exact_poly(f, alpha, axes[mu]).astype(np.complex128)
            lin = lin + _outer(vectors)
        lin = c * lin
    x2x = (x.real**2 + x.imag**2) * x
    problem._msrc = (x, lin, x2x)
    return problem._msrc


def manufactured_source(problem: GridProblem, t: float) -> np.ndarray:
    """Source tensor S(t) that makes the separable target the exact solution.

    Discrete mode uses the discrete operator K (the semidiscrete system then
    has the grid samples of the target as exact solution); analytic mode uses
    the continuous Riesz derivative of the polynomial factors instead.
    """
    src = problem.source
    if not src.manufactured:
        raise ValueError(f"source mode {src.mode!r} is not manufactured")
    x, lin, x2x = _manufactured_state(problem)
    p = problem.params
    tv = complex(src.time_value(t))
    td = complex(src.time_derivative(t))
    kz = complex(p.kappa, p.zeta)
    return (td - p.gamma * tv) * x - tv * lin + kz * (abs(tv) ** 2 * tv) * x2x


def source_tensor(problem: GridProblem, t: float) -> np.ndarray | None:
    """S(t) on the grid, or None when the problem is source-free."""
    mode = problem.source.mode
    if mode == "none":
        return None
    if mode == "custom":
        return problem.source.custom_fn(t, problem)
    return manufactured_source(problem, t)


def exact_solution(problem: GridProblem, t: float) -> np.ndarray:
    """Grid samples of the manufactured exact solution at time t."""
    if not problem.source.manufactured:
        raise ValueError("exact solution only available for manufactured sources")
    x, _, _ = _manufactured_state(problem)
    return complex(problem.source.time_value(t)) * x


def make_nonlinearity(problem: GridProblem, dtype=np.complex128):
    """Pointwise g(t, U) = gamma U - (kappa + i zeta)|U|^2 U + S(t).

    Returns a closure with the time-independent source tensors cast to
    ``dtype`` once, so single-precision runs keep state-sized data single.
    """
    p = problem.params
    gamma = p.gamma
    kz = complex(p.kappa, p.zeta)
    mode = problem.source.mode

    if mode == "none":
        def g(t, u):
            return gamma * u - kz * ((u.real**2 + u.imag**2) * u)
        return g

    if mode == "custom":
        fn = problem.source.custom_fn
        def g(t, u):
            return gamma * u - kz * ((u.real**2 + u.imag**2) * u) + fn(t, problem).astype(dtype, copy=False)
        return g

    x, lin, x2x = (a.astype(dtype, copy=False) for a in _manufactured_state(problem))
    tv_fn = problem.source.time_value
    td_fn = problem.source.time_derivative

    def g(t, u):
        tv = complex(tv_fn(t))
        td = complex(td_fn(t))
        s = (td - gamma * tv) * x - tv * lin + kz * (abs(tv) ** 2 * tv) * x2x
        return gamma * u - kz * ((u.real**2 + u.imag**2) * u) + s
    return g


def nonlinear_g(problem: GridProblem, t: float, u: np.ndarray) -> np.ndarray:
    """One-off evaluation of the nonlinearity (double precision)."""
    return make_nonlinearity(problem)(t, u)


def exact_flow(params: FcgleParams, t: float, w: np.ndarray) -> np.ndarray:
    """Exact solution at time t of w' = gamma w - (kappa + i zeta)|w|^2 w.

    Pointwise w -> exp(t gamma - (kappa+i zeta)/(2 kappa) *
    log(1 + 2 t phi_1(2 gamma t) kappa |w|^2)) w; the logarithm argument is
    real and >= 1, so the principal branch applies with no tracking.
    """
    if t == 0.0:
        return np.array(w, copy=True)
    absw2 = w.real**2 + w.imag**2
    phi1 = float(kronspec.phi_scalar(1, 2.0 * params.gamma * t).real)
    arg = 1.0 + (2.0 * t * params.kappa * phi1) * absw2
    exponent = t * params.gamma - complex(params.kappa, params.zeta) / (2.0 * params.kappa) * np.log(arg)
    return np.exp(exponent) * w


def discrete_l2(u: np.ndarray, h) -> float:
    """sqrt(prod h_mu) times the Euclidean norm of the grid values."""
    return float(np.sqrt(prod(h)) * np.linalg.norm(vec(u)))


def discrete_l2_error(u: np.ndarray, uref: np.ndarray, h) -> float:
    if u.shape != uref.shape:
        raise ValueError(f"shape mismatch {u.shape} vs {uref.shape}")
    return discrete_l2(u - uref, h)
