"""Vector-oriented comparator engines.

State-of-the-art iterative realizations of the same time-marching schemes:

* linear solves of (I - theta K) x = b by full GMRES, left-preconditioned
  with the tau (Toeplitz-minus-Hankel) preconditioner, the matvec running
  in O(N log N) through circulant embedding and the multidimensional FFT;
* actions of exp / phi-functions by shift-and-invert Lanczos on
  (I - xi (D_d (+) ... (+) D_1))^{-1}, whose inner solves use the
  preconditioned conjugate gradient method (real SPD matrix, complex
  right-hand sides).

These engines exist as terms of comparison for the direct spectral engine
and report their iteration statistics.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.fft
import scipy.linalg

from . import integrators
from .fracfd import FracOperator
from .kronspec import phi_scalar
from .problem import GridProblem, exact_flow, make_nonlinearity
from .tensorops import unvec, vec


def _next_pow2(m: int) -> int:
    p = 1
    while p < m:
        p *= 2
    return p


class _KronFftAction:
    """scale * I + weight * (D_d (+) ... (+) D_1) applied by FFT.

    Each direction's symmetric Toeplitz block is embedded in a circulant of
    size next_pow2(2 n); the combined symbol of the Kronecker sum lives on
    the embedded box, so one forward and one inverse multidimensional FFT
    realize the action in O(N log N).
    """

    def __init__(self, ops: tuple[FracOperator, ...], scale: complex, weight: complex):
        self.dims = tuple(op.n for op in ops)
        self.embed = tuple(_next_pow2(2 * op.n) for op in ops)
        acc = None
        for op, m in zip(ops, self.embed):
            col = op.first_column
            n = op.n
            circ = np.zeros(m)
            circ[:n] = col
            circ[m - n + 1:] = col[1:][::-1]
            symbol = np.real(scipy.fft.fft(circ))  # even sequence, real spectrum
            acc = symbol if acc is None else np.add.outer(acc, symbol)
        self.symbol = scale + weight * acc
        self._crop = tuple(slice(0, n) for n in self.dims)

    def apply_tensor(self, x: np.ndarray) -> np.ndarray:
        pad = np.zeros(self.embed, dtype=np.complex128)
        pad[self._crop] = x
        y = scipy.fft.ifftn(scipy.fft.fftn(pad) * self.symbol)
        return np.asfortranarray(y[self._crop])

    def apply(self, v: np.ndarray) -> np.ndarray:
        return vec(self.apply_tensor(unvec(v, self.dims)))


class BttbOperator:
    """(I - theta K), K = (nu + i eta)(D_d (+) ... (+) D_1), as an FFT matvec."""

    def __init__(self, ops: tuple[FracOperator, ...], coefficient: complex, theta: float):
        self.coefficient = complex(coefficient)
        self.theta = float(theta)
        self.dims = tuple(op.n for op in ops)
        self._action = _KronFftAction(ops, 1.0, -self.theta * self.coefficient)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        if v.shape != (int(np.prod(self.dims)),):
            raise ValueError(f"expected flat vector of length {int(np.prod(self.dims))}, got {v.shape}")
        return self._action.apply(v)

    def matvec_tensor(self, x: np.ndarray) -> np.ndarray:
        return self._action.apply_tensor(x)


def kron_sum_action(ops, coefficient: complex) -> _KronFftAction:
    """K v itself (no identity shift), FFT-based; used by the vector schemes."""
    return _KronFftAction(ops, 0.0, complex(coefficient))


def tau_eigenvalues(op: FracOperator) -> np.ndarray:
    """Eigenvalues of the tau (Toeplitz-minus-Hankel) approximation of D.

    The tau algebra is diagonalized by the orthonormal DST-I; the k-th
    eigenvalue is the symbol t_0 + 2 sum_{m>=1} t_m cos(k m pi/(n+1))
    evaluated with the scaled first column t = -g / h^alpha.
    """
    col = op.first_column
    n = op.n
    k = np.arange(1, n + 1)
    if n == 1:
        return np.array([col[0]])
    angles = np.outer(k, np.arange(1, n)) * (np.pi / (n + 1))
    return col[0] + 2.0 * (np.cos(angles) @ col[1:])


def dst1(x: np.ndarray, axes=None) -> np.ndarray:
    """Orthonormal DST-I over the given axes (involutory: dst1(dst1(x)) = x)."""
    return scipy.fft.dstn(x, type=1, norm="ortho", axes=axes)


class TauPreconditioner:
    """Solves (I - theta c (tau(D_d) (+) ... (+) tau(D_1))) z = r by DST-I.

    Forward sine transform in every direction, pointwise division by the
    precomputed eigenvalue tensor, inverse (same) sine transform.
    """

    def __init__(self, ops: tuple[FracOperator, ...], coefficient: complex, theta: float):
        self.dims = tuple(op.n for op in ops)
        acc = None
        for op in ops:
            eigs = tau_eigenvalues(op)
            acc = eigs if acc is None else np.add.outer(acc, eigs)
        denom = 1.0 - theta * complex(coefficient) * acc
        if np.abs(denom).min() < 1e-300:
            raise ArithmeticError("tau preconditioner is singular (zero eigenvalue)")
        self.denom = np.asfortranarray(denom)

    def solve_tensor(self, r: np.ndarray) -> np.ndarray:
        z = dst1(r)
        z /= self.denom
        return np.asfortranarray(dst1(z))

    def solve(self, r: np.ndarray) -> np.ndarray:
        return vec(self.solve_tensor(unvec(r, self.dims)))


def pgmres_solve(matvec, precond, b, x0=None, tol=1e-6, maxit=20):
    """Left-preconditioned full GMRES (no restart).

    Converged when the preconditioned residual drops below
    tol * ||precond(b)||; on maxit the best iterate is returned with
    ``converged = False``.  Returns (x, iterations, converged).  The small
    Hessenberg least-squares problem is re-solved per iteration, which is
    negligible next to the O(N log N) matvec for maxit <= 20.
    """
    b = np.asarray(b, dtype=np.complex128)
    if x0 is None:
        x0 = np.zeros(b.size, dtype=np.complex128)
        r = b
    else:
        x0 = np.asarray(x0, dtype=np.complex128)
        r = b - matvec(x0)
    target = tol * np.linalg.norm(precond(b))
    z = precond(r)
    beta = np.linalg.norm(z)
    if beta <= target or beta == 0.0:
        return x0.copy(), 0, True
    basis = [z / beta]
    hess = np.zeros((maxit + 1, maxit), dtype=np.complex128)
    converged = False
    m = 0
    y = np.zeros(0)
    for j in range(maxit):
        w = precond(matvec(basis[j]))
        for i in range(j + 1):  # modified Gram-Schmidt
            hess[i, j] = np.vdot(basis[i], w)
            w -= hess[i, j] * basis[i]
        hess[j + 1, j] = np.linalg.norm(w)
        m = j + 1
        rhs = np.zeros(m + 1, dtype=np.complex128)
        rhs[0] = beta
        y, *_ = np.linalg.lstsq(hess[: m + 1, :m], rhs, rcond=None)
        residual = np.linalg.norm(rhs - hess[: m + 1, :m] @ y)
        if residual <= target:
            converged = True
            break
        if hess[j + 1, j] <= 1e-14 * beta:
            converged = True  # invariant subspace: GMRES solution is exact
            break
        basis.append(w / hess[j + 1, j])
    x = x0 + np.stack(basis[:m], axis=1) @ y
    return x, m, converged


def pcg_solve(matvec, precond, b, x0=None, tol=1e-6, maxit=20):
    """Preconditioned conjugate gradient for a Hermitian positive definite
    operator (here: real SPD matrix) with complex right-hand side.

    Converged when ||b - A x|| <= tol * ||b||.  Returns (x, iterations,
    converged); a zero-iteration return means the initial guess already
    satisfied the tolerance.
    """
    b = np.asarray(b, dtype=np.complex128)
    if x0 is None:
        x = np.zeros_like(b)
        r = b.copy()
    else:
        x = np.asarray(x0, dtype=np.complex128).copy()
        r = b - matvec(x)
    bnorm = np.linalg.norm(b)
    target = tol * bnorm
    if np.linalg.norm(r) <= target:
        return x, 0, True
    z = precond(r)
    p = z.copy()
    rz = np.vdot(r, z).real
    for k in range(1, maxit + 1):
        ap = matvec(p)
        alpha = rz / np.vdot(p, ap).real
        x += alpha * p
        r -= alpha * ap
        if np.linalg.norm(r) <= target:
            return x, k, True
        z = precond(r)
        rz_new = np.vdot(r, z).real
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, maxit, False


@dataclass(frozen=True)
class KrylovConfig:
    """Shift-and-invert Lanczos hyperparameters (m=10, xi=tau/10 defaults
    come from the run configuration)."""

    xi: float
    m: int = 10
    inner_tol: float = 1e-6
    inner_maxit: int = 20
    outer_tol: float = 0.0  # >0 enables early termination of the subspace

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"subspace size must be >= 1, got {self.m}")
        if self.xi <= 0:
            raise ValueError(f"shift must be positive, got {self.xi}")


class ShiftInvertLanczos:
    """phi_ell(theta K) v by Lanczos on (I - xi (D_d (+) ... (+) D_1))^{-1}.

    The inner solves use PCG with the tau preconditioner and zero initial
    guess; the Krylov basis is fully reorthogonalized (m stays small).  The
    small matrix function is evaluated through the eigendecomposition of the
    tridiagonal T_m.
    """

    def __init__(self, ops: tuple[FracOperator, ...], coefficient: complex, config: KrylovConfig):
        self.coefficient = complex(coefficient)
        self.config = config
        self.shifted = _KronFftAction(ops, 1.0, -config.xi)
        self.precond = TauPreconditioner(ops, 1.0, config.xi)

    def _inner_solve(self, rhs, stats=None):
        x, iters, ok = pcg_solve(self.shifted.apply, self.precond.solve, rhs,
                                 tol=self.config.inner_tol, maxit=self.config.inner_maxit)
        if stats is not None:
            stats["inner"].append(iters)
            if not ok:
                stats["failures"].append("pcg")
        return x

    def apply(self, ell: int, theta: float, v: np.ndarray, stats=None) -> np.ndarray:
        cfg = self.config
        beta0 = np.linalg.norm(v)
        if beta0 == 0.0:
            return np.zeros_like(v, dtype=np.complex128)
        basis = [np.asarray(v, dtype=np.complex128) / beta0]
        diag: list[float] = []
        offdiag: list[float] = []
        prev = None
        for j in range(cfg.m):
            w = self._inner_solve(basis[j], stats)
            a = np.vdot(basis[j], w).real
            diag.append(a)
            w = w - a * basis[j]
            if j > 0:
                w = w - offdiag[j - 1] * basis[j - 1]
            for qk in basis:  # full reorthogonalization
                w -= np.vdot(qk, w) * qk
            beta = np.linalg.norm(w)
            if beta <= 1e-13 * max(abs(d) for d in diag):
                break  # happy breakdown: subspace is invariant
            if cfg.outer_tol > 0.0 and j + 1 < cfg.m:
                cur = self._retrieval(ell, theta, diag, offdiag)
                if prev is not None:
                    padded = np.zeros_like(cur)
                    padded[: prev.size] = prev
                    if np.linalg.norm(cur - padded) <= cfg.outer_tol * np.linalg.norm(cur):
                        break
                prev = cur
            if j + 1 < cfg.m:
                offdiag.append(beta)
                basis.append(w / beta)
        small = self._retrieval(ell, theta, diag, offdiag)
        if stats is not None:
            stats["outer"].append(len(diag))
        qmat = np.stack(basis[: len(diag)], axis=1)
        return beta0 * (qmat @ small)

    def _retrieval(self, ell, theta, diag, offdiag):
        thetas, wmat = scipy.linalg.eigh_tridiagonal(diag, offdiag)
        if thetas.min() <= 0.0:
            raise ArithmeticError("Lanczos tridiagonal matrix lost positive definiteness")
        zdiag = (theta / self.config.xi) * self.coefficient * (1.0 - 1.0 / thetas)
        fdiag = phi_scalar(ell, zdiag)
        return wmat @ (fdiag * wmat[0, :])


# -- vector-oriented realizations of the schemes ---------------------------

class Lbdf2Vector:
    """Linearized BDF2 with PGMRES linear solves (tau-preconditioned),
    previous step as initial guess."""

    def __init__(self, problem: GridProblem, config, tau: float):
        ops = problem.operator().ops
        c = problem.params.coefficient
        self.g = make_nonlinearity(problem)
        self.tau = tau
        self.tol = config.tol
        self.maxit = config.maxit
        self.op_first = BttbOperator(ops, c, tau)
        self.pre_first = TauPreconditioner(ops, c, tau)
        self.op_main = BttbOperator(ops, c, 2.0 * tau / 3.0)
        self.pre_main = TauPreconditioner(ops, c, 2.0 * tau / 3.0)
        self.dims = problem.shape
        # FFT solves run in double; the state is kept at the run precision
        self.cdtype = np.complex64 if config.precision == "single" else np.complex128
        self.prev = None
        self.stats = {"outer": [], "inner": [], "failures": []}

    def step(self, n, t, u):
        tau = self.tau
        if n == 0:
            rhs = u + tau * self.g(0.0, u)
            op, pre = self.op_first, self.pre_first
        else:
            rhs = (4.0 / 3.0) * u - (1.0 / 3.0) * self.prev \
                + (2.0 * tau / 3.0) * self.g(t + tau, 2.0 * u - self.prev)
            op, pre = self.op_main, self.pre_main
        x, iters, ok = pgmres_solve(op.matvec, pre.solve, vec(rhs), x0=vec(u),
                                    tol=self.tol, maxit=self.maxit)
        self.stats["outer"].append(iters)
        if not ok:
            self.stats["failures"].append(n)
        self.prev = u
        return unvec(x, self.dims).astype(self.cdtype, copy=False)


class StrangVector:
    """Strang splitting with the exponential action by shift-and-invert Lanczos."""

    def __init__(self, problem: GridProblem, config, tau: float):
        integrators.require_source_free(problem, "strang")
        ops = problem.operator().ops
        self.params = problem.params
        self.tau = tau
        self.dims = problem.shape
        self.lanczos = ShiftInvertLanczos(
            ops, self.params.coefficient,
            KrylovConfig(xi=config.xi_over_tau * tau, m=config.krylov_m,
                         inner_tol=config.tol, inner_maxit=config.maxit),
        )
        self.cdtype = np.complex64 if config.precision == "single" else np.complex128
        self.stats = {"outer": [], "inner": [], "failures": []}

    def step(self, n, t, u):
        half = self.tau / 2.0
        w = exact_flow(self.params, half, u)
        w = unvec(self.lanczos.apply(0, self.tau, vec(w), self.stats), self.dims)
        return exact_flow(self.params, half, w).astype(self.cdtype, copy=False)


class KrogstadVector:
    """Krogstad scheme with every phi-function action by shift-and-invert
    Lanczos (six Krylov actions per step)."""

    def __init__(self, problem: GridProblem, config, tau: float):
        ops = problem.operator().ops
        self.params = problem.params
        self.g = make_nonlinearity(problem)
        self.tau = tau
        self.dims = problem.shape
        self.k_action = kron_sum_action(ops, self.params.coefficient)
        self.lanczos = ShiftInvertLanczos(
            ops, self.params.coefficient,
            KrylovConfig(xi=config.xi_over_tau * tau, m=config.krylov_m,
                         inner_tol=config.tol, inner_maxit=config.maxit),
        )
        self.cdtype = np.complex64 if config.precision == "single" else np.complex128
        self.stats = {"outer": [], "inner": [], "failures": []}

    def _phi(self, ell, theta, w):
        return unvec(self.lanczos.apply(ell, theta, vec(w), self.stats), self.dims)

    def step(self, n, t, u):
        tau, g = self.tau, self.g
        gu = g(t, u)
        f = self.k_action.apply_tensor(u) + gu
        a1 = self._phi(1, tau / 2.0, f)
        u2 = u + (tau / 2.0) * a1
        d2 = g(t + tau / 2.0, u2) - gu
        u3 = u + (tau / 2.0) * a1 + tau * self._phi(2, tau / 2.0, d2)
        c1 = self._phi(1, tau, f)
        d3 = g(t + tau / 2.0, u3) - gu
        u4 = u + tau * c1 + 2.0 * tau * self._phi(2, tau, d3)
        d4 = g(t + tau, u4) - gu
        new = u + tau * c1 + tau * self._phi(2, tau, 2.0 * d2 + 2.0 * d3 - d4) \
            + tau * self._phi(3, tau, 4.0 * (d4 - d2 - d3))
        return new.astype(self.cdtype, copy=False)


_VECTOR_STEPPERS = {
    "lbdf2": Lbdf2Vector,
    "strang": StrangVector,
    "krogstad": KrogstadVector,
}


def make_vector_stepper(problem: GridProblem, config, tau: float):
    return _VECTOR_STEPPERS[config.scheme](problem, config, tau)


def lbdf2_v_run(problem: GridProblem, config) -> integrators.RunResult:
    return integrators.run(problem, replace(config, scheme="lbdf2", engine="iterative_baseline"))


def strang_v_run(problem: GridProblem, config) -> integrators.RunResult:
    return integrators.run(problem, replace(config, scheme="strang", engine="iterative_baseline"))


def krogstad_v_run(problem: GridProblem, config) -> integrators.RunResult:
    return integrators.run(problem, replace(config, scheme="krogstad", engine="iterative_baseline"))
