"""Resolvent-type vectors h(lam, e) solving (1/lam - T) h = e, plus checks.

For the truncated shift families the matrix ``1/lam - T`` is triangular with
constant diagonal, so every nonzero ``lam`` is admissible and the Neumann sum

    h = lam * sum_{n >= 0} lam^n T^n e

terminates exactly at the nilpotency index.  Identity checks are reported as
residuals relative to the scale of the solve (``|e| + |h|/|lam| + |T h|``),
since the vectors involved routinely span hundreds of orders of magnitude.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    ArgumentError,
    NeumannDivergenceError,
    SingularResolventError,
)
from ._linalg import smallest_singular_value, unit_columns
from .operators import OperatorModel, _readonly

__all__ = [
    "ResolventVector",
    "ResolventSolver",
    "resolvent_vector",
    "neumann_resolvent",
    "check_th_identity",
    "check_replacement",
    "independence_smin",
    "lambda_grid",
    "filter_lambda_gap",
    "dense_subsequence_probe",
    "probe_tail_oracle",
]

log = logging.getLogger(__name__)

#: Direct solves whose relative defect exceeds this are treated as singular.
DEFECT_TOL = 1e-8

#: Trailing Neumann term (relative to the sum) must fall below this for
#: non-nilpotent operators.
NEUMANN_TAIL_TOL = 1e-12

#: Candidate lam is dropped when 1/lam approaches an eigenvalue closer than
#: this, relative to max(|1/lam|, spectral radius).
EIGEN_GAP_RTOL = 1e-6


@dataclass(frozen=True, eq=False)
class ResolventVector:
    """One solve of ``(1/lam - T) h = e``.

    ``defect`` is the solve residual relative to the solve scale, ``terms``
    the number of Neumann terms (``None`` for direct solves), ``condition``
    a two-sided power-iteration estimate of cond_2(1/lam - T) (``nan`` when
    not computed).
    """

    lam: complex
    vector: np.ndarray
    method: str
    terms: int | None
    defect: float
    condition: float


def _solve_scale(op: OperatorModel, lam: complex, h: np.ndarray, e: np.ndarray, th: np.ndarray) -> float:
    return float(
        np.linalg.norm(e) + abs(1.0 / lam) * np.linalg.norm(h) + np.linalg.norm(th)
    )


class ResolventSolver:
    """LU factorization of ``1/lam - T``, reusable across right-hand sides."""

    def __init__(self, op: OperatorModel, lam: complex, defect_tol: float = DEFECT_TOL):
        if lam == 0:
            raise ArgumentError("lam must be nonzero")
        self.op = op
        self.lam = complex(lam)
        self.defect_tol = float(defect_tol)
        a = np.diag(np.full(op.dim, 1.0 / self.lam)) - op.matrix
        self._a = a
        with warnings.catch_warnings():
            # exact singularity is caught by the defect check in solve()
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            self._lu = scipy.linalg.lu_factor(a, check_finite=False)
        self._condition: float | None = None

    def solve(self, e: np.ndarray) -> ResolventVector:
        e = np.asarray(e, dtype=np.complex128).reshape(-1)
        h = scipy.linalg.lu_solve(self._lu, e, check_finite=False)
        if not np.all(np.isfinite(h)):
            raise SingularResolventError(self.lam, "solve produced non-finite entries")
        th = self.op.apply(h)
        resid = (1.0 / self.lam) * h - th - e
        defect = float(np.linalg.norm(resid)) / _solve_scale(self.op, self.lam, h, e, th)
        if defect > self.defect_tol:
            raise SingularResolventError(
                self.lam, f"relative defect {defect:.3e} exceeds {self.defect_tol:.1e}"
            )
        return ResolventVector(
            lam=self.lam,
            vector=_readonly(h),
            method="direct",
            terms=None,
            defect=defect,
            condition=self.condition_estimate(),
        )

    def condition_estimate(self, iters: int = 12) -> float:
        """cond_2 estimate: power iteration for sigma_max, inverse iteration
        (through the stored LU factors) for sigma_min.  Fixed internal seed."""
        if self._condition is None:
            rng = np.random.default_rng(0)
            v = rng.standard_normal(self.op.dim) + 1j * rng.standard_normal(self.op.dim)
            v /= np.linalg.norm(v)
            hi = 0.0
            for _ in range(iters):
                w = self._a @ v
                v = self._a.conj().T @ w
                nv = float(np.linalg.norm(v))
                if nv == 0.0:
                    break
                hi = math.sqrt(nv)
                v /= nv
            u = rng.standard_normal(self.op.dim) + 1j * rng.standard_normal(self.op.dim)
            u /= np.linalg.norm(u)
            inv_hi = 0.0
            for _ in range(iters):
                w = scipy.linalg.lu_solve(self._lu, u, trans=2, check_finite=False)
                u = scipy.linalg.lu_solve(self._lu, w, check_finite=False)
                nu = float(np.linalg.norm(u))
                if not math.isfinite(nu) or nu == 0.0:
                    inv_hi = math.inf
                    break
                inv_hi = math.sqrt(nu)
                u /= nu
            self._condition = math.inf if inv_hi == math.inf else hi * inv_hi
        return self._condition


def resolvent_vector(
    op: OperatorModel,
    lam: complex,
    e: np.ndarray,
    method: str = "direct",
    terms: int | None = None,
) -> ResolventVector:
    """Convenience wrapper building a one-shot solver (direct) or Neumann sum."""
    if method == "direct":
        return ResolventSolver(op, lam).solve(e)
    if method == "neumann":
        return neumann_resolvent(op, lam, e, terms=terms)
    raise ArgumentError(f"unknown method {method!r}")


def neumann_resolvent(
    op: OperatorModel,
    lam: complex,
    e: np.ndarray,
    terms: int | None = None,
) -> ResolventVector:
    """Partial Neumann sum ``lam * sum_{n<terms} lam^n T^n e``.

    Exact for nilpotent truncations once ``terms`` reaches the nilpotency
    index (the default).  Non-nilpotent operators must pass ``terms``
    explicitly and the trailing term has to be negligible against the sum,
    otherwise :class:`NeumannDivergenceError` is raised.
    """
    if lam == 0:
        raise ArgumentError("lam must be nonzero")
    lam = complex(lam)
    e = np.asarray(e, dtype=np.complex128).reshape(-1)
    if terms is None:
        if not op.is_nilpotent:
            raise ArgumentError("non-nilpotent Neumann sum requires explicit terms")
        terms = op.dim
    if terms < 1:
        raise ArgumentError("terms must be >= 1")

    acc = np.zeros(op.dim, dtype=np.complex128)
    term = lam * e  # n = 0 contribution
    last_norm = float(np.linalg.norm(term))
    for n in range(terms):
        acc += term
        if n + 1 < terms:
            term = lam * op.apply(term)
            last_norm = float(np.linalg.norm(term))
            if not math.isfinite(last_norm):
                raise NeumannDivergenceError(lam, last_norm)
    if not op.is_nilpotent:
        sum_norm = float(np.linalg.norm(acc))
        if last_norm > NEUMANN_TAIL_TOL * max(sum_norm, 1e-300):
            raise NeumannDivergenceError(lam, last_norm)

    th = op.apply(acc)
    resid = (1.0 / lam) * acc - th - e
    defect = float(np.linalg.norm(resid)) / _solve_scale(op, lam, acc, e, th)
    return ResolventVector(
        lam=lam,
        vector=_readonly(acc),
        method="neumann",
        terms=terms,
        defect=defect,
        condition=math.nan,
    )


# ----------------------------------------------------------------------------
# identity checks


def check_th_identity(op: OperatorModel, rv: ResolventVector, e: np.ndarray) -> float:
    """Relative residual of ``T h = h / lam - e``."""
    e = np.asarray(e, dtype=np.complex128).reshape(-1)
    th = op.apply(rv.vector)
    resid = th - ((1.0 / rv.lam) * rv.vector - e)
    return float(np.linalg.norm(resid)) / _solve_scale(op, rv.lam, rv.vector, e, th)


def check_replacement(
    op: OperatorModel,
    lam: complex,
    mu: complex,
    e: np.ndarray,
    solver_lam: ResolventSolver | None = None,
    solver_mu: ResolventSolver | None = None,
) -> float:
    """Relative residual of the two-point identity

        h(lam, e) - h(mu, e) = (1/mu - 1/lam) h(lam, h(mu, e)).

    Solvers may be passed in to reuse LU factors across many checks.
    """
    if lam == mu:
        raise ArgumentError("replacement identity needs distinct points")
    sl = solver_lam if solver_lam is not None else ResolventSolver(op, lam)
    sm = solver_mu if solver_mu is not None else ResolventSolver(op, mu)
    h_lam = sl.solve(e).vector
    h_mu = sm.solve(e).vector
    nested = sl.solve(h_mu).vector
    lhs = h_lam - h_mu
    rhs = (1.0 / mu - 1.0 / lam) * nested
    scale = max(
        float(np.linalg.norm(h_lam)),
        float(np.linalg.norm(h_mu)),
        float(np.linalg.norm(rhs)),
    )
    return float(np.linalg.norm(lhs - rhs)) / scale


def independence_smin(vectors: np.ndarray) -> float:
    """Smallest singular value of the column-normalized stack of vectors.

    Rows of ``vectors`` are the vectors under test; a single vector counts
    as independent with score 1.  Invariant under permutation and nonzero
    rescaling of the vectors.
    """
    v = np.asarray(vectors, dtype=np.complex128)
    if v.ndim != 2 or v.shape[0] == 0:
        raise ArgumentError("need a nonempty 2-d stack of row vectors")
    if v.shape[0] == 1:
        return 1.0
    return smallest_singular_value(unit_columns(v.T))


# ----------------------------------------------------------------------------
# lam grids


def lambda_grid(radii, per_ring: int, phase: float = 0.0) -> np.ndarray:
    """Points ``r * exp(i(2 pi j / per_ring + phase))`` for each ring radius."""
    if per_ring < 1:
        raise ArgumentError("per_ring must be >= 1")
    out = []
    for r in radii:
        r = float(r)
        if r <= 0:
            raise ArgumentError("ring radii must be positive")
        for j in range(per_ring):
            out.append(r * np.exp(1j * (2.0 * np.pi * j / per_ring + phase)))
    return np.array(out, dtype=np.complex128)


def filter_lambda_gap(
    op: OperatorModel, lams, gap_rtol: float = EIGEN_GAP_RTOL
) -> np.ndarray:
    """Drop lam whose reciprocal sits too close to an eigenvalue of T.

    The gap is relative to ``max(|1/lam|, spectral radius)``; for nilpotent
    truncations (all eigenvalues zero) every nonzero lam survives.
    """
    eig = op.eigenvalues()
    rho = op.spectral_radius()
    keep = []
    for lam in np.asarray(lams, dtype=np.complex128).reshape(-1):
        if lam == 0:
            continue
        z = 1.0 / lam
        gap = float(np.min(np.abs(eig - z)))
        if gap >= gap_rtol * max(abs(z), rho):
            keep.append(lam)
        else:
            log.debug("dropping lam=%s (eigen-gap %.3e)", lam, gap)
    return np.array(keep, dtype=np.complex128)


# ----------------------------------------------------------------------------
# factorial-decay probe for the plain backward shift


def dense_subsequence_probe(
    dim: int,
    k_max: int,
    n_max: int = 12,
    p: float = 1.0,
) -> np.ndarray:
    """Convergence profile of rescaled shifted tails of ``x_j = 1/(j-1)!``.

    The plain (unweighted) backward shift ``B`` moves ``x`` to
    ``(B^n x)_j = 1/(n+j-1)!``.  Zero the first ``k-1`` coordinates, rescale
    by ``(n+k-1)!`` and the result converges to the basis vector ``e_k``:

        err[k-1, n-1] = || (n+k-1)! * P_{>=k} B^n x  -  e_k ||_p

    Row ``k-1`` holds ``err_k(n)`` for ``n = 1 .. n_max``.  The orbit is
    computed by genuine operator application; the rescaling uses exact
    integer factorials, so no intermediate overflow occurs for the sizes
    this probe targets.
    """
    if k_max < 1 or n_max < 1:
        raise ArgumentError("k_max and n_max must be >= 1")
    if n_max + k_max >= dim:
        raise ArgumentError("dim too small for requested probe range")
    b = np.zeros((dim, dim))
    for j in range(1, dim):
        b[j - 1, j] = 1.0
    x = np.array([1.0 / math.factorial(j) for j in range(dim)])
    err = np.empty((k_max, n_max))
    xn = x.copy()
    for n in range(1, n_max + 1):
        xn = b @ xn  # (B^n x)_j = 1/(n+j)!  (0-based j)
        for k in range(1, k_max + 1):
            z = xn.copy()
            z[: k - 1] = 0.0
            z *= float(math.factorial(n + k - 1))
            z[k - 1] -= 1.0
            if p == 1.0:
                err[k - 1, n - 1] = float(np.sum(np.abs(z)))
            else:
                err[k - 1, n - 1] = float(np.sum(np.abs(z) ** p) ** (1.0 / p))
    return err


def probe_tail_oracle(k: int, n: int, p: float = 1.0, terms: int = 300) -> float:
    """Independent closed-form tail for the probe error.

    The surviving coordinates after rescaling are products of reciprocals,
    so ``err_k(n) = ( sum_{t>=1} prod_{s=1..t} (n+k-1+s)^{-p} )^{1/p}``.
    Plus, for ``k >= 2``, nothing else: the zeroed head is exact.
    """
    total = 0.0
    prod = 1.0
    for t in range(1, terms + 1):
        prod /= n + k - 1 + t
        total += prod**p
        if prod**p < 1e-320:
            break
    return total ** (1.0 / p)
