"""Coefficient sequences built from biorthogonal norms, and their zeros.

The construction: given positive norms ``r_0, r_1, ...`` set ``c_0 = 1`` and

    c_i = 2^-i * min{1/r_1, ..., 1/r_2i}        (capped at the supplied range)

so that ``c_i * r_{i+k} <= 2^-i`` termwise for ``i >= k`` and the bounds
``beta_k = sum_i c_i r_{i+k}`` stay finite.  The degree-d truncation
``F(z) = sum c_i z^i`` (optionally with its constant term shifted) is the
polynomial whose zeros downstream modules feed into resolvent solves.

Orbit norms grow super-geometrically for decaying shift weights, so the c_i
span hundreds of orders of magnitude.  All polynomial evaluation here is done
against the normalization ``max(1, |z|)^d`` via Horner in ``1/z`` on the
reversed coefficients, which keeps every intermediate quantity representable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import ArgumentError, AssumptionError
from .operators import _readonly

__all__ = [
    "CoefficientSequence",
    "ZeroSet",
    "coefficients_from_norms",
    "apply_picard_shift",
    "find_zeros",
    "shifted_coefficients",
    "root_decay_index",
    "poly_eval_normalized",
    "normalized_residual",
]

#: Normalized zero residual must stay below this times max|c_i|.
ZERO_RTOL = 1e-10

#: Pairwise zero separation must exceed this times the largest modulus.
DISTINCT_RTOL = 1e-9

DEGREE_CAP = 64


@dataclass(frozen=True, eq=False)
class CoefficientSequence:
    """Coefficients c_0..c_d with the norms and bounds that produced them.

    ``picard_shift`` is the (negative) constant subtracted from c_0, zero
    while unshifted.  ``norm_bounds[k]`` is beta_k for k = 0..k_max.
    """

    coefficients: np.ndarray
    orbit_norms: np.ndarray
    norm_bounds: np.ndarray
    degree: int
    k_max: int
    picard_shift: float = 0.0

    @classmethod
    def from_coefficients(cls, c, orbit_norms=(), k_max: int = 0) -> "CoefficientSequence":
        """Wrap explicit coefficients (no norm provenance, no bounds)."""
        c = np.asarray(c, dtype=np.complex128).reshape(-1)
        if c.size < 2:
            raise ArgumentError("need at least degree 1")
        return cls(
            coefficients=_readonly(c),
            orbit_norms=np.asarray(orbit_norms, dtype=float),
            norm_bounds=np.zeros(0),
            degree=c.size - 1,
            k_max=int(k_max),
        )


@dataclass(frozen=True, eq=False)
class ZeroSet:
    """Distinct polished zeros, ascending in modulus.

    ``residuals[i]`` is |F(lambda_i)| / max(1, |lambda_i|)^d, i.e. already
    normalized by the growth factor its tolerance would otherwise carry.
    """

    lambdas: np.ndarray
    residuals: np.ndarray
    modulus_sorted: bool = True


def _beta(c: np.ndarray, r: np.ndarray, k_max: int) -> np.ndarray:
    d = c.size - 1
    out = np.empty(k_max + 1)
    for k in range(k_max + 1):
        out[k] = float(np.sum(np.abs(c) * r[k : k + d + 1]))
    return out


def coefficients_from_norms(r, k_max: int, degree: int | None = None) -> CoefficientSequence:
    """Build the coefficient sequence from biorthogonal norms.

    ``r`` holds r_0..r_{L-1}; the min in the formula runs over indices
    1..2i, capped at the entries supplied.  Needs ``len(r) >= degree + k_max
    + 1``; the default degree is ``min(L - k_max - 1, 64)``.
    """
    r = np.asarray(r, dtype=float).reshape(-1)
    if r.size < 2:
        raise ArgumentError("need at least two orbit norms")
    if np.any(r <= 0) or not np.all(np.isfinite(r)):
        raise ArgumentError("orbit norms must be positive and finite")
    if k_max < 0:
        raise ArgumentError("k_max must be >= 0")

    if degree is None:
        degree = min(r.size - k_max - 1, DEGREE_CAP)
        if degree < 1:
            raise ArgumentError(
                f"{r.size} norms cannot support k_max={k_max}; "
                f"need at least {k_max + 2}"
            )
    needed = degree + k_max + 1
    if degree < 1:
        raise ArgumentError("degree must be >= 1")
    if r.size < needed:
        raise ArgumentError(
            f"got {r.size} norms, need {needed} for degree {degree}, k_max {k_max}"
        )

    c = np.empty(degree + 1, dtype=np.complex128)
    c[0] = 1.0
    running_max = 0.0
    hi = 0
    for i in range(1, degree + 1):
        # extend the running max of r_1..r_min(2i, available)
        top = min(2 * i, r.size - 1)
        while hi < top:
            hi += 1
            running_max = max(running_max, r[hi])
        c[i] = math.ldexp(1.0, -i) / running_max
    return CoefficientSequence(
        coefficients=_readonly(c),
        orbit_norms=r.copy(),
        norm_bounds=_beta(c, r, k_max),
        degree=degree,
        k_max=k_max,
    )


def apply_picard_shift(cs: CoefficientSequence, strategy="unit") -> CoefficientSequence:
    """Replace c_0 by c_0 - d_shift for a negative d_shift.

    ``strategy`` is either the string ``"unit"`` (d_shift = -max(1, c_0))
    or an explicit negative real.  The truncated polynomial keeps its full
    complement of zeros either way; the shift pins F(0) != 0.
    """
    if cs.picard_shift != 0.0:
        raise ArgumentError("coefficient sequence is already shifted")
    c0 = float(cs.coefficients[0].real)
    if strategy == "unit":
        d_shift = -max(1.0, c0)
    else:
        d_shift = float(strategy)
        if not d_shift < 0:
            raise ArgumentError(f"d_shift must be negative, got {d_shift}")
    c = np.array(cs.coefficients, copy=True)
    c[0] = c[0] - d_shift
    bounds = _beta(c, cs.orbit_norms, cs.k_max) if cs.norm_bounds.size else cs.norm_bounds
    return replace(
        cs,
        coefficients=_readonly(c),
        norm_bounds=bounds,
        picard_shift=d_shift,
    )


def shifted_coefficients(cs: CoefficientSequence, k: int) -> np.ndarray:
    """c^(k): k zeros then c, so its polynomial is z^k F(z).  Length d+k+1."""
    if not 0 <= k <= cs.k_max:
        raise ArgumentError(f"k must lie in 0..{cs.k_max}, got {k}")
    return np.concatenate([np.zeros(k, dtype=np.complex128), cs.coefficients])


def root_decay_index(cs: CoefficientSequence) -> int:
    """Smallest j >= 1 with |c_i|^(1/i) non-increasing for all i >= j."""
    c = np.abs(np.asarray(cs.coefficients))
    g = [math.exp(math.log(c[i]) / i) if c[i] > 0 else 0.0 for i in range(1, c.size)]
    j = 1
    for i in range(1, len(g)):
        if g[i] > g[i - 1] * (1 + 1e-14):
            j = i + 1
    return j


# ----------------------------------------------------------------------------
# overflow-safe polynomial evaluation


def _horner_raw(c: np.ndarray, z: complex) -> tuple[complex, complex, bool]:
    """(F(z)/s_d, F'(z)/s_{d-1}, rescaled) with s_k = z^k when |z| > 1.

    Inside the closed unit disk this is plain Horner (s_k = 1); outside it is
    Horner in u = 1/z on reversed coefficients, so no intermediate ever
    exceeds sum|c_i| and huge z cannot overflow.
    """
    d = c.size - 1
    if abs(z) <= 1.0:
        f = complex(0.0)
        fp = complex(0.0)
        for i in range(d, -1, -1):
            fp = fp * z + f
            f = f * z + c[i]
        return f, fp, False
    u = 1.0 / z
    f = complex(0.0)  # sum c_i u^(d-i) = F(z) / z^d
    for i in range(d + 1):
        f = f * u + c[i]
    fp = complex(0.0)  # sum i c_i u^(d-i) = F'(z) / z^(d-1)
    for i in range(1, d + 1):
        fp = fp * u + i * c[i]
    return f, fp, True


def poly_eval_normalized(c, z: complex) -> complex:
    """F(z) / max(1, |z|)^d without overflow, lowest-first coefficients."""
    c = np.asarray(c, dtype=np.complex128).reshape(-1)
    z = complex(z)
    f, _, rescaled = _horner_raw(c, z)
    if rescaled:
        f = f * (z / abs(z)) ** (c.size - 1)
    return f


def normalized_residual(c, z: complex) -> float:
    c = np.asarray(c, dtype=np.complex128).reshape(-1)
    return abs(_horner_raw(c, complex(z))[0])


def _newton_polish(c: np.ndarray, z: complex, iters: int = 40) -> tuple[complex, float]:
    best_z, best_r = z, abs(_horner_raw(c, z)[0])
    for _ in range(iters):
        f, fp, rescaled = _horner_raw(c, z)
        if fp == 0:
            break
        # F/F' = (f/fp) * (s_d / s_{d-1}); the scale ratio is z when |z| > 1
        step = (f / fp) * (z if rescaled else 1.0)
        z = z - step
        r = abs(_horner_raw(c, z)[0])
        if r < best_r:
            best_z, best_r = z, r
        if abs(step) < 1e-16 * max(1.0, abs(z)):
            break
    return best_z, best_r


def find_zeros(cs: CoefficientSequence, m: int) -> ZeroSet:
    """The m largest-modulus zeros of the truncated polynomial, ascending.

    Companion-matrix seeds on geometrically balanced coefficients, then
    Newton polishing through the normalized Horner pair.  Raises when some
    returned zero misses the residual tolerance or two of them collide.
    """
    c = np.asarray(cs.coefficients, dtype=np.complex128)
    d = cs.degree
    if not 1 <= m <= d:
        raise ArgumentError(f"m must lie in 1..{d}, got {m}")
    if c[d] == 0:
        raise ArgumentError("leading coefficient vanishes; lower the degree")

    # balance: z = s*y with s matching the overall coefficient span
    s = (abs(c[0]) / abs(c[d])) ** (1.0 / d) if c[0] != 0 else 1.0
    b = c * s ** np.arange(d + 1)
    b /= np.max(np.abs(b))
    seeds = npoly.polyroots(b) * s

    max_c = float(np.max(np.abs(c)))
    polished = []
    for z0 in seeds:
        z, r = _newton_polish(c, complex(z0))
        polished.append((z, r / max_c))

    polished.sort(key=lambda t: abs(t[0]))
    chosen = polished[-m:]
    bad = [(z, r) for z, r in chosen if not (r < ZERO_RTOL)]
    if bad:
        worst = max(bad, key=lambda t: t[1])
        raise AssumptionError(
            f"{len(bad)} of {m} zeros failed to polish; worst residual "
            f"{worst[1]:.3e} at |z| = {abs(worst[0]):.6g} (tol {ZERO_RTOL:.1e})"
        )

    lambdas = np.array([z for z, _ in chosen], dtype=np.complex128)
    residuals = np.array([r * max_c for _, r in chosen])
    # distinctness is judged at each pair's own scale: zero sets here span
    # many orders of magnitude, and a global scale would flag every small
    # pair as coincident with the largest ring
    for i in range(m):
        for j in range(i + 1, m):
            pair_scale = max(abs(lambdas[i]), abs(lambdas[j]))
            if abs(lambdas[i] - lambdas[j]) <= DISTINCT_RTOL * pair_scale:
                raise AssumptionError(
                    f"zeros {i} and {j} coincide within {DISTINCT_RTOL:.1e} "
                    f"of their modulus {pair_scale:.6g}; raise the degree"
                )
    return ZeroSet(lambdas=_readonly(lambdas), residuals=residuals.copy())
