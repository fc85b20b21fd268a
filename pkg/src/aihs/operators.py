"""Finite truncations of sequence-space operators.

Three families are supported, all as dense complex matrices acting on the
standard basis ``e_1 .. e_N`` of ``C^N`` (indices are 1-based in the
documentation, 0-based in code):

* forward weighted shift: ``T e_i = w_i e_{i+1}`` for ``i < N`` and
  ``T e_N = 0``;
* Donoghue backward shift: ``D e_1 = 0`` and ``D e_i = w_{i-1} e_{i-1}``,
  with ``|w_1| > |w_2| > ...`` strictly decreasing;
* dense: an arbitrary caller-supplied matrix, passed through unchanged.

Truncations of both shift families are nilpotent, which downstream modules
exploit: Neumann sums terminate and the point ``0`` is the only (spurious)
eigenvalue.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, MinimalityError, OrbitDeathError
from ._linalg import distance_to_span

__all__ = [
    "Family",
    "OperatorModel",
    "OrbitData",
    "build_operator",
    "compute_orbit",
    "max_orbit_length",
    "geometric_weights",
    "factorial_decay_weights",
    "weights_from_config",
    "operator_from_config",
]

#: Orbit vectors below this Euclidean norm are treated as numerically dead.
ORBIT_NORM_FLOOR = 1e-150

#: An orbit vector closer (relatively) than this to the span of the others
#: makes the orbit non-minimal.
MINIMALITY_RTOL = 1e-13


class Family(str, enum.Enum):
    """Operator family tags; the values double as config/CSV identifiers."""

    FORWARD = "forward-weighted-shift"
    DONOGHUE = "donoghue-backward-shift"
    DENSE = "dense"


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=np.complex128, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class OperatorModel:
    """A concrete N x N truncation.

    Attributes
    ----------
    family : Family
        Which construction produced the matrix.
    weights : tuple[complex, ...] | None
        The shift weights (length ``dim - 1``); ``None`` for dense operators.
    matrix : numpy.ndarray
        The dense ``(dim, dim)`` complex matrix.  Stored read-only; all
        operations on models are pure, so instances are safe to share.
    dim : int
        Truncation size ``N >= 2``.
    """

    family: Family
    weights: tuple[complex, ...] | None
    matrix: np.ndarray
    dim: int
    _eig_cache: list = field(default_factory=list, repr=False, compare=False)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(vec, dtype=np.complex128)

    def adjoint_apply(self, vec: np.ndarray) -> np.ndarray:
        return self.matrix.conj().T @ np.asarray(vec, dtype=np.complex128)

    @property
    def is_nilpotent(self) -> bool:
        """Structurally nilpotent (true for both shift families)."""
        return self.family is not Family.DENSE

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues of the truncation (cached; exact zeros for shifts)."""
        if not self._eig_cache:
            if self.is_nilpotent:
                vals = np.zeros(self.dim, dtype=np.complex128)
            else:
                vals = np.linalg.eigvals(self.matrix)
            self._eig_cache.append(_readonly(vals.reshape(-1)))
        return self._eig_cache[0]

    def spectral_radius(self) -> float:
        if self.is_nilpotent:
            return 0.0
        return float(np.max(np.abs(self.eigenvalues())))

    def norm_estimate(self) -> float:
        """Estimate of the operator 2-norm (exact for shift families)."""
        if self.weights is not None:
            return float(np.max(np.abs(self.weights)))
        return _sigma_max_estimate(self.matrix)


def _sigma_max_estimate(m: np.ndarray, iters: int = 12) -> float:
    """Deterministic power-iteration estimate of the largest singular value."""
    n = m.shape[0]
    v = np.ones(n, dtype=np.complex128) / math.sqrt(n)
    sigma = 0.0
    for _ in range(iters):
        w = m @ v
        v = m.conj().T @ w
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return 0.0
        sigma = math.sqrt(nv)
        v = v / nv
    return sigma


def _check_weights(family: Family, weights, dim: int) -> tuple[complex, ...]:
    w = tuple(complex(x) for x in weights)
    if len(w) != dim - 1:
        raise ArgumentError(
            f"{family.value} at dim {dim} needs {dim - 1} weights, got {len(w)}"
        )
    for i, x in enumerate(w):
        if x == 0:
            raise ArgumentError(f"weight {i + 1} is zero; all weights must be nonzero")
    if family is Family.DONOGHUE:
        mods = [abs(x) for x in w]
        for i in range(len(mods) - 1):
            if not mods[i + 1] < mods[i]:
                raise ArgumentError(
                    "Donoghue weights must be strictly decreasing in modulus; "
                    f"|w_{i + 1}| = {mods[i]:.6g} vs |w_{i + 2}| = {mods[i + 1]:.6g}"
                )
    return w


def build_operator(
    family: Family | str,
    dim: int,
    weights=None,
    matrix=None,
) -> OperatorModel:
    """Build an :class:`OperatorModel` from a family tag and its data.

    Parameters
    ----------
    family : Family or str
        One of the three family tags.
    dim : int
        Truncation size; must be at least 2.
    weights : sequence of complex, optional
        Length ``dim - 1`` nonzero weights; required for the shift families
        and rejected for dense operators.
    matrix : array_like, optional
        The ``(dim, dim)`` matrix for the dense family; passed through
        unchanged (up to complex casting).
    """
    family = Family(family)
    if int(dim) != dim or dim < 2:
        raise ArgumentError(f"dim must be an integer >= 2, got {dim!r}")
    dim = int(dim)

    if family is Family.DENSE:
        if matrix is None:
            raise ArgumentError("dense family requires a matrix")
        if weights is not None:
            raise ArgumentError("dense family takes no weights")
        m = np.asarray(matrix, dtype=np.complex128)
        if m.shape != (dim, dim):
            raise ArgumentError(f"matrix shape {m.shape} != ({dim}, {dim})")
        return OperatorModel(family, None, _readonly(m), dim)

    if matrix is not None:
        raise ArgumentError(f"{family.value} takes weights, not a matrix")
    if weights is None:
        raise ArgumentError(f"{family.value} requires weights")
    w = _check_weights(family, weights, dim)

    m = np.zeros((dim, dim), dtype=np.complex128)
    if family is Family.FORWARD:
        for j in range(dim - 1):
            m[j + 1, j] = w[j]
    else:  # Donoghue backward shift
        for j in range(1, dim):
            m[j - 1, j] = w[j - 1]
    return OperatorModel(family, w, _readonly(m), dim)


# ----------------------------------------------------------------------------
# weight generators


def geometric_weights(dim: int, ratio: complex) -> tuple[complex, ...]:
    """``w_i = ratio**i`` for ``i = 1 .. dim - 1``."""
    if ratio == 0:
        raise ArgumentError("geometric ratio must be nonzero")
    return tuple(complex(ratio) ** i for i in range(1, dim))


def factorial_decay_weights(dim: int) -> tuple[complex, ...]:
    """``w_i = 1 / i!`` for ``i = 1 .. dim - 1`` (dies past 170 in doubles)."""
    out = []
    for i in range(1, dim):
        try:
            v = 1.0 / math.factorial(i)
        except OverflowError:
            v = 0.0
        if v == 0.0:
            raise ArgumentError(
                f"factorial-decay weight {i} underflows to zero; reduce dim"
            )
        out.append(complex(v))
    return tuple(out)


def _as_complex(value) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ArgumentError(f"complex entries must be [re, im], got {value!r}")
        return complex(float(value[0]), float(value[1]))
    return complex(value)


def weights_from_config(cfg: dict, dim: int) -> tuple[complex, ...]:
    """Materialize a ``{"kind": ..., "params": {...}}`` weight description."""
    kind = cfg.get("kind")
    params = cfg.get("params", {})
    if kind == "explicit":
        return tuple(_as_complex(v) for v in params["values"])
    if kind == "geometric":
        return geometric_weights(dim, _as_complex(params["ratio"]))
    if kind == "factorial-decay":
        return factorial_decay_weights(dim)
    raise ArgumentError(f"unknown weight kind {kind!r}")


def operator_from_config(cfg: dict, rng: np.random.Generator | None = None) -> OperatorModel:
    """Build an operator from its JSON-config description.

    Dense random matrices draw from ``rng`` (standard complex Gaussian scaled
    by ``scale / sqrt(dim)``), so the same seed reproduces the same operator.
    """
    family = Family(cfg["family"])
    dim = cfg["dim"]
    if family is Family.DENSE:
        mcfg = cfg.get("matrix")
        if mcfg is None:
            raise ArgumentError("dense operator config requires a 'matrix' entry")
        kind = mcfg.get("kind", "explicit")
        if kind == "explicit":
            entries = mcfg["entries"]
            m = np.array(
                [[_as_complex(v) for v in row] for row in entries],
                dtype=np.complex128,
            )
        elif kind == "random-gaussian":
            if rng is None:
                raise ArgumentError("random dense matrix requires a seeded rng")
            scale = float(mcfg.get("scale", 1.0))
            m = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
            m *= scale / math.sqrt(2 * dim)
        else:
            raise ArgumentError(f"unknown matrix kind {kind!r}")
        return build_operator(family, dim, matrix=m)
    return build_operator(family, dim, weights=weights_from_config(cfg["weights"], dim))


# ----------------------------------------------------------------------------
# orbits


@dataclass(frozen=True, eq=False)
class OrbitData:
    """A finite forward orbit with its biorthogonal norms.

    Attributes
    ----------
    seed : numpy.ndarray
        The starting vector ``x_0``.
    vectors : numpy.ndarray
        Shape ``(length, dim)``; row ``n`` is ``x_n = T^n x_0``.
    biorthogonal_norms : numpy.ndarray
        ``r_n = 1 / dist(x_n, span of the other orbit vectors)``, the norm of
        the n-th coordinate functional of the (minimal) orbit system.
    length : int
        Number of orbit vectors.
    """

    seed: np.ndarray
    vectors: np.ndarray
    biorthogonal_norms: np.ndarray
    length: int


def max_orbit_length(
    op: OperatorModel,
    seed: np.ndarray,
    cap: int,
    norm_floor: float = ORBIT_NORM_FLOOR,
) -> int:
    """Longest orbit ``x_0 .. x_{L-1}`` whose vectors all stay above the floor."""
    x = np.asarray(seed, dtype=np.complex128)
    count = 0
    for _ in range(cap):
        if np.linalg.norm(x) < norm_floor or not np.all(np.isfinite(x)):
            break
        count += 1
        x = op.apply(x)
    return count


def compute_orbit(
    op: OperatorModel,
    seed: np.ndarray,
    length: int,
    norm_floor: float = ORBIT_NORM_FLOOR,
    minimality_rtol: float = MINIMALITY_RTOL,
) -> OrbitData:
    """Compute ``x_n = T^n e`` for ``n < length`` plus biorthogonal norms.

    Raises
    ------
    OrbitDeathError
        If some ``x_n`` with ``n < length`` falls below ``norm_floor``.
    MinimalityError
        If some ``x_n`` lies numerically in the span of the other orbit
        vectors (e.g. the identity operator, whose orbit vectors coincide).
    """
    e = np.asarray(seed, dtype=np.complex128).reshape(-1)
    if e.shape != (op.dim,):
        raise ArgumentError(f"seed shape {e.shape} != ({op.dim},)")
    if np.linalg.norm(e) == 0.0:
        raise ArgumentError("seed vector must be nonzero")
    if not 1 <= length <= op.dim:
        raise ArgumentError(f"orbit length must satisfy 1 <= L <= dim, got {length}")

    vectors = np.empty((length, op.dim), dtype=np.complex128)
    x = e
    for n in range(length):
        nx = float(np.linalg.norm(x))
        if nx < norm_floor or not np.all(np.isfinite(x)):
            raise OrbitDeathError(n, nx, norm_floor)
        vectors[n] = x
        x = op.apply(x)

    norms = _biorthogonal_norms(vectors, minimality_rtol)
    return OrbitData(
        seed=_readonly(e),
        vectors=_readonly(vectors),
        biorthogonal_norms=norms,
        length=length,
    )


def _biorthogonal_norms(vectors: np.ndarray, minimality_rtol: float) -> np.ndarray:
    """``r_n = 1 / dist(x_n, span{x_i : i != n})`` via a reduced QR factor."""
    length = vectors.shape[0]
    if length == 1:
        out = np.array([1.0 / float(np.linalg.norm(vectors[0]))])
        out.setflags(write=False)
        return out
    # Reduce to an L x L problem: distances are preserved by the Q factor.
    scales = np.linalg.norm(vectors, axis=1)
    _, r = np.linalg.qr((vectors / scales[:, None]).T)
    r = r * scales[None, :]
    out = np.empty(length)
    for n in range(length):
        others = np.delete(r, n, axis=1)
        dist = distance_to_span(r[:, n], others)
        scale = float(np.linalg.norm(r[:, n]))
        if dist < minimality_rtol * scale:
            raise MinimalityError(n, dist, scale)
        out[n] = 1.0 / dist
    out.setflags(write=False)
    return out
