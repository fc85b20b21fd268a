"""Exception types shared across the package.

The split mirrors how failures are treated downstream: bad caller input
(`ArgumentError`), a numerical precondition that did not hold at run time
(`AssumptionError` and its subclasses), and pipeline failures that carry the
stage at which a half-space construction gave up (`StageError`).
"""

from __future__ import annotations

__all__ = [
    "AihsError",
    "ArgumentError",
    "AssumptionError",
    "OrbitDeathError",
    "MinimalityError",
    "SingularResolventError",
    "NeumannDivergenceError",
    "ChainTerminated",
    "StageError",
]


class AihsError(Exception):
    """Base class for all package-specific errors."""


class ArgumentError(AihsError):
    """A caller supplied an argument that violates an interface contract."""


class AssumptionError(AihsError):
    """A numerical assumption required by an operation failed to hold."""


class OrbitDeathError(AssumptionError):
    """An orbit vector fell below the usable norm floor.

    ``index`` is the first orbit index whose vector is numerically zero.
    """

    def __init__(self, index: int, norm: float, floor: float):
        self.index = index
        self.norm = norm
        self.floor = floor
        super().__init__(
            f"orbit vector at index {index} has norm {norm:.3e} below the "
            f"floor {floor:.3e}; the orbit died before the requested length"
        )


class MinimalityError(AssumptionError):
    """An orbit vector lies (numerically) in the span of the others.

    ``index`` is the offending orbit index; ``distance`` the measured gap.
    """

    def __init__(self, index: int, distance: float, scale: float):
        self.index = index
        self.distance = distance
        self.scale = scale
        super().__init__(
            f"orbit is not minimal: vector {index} is within {distance:.3e} "
            f"of the span of the remaining vectors (norm {scale:.3e})"
        )


class SingularResolventError(AssumptionError):
    """The resolvent system at a given point is singular or unusable."""

    def __init__(self, lam: complex, detail: str = ""):
        self.lam = lam
        msg = f"resolvent solve failed at lambda = {lam!r}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class NeumannDivergenceError(AssumptionError):
    """A Neumann partial sum is diverging; a direct solve should be used."""

    def __init__(self, lam: complex, term_norm: float):
        self.lam = lam
        self.term_norm = term_norm
        super().__init__(
            f"Neumann series diverges at lambda = {lam!r} (term norm grew to "
            f"{term_norm:.3e}); use the direct solve instead"
        )


class ChainTerminated(AihsError):
    """A functional chain hit the invariant-subspace branch.

    Raised by ``extend_chain`` when the next functional vanishes on the whole
    current subspace.  Carries the terminal state so callers can inspect the
    dichotomy witness.
    """

    def __init__(self, state, invariance_residual: float, verified: bool):
        self.state = state
        self.invariance_residual = invariance_residual
        self.verified = verified
        super().__init__(
            "invariant subspace found: the next functional vanishes on the "
            f"current subspace (invariance residual {invariance_residual:.3e})"
        )


class StageError(AihsError):
    """A half-space construction failed at a named pipeline stage."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"half-space construction failed at stage '{stage}': {cause}")
