"""
Regularized pseudoinverses, velocity saturation and smooth activations.

These are the small numerical primitives the prioritized solver is built on.
All matrices are small and dense.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ContractViolation, InputError
from .kinematics import SystemVelocity


# singular values below this are rounding noise, whatever the damping settings
SINGULAR_FLOOR = 1e-10


@dataclass(frozen=True)
class RegularizationParams:
    """Singular-value damping applied by :func:`regularized_pinv`.

    Singular values below ``sv_threshold`` receive a bell-shaped damping that
    reaches ``damping_max`` at zero.
    """

    sv_threshold: float = 0.01
    damping_max: float = 0.01

    def __post_init__(self):
        if not self.sv_threshold > 0:
            raise ContractViolation("sv_threshold must be > 0")
        if not self.damping_max >= 0:
            raise ContractViolation("damping_max must be >= 0")

    def damping(self, sigma):
        """Damping added to a direction with singular value ``sigma``."""
        ratio = np.minimum(np.asarray(sigma, dtype=float) / self.sv_threshold, 1.0)
        return self.damping_max * (1.0 - ratio) ** 2


@dataclass(frozen=True)
class VelocityLimits:
    """Per-component bounds on a system velocity ``[qdot, v1, v2]``."""

    joint_max: tuple
    linear_max: float = 1.0
    angular_max: float = 1.0

    def __post_init__(self):
        joint_max = tuple(float(b) for b in np.atleast_1d(self.joint_max))
        object.__setattr__(self, "joint_max", joint_max)
        if min(joint_max + (self.linear_max, self.angular_max)) <= 0:
            raise ContractViolation("velocity limits must be strictly positive")

    @classmethod
    def uniform(cls, n_joints, joint_max=1.0, linear_max=1.0, angular_max=1.0):
        return cls((joint_max,) * n_joints, linear_max, angular_max)

    @property
    def bounds(self):
        return np.concatenate(
            [self.joint_max, [self.linear_max] * 3, [self.angular_max] * 3]
        )


@dataclass(frozen=True)
class ActivationBand:
    """Transition band for an inequality objective.

    ``lower`` means the objective requires ``x > lower``, ``upper`` means
    ``x < upper``. Either may be ``None``. ``epsilon`` switches the activation
    off entirely for ``x <= epsilon`` (used by norm-type objectives whose
    Jacobian divides by ``x``).
    """

    lower: Optional[float] = None
    upper: Optional[float] = None
    delta: float = 0.1
    epsilon: float = 0.0

    def __post_init__(self):
        if not self.delta > 0:
            raise ContractViolation("delta must be > 0")
        if not 0 <= self.epsilon < self.delta:
            raise ContractViolation("epsilon must satisfy 0 <= epsilon < delta")
        if self.lower is not None and self.upper is not None:
            if self.lower + self.delta > self.upper - self.delta:
                raise ContractViolation("transition zones of the band overlap")

    @classmethod
    def increasing(cls, delta, epsilon=1e-6):
        """Band of a norm that should be zero: 0 at ``x <= epsilon``, 1 above ``delta``."""
        return cls(upper=delta, delta=delta, epsilon=epsilon)


def _blend(u, delta):
    # raised cosine: 1 at u = 0, 0 at u = delta
    return 0.5 * (1.0 + np.cos(np.pi * u / delta))


def activation_scalar(x, band):
    """Smooth activation in [0, 1] of the inequality objective described by ``band``."""
    x = float(x)
    if band.epsilon > 0 and x <= band.epsilon:
        return 0.0
    a = 0.0
    if band.lower is not None:
        u = x - band.lower
        if u < 0:
            a = 1.0
        elif u <= band.delta:
            a = max(a, _blend(u, band.delta))
    if band.upper is not None:
        u = band.upper - x
        if u < 0:
            a = 1.0
        elif u <= band.delta:
            a = max(a, _blend(u, band.delta))
    return float(a)


def _check_finite(*arrays):
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise InputError("non-finite entries in input")


def regularized_pinv(X, A=None, Q=None, params=None):
    """Activation-weighted, singular-value-damped pseudoinverse of ``X``.

    Computes ``(X'A'AX + X'(I-A)'(I-A)X + V)^+ X'A'A`` where ``V`` adds
    ``params.damping(s_i) u_i u_i'`` along each singular direction of the
    bracketed symmetric matrix. Singular values ``s_i`` are reported in the
    units of ``X`` (square roots of the bracket's eigenvalues), so that the
    threshold compares against the singular values of ``X`` itself when
    ``A = I``.

    The ``(I-A)`` term keeps the bracket's rank independent of ``A`` so the
    result is continuous while an activation moves across [0, 1]. ``Q`` is
    accepted for interface parity with the solver and only shape-checked.

    Parameters
    ----------
    X : (m, n) array
    A : (m, m) diagonal matrix or length-m vector of its diagonal, entries in [0, 1]
    Q : (n, n) array, optional
    params : RegularizationParams, optional

    Returns
    -------
    (n, m) array
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    m, n = X.shape
    if A is None:
        a = np.ones(m)
    else:
        A = np.asarray(A, dtype=float)
        if A.ndim == 2:
            if A.shape != (m, m):
                raise ContractViolation(f"A must be {m}x{m}, got {A.shape}")
            if np.any(A - np.diag(np.diag(A))):
                raise ContractViolation("A must be diagonal")
            a = np.diag(A).copy()
        else:
            a = A.reshape(-1)
            if a.shape != (m,):
                raise ContractViolation(f"A must have {m} diagonal entries")
    if Q is not None:
        Q = np.asarray(Q, dtype=float)
        if Q.shape != (n, n):
            raise ContractViolation(f"Q must be {n}x{n}, got {Q.shape}")
        _check_finite(Q)
    _check_finite(X, a)
    if np.any(a < 0) or np.any(a > 1):
        raise ContractViolation("activation entries must lie in [0, 1]")
    if params is None:
        params = RegularizationParams()

    a2 = a * a
    weight = a2 + (1.0 - a) ** 2
    bracket = X.T @ (weight[:, None] * X)
    bracket = 0.5 * (bracket + bracket.T)
    eigval, U = np.linalg.eigh(bracket)
    sigma = np.sqrt(np.clip(eigval, 0.0, None))
    damped = eigval + params.damping(sigma)
    scale = np.max(np.abs(damped)) if damped.size else 0.0
    # eigenvalues of X'X carry absolute error ~eps*scale; treat those as zero.
    # The absolute floor catches X = J Q with Q a numerically-zero projector.
    cutoff = max(1e-12 * scale, SINGULAR_FLOOR**2)
    inv = np.zeros_like(damped)
    keep = damped > cutoff
    inv[keep] = 1.0 / damped[keep]
    return (U * inv) @ U.T @ (X.T * a2)


def saturate(increment, limits, offset=None):
    """Scale ``increment`` uniformly so that ``offset + increment`` respects ``limits``.

    With no ``offset`` this is the plain direction-preserving clamp: the whole
    vector is shrunk by the factor that brings its worst component exactly to
    its bound. With an ``offset`` already inside the bounds, the largest step
    fraction keeping every component of ``offset + s * increment`` in bounds
    is used instead.
    """
    wrap = isinstance(increment, SystemVelocity)
    y = increment.as_array() if wrap else np.asarray(increment, dtype=float)
    bounds = limits.bounds
    if y.shape != bounds.shape:
        raise ContractViolation(
            f"increment has {y.size} components, limits have {bounds.size}"
        )
    if offset is None:
        worst = np.max(np.abs(y) / bounds) if y.size else 0.0
        if worst > 1.0:
            # clip absorbs the rounding of the division so a second pass is a no-op
            out = np.clip(y / worst, -bounds, bounds)
        else:
            out = y.copy()
    else:
        base = np.asarray(offset, dtype=float)
        scale = 1.0
        for yi, bi, bound in zip(y, base, bounds):
            if yi > 0:
                room = bound - bi
            elif yi < 0:
                room = -bound - bi
            else:
                continue
            scale = min(scale, max(room / yi, 0.0))
        if scale < 1.0:
            out = np.clip(base + y * scale, -bounds, bounds) - base
        else:
            out = y.copy()
    if wrap:
        return SystemVelocity.from_array(out, increment.n_joints)
    return out
