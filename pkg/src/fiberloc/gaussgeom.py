"""Closed-form Gaussian measures of discs and tubes, expectations against
complex Gaussians, the tilt-inequality oracle, and circled-norm geometry.

Conventions: the standard Gaussian on C^k has unit-variance real
coordinates, so |z - v|^2 is a noncentral chi-square with 2k degrees of
freedom and noncentrality |v|^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError
from .linalg import check_hermitian
from .localize import ComplexGaussian

SERIES_TAIL = 1e-14
SERIES_MAX_TERMS = 100_000


# ---------------------------------------------------------------------------
# Disc and tube measures

@dataclass(frozen=True)
class DiscSpec:
    """A Euclidean disc in C^k: |z - v| <= radius with |v| = center_norm."""

    k: int
    center_norm: float
    radius: float


def _central_disc_cdf(k: int, x: float) -> float:
    # P(chi^2_{2k} <= x) = 1 - e^{-x/2} sum_{j<k} (x/2)^j / j!
    s = 0.0
    term = 1.0
    for j in range(k):
        if j > 0:
            term *= (x / 2) / j
        s += term
    return 1.0 - math.exp(-x / 2) * s


def disc_measure(k: int, center_norm: float, radius: float) -> float:
    """Standard Gaussian measure of the disc {|z - v| <= radius} in C^k.

    Central case is the exact closed form; the off-center case is the
    Poisson mixture over central terms, truncated once the remaining
    Poisson mass drops below 1e-14.
    """
    if k < 1:
        raise ValidationError(f"complex dimension must be >= 1, got {k}")
    if center_norm < 0 or radius < 0:
        raise ValidationError("center_norm and radius must be nonnegative")
    if radius == 0:
        return 0.0
    x = radius * radius
    if center_norm == 0:
        return _central_disc_cdf(k, x)
    c = center_norm * center_norm / 2          # Poisson mean
    w = math.exp(-c)
    cumw = w
    # term = e^{-x/2} (x/2)^{k-1} / (k-1)! ; C = central cdf with k terms
    term = math.exp(-x / 2)
    for j in range(1, k):
        term *= (x / 2) / j
    C = _central_disc_cdf(k, x)
    total = w * C
    for m in range(1, SERIES_MAX_TERMS):
        if 1.0 - cumw < SERIES_TAIL:
            break
        w *= c / m
        cumw += w
        term *= (x / 2) / (k + m - 1)
        C -= term
        total += w * C
    return min(max(total, 0.0), 1.0)


def disc_measure_spec(spec: DiscSpec) -> float:
    return disc_measure(spec.k, spec.center_norm, spec.radius)


def affine_tube_measure(n: int, k: int, d: float, r: float) -> float:
    """Gaussian measure of the r-tube around an (n-k)-dimensional complex
    affine subspace of C^n at distance d from the origin.

    Reduces to the disc measure in the k-dimensional orthogonal complement,
    so the value does not depend on n.
    """
    if not (1 <= k <= n):
        raise ValidationError(f"need 1 <= k <= n, got n={n}, k={k}")
    return disc_measure(k, d, r)


# ---------------------------------------------------------------------------
# Test functionals and expectations against complex Gaussians

@dataclass(frozen=True)
class One:
    """The constant functional 1."""

    label: str = "one"


@dataclass(frozen=True)
class SqNorm:
    """|z|^2."""

    label: str = "sq_norm"


class HalfSpace:
    """Indicator of the half-space Re(u^* z) > c."""

    def __init__(self, u, c: float = 0.0):
        self.u = np.asarray(u, dtype=complex)
        self.c = float(c)
        self.label = f"half_space(c={self.c})"


class BoundedExp:
    """min(exp(Re(u^* z)), M)."""

    def __init__(self, u, M: float):
        if M <= 0:
            raise ValidationError("cap M must be positive")
        self.u = np.asarray(u, dtype=complex)
        self.M = float(M)
        self.label = f"bounded_exp(M={self.M})"


def _phi(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2))


def _linear_marginal(mu: ComplexGaussian, u: np.ndarray) -> tuple[float, float]:
    # Re(u^* z) is Gaussian with mean Re(u^* a) and variance u^* A u / 2.
    if u.shape != mu.center.shape:
        raise ValidationError("direction dimension mismatch")
    m = float(np.real(u.conj() @ mu.center))
    var = float(np.real(u.conj() @ (mu.covariance @ u))) / 2
    return m, math.sqrt(max(var, 0.0))


def gaussian_expectation(mu: ComplexGaussian, phi) -> float:
    """Expectation of a supported test functional under a complex Gaussian.

    All supported functionals reduce to closed forms of a one-real-
    dimensional marginal, valid also on rank-deficient support.
    """
    if isinstance(phi, One):
        return 1.0
    if isinstance(phi, SqNorm):
        return float(np.linalg.norm(mu.center) ** 2 + np.real(np.trace(mu.covariance)))
    if isinstance(phi, HalfSpace):
        m, s = _linear_marginal(mu, phi.u)
        if s == 0.0:
            return 1.0 if m > phi.c else (0.5 if m == phi.c else 0.0)
        return _phi((m - phi.c) / s)
    if isinstance(phi, BoundedExp):
        m, s = _linear_marginal(mu, phi.u)
        if s == 0.0:
            return min(math.exp(m), phi.M)
        t = math.log(phi.M)
        return (math.exp(m + s * s / 2) * _phi((t - m - s * s) / s)
                + phi.M * (1.0 - _phi((t - m) / s)))
    raise ValidationError(f"unsupported functional {phi!r}")


# ---------------------------------------------------------------------------
# Tilt inequality oracle

def _tilted_disc_mass(b: np.ndarray, v: np.ndarray, R: float,
                      nodes: int) -> float:
    """integral over {|z| <= R} of exp(Re(v^* z)) against the centered
    Gaussian with diagonal precision b on C^k, by tensor-grid quadrature.

    k = 1 uses a polar (radius x angle) grid; k = 2 peels off the first
    coordinate and recurses, so every integrand stays smooth.
    """
    k = len(b)
    x, wgt = np.polynomial.legendre.leggauss(nodes)
    theta = 2 * np.pi * np.arange(nodes) / nodes
    if k == 1:
        s = R * (x + 1) / 2
        ws = wgt * R / 2
        # angular average of exp(|v| s cos(theta)) on the periodic grid
        ang = np.exp(np.abs(v[0]) * s[:, None] * np.cos(theta)[None, :]).mean(axis=1)
        integrand = b[0] * s * np.exp(-b[0] * s * s / 2) * ang
        return float(np.sum(ws * integrand))
    # k == 2: condition on the modulus of the first coordinate
    s = R * (x + 1) / 2
    ws = wgt * R / 2
    inner = np.array([
        _tilted_disc_mass(b[1:], v[1:], math.sqrt(max(R * R - si * si, 0.0)), nodes)
        for si in s
    ])
    ang = np.exp(np.abs(v[0]) * s[:, None] * np.cos(theta)[None, :]).mean(axis=1)
    integrand = b[0] * s * np.exp(-b[0] * s * s / 2) * ang * inner
    return float(np.sum(ws * integrand))


@dataclass(frozen=True)
class TiltCheck:
    lhs: float
    rhs: float
    holds: bool


def tilt_inequality_check(B: np.ndarray, v: np.ndarray, R: float,
                          tol: float = 1e-6) -> TiltCheck:
    """Check the curved-Gaussian tilt inequality on C^k (k <= 2).

    For a centered complex Gaussian mu with precision B >= Id:

        integral_{|z|<=R} e^{Re(v^* z)} dmu  >=
            gamma_k(disc(v, R)) * integral e^{Re(v^* z)} dmu.

    Both the left side and the disc-measure factor are computed by
    tensor-grid quadrature; the total tilted mass has the exact closed
    form exp(v^* B^{-1} v / 2).
    """
    B = check_hermitian(B)
    k = B.shape[0]
    if k > 2:
        raise ValidationError("tilt check supports complex dimension k <= 2")
    v = np.asarray(v, dtype=complex).reshape(k)
    if R < 0:
        raise ValidationError("radius must be nonnegative")
    w, U = np.linalg.eigh(B)
    if w[0] < 1 - 1e-10:
        raise DomainError("precision matrix must dominate the identity")
    vt = U.conj().T @ v
    nodes = 400 if k == 1 else 200
    lhs = _tilted_disc_mass(w, vt, R, nodes)
    total = math.exp(float(np.sum(np.abs(vt) ** 2 / (2 * w))))
    gk = math.exp(-float(np.linalg.norm(v) ** 2) / 2) * _tilted_disc_mass(
        np.ones(k), v, R, nodes)
    rhs = gk * total
    return TiltCheck(lhs=lhs, rhs=rhs, holds=lhs >= rhs - tol)


# ---------------------------------------------------------------------------
# Circled-norm geometry (diagonal norm balls K = {|W z| <= 1})

@dataclass(frozen=True)
class CircledGeometry:
    """Inradius data of K = {|diag(w) z| <= 1}: the largest Euclidean ball
    r_K B^n inside K, a contact point z0, and the hyperplane H = z0-perp
    with K contained in H + r_K B^n."""

    r_K: float
    z0: np.ndarray
    H: np.ndarray          # (n, n-1) orthonormal basis


def circled_norm_geometry(weights) -> CircledGeometry:
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0 or np.any(w <= 0):
        raise ValidationError("weights must be a nonempty vector of positive reals")
    n = w.size
    j = int(np.argmax(w))          # ties: smallest index
    r_K = 1.0 / w[j]
    z0 = np.zeros(n, dtype=complex)
    z0[j] = r_K
    H = np.delete(np.eye(n, dtype=complex), j, axis=1)
    return CircledGeometry(r_K=r_K, z0=z0, H=H)
