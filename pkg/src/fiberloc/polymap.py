"""Holomorphic polynomial maps C^n -> C^k and their zero sets.

A map is stored as explicit monomial sums with exact symbolic Jacobian.
The zero set is traversed with Gauss-Newton projection; all point-wise
operations accept either a single point (n,) or a stack (P, n).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ProjectionError, SingularityError, ValidationError

FIBER_TOL = 1e-10
RANK_TOL = 1e-8


def _as_points(z: np.ndarray, n: int) -> tuple[np.ndarray, bool]:
    z = np.asarray(z, dtype=complex)
    single = z.ndim == 1
    if single:
        z = z[None, :]
    if z.ndim != 2 or z.shape[1] != n:
        raise ValidationError(f"expected points in C^{n}, got shape {z.shape}")
    return z, single


@dataclass(frozen=True)
class FiberPoint:
    """A point on (or numerically on) the zero set, with its residual |f(point)|."""

    point: np.ndarray
    residual: float


class PolynomialMap:
    """Polynomial map f: C^n -> C^k given as k monomial sums.

    components[j] is a list of (coefficient, exponents) pairs where the
    exponent vector has length n. base_point is a designated point of the
    zero set used to start paths; it must satisfy |f(base_point)| <= 1e-12
    and have a rank-k Jacobian there.
    """

    def __init__(self, n: int, k: int, components, base_point):
        if not (1 <= k <= n):
            raise ValidationError(f"need 1 <= k <= n, got n={n}, k={k}")
        if len(components) != k:
            raise ValidationError(f"expected {k} components, got {len(components)}")
        self.n = int(n)
        self.k = int(k)
        self._coeffs = []
        self._exps = []
        for comp in components:
            coeffs = np.array([complex(c) for c, _ in comp], dtype=complex)
            exps = np.array([e for _, e in comp], dtype=np.int64)
            if exps.size == 0:
                coeffs = np.zeros(1, dtype=complex)
                exps = np.zeros((1, n), dtype=np.int64)
            if exps.ndim != 2 or exps.shape[1] != n:
                raise ValidationError("every exponent vector must have length n")
            if np.any(exps < 0):
                raise ValidationError("exponents must be nonnegative integers")
            self._coeffs.append(coeffs)
            self._exps.append(exps)
        # Exact symbolic derivative tables: d/dz_l of each component.
        self._jac_coeffs = []
        self._jac_exps = []
        for coeffs, exps in zip(self._coeffs, self._exps):
            row_c, row_e = [], []
            for ell in range(n):
                dc = coeffs * exps[:, ell]
                de = exps.copy()
                de[:, ell] = np.maximum(de[:, ell] - 1, 0)
                keep = dc != 0
                if not np.any(keep):
                    dc = np.zeros(1, dtype=complex)
                    de = np.zeros((1, n), dtype=np.int64)
                else:
                    dc, de = dc[keep], de[keep]
                row_c.append(dc)
                row_e.append(de)
            self._jac_coeffs.append(row_c)
            self._jac_exps.append(row_e)

        self.base_point = np.asarray(base_point, dtype=complex).reshape(n)
        res = float(np.linalg.norm(eval_map(self, self.base_point)))
        if res > 1e-12:
            raise ValidationError(f"base_point residual {res:.3e} exceeds 1e-12")
        J = eval_jacobian(self, self.base_point)
        smin = np.linalg.svd(J, compute_uv=False)[-1]
        if smin < RANK_TOL:
            raise ValidationError(
                f"Jacobian at base_point is rank-deficient (sigma_min={smin:.3e})"
            )

    # -- serialization (complex numbers as [re, im] pairs) -------------------

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "components": [
                [
                    {"coeff": [c.real, c.imag], "exps": [int(e) for e in ev]}
                    for c, ev in zip(coeffs, exps)
                ]
                for coeffs, exps in zip(self._coeffs, self._exps)
            ],
            "base_point": [[z.real, z.imag] for z in self.base_point],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PolynomialMap":
        try:
            comps = [
                [(complex(m["coeff"][0], m["coeff"][1]), m["exps"]) for m in comp]
                for comp in obj["components"]
            ]
            base = [complex(p[0], p[1]) for p in obj["base_point"]]
            return cls(obj["n"], obj["k"], comps, base)
        except (KeyError, TypeError, IndexError) as exc:
            raise ValidationError(f"malformed map description: {exc}") from exc

    def rescaled(self, weights: np.ndarray) -> "PolynomialMap":
        """The map g(u) = f(u / w) in the coordinates u = diag(w) z.

        Its zero set is the image of this map's zero set under diag(w).
        """
        w = np.asarray(weights, dtype=float).reshape(self.n)
        if np.any(w <= 0):
            raise ValidationError("weights must be positive")
        comps = []
        for coeffs, exps in zip(self._coeffs, self._exps):
            scale = np.prod(w[None, :] ** (-exps), axis=1)
            comps.append(list(zip(coeffs * scale, exps)))
        return PolynomialMap(self.n, self.k, comps, self.base_point * w)


# ---------------------------------------------------------------------------
# Evaluation

def eval_map(F: PolynomialMap, z: np.ndarray) -> np.ndarray:
    """Evaluate f at z. Returns shape (k,) for a single point, (P, k) stacked."""
    pts, single = _as_points(z, F.n)
    out = np.empty((pts.shape[0], F.k), dtype=complex)
    for j in range(F.k):
        powers = pts[:, None, :] ** F._exps[j][None, :, :]
        out[:, j] = powers.prod(axis=2) @ F._coeffs[j]
    return out[0] if single else out


def eval_jacobian(F: PolynomialMap, z: np.ndarray) -> np.ndarray:
    """Exact holomorphic Jacobian (df_j / dz_l) at z; shape (k, n) or (P, k, n)."""
    pts, single = _as_points(z, F.n)
    out = np.empty((pts.shape[0], F.k, F.n), dtype=complex)
    for j in range(F.k):
        for ell in range(F.n):
            powers = pts[:, None, :] ** F._jac_exps[j][ell][None, :, :]
            out[:, j, ell] = powers.prod(axis=2) @ F._jac_coeffs[j][ell]
    return out[0] if single else out


def residual_norm(F: PolynomialMap, z: np.ndarray) -> np.ndarray:
    """|f(z)| as a float (single point) or (P,) array."""
    v = eval_map(F, z)
    r = np.linalg.norm(np.atleast_2d(v), axis=1)
    return float(r[0]) if v.ndim == 1 else r


def gradient_subspace(F: PolynomialMap, z: np.ndarray,
                      rank_tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis (n, k) of span{(grad f_j(z))^*}.

    This is the subspace the diffusion must annihilate to conserve f along
    a path. Raises SingularityError on Jacobian rank collapse.
    """
    J = eval_jacobian(F, z)
    if J.ndim != 2:
        raise ValidationError("gradient_subspace takes a single point")
    smin = np.linalg.svd(J, compute_uv=False)[-1]
    if smin < rank_tol:
        raise SingularityError(
            f"Jacobian rank-deficient (sigma_min={smin:.3e}); near a singular point"
        )
    Q, _ = np.linalg.qr(J.conj().T)
    return Q


# ---------------------------------------------------------------------------
# Gauss-Newton projection

def project_batch(F: PolynomialMap, z: np.ndarray, tol: float = FIBER_TOL,
                  max_iter: int = 50, rank_tol: float = RANK_TOL):
    """Gauss-Newton projection of a stack of points onto the zero set.

    Iterates z <- z - J^* (J J^*)^{-1} f(z) on the points whose residual
    still exceeds tol. Returns (points, residuals, converged, singular)
    where the two masks flag per-point failure modes.
    """
    pts = np.array(z, dtype=complex, copy=True)
    P = pts.shape[0]
    res = residual_norm(F, pts)
    res = np.atleast_1d(res)
    singular = np.zeros(P, dtype=bool)
    active = res > tol
    for _ in range(max_iter):
        if not np.any(active):
            break
        idx = np.nonzero(active)[0]
        zi = pts[idx]
        fv = np.atleast_2d(eval_map(F, zi))
        J = eval_jacobian(F, zi)
        if J.ndim == 2:
            J = J[None]
        G = J @ np.conj(np.swapaxes(J, -1, -2))
        gmin = np.linalg.eigvalsh(G)[:, 0]
        bad = gmin < rank_tol**2
        if np.any(bad):
            singular[idx[bad]] = True
            active[idx[bad]] = False
            good = ~bad
            idx, zi, fv, J, G = idx[good], zi[good], fv[good], J[good], G[good]
            if idx.size == 0:
                continue
        s = np.linalg.solve(G, fv[..., None])
        step = (np.conj(np.swapaxes(J, -1, -2)) @ s)[..., 0]
        pts[idx] = zi - step
        r = np.atleast_1d(residual_norm(F, pts[idx]))
        res[idx] = r
        active[idx] = r > tol
    converged = ~active & ~singular
    return pts, res, converged, singular


def project_to_fiber(F: PolynomialMap, z: np.ndarray, tol: float = FIBER_TOL,
                     max_iter: int = 50) -> FiberPoint:
    """Project a single point onto the zero set of F."""
    pts, single = _as_points(z, F.n)
    if not single:
        raise ValidationError("project_to_fiber takes a single point")
    out, res, conv, sing = project_batch(F, pts, tol=tol, max_iter=max_iter)
    if sing[0]:
        raise SingularityError("Jacobian rank collapse during projection")
    if not conv[0]:
        raise ProjectionError(
            f"no convergence in {max_iter} iterations (residual {res[0]:.3e})"
        )
    return FiberPoint(point=out[0], residual=float(res[0]))


# ---------------------------------------------------------------------------
# Distance to the origin along the zero set

@dataclass(frozen=True)
class DistanceResult:
    """Upper bound on the distance from the origin to the zero set."""

    value: float
    argmin: np.ndarray
    optimality_residual: float
    n_starts_converged: int


def minimize_fiber_distance(F: PolynomialMap, targets: np.ndarray,
                            starts: np.ndarray, tol: float = FIBER_TOL,
                            max_iter: int = 60, gn_iter: int = 30):
    """Locally minimize |w - target| subject to f(w) = 0 from given starts.

    targets and starts are stacks of the same length. Projected gradient
    descent with per-point backtracking; every iterate is re-projected.
    Returns (w, dist, ok) with ok flagging starts whose projection stayed
    feasible.
    """
    tgt = np.atleast_2d(np.asarray(targets, dtype=complex))
    w, res, conv, _ = project_batch(F, starts, tol=tol, max_iter=gn_iter)
    ok = conv.copy()
    dist = np.where(ok, np.linalg.norm(w - tgt, axis=1), np.inf)
    eta = np.full(w.shape[0], 0.5)
    for _ in range(max_iter):
        idx = np.nonzero(ok & (eta > 1e-6))[0]
        if idx.size == 0:
            break
        zi = w[idx]
        J = eval_jacobian(F, zi)
        if J.ndim == 2:
            J = J[None]
        Q, _ = np.linalg.qr(np.conj(np.swapaxes(J, -1, -2)))
        g = zi - tgt[idx]
        tang = g - (Q @ (np.conj(np.swapaxes(Q, -1, -2)) @ g[..., None]))[..., 0]
        trial = zi - eta[idx, None] * tang
        cand, cres, cconv, _ = project_batch(F, trial, tol=tol, max_iter=gn_iter)
        cdist = np.where(cconv, np.linalg.norm(cand - tgt[idx], axis=1), np.inf)
        better = cdist < dist[idx] - 1e-14
        imp = idx[better]
        w[imp] = cand[better]
        dist[imp] = cdist[better]
        eta[idx[~better]] *= 0.5
    return w, dist, ok


def distance_to_origin(F: PolynomialMap, starts=None, n_starts: int = 16,
                       seed: int = 0, tol: float = FIBER_TOL) -> DistanceResult:
    """Upper bound on inf{|z| : f(z) = 0} from multi-start local minimization.

    Default starts are the base point plus Gaussian perturbations of it.
    The reported value can only decrease when starts are added.
    """
    if starts is None:
        rng = np.random.default_rng(seed)
        pert = rng.standard_normal((n_starts - 1, 2 * F.n))
        pert = pert[:, : F.n] + 1j * pert[:, F.n:]
        starts = np.vstack([F.base_point[None, :], F.base_point[None, :] + pert])
    else:
        starts = np.atleast_2d(np.asarray(starts, dtype=complex))
    targets = np.zeros_like(starts)
    w, dist, ok = minimize_fiber_distance(F, targets, starts, tol=tol)
    if not np.any(ok):
        raise ProjectionError("no start could be projected onto the zero set")
    best = int(np.argmin(dist))
    z = w[best]
    Q = gradient_subspace(F, z)
    tang = z - Q @ (Q.conj().T @ z)
    return DistanceResult(
        value=float(dist[best]),
        argmin=z,
        optimality_residual=float(np.linalg.norm(tang)),
        n_starts_converged=int(np.sum(ok)),
    )


# ---------------------------------------------------------------------------
# Small catalog of maps used by tests, demos and configs

def affine_map(n: int, offset: complex = 0.0) -> PolynomialMap:
    """f(z) = z_1 - offset in C^n; the fiber is a coordinate hyperplane."""
    comps = [[(1.0, [1 if j == 0 else 0 for j in range(n)]),
              (-offset, [0] * n)]]
    base = np.zeros(n, dtype=complex)
    base[0] = offset
    return PolynomialMap(n, 1, comps, base)


def hyperbola_map() -> PolynomialMap:
    """f(z) = z_1 z_2 - 1 in C^2; distance to the origin is sqrt(2)."""
    return PolynomialMap(2, 1, [[(1.0, [1, 1]), (-1.0, [0, 0])]], [1.0, 1.0])


def paraboloid_map(n: int = 2) -> PolynomialMap:
    """f(z) = z_n - z_1^2 - ... - z_{n-1}^2; passes through the origin."""
    comps = [[(1.0, [0] * (n - 1) + [1])]
             + [(-1.0, [2 if j == i else 0 for j in range(n)])
                for i in range(n - 1)]]
    return PolynomialMap(n, 1, comps, np.zeros(n))
