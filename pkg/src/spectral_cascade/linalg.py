"""Dense small-matrix primitives: rotations, inverses, spectra, polar forms.

All matrices are numpy float arrays of dimension up to ~10.  Angles are in
turns (theta in [0, 1), rotation by 2*pi*theta) throughout the package.
"""

from __future__ import annotations

import cmath
import math

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import (
    ConvergenceFailure,
    DegeneratePolar,
    IllConditioned,
    NegativeDeterminant,
    PowerOverflow,
    SingularMatrix,
)

DEFAULT_GAP_TOL = 1e-9
SINGULAR_SCALE_TOL = 1e-14
CONDITION_CAP = 1e12
_OVERFLOW_NORM = 1e300


def cos_turns(theta: float) -> float:
    """cos(2*pi*theta), exact at quarter turns."""
    r = theta - math.floor(theta)
    q = 4.0 * r
    if q == round(q):
        return (1.0, 0.0, -1.0, 0.0)[int(q) % 4]
    return math.cos(2.0 * math.pi * r)


def sin_turns(theta: float) -> float:
    """sin(2*pi*theta), exact at quarter turns."""
    r = theta - math.floor(theta)
    q = 4.0 * r
    if q == round(q):
        return (0.0, 1.0, 0.0, -1.0)[int(q) % 4]
    return math.sin(2.0 * math.pi * r)


def rotation_matrix(theta: float) -> np.ndarray:
    """2x2 rigid rotation by the angle ``theta`` in turns."""
    if not math.isfinite(theta):
        raise ValueError(f"rotation angle must be finite, got {theta}")
    c, s = cos_turns(theta), sin_turns(theta)
    return np.array([[c, -s], [s, c]])


def op_norm(M: np.ndarray) -> float:
    """Operator (spectral) norm."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def _singular_threshold(J: np.ndarray) -> float:
    row_norms = np.linalg.norm(J, axis=1)
    scale = float(np.prod(np.maximum(row_norms, 1e-300)))
    return SINGULAR_SCALE_TOL * scale


def invert(J: np.ndarray) -> np.ndarray:
    """Matrix inverse with scale-invariant singularity / conditioning guards."""
    J = np.atleast_2d(np.asarray(J, dtype=float))
    if J.shape[0] != J.shape[1]:
        raise ValueError(f"invert: matrix not square: {J.shape}")
    det = float(np.linalg.det(J))
    if abs(det) < _singular_threshold(J):
        raise SingularMatrix(f"determinant {det:g} below scale threshold")
    sv = np.linalg.svd(J, compute_uv=False)
    if sv[-1] <= 0 or sv[0] / sv[-1] > CONDITION_CAP:
        raise IllConditioned(f"condition number {sv[0] / max(sv[-1], 1e-300):.3g} above cap")
    return np.linalg.inv(J)


def singular_values(J: np.ndarray) -> np.ndarray:
    """Singular values in descending order."""
    J = np.atleast_2d(np.asarray(J, dtype=float))
    return np.linalg.svd(J, compute_uv=False)


def eigenvalues(J: np.ndarray) -> np.ndarray:
    """All eigenvalues (complex, conjugate-paired) via the QR eigensolver."""
    J = np.atleast_2d(np.asarray(J, dtype=float))
    if J.shape[0] != J.shape[1]:
        raise ValueError(f"eigenvalues: matrix not square: {J.shape}")
    try:
        return np.linalg.eigvals(J)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - rare in LAPACK
        raise ConvergenceFailure(str(exc)) from exc


def _charpoly_coeffs(M: np.ndarray) -> list[float]:
    """Monic characteristic polynomial coefficients via Faddeev-LeVerrier.

    Returns [a_1, ..., a_d] with p(x) = x^d + a_1 x^{d-1} + ... + a_d.
    """
    d = M.shape[0]
    coeffs = []
    Mk = np.array(M, copy=True)
    for k in range(1, d + 1):
        ak = -np.trace(Mk) / k
        coeffs.append(float(ak))
        if k < d:
            Mk = M @ (Mk + ak * np.eye(d))
    return coeffs


def _poly_roots(coeffs: list[float]) -> np.ndarray:
    """Roots of a monic polynomial by Durand-Kerner with Newton polishing."""
    d = len(coeffs)
    if d == 0:
        return np.array([], dtype=complex)
    if d == 1:
        return np.array([-coeffs[0]], dtype=complex)
    if d == 2:
        b, c = coeffs
        disc = cmath.sqrt(b * b - 4.0 * c)
        if b >= 0:
            r1 = (-b - disc) / 2.0
        else:
            r1 = (-b + disc) / 2.0
        r2 = c / r1 if r1 != 0 else -b - r1
        return np.array([r1, r2], dtype=complex)

    # Cauchy-style radius keeps the simultaneous iteration well scaled.
    radius = max(abs(a) ** (1.0 / (i + 1)) for i, a in enumerate(coeffs))
    radius = max(radius, 1e-30)
    seed = 0.4 + 0.9j
    roots = np.array([radius * seed ** k for k in range(1, d + 1)], dtype=complex)

    def peval(z):
        acc = np.ones_like(z)
        for a in coeffs:
            acc = acc * z + a
        return acc

    for _ in range(300):
        diffs = roots[:, None] - roots[None, :]
        np.fill_diagonal(diffs, 1.0)
        denom = np.prod(diffs, axis=1)
        step = peval(roots) / denom
        roots = roots - step
        # a few ulps of slack: near convergence the step limit-cycles at
        # roundoff level; the Newton polish below recovers the last digits
        if np.max(np.abs(step)) < 1e-14 * max(radius, np.max(np.abs(roots))):
            break
    else:
        raise ConvergenceFailure("Durand-Kerner iteration did not settle")

    # Newton polish, one root at a time.
    dcoeffs = [a * (d - i) for i, a in enumerate([1.0] + coeffs[:-1])]
    for _ in range(3):
        pv = peval(roots)
        dv = np.zeros_like(roots)
        for a in dcoeffs:
            dv = dv * roots + a
        mask = np.abs(dv) > 0
        roots[mask] = roots[mask] - pv[mask] / dv[mask]
    return roots


def eigenvalues_charpoly(J: np.ndarray) -> np.ndarray:
    """Eigenvalues via characteristic polynomial root finding (dim <= 4).

    Independent of the QR route in :func:`eigenvalues`; used for
    cross-validation of small spectra.
    """
    J = np.atleast_2d(np.asarray(J, dtype=float))
    d = J.shape[0]
    if J.shape != (d, d) or d > 4:
        raise ValueError(f"charpoly eigensolver limited to square dim <= 4, got {J.shape}")
    return _poly_roots(_charpoly_coeffs(J))


def spectrum_is_real_simple(values: np.ndarray, gap_tol: float = DEFAULT_GAP_TOL):
    """Check all-real eigenvalues with pairwise distinct absolute values.

    Returns ``(ok, min_gap)`` where ``min_gap`` is the minimal relative
    modulus gap between consecutive sorted moduli (infinity for dim 1).
    """
    values = np.asarray(values, dtype=complex)
    mods = np.abs(values)
    scale = np.maximum(mods, 1e-300)
    if np.any(np.abs(values.imag) > gap_tol * scale):
        return False, 0.0
    order = np.argsort(mods)[::-1]
    sorted_mods = mods[order]
    min_gap = math.inf
    ok = True
    for i in range(len(sorted_mods) - 1):
        gap = (sorted_mods[i] - sorted_mods[i + 1]) / max(sorted_mods[i], 1e-300)
        min_gap = min(min_gap, gap)
        if gap <= gap_tol:
            ok = False
    return ok, min_gap


def has_real_simple_spectrum(J: np.ndarray, gap_tol: float = DEFAULT_GAP_TOL):
    """Real-and-simple test for a matrix; returns (ok, min relative gap)."""
    return spectrum_is_real_simple(eigenvalues(J), gap_tol)


def sqrtm_spd_2x2(S: np.ndarray) -> np.ndarray:
    """Principal square root of a symmetric positive-definite 2x2 matrix."""
    det = float(np.linalg.det(S))
    tr = float(np.trace(S))
    if det <= 0 or tr <= 0:
        raise SingularMatrix("matrix is not positive definite")
    t = math.sqrt(det)
    return (S + t * np.eye(2)) / math.sqrt(tr + 2.0 * t)


def polar_decompose_2x2(M: np.ndarray):
    """Factor M = P * R_theta with P symmetric positive-definite, det M > 0.

    Returns ``(P, theta)`` with theta in turns.
    """
    M = np.asarray(M, dtype=float)
    if M.shape != (2, 2):
        raise ValueError(f"polar decomposition needs a 2x2 matrix, got {M.shape}")
    det = float(np.linalg.det(M))
    if abs(det) < _singular_threshold(M):
        raise SingularMatrix(f"determinant {det:g} below scale threshold")
    if det < 0:
        raise NegativeDeterminant(f"determinant {det:g} < 0: reflection case")
    P = sqrtm_spd_2x2(M @ M.T)
    R = np.linalg.solve(P, M)
    theta = math.atan2(R[1, 0], R[0, 0]) / (2.0 * math.pi)
    return P, theta % 1.0


def max_real_simple_angle(P: np.ndarray) -> float:
    """Largest rotation margin keeping P * R_eps real and simple.

    For symmetric positive-definite P with distinct eigenvalues, returns
    eps_hat = arccos(2 sqrt(det P) / tr P) / (2 pi); every |eps| < eps_hat
    gives tr(P R_eps)^2 > 4 det(P R_eps), hence real simple eigenvalues.
    """
    P = np.asarray(P, dtype=float)
    if P.shape != (2, 2) or abs(P[0, 1] - P[1, 0]) > 1e-9 * max(1.0, op_norm(P)):
        raise ValueError("expected a symmetric 2x2 matrix")
    det = float(np.linalg.det(P))
    tr = float(np.trace(P))
    if det <= 0 or tr <= 0:
        raise SingularMatrix("matrix is not positive definite")
    c = 2.0 * math.sqrt(det) / tr
    if c >= 1.0 - 1e-12:
        raise DegeneratePolar("equal eigenvalues: zero rotation margin")
    return math.acos(c) / (2.0 * math.pi)


def matrix_power_checked(M: np.ndarray, n: int) -> np.ndarray:
    """M^n by binary powering with an overflow guard on the running norm."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if n < 0:
        raise ValueError("negative power; invert first")
    d = M.shape[0]
    result = np.eye(d)
    base = np.array(M, copy=True)
    e = n
    with np.errstate(over="ignore", invalid="ignore"):
        while e:
            if e & 1:
                result = result @ base
                if not np.all(np.isfinite(result)) or np.abs(result).max() > _OVERFLOW_NORM:
                    raise PowerOverflow(f"power {n} overflows the representable range")
            e >>= 1
            if e:
                base = base @ base
                if not np.all(np.isfinite(base)) or np.abs(base).max() > _OVERFLOW_NORM:
                    raise PowerOverflow(f"power {n} overflows the representable range")
    return result


def match_spectra(a, b) -> float:
    """Maximal relative mismatch of two multisets of complex values.

    Uses optimal assignment on pairwise distances, so conjugate pairs and
    modulus ties are paired correctly.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError(f"spectra of different sizes: {a.shape} vs {b.shape}")
    scale = np.maximum(np.abs(b)[None, :], 1e-300)
    cost = np.abs(a[:, None] - b[None, :]) / scale
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


def signed_fraction(x) -> np.ndarray:
    """Reduce to the symmetric unit interval [-1/2, 1/2)."""
    return np.asarray((np.asarray(x) + 0.5) % 1.0 - 0.5)


def phase_mod1(theta: float, n, offset: float = 0.0) -> np.ndarray:
    """(n * theta + offset) mod 1 with compensated reduction.

    ``n`` may be a scalar or an integer array; exact for |n| < 2**26 up to
    ~1e-11 absolute error, as required for scans up to n ~ 1e5.
    """
    n = np.asarray(n, dtype=float)
    hi = math.floor(theta * 2.0 ** 26) / 2.0 ** 26
    lo = theta - hi
    return ((n * hi) % 1.0 + n * lo + offset % 1.0) % 1.0
