"""Recursive spectrum decomposition and arithmetic-progression search.

The spectrum of L_k T^n factors through a chain of dominated splits: stage j
splits the current kappa_j-dimensional matrix against the tail model
diag[T_j : ... : T_m] into a conjugated top block X^(j) and a remainder that
feeds stage j+1.  Parameters (per-stage closeness radii, ball radii, index
thresholds) are chosen once per instance by backward induction from the
target accuracy eps0; decomposition at a concrete (k, n) then certifies

    spectrum(L_k T^n) = union_j spectrum(X^(j) T_j^n)

with every X^(j) within eps0 of its n-independent limit.  On 2x2 rotation
levels the limit's polar angle opens an explicit phase window inside which
X^(j) T_j^n has real simple eigenvalues, which drives the subsequence
search for exponents where the whole product has real simple spectrum.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .blocks import BlockStructure, d_chain, split_blocks
from .errors import (
    CertificateFailure,
    ConditionError,
    ConditionFailure,
    DegeneratePolar,
    EpsilonTooLarge,
    NegativeDeterminant,
    NumericError,
    SearchExhausted,
    SingularMatrix,
    StageFailure,
)
from .graph_transform import (
    SplitProblem,
    TransformConstants,
    derive_constants,
    solve_eta,
    solve_xi,
)
from .linalg import (
    eigenvalues,
    invert,
    max_real_simple_angle,
    op_norm,
    phase_mod1,
    polar_decompose_2x2,
    rotation_matrix,
    signed_fraction,
)
from .model import DiagonalModel, DiagonalPowers
from .oracle import ScaledSpectrum, match_scaled, product_spectrum, spread_digits
from .scenario import InstanceSpec, check_L_conditions

DEFAULT_MARGIN_FACTOR = 0.05
ORACLE_DIGIT_BUDGET = 30_000.0
_ORACLE_MATCH_TOL = 1e-6


@dataclass(frozen=True)
class PolarRef:
    """Limit polar data of a 2x2 level: window or direct-route marker."""

    level: int
    det_positive: bool
    P: Optional[np.ndarray] = None
    alpha: Optional[float] = None
    eps_hat: Optional[float] = None


@dataclass(eq=False)
class CascadeStage:
    """One prepared dominated split of the chain."""

    j: int
    problem: SplitProblem
    constants: TransformConstants
    delta: float
    limit: np.ndarray  # n-independent limit of X^(j)


@dataclass(eq=False)
class ParameterCascade:
    """All per-instance parameters fixed before any (k, n) is touched."""

    eps0: float
    stages: tuple
    limits: tuple  # per level 1..m
    polar_refs: dict
    n0: int
    k0: int
    margin_factor: float

    @property
    def m(self) -> int:
        return len(self.limits)


@dataclass(eq=False)
class LevelData:
    j: int
    X: np.ndarray
    spectrum: ScaledSpectrum
    det: float
    drift: float
    polar: Optional[tuple] = None  # (P, alpha) when det > 0
    eps_hat: Optional[float] = None


@dataclass(eq=False)
class CascadeResult:
    n: int
    levels: list
    limits_ok: bool
    domination_ok: bool
    domination_margin: float

    @property
    def spectrum(self) -> ScaledSpectrum:
        out = self.levels[0].spectrum
        for lv in self.levels[1:]:
            out = out.concat(lv.spectrum)
        return out

    @property
    def drifts(self) -> list:
        return [lv.drift for lv in self.levels]


@dataclass(eq=False)
class CertifiedSplit:
    X: np.ndarray
    Y: np.ndarray
    xi: np.ndarray
    eta: np.ndarray
    checks: dict


def _split_once(problem: SplitProblem, J: np.ndarray, n: int, delta: float):
    """Apply one split: (X, Y, xi, eta) with closeness checks, no big powers."""
    xi = solve_xi(problem, J, n)
    eta = solve_eta(problem, J, n)
    A, B, _, _ = split_blocks(J, problem.k1)
    Ji = invert(J)
    _, _, Ci, Di = split_blocks(Ji, problem.k1)
    X = A + B @ problem.powers.dvn_u_avmn(xi, n)
    core = Ci @ eta + Di  # Y^{-1}
    Y = invert(core)

    A0, _, _, _ = split_blocks(problem.J0, problem.k1)
    _, _, _, D0i = split_blocks(invert(problem.J0), problem.k1)
    x_drift = op_norm(X - A0)
    y_drift = op_norm(core - D0i)
    if x_drift >= delta:
        raise CertificateFailure(
            f"top block drifts {x_drift:.3g} >= delta {delta:.3g}", item=3
        )
    if y_drift >= delta:
        raise CertificateFailure(
            f"inverse bottom block drifts {y_drift:.3g} >= delta {delta:.3g}", item=4
        )
    return X, Y, xi, eta, {"x_drift": x_drift, "y_drift": y_drift}


def certified_split(problem: SplitProblem, J: np.ndarray, n: int,
                  constants: Optional[TransformConstants] = None,
                  check_domination: bool = True) -> CertifiedSplit:
    """Single-level split: spectrum(J V^n) = spectrum(X A(V)^n) + spectrum(Y D(V)^n).

    X stays delta-close to A(J0) and Y^{-1} to D(J0^{-1}); when requested,
    the two halves are also checked to be strictly separated in modulus.
    """
    if constants is None:
        constants = derive_constants(problem)
    J = np.asarray(J, dtype=float)
    dist = op_norm(J - problem.J0)
    if dist >= constants.beta:
        raise CertificateFailure(
            f"||J - J0|| = {dist:.3g} outside the beta ball {constants.beta:.3g}"
        )
    X, Y, xi, eta, checks = _split_once(problem, J, n, problem.delta)
    checks["beta_distance"] = dist
    if check_domination:
        top = np.abs(eigenvalues(X @ problem.powers.avn(n)))
        bottom = np.abs(eigenvalues(Y @ problem.powers.dvn(n)))
        margin = float(top.min() - bottom.max())
        checks["domination_margin"] = margin
        if margin <= 0:
            raise CertificateFailure("split halves fail strict modulus domination")
    return CertifiedSplit(X=X, Y=Y, xi=xi, eta=eta, checks=checks)


def choose_parameters(model: DiagonalModel, L: np.ndarray, eps0: float,
                      law=None, margin_factor: float = DEFAULT_MARGIN_FACTOR) -> ParameterCascade:
    """Backward induction of per-stage radii from the target accuracy.

    Stage m-1 must deliver a remainder whose inverse is eps0-close to the
    last limit; each earlier stage must deliver a remainder inside the next
    stage's ball.  Inversion is controlled through the Neumann bound
    ||W'^-1 - W^-1|| <= 2 ||W^-1||^2 ||W' - W|| on the half-margin ball, so
    delta_j = min(upper, 1/(2r), target/(2 r^2)) / 2 with r the norm of the
    next limit's defining inverse.
    """
    structure = model.structure
    m = structure.m
    if eps0 <= 0:
        raise ValueError(f"eps0 must be positive, got {eps0}")
    L = np.asarray(L, dtype=float)
    report = check_L_conditions(L, structure)
    if not report.passed:
        raise ConditionFailure(f"L fails genericity conditions: {report.failures()}")
    Li = invert(L)

    J0s = [invert(d_chain(Li, structure, j - 1)) for j in range(1, m + 1)]
    limits = [J0s[j - 1][: structure.sizes[j - 1], : structure.sizes[j - 1]]
              for j in range(1, m)]
    limits.append(J0s[m - 1])

    stages_rev = []
    next_beta = None
    next_delta = None
    for j in range(m - 1, 0, -1):
        target = eps0 if j == m - 1 else next_beta
        upper = eps0 if j == m - 1 else next_delta
        r = op_norm(J0s[j])  # norm of (D^(j) iota(L))^{-1}
        delta_j = 0.5 * min(upper, 1.0 / (2.0 * r), target / (2.0 * r * r))
        tail = model.tail(j)
        problem = SplitProblem(
            V=tail.matrix(),
            J0=J0s[j - 1],
            k1=structure.sizes[j - 1],
            k2=structure.kappa_at(j + 1),
            delta=delta_j,
            powers=DiagonalPowers(tail),
        )
        constants = derive_constants(problem)
        stages_rev.append(
            CascadeStage(j=j, problem=problem, constants=constants,
                         delta=delta_j, limit=limits[j - 1])
        )
        next_beta = constants.beta
        next_delta = delta_j
    stages = tuple(reversed(stages_rev))

    n0 = max(st.constants.n0 for st in stages)
    k0 = 0
    if law is not None and law.c > 0:
        # smallest k with ||L_k - L|| <= ||L|| c rho^k safely inside the
        # first stage's ball
        budget = 0.9 * stages[0].constants.beta / (op_norm(L) * law.c)
        if budget < 1.0:
            k0 = int(math.ceil(math.log(budget) / math.log(law.rho)))

    polar_refs = {}
    for j in structure.rotation_indices:
        lam = limits[j - 1]
        det = float(np.linalg.det(lam))
        if det < 0:
            polar_refs[j] = PolarRef(level=j, det_positive=False)
            continue
        P, alpha = polar_decompose_2x2(lam)
        try:
            eps_hat = max_real_simple_angle(P)
        except DegeneratePolar as exc:
            raise EpsilonTooLarge(
                f"level {j} limit has no rotation margin: {exc}"
            ) from exc
        drift_cap = eps0 * op_norm(invert(lam)) / math.pi
        if eps_hat * (1.0 - margin_factor) <= drift_cap:
            raise EpsilonTooLarge(
                f"level {j}: eps0 = {eps0:g} drifts the phase by up to "
                f"{drift_cap:.3g} turns against a window of {eps_hat:.3g}; shrink eps0"
            )
        polar_refs[j] = PolarRef(level=j, det_positive=True, P=P,
                                 alpha=alpha, eps_hat=eps_hat)

    return ParameterCascade(
        eps0=eps0, stages=stages, limits=tuple(limits),
        polar_refs=polar_refs, n0=n0, k0=k0, margin_factor=margin_factor,
    )


def _level_data(j: int, X: np.ndarray, n: int, model: DiagonalModel,
                limit: np.ndarray) -> LevelData:
    blk = model.block(j)
    log_scale = n * math.log(blk.modulus)
    drift = op_norm(X - limit)
    if blk.size == 1:
        sign = -1.0 if (blk.value < 0 and n % 2 == 1) else 1.0
        spec = ScaledSpectrum.from_values(
            np.array([complex(X[0, 0] * sign)]), log_scale=log_scale
        )
        return LevelData(j=j, X=X, spectrum=spec, det=float(X[0, 0]), drift=drift)
    phase = float(phase_mod1(blk.theta, n))
    unit_part = X @ rotation_matrix(phase)
    spec = ScaledSpectrum.from_values(eigenvalues(unit_part), log_scale=log_scale)
    det = float(np.linalg.det(X))
    polar = None
    eps_hat = None
    if det > 0:
        try:
            P, alpha = polar_decompose_2x2(X)
            polar = (P, alpha)
            eps_hat = max_real_simple_angle(P)
        except (SingularMatrix, NegativeDeterminant, DegeneratePolar):
            polar = None
    return LevelData(j=j, X=X, spectrum=spec, det=det, drift=drift,
                     polar=polar, eps_hat=eps_hat)


def cascade_decompose(L_k: np.ndarray, n: int, model: DiagonalModel,
                      cascade: ParameterCascade) -> CascadeResult:
    """Run the full chain at one (L_k, n); certify limits and domination."""
    current = np.asarray(L_k, dtype=float)
    if current.shape != (model.d, model.d):
        raise ValueError(f"matrix must be {model.d}x{model.d}, got {current.shape}")
    levels = []
    for stage in cascade.stages:
        dist = op_norm(current - stage.problem.J0)
        if dist >= stage.constants.beta:
            raise StageFailure(
                f"stage {stage.j}: input outside the beta ball "
                f"({dist:.3g} >= {stage.constants.beta:.3g})",
                stage=stage.j,
            )
        if n < stage.constants.n0:
            raise StageFailure(
                f"stage {stage.j}: exponent {n} below threshold {stage.constants.n0}",
                stage=stage.j,
            )
        try:
            X, Y, _, _, _ = _split_once(stage.problem, current, n, stage.delta)
        except (NumericError, ConditionError) as exc:
            raise StageFailure(f"stage {stage.j}: {exc}", stage=stage.j, cause=exc) from exc
        levels.append(_level_data(stage.j, X, n, model, stage.limit))
        current = Y
    m = cascade.m
    levels.append(_level_data(m, current, n, model, cascade.limits[m - 1]))

    limits_ok = all(lv.drift < cascade.eps0 for lv in levels)
    margin = math.inf
    for a, b in zip(levels, levels[1:]):
        margin = min(margin, float(a.spectrum.log_mod.min() - b.spectrum.log_mod.max()))
    return CascadeResult(
        n=n, levels=levels, limits_ok=limits_ok,
        domination_ok=margin > 0, domination_margin=margin,
    )


def stage_input(L_k: np.ndarray, n: int, cascade: ParameterCascade, j: int) -> np.ndarray:
    """The matrix entering stage j: L_k itself for j=1, else the chained remainder."""
    if not 1 <= j <= len(cascade.stages):
        raise ValueError(f"stage {j} out of range 1..{len(cascade.stages)}")
    current = np.asarray(L_k, dtype=float)
    for stage in cascade.stages[: j - 1]:
        try:
            _, current, _, _, _ = _split_once(stage.problem, current, n, stage.delta)
        except (NumericError, ConditionError) as exc:
            raise StageFailure(f"stage {stage.j}: {exc}", stage=stage.j, cause=exc) from exc
    return current


def polar_forms(result: CascadeResult) -> dict:
    """Per-rotation-level polar data (P, alpha) or the direct-route marker."""
    out = {}
    for lv in result.levels:
        if lv.X.shape == (2, 2):
            out[lv.j] = {"det": lv.det, "polar": lv.polar, "eps_hat": lv.eps_hat}
    return out


def rotation_phase(model: DiagonalModel, result: CascadeResult, j: int) -> float:
    """Signed total phase of level j at the result's exponent.

    This is (alpha_j + n theta_j) mod 1 reduced to [-1/2, 1/2); the level's
    unit part is P_j R applied through this angle, so real simple spectrum
    holds exactly when it beats the polar margin.
    """
    lv = next((l for l in result.levels if l.j == j), None)
    if lv is None or lv.polar is None:
        raise ValueError(f"level {j} carries no rotation phase")
    theta = model.block(j).theta
    return float(signed_fraction(phase_mod1(theta, result.n, offset=lv.polar[1])))


@dataclass(eq=False)
class HitRecord:
    n: int
    exponent: int
    phases: dict
    spectrum: ScaledSpectrum
    min_gap: float
    oracle_checked: bool
    oracle_mismatch: Optional[float] = None


@dataclass(eq=False)
class SearchResult:
    hits: list
    examined: int
    prefilter_pass: int
    near_misses: list
    rows: list = field(default_factory=list)


def _csv_rows_header(structure: BlockStructure) -> list:
    header = ["n"]
    header += [f"phase_{j}" for j in structure.rotation_indices]
    for i in range(structure.d):
        header += [f"eig{i}_re", f"eig{i}_im"]
    header += ["min_gap", "accepted"]
    return header


def _spectrum_row(spec: ScaledSpectrum) -> list:
    vals = spec.unit * np.exp(np.clip(spec.log_mod, -700.0, 700.0))
    order = np.argsort(spec.log_mod)[::-1]
    out = []
    for v in vals[order]:
        out += [float(v.real), float(v.imag)]
    return out


def _examine(n: int, instance: InstanceSpec, cascade: ParameterCascade,
             gap_tol: float):
    """Evaluate one candidate exponent; returns (hit_or_none, row, miss_or_none)."""
    model = instance.model
    N = instance.a * n + instance.b
    structure = model.structure
    blank = [""] * (2 * structure.d)
    try:
        result = cascade_decompose(instance.L_n(n), N, model, cascade)
    except StageFailure as exc:
        row = [n] + [""] * len(structure.rotation_indices) + blank + ["", 0]
        return None, row, (n, f"stage {exc.stage}: {exc}")
    phases = {}
    for j in structure.rotation_indices:
        try:
            phases[j] = rotation_phase(model, result, j)
        except ValueError:
            phases[j] = math.nan
    spec = result.spectrum
    ok, min_gap = spec.real_simple(gap_tol)
    ok = ok and result.limits_ok and result.domination_ok
    row = ([n] + [phases[j] for j in structure.rotation_indices]
           + _spectrum_row(spec) + [min_gap, int(ok)])
    if not ok:
        reason = ("spectrum not real simple" if result.limits_ok and result.domination_ok
                  else "limits or domination violated")
        return None, row, (n, f"{reason} (min_gap {min_gap:.3g})")

    oracle_checked = False
    mismatch = None
    if spread_digits(model, N) <= ORACLE_DIGIT_BUDGET:
        reference = product_spectrum(instance.L_n(n), model, N)
        mismatch = match_scaled(spec, reference)
        oracle_checked = True
        ref_ok, ref_gap = reference.real_simple(gap_tol)
        if mismatch > _ORACLE_MATCH_TOL or not ref_ok:
            row[-1] = 0
            return None, row, (
                n,
                f"oracle disagrees (mismatch {mismatch:.3g}, gap {ref_gap:.3g})",
            )
    hit = HitRecord(n=n, exponent=N, phases=phases, spectrum=spec,
                    min_gap=min_gap, oracle_checked=oracle_checked,
                    oracle_mismatch=mismatch)
    return hit, row, None


def find_subsequence(instance: InstanceSpec, cascade: ParameterCascade,
                     count: int = 3, n_max: int = 100_000,
                     gap_tol: float = 1e-9,
                     csv_path: Optional[str] = None) -> SearchResult:
    """Scan the progression a n + b for real-simple-spectrum exponents.

    A vectorized limit-phase prefilter keeps only exponents whose rotation
    phases (predicted from the limit polar angles) fall inside the
    real-simple windows; survivors are decomposed exactly and confirmed
    against the dense oracle when the modulus spread allows it.  Raises
    SearchExhausted (with the near misses) when fewer than ``count`` hits
    exist below ``n_max``.
    """
    model = instance.model
    structure = model.structure
    n_start = max(cascade.n0, cascade.k0, 1)
    if n_start > n_max:
        raise SearchExhausted(
            f"scan floor {n_start} already beyond the cap {n_max}"
        )
    ns = np.arange(n_start, n_max + 1, dtype=np.int64)
    exps = instance.a * ns + instance.b
    mask = np.ones(len(ns), dtype=bool)
    for j, ref in cascade.polar_refs.items():
        if not ref.det_positive:
            continue  # opposite-sign real pair at every exponent
        theta = model.block(j).theta
        margin = cascade.margin_factor * ref.eps_hat
        ph = signed_fraction(phase_mod1(theta, exps, offset=ref.alpha))
        mask &= np.abs(ph) < (ref.eps_hat - margin)
    candidates = ns[mask]

    hits = []
    near_misses = []
    rows = []
    examined = 0
    workers = max(1, int(os.environ.get("SPECTRAL_CASCADE_THREADS", "1") or "1"))
    try:
        chunk = max(4 * workers, 4)
        for start in range(0, len(candidates), chunk):
            batch = [int(x) for x in candidates[start : start + chunk]]
            if workers > 1:
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    outcomes = list(
                        pool.map(lambda n: _examine(n, instance, cascade, gap_tol), batch)
                    )
            else:
                outcomes = (_examine(n, instance, cascade, gap_tol) for n in batch)
            for hit, row, miss in outcomes:
                examined += 1
                rows.append(row)
                if miss is not None:
                    near_misses.append(miss)
                if hit is not None:
                    hits.append(hit)
                if len(hits) >= count:
                    break
            if len(hits) >= count:
                break
    finally:
        if csv_path is not None:
            with open(csv_path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(_csv_rows_header(structure))
                writer.writerows(rows)

    if len(hits) < count:
        raise SearchExhausted(
            f"found {len(hits)} of {count} exponents below {n_max} "
            f"({len(candidates)} window candidates, {examined} examined)",
            near_misses=near_misses[-20:],
        )
    return SearchResult(hits=hits, examined=examined,
                        prefilter_pass=int(len(candidates)),
                        near_misses=near_misses, rows=rows)


@dataclass(eq=False)
class ProveReport:
    instance: InstanceSpec
    cascade: ParameterCascade
    search: SearchResult

    @property
    def exponents(self) -> list:
        return [h.exponent for h in self.search.hits]


def prove_instance(instance: InstanceSpec, eps0: float = 1e-3,
                   count: int = 3, n_max: int = 100_000,
                   gap_tol: float = 1e-9,
                   csv_path: Optional[str] = None) -> ProveReport:
    """End to end: parameters, then the certified subsequence search."""
    cascade = choose_parameters(instance.model, instance.L, eps0, law=instance.law)
    search = find_subsequence(instance, cascade, count=count, n_max=n_max,
                              gap_tol=gap_tol, csv_path=csv_path)
    return ProveReport(instance=instance, cascade=cascade, search=search)
