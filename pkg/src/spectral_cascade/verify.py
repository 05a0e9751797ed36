"""Independent re-validation of saved artifacts.

Each artifact kind is checked from scratch: instances against the
genericity and independence conditions, split certificates against
recomputed residuals and rederived constants, decomposition results and
subsequence reports by rerunning the decomposition and comparing against
the dense oracle where the modulus spread allows.
"""

from __future__ import annotations

import math

import numpy as np

from . import serialize
from .cascade import ORACLE_DIGIT_BUDGET, cascade_decompose, choose_parameters
from .errors import SpectralCascadeError, VerificationFailure
from .graph_transform import derive_constants, verify_certificate
from .linalg import op_norm
from .oracle import ScaledSpectrum, match_scaled, product_spectrum, spread_digits
from .scenario import check_angle_independence, check_L_conditions

_MATCH_TOL = 1e-8
_ORACLE_TOL = 1e-6


def _fail(msg: str):
    raise VerificationFailure(msg)


def _verify_instance(obj) -> dict:
    spec = serialize.instance_from_json(obj)
    report = check_L_conditions(spec.L, spec.model.structure)
    if not report.passed:
        _fail(f"instance violates conditions: {report.failures()}")
    angles = list(spec.model.rotation_angles.values())
    if angles:
        check_angle_independence(angles)
    return {"kind": obj["kind"], "passed": True,
            "conditions": [(ln.name, ln.margin) for ln in report.lines]}


def _verify_split_certificate(obj) -> dict:
    cert, problem = serialize.certificate_from_json(obj)
    fresh = derive_constants(problem)
    for name in ("alpha", "beta", "gamma", "rho"):
        stored = float(getattr(cert.constants, name))
        val = float(getattr(fresh, name))
        if abs(stored - val) > 1e-9 * max(1.0, abs(val)):
            _fail(f"constant {name} does not rederive: {stored} vs {val}")
    dist = op_norm(cert.J - problem.J0)
    if dist >= fresh.beta:
        _fail(f"certified J lies outside the beta ball ({dist:.3g})")
    if cert.n < fresh.n0_plus:
        _fail(f"certified n={cert.n} below threshold {fresh.n0_plus}")
    report = verify_certificate(cert, problem)
    if not report["passed"]:
        bad = [k for k, v in report.items() if isinstance(v, dict) and not v["passed"]]
        _fail(f"certificate bounds fail: {bad}")
    return {"kind": obj["kind"], "passed": True, "report": report}


def _verify_cascade_result(obj) -> dict:
    spec = serialize.instance_from_json(obj["instance"])
    cascade = choose_parameters(spec.model, spec.L, float(obj["eps0"]), law=spec.law)
    k, n = int(obj["k"]), int(obj["n"])
    result = cascade_decompose(spec.L_n(k), n, spec.model, cascade)
    if len(result.levels) != len(obj["levels"]):
        _fail("level count mismatch")
    for lv, stored in zip(result.levels, obj["levels"]):
        X0 = serialize.matrix_from_json(stored["X"])
        if op_norm(lv.X - X0) > _MATCH_TOL * max(1.0, op_norm(X0)):
            _fail(f"level {lv.j} block does not recompute")
        mism = match_scaled(lv.spectrum, serialize.spectrum_from_json(stored["spectrum"]))
        if mism > _MATCH_TOL:
            _fail(f"level {lv.j} spectrum mismatch {mism:.3g}")
    if bool(obj["limits_ok"]) != result.limits_ok:
        _fail("limit-drift flag does not recompute")
    if bool(obj["domination_ok"]) != result.domination_ok:
        _fail("domination flag does not recompute")
    oracle_mismatch = None
    if spread_digits(spec.model, n) <= ORACLE_DIGIT_BUDGET:
        oracle_mismatch = match_scaled(result.spectrum, product_spectrum(spec.L_n(k), spec.model, n))
        if oracle_mismatch > _ORACLE_TOL:
            _fail(f"decomposed spectrum disagrees with the oracle ({oracle_mismatch:.3g})")
    return {"kind": obj["kind"], "passed": True, "oracle_mismatch": oracle_mismatch}


def _verify_prove_report(obj) -> dict:
    spec = serialize.instance_from_json(obj["instance"])
    cascade = choose_parameters(spec.model, spec.L, float(obj["eps0"]), law=spec.law)
    if cascade.n0 != int(obj["n0"]) or cascade.k0 != int(obj["k0"]):
        _fail("scan thresholds n0/k0 do not rederive")
    if not obj["hits"]:
        _fail("report carries no exponents")
    checked = []
    for hit in obj["hits"]:
        n, N = int(hit["n"]), int(hit["exponent"])
        if N != spec.a * n + spec.b:
            _fail(f"exponent {N} is off the progression at index {n}")
        result = cascade_decompose(spec.L_n(n), N, spec.model, cascade)
        if not (result.limits_ok and result.domination_ok):
            _fail(f"hit n={n}: limits or domination fail on recompute")
        ok, gap = result.spectrum.real_simple(1e-9)
        if not ok:
            _fail(f"hit n={n}: spectrum not real simple on recompute (gap {gap:.3g})")
        stored_gap = float(hit["min_gap"])
        if abs(gap - stored_gap) > 1e-6 * max(1.0, abs(stored_gap)):
            _fail(f"hit n={n}: stored gap {stored_gap} does not recompute ({gap})")
        mism = match_scaled(result.spectrum, serialize.spectrum_from_json(hit["spectrum"]))
        if mism > _MATCH_TOL:
            _fail(f"hit n={n}: stored spectrum mismatch {mism:.3g}")
        if spread_digits(spec.model, N) <= ORACLE_DIGIT_BUDGET:
            om = match_scaled(result.spectrum, product_spectrum(spec.L_n(n), spec.model, N))
            if om > _ORACLE_TOL:
                _fail(f"hit n={n}: oracle mismatch {om:.3g}")
        checked.append(N)
    return {"kind": obj["kind"], "passed": True, "exponents": checked}


_DISPATCH = {
    serialize.KIND_INSTANCE: _verify_instance,
    serialize.KIND_SPLIT_CERT: _verify_split_certificate,
    serialize.KIND_CASCADE: _verify_cascade_result,
    serialize.KIND_PROVE: _verify_prove_report,
}


def verify_artifact(obj: dict) -> dict:
    """Dispatch on the artifact kind; raises VerificationFailure on any defect."""
    kind = obj.get("kind")
    if kind not in _DISPATCH:
        _fail(f"unknown artifact kind {kind!r}")
    try:
        return _DISPATCH[kind](obj)
    except VerificationFailure:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise VerificationFailure(f"malformed {kind} artifact: {exc}") from exc
    except SpectralCascadeError as exc:
        raise VerificationFailure(f"{kind} artifact fails revalidation: {exc}") from exc
