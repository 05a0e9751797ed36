"""JSON artifact formats.

Every artifact is a JSON object with a "kind" discriminator.  Matrices are
{"rows", "cols", "data"} with row-major nested lists; eigenvalues are stored
in split form (unit direction plus log10 modulus) so artifacts survive
products far outside float range.
"""

from __future__ import annotations

import dataclasses
import json
import math

import numpy as np

from .blocks import BlockStructure
from .cascade import CascadeResult, ProveReport, ParameterCascade
from .graph_transform import SplitCertificate, SplitProblem, TransformConstants
from .model import DiagonalModel, RotationBlock, ScalarBlock
from .oracle import ScaledSpectrum
from .scenario import InstanceSpec, PerturbationLaw

KIND_INSTANCE = "instance"
KIND_SPLIT_CERT = "split-certificate"
KIND_CASCADE = "cascade-result"
KIND_PROVE = "prove-report"

_LN10 = math.log(10.0)


def matrix_to_json(M) -> dict:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    return {"rows": int(M.shape[0]), "cols": int(M.shape[1]), "data": M.tolist()}


def matrix_from_json(obj) -> np.ndarray:
    M = np.asarray(obj["data"], dtype=float)
    if M.shape != (int(obj["rows"]), int(obj["cols"])):
        raise ValueError(
            f"matrix data shape {M.shape} disagrees with header "
            f"({obj['rows']}, {obj['cols']})"
        )
    return M


def _block_to_json(blk) -> dict:
    if isinstance(blk, ScalarBlock):
        return {"type": "scalar", "value": blk.value}
    return {"type": "rotation", "modulus": blk.modulus, "theta": blk.theta}


def _block_from_json(obj):
    if obj["type"] == "scalar":
        return ScalarBlock(float(obj["value"]))
    if obj["type"] == "rotation":
        return RotationBlock(float(obj["modulus"]), float(obj["theta"]))
    raise ValueError(f"unknown block type {obj['type']!r}")


def model_to_json(model: DiagonalModel) -> dict:
    return {
        "structure": list(model.structure.sizes),
        "T_blocks": [_block_to_json(b) for b in model.diag_blocks],
    }


def model_from_json(obj) -> DiagonalModel:
    structure = BlockStructure(tuple(int(s) for s in obj["structure"]))
    blocks = tuple(_block_from_json(b) for b in obj["T_blocks"])
    return DiagonalModel(structure, blocks)


def instance_to_json(spec: InstanceSpec) -> dict:
    out = {"kind": KIND_INSTANCE}
    out.update(model_to_json(spec.model))
    out["L"] = matrix_to_json(spec.L)
    out["law"] = {"c": spec.law.c, "rho": spec.law.rho, "seed": spec.law.seed}
    out["progression"] = {"a": spec.a, "b": spec.b}
    return out


def instance_from_json(obj) -> InstanceSpec:
    model = model_from_json(obj)
    law = obj["law"]
    prog = obj["progression"]
    return InstanceSpec(
        model=model,
        L=matrix_from_json(obj["L"]),
        law=PerturbationLaw(float(law["c"]), float(law["rho"]), int(law["seed"])),
        a=int(prog["a"]),
        b=int(prog["b"]),
    )


def spectrum_to_json(spec: ScaledSpectrum) -> dict:
    return {
        "unit_re": [float(x) for x in spec.unit.real],
        "unit_im": [float(x) for x in spec.unit.imag],
        "log10_mod": [float(x) / _LN10 for x in spec.log_mod],
    }


def spectrum_from_json(obj) -> ScaledSpectrum:
    unit = np.asarray(obj["unit_re"], dtype=float) + 1j * np.asarray(
        obj["unit_im"], dtype=float
    )
    return ScaledSpectrum(
        unit=unit, log_mod=np.asarray(obj["log10_mod"], dtype=float) * _LN10
    )


def certificate_to_json(cert: SplitCertificate, problem: SplitProblem) -> dict:
    return {
        "kind": KIND_SPLIT_CERT,
        "n": cert.n,
        "problem": {
            "V": matrix_to_json(problem.V),
            "J0": matrix_to_json(problem.J0),
            "k1": problem.k1,
            "k2": problem.k2,
            "delta": problem.delta,
        },
        "J": matrix_to_json(cert.J),
        "xi": matrix_to_json(cert.xi),
        "eta": matrix_to_json(cert.eta),
        "phi": matrix_to_json(cert.phi),
        "psi": matrix_to_json(cert.psi),
        "constants": dataclasses.asdict(cert.constants),
        "residuals": {k: float(v) for k, v in cert.residuals.items()},
        "bounds": {k: float(v) for k, v in cert.bounds.items()},
    }


def certificate_from_json(obj):
    p = obj["problem"]
    problem = SplitProblem(
        V=matrix_from_json(p["V"]),
        J0=matrix_from_json(p["J0"]),
        k1=int(p["k1"]),
        k2=int(p["k2"]),
        delta=float(p["delta"]),
    )
    constants = TransformConstants(**obj["constants"])
    cert = SplitCertificate(
        n=int(obj["n"]),
        J=matrix_from_json(obj["J"]),
        xi=matrix_from_json(obj["xi"]),
        eta=matrix_from_json(obj["eta"]),
        phi=matrix_from_json(obj["phi"]),
        psi=matrix_from_json(obj["psi"]),
        constants=constants,
        residuals=dict(obj["residuals"]),
        bounds=dict(obj["bounds"]),
    )
    return cert, problem


def cascade_result_to_json(result: CascadeResult, instance: InstanceSpec,
                           eps0: float, k: int) -> dict:
    levels = []
    for lv in result.levels:
        entry = {
            "j": lv.j,
            "X": matrix_to_json(lv.X),
            "det": lv.det,
            "drift": lv.drift,
            "spectrum": spectrum_to_json(lv.spectrum),
        }
        if lv.polar is not None:
            P, alpha = lv.polar
            entry["polar"] = {"P": matrix_to_json(P), "alpha": alpha,
                              "eps_hat": lv.eps_hat}
        levels.append(entry)
    return {
        "kind": KIND_CASCADE,
        "instance": instance_to_json(instance),
        "eps0": float(eps0),
        "k": int(k),
        "n": int(result.n),
        "levels": levels,
        "limits_ok": bool(result.limits_ok),
        "domination_ok": bool(result.domination_ok),
        "domination_margin": float(result.domination_margin),
    }


def prove_report_to_json(report: ProveReport, eps0: float) -> dict:
    hits = []
    for h in report.search.hits:
        hits.append(
            {
                "n": h.n,
                "exponent": h.exponent,
                "phases": {str(j): float(p) for j, p in h.phases.items()},
                "min_gap": float(h.min_gap),
                "spectrum": spectrum_to_json(h.spectrum),
                "oracle_checked": bool(h.oracle_checked),
                "oracle_mismatch": (
                    None if h.oracle_mismatch is None else float(h.oracle_mismatch)
                ),
            }
        )
    return {
        "kind": KIND_PROVE,
        "instance": instance_to_json(report.instance),
        "eps0": float(eps0),
        "n0": int(report.cascade.n0),
        "k0": int(report.cascade.k0),
        "examined": int(report.search.examined),
        "hits": hits,
    }


def save_artifact(path: str, obj: dict) -> None:
    if "kind" not in obj:
        raise ValueError("artifact must carry a 'kind' field")
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def load_artifact(path: str) -> dict:
    with open(path) as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ValueError(f"{path}: not an artifact (missing 'kind')")
    return obj
