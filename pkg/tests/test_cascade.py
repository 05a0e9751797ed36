import csv
import math

import numpy as np
import pytest

import spectral_cascade as sc
from spectral_cascade.cascade import (
    cascade_decompose,
    choose_parameters,
    find_subsequence,
    certified_split,
    polar_forms,
    prove_instance,
    rotation_phase,
    stage_input,
)
from spectral_cascade.errors import (
    CertificateFailure,
    ConditionFailure,
    EpsilonTooLarge,
    SearchExhausted,
    StageFailure,
)
from spectral_cascade.linalg import op_norm, signed_fraction
from spectral_cascade.oracle import match_scaled, product_spectrum


def test_choose_parameters_orders_radii(demo_cascade):
    deltas = [st.delta for st in demo_cascade.stages]
    assert all(d1 < d2 for d1, d2 in zip(deltas, deltas[1:]))
    assert deltas[-1] < demo_cascade.eps0
    betas = [st.constants.beta for st in demo_cascade.stages]
    # each stage's output tolerance fits inside the next stage's ball
    for j in range(len(deltas) - 1):
        r = op_norm(np.linalg.inv(demo_cascade.stages[j + 1].problem.J0))
        assert 2.0 * r * r * deltas[j] <= betas[j + 1]


def test_choose_parameters_rejects_bad_inputs(demo_instance):
    with pytest.raises(ValueError):
        choose_parameters(demo_instance.model, demo_instance.L, -1.0)
    with pytest.raises(ConditionFailure):
        choose_parameters(demo_instance.model, np.zeros((5, 5)), 1e-3)
    with pytest.raises(EpsilonTooLarge):
        choose_parameters(demo_instance.model, demo_instance.L, 0.5)


def test_cascade_matches_oracle(demo_instance, demo_cascade):
    spec, casc = demo_instance, demo_cascade
    for n in (casc.n0, casc.n0 + 7):
        res = cascade_decompose(spec.L_n(casc.k0), n, spec.model, casc)
        assert res.limits_ok and res.domination_ok
        ref = product_spectrum(spec.L_n(casc.k0), spec.model, n)
        assert match_scaled(res.spectrum, ref) < 1e-8


def test_cascade_drifts_shrink_with_n(demo_instance, demo_cascade):
    spec, casc = demo_instance, demo_cascade
    early = cascade_decompose(spec.L, casc.n0, spec.model, casc)
    late = cascade_decompose(spec.L, casc.n0 + 30, spec.model, casc)
    assert max(late.drifts) < max(early.drifts)


def test_cascade_rejects_outside_ball(demo_instance, demo_cascade):
    far = demo_instance.L + np.ones((5, 5))
    with pytest.raises(StageFailure) as exc:
        cascade_decompose(far, demo_cascade.n0, demo_instance.model, demo_cascade)
    assert exc.value.stage == 1


def test_cascade_rejects_small_n(demo_instance, demo_cascade):
    with pytest.raises(StageFailure):
        cascade_decompose(demo_instance.L, 1, demo_instance.model, demo_cascade)


def test_certified_split_halves_carry_spectrum(demo_instance, demo_cascade):
    spec, casc = demo_instance, demo_cascade
    stage = casc.stages[0]
    n = casc.n0 + 1
    res = certified_split(stage.problem, spec.L, n, stage.constants)
    assert res.checks["x_drift"] < stage.delta
    assert res.checks["domination_margin"] > 0
    top = np.linalg.eigvals(res.X @ stage.problem.powers.avn(n))
    bottom = np.linalg.eigvals(res.Y @ stage.problem.powers.dvn(n))
    full = np.linalg.eigvals(spec.L @ spec.model.power(n))
    got = np.sort_complex(np.concatenate([top, bottom]))
    np.testing.assert_allclose(got, np.sort_complex(full), rtol=1e-8, atol=1e-12)


def test_certified_split_rejects_far_J(demo_instance, demo_cascade):
    stage = demo_cascade.stages[0]
    with pytest.raises(CertificateFailure):
        certified_split(stage.problem, demo_instance.L + 0.5, demo_cascade.n0 + 1,
                      stage.constants)


def test_stage_input_chains(demo_instance, demo_cascade):
    spec, casc = demo_instance, demo_cascade
    n = casc.n0 + 2
    assert np.array_equal(stage_input(spec.L, n, casc, 1), spec.L)
    deeper = stage_input(spec.L, n, casc, 2)
    assert deeper.shape == (4, 4)
    assert op_norm(deeper - casc.stages[1].problem.J0) < casc.stages[1].constants.beta


def test_polar_forms_and_rotation_phase(demo_instance, demo_cascade):
    spec, casc = demo_instance, demo_cascade
    n = casc.n0 + 3
    res = cascade_decompose(spec.L, n, spec.model, casc)
    forms = polar_forms(res)
    assert set(forms) == {2, 3}
    for j, info in forms.items():
        assert info["det"] > 0
        P, alpha = info["polar"]
        np.testing.assert_allclose(P, P.T, atol=1e-12)
        phase = rotation_phase(spec.model, res, j)
        assert -0.5 <= phase < 0.5
        # the phase decides realness of that level's unit-part spectrum
        level = next(lv for lv in res.levels if lv.j == j)
        is_real = np.abs(level.spectrum.unit.imag).max() < 1e-9
        assert is_real == (abs(phase) < info["eps_hat"])


def test_find_subsequence_hits_verify(demo_instance, demo_cascade, tmp_path):
    csv_path = tmp_path / "scan.csv"
    res = find_subsequence(demo_instance, demo_cascade, count=2, n_max=20_000,
                           csv_path=str(csv_path))
    assert len(res.hits) == 2
    for h in res.hits:
        assert h.oracle_checked and h.oracle_mismatch < 1e-6
        assert h.min_gap >= 1e-9
        ok, _ = h.spectrum.real_simple()
        assert ok
    with open(csv_path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0][0] == "n"
    assert rows[0][-1] == "accepted"
    assert len(rows) == res.examined + 1


def test_find_subsequence_exhausts(demo_instance, demo_cascade):
    with pytest.raises(SearchExhausted):
        find_subsequence(demo_instance, demo_cascade, count=3,
                         n_max=demo_cascade.n0 + 2)


def test_prove_instance_end_to_end():
    spec = sc.generate_instance((1, 2), seed=99, a=2, b=1)
    report = prove_instance(spec, eps0=1e-3, count=3, n_max=50_000)
    assert len(report.exponents) == 3
    for h in report.search.hits:
        assert h.exponent == 2 * h.n + 1


def test_threads_env_gives_same_hits(demo_instance, demo_cascade, monkeypatch):
    base = find_subsequence(demo_instance, demo_cascade, count=2, n_max=20_000)
    monkeypatch.setenv("SPECTRAL_CASCADE_THREADS", "4")
    threaded = find_subsequence(demo_instance, demo_cascade, count=2, n_max=20_000)
    assert [h.n for h in base.hits] == [h.n for h in threaded.hits]
