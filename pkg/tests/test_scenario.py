import math

import numpy as np
import pytest

from spectral_cascade.blocks import BlockStructure
from spectral_cascade.errors import (
    ConditionFailure,
    IndependenceFailure,
    PerturbationExhausted,
    ResonanceFound,
)
from spectral_cascade.linalg import op_norm
from spectral_cascade.scenario import (
    InstanceSpec,
    PerturbationLaw,
    check_angle_independence,
    check_L_conditions,
    check_nonresonance,
    generate_instance,
    make_sequence_Ln,
    perturb_to_generic,
    random_model_T,
)


def test_law_validation_and_direction():
    with pytest.raises(ValueError):
        PerturbationLaw(-0.1, 0.5, 0)
    with pytest.raises(ValueError):
        PerturbationLaw(0.1, 1.0, 0)
    law = PerturbationLaw(0.05, 0.5, 7)
    G = law.direction(4)
    assert op_norm(G) == pytest.approx(1.0)
    np.testing.assert_array_equal(G, law.direction(4))  # deterministic


def test_sequence_converges_geometrically(demo_instance):
    spec = demo_instance
    base = spec.L
    gaps = [op_norm(make_sequence_Ln(spec, n) - base) for n in (0, 5, 10)]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < spec.law.c * spec.law.rho ** 10 * op_norm(base) * 1.01
    with pytest.raises(ValueError):
        make_sequence_Ln(spec, -1)


def test_conditions_on_singular_L():
    s = BlockStructure((1, 2))
    L = np.zeros((3, 3))
    report = check_L_conditions(L, s)
    assert not report.passed
    assert report.lines[0].name == "L invertible"


def test_conditions_on_equal_singular_values():
    # A_1 is conformal (equal singular values) for a (2,1) structure
    s = BlockStructure((2, 1))
    L = np.eye(3)
    report = check_L_conditions(L, s)
    names = [ln.name for ln in report.lines if not ln.passed]
    assert any("singular values" in n for n in names)


def test_angle_independence_accepts_sqrt_primes():
    margin = check_angle_independence([math.sqrt(2) % 1.0])
    assert margin > 1.0
    check_angle_independence([math.sqrt(2) % 1.0, math.sqrt(3) % 1.0])


def test_angle_independence_rejects_rationals():
    with pytest.raises(IndependenceFailure):
        check_angle_independence([0.5])
    with pytest.raises(IndependenceFailure):
        check_angle_independence([3.0 / 7.0])
    # a pair with an exact small relation: t1 = 2 t2 mod 1
    t2 = math.sqrt(2) % 1.0
    with pytest.raises(IndependenceFailure):
        check_angle_independence([(2 * t2) % 1.0, t2])


def test_angle_independence_three_angles():
    thetas = [math.sqrt(p) % 1.0 for p in (2, 3, 5)]
    check_angle_independence(thetas)
    with pytest.raises(IndependenceFailure):
        check_angle_independence([thetas[0], thetas[1], (thetas[0] + thetas[1]) % 1.0])


def test_random_model_T_shape_and_angles():
    model = random_model_T((1, 2, 2), [4.0, 2.0, 0.5], seed=1)
    assert model.structure.sizes == (1, 2, 2)
    assert [b.modulus for b in model.diag_blocks] == [4.0, 2.0, 0.5]
    assert set(model.rotation_angles) == {2, 3}
    with pytest.raises(ValueError):
        random_model_T((1, 2), [1.0, 2.0], seed=0)


def test_perturb_to_generic_fixes_conformal_block():
    s = BlockStructure((2, 1))
    L = np.eye(3)  # fails the distinct-singular-value condition
    fixed = perturb_to_generic(L, s, strength=0.2, seed=0)
    assert check_L_conditions(fixed, s).passed
    assert op_norm(fixed - L) <= 0.2 + 1e-12
    with pytest.raises(PerturbationExhausted):
        perturb_to_generic(L, s, strength=1e-15, seed=0)


def test_nonresonance_detects_multiplicative_relation():
    with pytest.raises(ResonanceFound) as exc:
        check_nonresonance([4.0, 2.0], K=3)
    assert exc.value.witness in {(1, -2), (-1, 2)}
    margin, witness = check_nonresonance([4.0, 2.0 * math.sqrt(2), 0.7], K=3)
    assert margin > 1e-9
    assert len(witness) == 3


def test_generate_instance_is_valid_and_deterministic():
    a = generate_instance((2, 2), seed=42)
    b = generate_instance((2, 2), seed=42)
    np.testing.assert_array_equal(a.L, b.L)
    assert check_L_conditions(a.L, a.model.structure).passed
    mods = [blk.modulus for blk in a.model.diag_blocks]
    assert mods[0] > mods[1]
    assert a.model.d == 4


def test_instance_spec_validation(demo_instance):
    with pytest.raises(ValueError):
        InstanceSpec(model=demo_instance.model, L=np.eye(4),
                     law=demo_instance.law, a=1, b=0)
    with pytest.raises(ValueError):
        InstanceSpec(model=demo_instance.model, L=demo_instance.L,
                     law=demo_instance.law, a=0, b=0)
