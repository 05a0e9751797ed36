import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spectral_cascade.blocks import BlockStructure
from spectral_cascade.errors import PowerOverflow
from spectral_cascade.linalg import matrix_power_checked, op_norm
from spectral_cascade.model import DiagonalModel, DiagonalPowers, RotationBlock, ScalarBlock


def make_model():
    return DiagonalModel(
        BlockStructure((1, 2, 2)),
        (
            ScalarBlock(1.6),
            RotationBlock(1.1, math.sqrt(2) % 1.0),
            RotationBlock(0.7, math.sqrt(3) % 1.0),
        ),
    )


def test_block_validation():
    with pytest.raises(ValueError):
        ScalarBlock(0.0)
    with pytest.raises(ValueError):
        RotationBlock(-1.0, 0.1)
    with pytest.raises(ValueError):
        RotationBlock(1.0, 1.2)


def test_moduli_must_decrease():
    with pytest.raises(ValueError):
        DiagonalModel(
            BlockStructure((1, 2)), (ScalarBlock(1.0), RotationBlock(1.0, 0.1))
        )


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 60))
def test_closed_form_power_matches_repeated_multiplication(n):
    model = make_model()
    np.testing.assert_allclose(
        model.power(n), matrix_power_checked(model.matrix(), n), rtol=1e-12, atol=1e-12
    )


def test_negative_scalar_sign_alternates():
    blk = ScalarBlock(-2.0)
    assert blk.power(3)[0, 0] == -8.0
    assert blk.power(4)[0, 0] == 16.0


def test_power_overflow_guard():
    with pytest.raises(PowerOverflow):
        ScalarBlock(10.0).power(400)


def test_tail_drops_leading_blocks():
    model = make_model()
    tail = model.tail(2)
    assert tail.structure.sizes == (2, 2)
    np.testing.assert_array_equal(tail.matrix(), model.matrix()[1:, 1:])
    assert model.tail(1) is not model
    np.testing.assert_array_equal(model.tail(1).matrix(), model.matrix())


def test_rotation_angles_keyed_by_level():
    model = make_model()
    assert set(model.rotation_angles) == {2, 3}


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 40), st.integers(0, 2**32 - 1))
def test_sandwich_products_match_dense(n, seed):
    """The log-scaled sandwiches equal the literal products at safe n."""
    model = make_model()
    powers = DiagonalPowers(model)
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((4, 1))
    dense = powers.dvn(n) @ u @ np.linalg.inv(powers.avn(n))
    np.testing.assert_allclose(powers.dvn_u_avmn(u, n), dense, rtol=1e-10, atol=1e-12)
    v = rng.standard_normal((1, 4))
    dense2 = np.linalg.inv(powers.avn(n)) @ v @ powers.dvn(n)
    np.testing.assert_allclose(powers.avmn_u_dvn(v, n), dense2, rtol=1e-10, atol=1e-12)


def test_sandwich_contracts_at_huge_n():
    model = make_model()
    powers = DiagonalPowers(model)
    u = np.ones((4, 1))
    out = powers.dvn_u_avmn(u, 100_000)
    assert np.all(np.isfinite(out))
    assert op_norm(out) < 1e-300 * 1e280  # decays like (1.1/1.6)^n, far below tiny


def test_vn_hook_matches_model_power():
    model = make_model()
    powers = DiagonalPowers(model)
    np.testing.assert_array_equal(powers.vn(7), model.power(7))


def test_coordinate_log_moduli_and_det():
    model = make_model()
    logs = model.coordinate_log_moduli()
    assert logs.shape == (5,)
    assert logs[0] == pytest.approx(math.log(1.6))
    assert model.log_abs_det() == pytest.approx(
        math.log(1.6) + 2 * math.log(1.1) + 2 * math.log(0.7)
    )
