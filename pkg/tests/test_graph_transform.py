import math

import numpy as np
import pytest

from spectral_cascade.blocks import block_diag, split_blocks
from spectral_cascade.errors import CertificateFailure, HypothesisFailure
from spectral_cascade.graph_transform import (
    SplitProblem,
    check_hypotheses,
    derive_constants,
    invariant_pair,
    phi_apply,
    solve_eta,
    solve_xi,
    verify_certificate,
)
from spectral_cascade.linalg import invert, op_norm


def make_problem(seed=0, k1=1, k2=2, delta=0.05, coupling=0.2):
    """A dominated block-diagonal V with a generic J0 nearby."""
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((k1, k1)) + 2.0 * np.eye(k1)
    sA = np.linalg.svd(A, compute_uv=False)[-1]
    D = rng.standard_normal((k2, k2))
    D *= 0.4 * sA / max(op_norm(D), 1e-12)
    V = block_diag(A, D)
    J0 = np.eye(k1 + k2) + coupling * rng.standard_normal((k1 + k2, k1 + k2))
    return SplitProblem(V=V, J0=J0, k1=k1, k2=k2, delta=delta)


def ball_sample(problem, constants, rng):
    G = rng.standard_normal((problem.d, problem.d))
    return problem.J0 + 0.9 * constants.beta * G / op_norm(G)


def test_hypotheses_pass_and_fail():
    p = make_problem()
    assert check_hypotheses(p).passed
    # undominated V: tail as large as the head
    bad = SplitProblem(V=np.eye(3), J0=p.J0, k1=1, k2=2, delta=0.05)
    report = check_hypotheses(bad)
    assert not report.passed and report.rho >= 1.0
    with pytest.raises(HypothesisFailure):
        derive_constants(bad)


def test_threshold_minimality():
    p = make_problem(seed=4)
    c = derive_constants(p)
    a, g, r = c.alpha, c.gamma, c.rho
    assert a + a * a * g * (1 + g) * r ** c.n1 <= g
    if c.n1 > 0:
        assert a + a * a * g * (1 + g) * r ** (c.n1 - 1) > g
    assert a * a * (1 + 2 * g) * r ** c.n2 < 1.0
    if c.n2 > 0:
        assert a * a * (1 + 2 * g) * r ** (c.n2 - 1) >= 1.0
    assert g * a * r ** c.n3 < p.delta / 2.0
    assert c.n0 >= max(c.n1, c.n2, c.n3)


def test_beta_keeps_ball_invertible():
    p = make_problem(seed=7)
    c = derive_constants(p)
    rng = np.random.default_rng(1)
    for _ in range(20):
        J = ball_sample(p, c, rng)
        invert(J)  # must not raise anywhere in the ball
        A, _, _, _ = split_blocks(J, p.k1)
        invert(A)


def test_xi_is_a_fixed_point():
    p = make_problem(seed=2)
    c = derive_constants(p)
    rng = np.random.default_rng(3)
    J = ball_sample(p, c, rng)
    n = c.n0 + 2
    xi = solve_xi(p, J, n, c)
    again = phi_apply(xi, J, p.V, n, powers=p.powers)
    assert op_norm(again - xi) < 1e-11 * max(1.0, op_norm(xi))


def test_eta_decays_geometrically():
    p = make_problem(seed=5)
    c = derive_constants(p)
    rng = np.random.default_rng(6)
    J = ball_sample(p, c, rng)
    norms = [op_norm(solve_eta(p, J, n, c)) for n in (c.n0, c.n0 + 4, c.n0 + 8)]
    assert norms[0] < c.gamma * c.rho ** c.n0
    assert norms[2] < norms[1] < norms[0]


def test_invariant_pair_certifies():
    p = make_problem(seed=9)
    c = derive_constants(p)
    rng = np.random.default_rng(10)
    J = ball_sample(p, c, rng)
    cert = invariant_pair(p, J, c.n0 + 1, c)
    assert cert.residuals["forward_invariance"] < 1e-10
    assert cert.residuals["backward_invariance"] < 1e-10
    assert cert.bounds["item3"] < p.delta
    assert cert.bounds["item4"] < p.delta
    report = verify_certificate(cert, p)
    assert report["passed"]


def test_verify_detects_tampering():
    p = make_problem(seed=11)
    c = derive_constants(p)
    rng = np.random.default_rng(12)
    cert = invariant_pair(p, ball_sample(p, c, rng), c.n0 + 1, c)
    cert.xi = cert.xi + 1e-3
    report = verify_certificate(cert, p)
    assert not report["passed"]


def test_conjugated_blocks_carry_the_spectrum():
    """spectrum(J V^n) splits into spectrum(phi) + spectrum(psi^-1)."""
    p = make_problem(seed=13)
    c = derive_constants(p)
    rng = np.random.default_rng(14)
    J = ball_sample(p, c, rng)
    n = c.n0 + 1
    cert = invariant_pair(p, J, n, c)
    full = np.sort_complex(np.linalg.eigvals(J @ p.powers.vn(n)))
    top = np.linalg.eigvals(cert.phi)
    bottom = np.linalg.eigvals(np.linalg.inv(cert.psi))
    split = np.sort_complex(np.concatenate([top, bottom]))
    np.testing.assert_allclose(split, full, rtol=1e-8, atol=1e-12)


def test_block_diagonal_input_is_exact():
    p = make_problem(seed=15)
    c = derive_constants(p)
    # a block-diagonal J close to J0 in structure terms: zero off-blocks
    A0, _, _, D0 = split_blocks(p.J0, p.k1)
    J = block_diag(A0, D0)
    n = c.n0 + 1
    xi = solve_xi(p, J, n, c)
    eta = solve_eta(p, J, n, c)
    assert op_norm(xi) == 0.0
    assert op_norm(eta) == 0.0


def test_delta_violation_raises_item():
    p = make_problem(seed=16, delta=1e-9)
    # delta this tight cannot absorb a J0 with visible off-diagonal blocks
    with pytest.raises((CertificateFailure, HypothesisFailure)):
        c = derive_constants(p)
        rng = np.random.default_rng(17)
        J = p.J0 + 10 * c.beta * np.ones((p.d, p.d))
        invariant_pair(p, J, c.n0 + 1, c)
