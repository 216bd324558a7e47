import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gogm.methods import run_fo
from gogm.oracles import make_huber_psi, make_random_log_sum_exp, make_random_psd_quadratic, random_start
from gogm.params import (make_fgm_t, make_ogm_a, make_ogm_og, make_ogm_theta,
                         random_valid_sequence)
from gogm.pep import (CertificateUndefined, CertKind, build_matrices, certify, closed_form_block,
                      lmi_block, verify)
from gogm.steps import gm_steps, h_fgm, h_gogm, h_gogm_prime, h_ogm


def normalized(trace, f):
    """Gradients, cost gaps and start direction in units of L and R."""
    L, R = trace.L, trace.R
    G = trace.grads_x / (L * R)
    delta = (trace.fvals_x - trace.f_star) / (L * R * R)
    nu = (f.x_star - trace.x[0]) / R
    return G, delta, nu


def tr(G, M):
    return float(np.trace(G.T @ M @ G))


STEP_BUILDERS = [
    lambda N: gm_steps(N),
    lambda N: h_fgm(make_fgm_t(N)),
    lambda N: h_ogm(make_ogm_theta(N)),
    lambda N: h_gogm_prime(make_ogm_og(N)),
    lambda N: h_gogm_prime(make_ogm_a(3, N)),
]


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 12), st.integers(0, 10 ** 6), st.integers(0, 4), st.integers(0, 2))
def test_pep_matrices_encode_valid_inequalities(N, seed, which, oracle_kind):
    # each matrix is one interpolation inequality; on a real run all must hold
    h = STEP_BUILDERS[which](N)
    if oracle_kind == 0:
        f = make_random_psd_quadratic(seed, N + 2)
    elif oracle_kind == 1:
        f = make_random_log_sum_exp(seed, N + 2)
    else:
        f = make_huber_psi(N, 1.0, 1.0, N + 2)
    x0 = random_start(f, 1.0, np.random.default_rng(seed))
    trace = run_fo(h, f, x0)
    G, d, nu = normalized(trace, f)
    pm = build_matrices(h)
    tol = 1e-10
    for i in range(N + 1):
        assert tr(G, pm.C(i)) <= d[i] + tol
        assert tr(G, pm.D[i]) + nu @ G[i] <= -d[i] + tol
        for j in range(N + 1):
            if i < j:
                assert tr(G, pm.A(i, j)) <= d[i] - d[j] + tol
            elif j < i:
                assert tr(G, pm.B(i, j)) <= d[i] - d[j] + tol


def test_adjacent_list_matches_on_demand():
    pm = build_matrices(h_ogm(make_ogm_theta(6)))
    for i in range(1, 7):
        np.testing.assert_array_equal(pm.A_adj[i - 1], pm.A(i - 1, i))
    with pytest.raises(IndexError):
        pm.A(3, 3)
    with pytest.raises(IndexError):
        pm.B(1, 2)


@pytest.mark.parametrize("N,recip", [(1, 8.0), (2, 16.156607), (10, 159.071565)])
def test_ogm_cost_certificate_values(N, recip):
    cert = certify("gogm_cost", make_ogm_theta(N))
    assert 1 / cert.bound_value() == pytest.approx(recip, rel=1e-7)
    assert verify(cert).ok


def test_fgm_gradient_certificate_value():
    cert = certify("fgm_grad", make_fgm_t(1))
    assert 1 / cert.norm_bound() == pytest.approx(1.9021130325903, rel=1e-12)


def test_ogm_og_gradient_certificate_value():
    cert = certify("gogm_prime_grad", make_ogm_og(4))
    assert 1 / cert.norm_bound() == pytest.approx(6.73916967177699, rel=1e-12)
    assert verify(cert).ok


def test_bound_scales_with_L_and_R():
    c = certify("gogm_prime_cost", make_fgm_t(3))
    assert c.bound_value(2.0, 3.0) == pytest.approx(18 * c.bound_value())
    g = certify("fgm_grad", make_fgm_t(3))
    assert g.norm_bound(2.0, 3.0) == pytest.approx(6 * g.norm_bound())
    with pytest.raises(ValueError):
        c.norm_bound()


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 30), st.integers(0, 10 ** 6),
       st.sampled_from(["gogm_cost", "gogm_prime_cost", "gogm_prime_grad"]))
def test_random_sequences_certify(N, seed, name):
    seq = random_valid_sequence(np.random.default_rng(seed), N, doubled=name == "gogm_cost")
    rep = verify(certify(name, seq))
    assert rep.ok, str(rep)
    assert rep.psd_margin >= -1e-9 and rep.identity_gap <= 1e-10


@pytest.mark.parametrize("N", [1, 2, 9, 40])
def test_closed_form_identity_matches_assembled_block(N):
    for name, seq in [("gogm_cost", make_ogm_theta(N)), ("gogm_prime_cost", make_fgm_t(N)),
                      ("fgm_grad", make_fgm_t(N)), ("gogm_prime_grad", make_ogm_og(N))]:
        cert = certify(name, seq)
        M = lmi_block(build_matrices(cert.h), cert)
        np.testing.assert_allclose(M, closed_form_block(cert), atol=1e-10, err_msg=name)


def test_perturbed_certificate_is_rejected():
    cert = certify("gogm_cost", make_ogm_theta(5))
    tau = cert.tau.copy()
    tau[1] += 0.1
    rep = verify(dataclasses.replace(cert, tau=tau))
    assert not rep.ok
    assert any("lambda_1 - lambda_2" in v for v in rep.violations)
    assert rep.identity_gap > 1e-3


def test_scaled_certificate_breaks_equalities_only():
    cert = certify("gogm_cost", make_ogm_theta(4)).scaled(1.5)
    rep = verify(cert)
    assert any("lambda_N + tau_N = 1" in v for v in rep.violations)
    assert rep.min_eig >= -1e-12


def test_certificate_preconditions():
    with pytest.raises(CertificateUndefined):
        certify("gogm_prime_grad", make_fgm_t(6))
    with pytest.raises(ValueError):
        certify("gogm_prime_cost", make_ogm_theta(6))
    with pytest.raises(ValueError):
        certify("fgm_grad", make_ogm_og(6))
    with pytest.raises(ValueError):
        certify("nope", make_fgm_t(2))


def test_fgm_t_is_accepted_by_the_theta_certificate():
    cert = certify("gogm_cost", make_fgm_t(8))
    assert cert.kind == CertKind.D and verify(cert).ok


def test_gogm_cost_uses_gogm_steps():
    th = make_ogm_theta(7)
    np.testing.assert_array_equal(certify("gogm_cost", th).h.h, h_gogm(th).h)


def test_vector_layout():
    cert = certify("fgm_grad", make_fgm_t(3))
    v = cert.vector()
    assert v.size == 3 + 4 + 1 + 4 + 1
    assert v[-1] == cert.gamma and v[7] == cert.eta


def test_ogm_one_step_multipliers():
    # Theta_1 = 2 theta_0 + theta_1 = 4, so tau_0 = 2 / 4
    cert = certify("gogm_cost", make_ogm_theta(1))
    assert cert.tau.tolist() == [0.5, 0.5] and cert.lam.tolist() == [0.5]
    assert cert.gamma == 0.25 and cert.bound_value() == 1 / 8
