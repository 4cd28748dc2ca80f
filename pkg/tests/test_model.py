"""Model types, unravelling builders, and the elementary matrix maps."""

import json

import numpy as np
import pytest

from lgq import (
    SystemModel,
    Unravelling,
    cov_matrix,
    empty_unravelling,
    kappa,
    load_model,
    make_heterodyne,
    make_homodyne,
    model_hash,
    stack,
    symplectic_form,
)

RNG = np.random.default_rng(20240817)


def test_system_model_validation():
    with pytest.raises(ValueError):
        SystemModel(N=0, A=np.zeros((0, 0)), D=np.zeros((0, 0)))
    with pytest.raises(ValueError):
        SystemModel(N=1, A=np.zeros((2, 2)), D=np.zeros((3, 3)))
    with pytest.raises(ValueError):
        SystemModel(N=1, A=np.zeros((2, 2)), D=[[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises(ValueError):
        SystemModel(N=1, A=np.zeros((2, 2)), D=-np.eye(2))
    with pytest.raises(ValueError):
        SystemModel(N=1, A=np.zeros((2, 2)), D=np.eye(2), hbar=0.0)


def test_cov_matrix_symmetrizes_and_freezes():
    v = cov_matrix([[1.0, 0.5], [0.5, 2.0]])
    assert np.array_equal(v, v.T)
    with pytest.raises(ValueError):
        v[0, 0] = 3.0
    with pytest.raises(ValueError):
        cov_matrix([[1.0, 0.5], [0.4, 2.0]])
    with pytest.raises(ValueError):
        cov_matrix(np.eye(3))


def test_homodyne_matches_stated_form(opo):
    theta = 3 * np.pi / 8
    u = make_homodyne(opo, 0.5, theta)
    expected = 2 * np.sqrt(0.5) * np.array([[np.cos(theta), np.sin(theta)]])
    assert np.allclose(u.C, expected, rtol=0, atol=1e-15)
    assert np.allclose(u.Gamma, -expected / 2, rtol=0, atol=1e-15)


def test_homodyne_unit_efficiency_q_readout(opo):
    u = make_homodyne(opo, 1.0, 0.0)
    assert np.allclose(u.C, [[2.0, 0.0]], atol=1e-15)
    assert np.allclose(u.Gamma, [[-1.0, 0.0]], atol=1e-15)


def test_homodyne_negative_phase(opo):
    u = make_homodyne(opo, 0.5, -np.pi / 8)
    expected = 2 * np.sqrt(0.5) * np.array([[np.cos(-np.pi / 8), np.sin(-np.pi / 8)]])
    assert np.allclose(u.C, expected, atol=1e-15)
    assert np.allclose(u.Gamma, -expected / 2, atol=1e-15)


def test_homodyne_backaction_relation_generic():
    # Gamma = -(hbar/2) C exactly, for any efficiency, phase, and hbar.
    for hbar in (0.5, 1.0, 2.0):
        model = SystemModel(N=2, A=np.zeros((4, 4)), D=np.eye(4), hbar=hbar)
        for eta in (0.1, 0.5, 1.0):
            for theta in np.linspace(-np.pi, np.pi, 7):
                for mode in (0, 1):
                    u = make_homodyne(model, eta, theta, mode)
                    assert np.array_equal(u.Gamma, -0.5 * hbar * u.C)


def test_homodyne_domain_errors(opo):
    with pytest.raises(ValueError):
        make_homodyne(opo, 0.0, 0.0)
    with pytest.raises(ValueError):
        make_homodyne(opo, 1.2, 0.0)
    with pytest.raises(ValueError):
        make_homodyne(opo, 0.5, 0.0, mode_index=1)


def test_heterodyne_is_two_balanced_homodynes(opo):
    het = make_heterodyne(opo, 1.0, 0.0)
    assert het.M == 2
    first = make_homodyne(opo, 0.5, 0.0)
    second = make_homodyne(opo, 0.5, np.pi / 2)
    assert np.array_equal(het.C[:1], first.C)
    assert np.array_equal(het.C[1:], second.C)
    assert np.array_equal(het.Gamma[:1], first.Gamma)
    assert np.array_equal(het.Gamma[1:], second.Gamma)


def test_heterodyne_row_scaling(opo):
    het = make_heterodyne(opo, 0.5, 0.0)
    # each channel carries eta/2 = 0.25: amplitude 2*sqrt(0.25/hbar)
    assert np.allclose(np.linalg.norm(het.C, axis=1), 2 * np.sqrt(0.25), atol=1e-15)


def test_stack_concatenates(opo):
    u1 = make_homodyne(opo, 0.5, 0.1)
    u2 = make_heterodyne(opo, 0.5, 0.7)
    both = stack(u1, u2)
    assert both.M == 3
    assert np.array_equal(both.C, np.vstack([u1.C, u2.C]))
    assert np.array_equal(both.Gamma, np.vstack([u1.Gamma, u2.Gamma]))


def test_stack_with_empty_is_identity(opo):
    u = make_homodyne(opo, 0.5, 0.3)
    empty = empty_unravelling(opo)
    assert empty.M == 0
    stacked = stack(u, empty)
    assert np.array_equal(stacked.C, u.C)
    assert np.array_equal(stacked.Gamma, u.Gamma)


def test_stack_dimension_mismatch(opo):
    other = SystemModel(N=2, A=np.zeros((4, 4)), D=np.eye(4))
    with pytest.raises(ValueError):
        stack(make_homodyne(opo, 0.5, 0.0), make_homodyne(other, 0.5, 0.0))


def test_kappa_special_cases(opo):
    u = make_homodyne(opo, 0.5, 0.4)
    zero = np.zeros((2, 2))
    assert np.array_equal(kappa(zero, u, +1), u.Gamma.T)
    no_backaction = Unravelling(C=u.C, Gamma=np.zeros_like(u.Gamma))
    v = cov_matrix([[1.3, 0.2], [0.2, 0.8]])
    assert np.allclose(kappa(v, no_backaction, +1), v @ u.C.T, atol=1e-15)
    assert np.allclose(kappa(v, no_backaction, -1), v @ u.C.T, atol=1e-15)


def test_kappa_sign_difference_is_twice_backaction(opo):
    u = make_heterodyne(opo, 0.8, 0.2)
    for _ in range(20):
        v = RNG.normal(size=(2, 2))
        v = 0.5 * (v + v.T)
        diff = kappa(v, u, +1) - kappa(v, u, -1)
        assert np.allclose(diff, 2 * u.Gamma.T, atol=1e-14)


def test_kappa_distributes_over_stack(opo):
    u1 = make_homodyne(opo, 0.4, 0.3)
    u2 = make_heterodyne(opo, 0.5, -0.9)
    both = stack(u1, u2)
    v = cov_matrix([[2.0, -0.3], [-0.3, 0.7]])
    combined = kappa(v, both, +1)
    split = np.hstack([kappa(v, u1, +1), kappa(v, u2, +1)])
    assert np.allclose(combined, split, atol=1e-15)


def test_kappa_shape_errors(opo):
    u = make_homodyne(opo, 0.5, 0.0)
    with pytest.raises(ValueError):
        kappa(np.eye(4), u, +1)
    with pytest.raises(ValueError):
        kappa(np.eye(2), u, 2)


def test_symplectic_form_single_mode():
    sigma = symplectic_form(1)
    assert np.array_equal(sigma, [[0.0, 1.0], [-1.0, 0.0]])
    assert np.array_equal(sigma @ sigma, -np.eye(2))


def test_symplectic_form_block_diagonal():
    sigma = symplectic_form(2)
    assert sigma.shape == (4, 4)
    assert np.array_equal(sigma[:2, :2], symplectic_form(1))
    assert np.array_equal(sigma[2:, 2:], symplectic_form(1))
    assert np.count_nonzero(sigma[:2, 2:]) == 0


def test_symplectic_form_antisymmetric_orthogonal():
    for n in (1, 2, 3):
        sigma = symplectic_form(n)
        assert np.array_equal(sigma.T, -sigma)
        assert np.allclose(sigma.T @ sigma, np.eye(2 * n), atol=1e-15)


def test_model_file_roundtrip(tmp_path, opo):
    doc = {
        "N": 1,
        "hbar": 1.0,
        "A": [[0.0, 0.0], [0.0, -2.0]],
        "D": [[1.0, 0.0], [0.0, 1.0]],
        "unravellings": {
            "alice": {"type": "homodyne", "eta": 0.5, "theta": 3 * np.pi / 8},
            "het": {"type": "heterodyne", "eta": 0.5, "theta": 0.0},
            "raw": {
                "type": "explicit",
                "C": [[2.0, 0.0]],
                "Gamma": [[-1.0, 0.0]],
            },
        },
    }
    path = tmp_path / "model.json"
    path.write_text(json.dumps(doc))
    loaded = load_model(path)
    assert loaded.model.N == 1
    assert np.array_equal(loaded.model.A, doc["A"])
    reference = make_homodyne(opo, 0.5, 3 * np.pi / 8)
    assert np.allclose(loaded.unravelling("alice").C, reference.C, atol=1e-15)
    assert loaded.unravelling("het").M == 2
    assert np.array_equal(loaded.unravelling("raw").C, [[2.0, 0.0]])
    with pytest.raises(ValueError):
        loaded.unravelling("nope")


def test_model_file_errors(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"N": 1, "A": [[0, 0], [0, -2]]}))
    with pytest.raises(ValueError):
        load_model(path)
    path.write_text(json.dumps([1, 2, 3]))
    with pytest.raises(ValueError):
        load_model(path)


def test_model_hash_is_content_addressed(opo):
    same = SystemModel(N=1, A=opo.A, D=opo.D, hbar=opo.hbar)
    assert model_hash(same) == model_hash(opo)
    other = SystemModel(N=1, A=-np.eye(2), D=opo.D, hbar=opo.hbar)
    assert model_hash(other) != model_hash(opo)
