import json

import numpy as np
import pytest

from eswsim import linalg as la
from eswsim import model as mdl
from eswsim.model import (
    InvariantViolation,
    ModelError,
    build_four_mode_model,
    build_lplus,
    build_simple_model,
    dump_model,
    embed_spatial,
    parse_model,
)


@pytest.fixture(scope="module")
def simple():
    return build_simple_model()


@pytest.fixture(scope="module")
def four():
    return build_four_mode_model()


def test_simple_model(simple):
    assert simple.dim_K == 2 and simple.composite_dim == 4
    assert la.inner(simple.Psi, simple.Psi) == pytest.approx(1, abs=1e-15)
    assert np.linalg.norm(simple.T @ simple.Psi - simple.E @ simple.Psi) <= 1e-12
    # (1/sqrt2) psi1 (x) |1> has squared norm 1/2
    assert la.inner(simple.Psi, simple.T @ simple.Psi).real == pytest.approx(0.5, abs=1e-15)
    np.testing.assert_array_equal(simple.L, np.diag([1, 0]))
    np.testing.assert_array_equal(simple.Psi, np.array([0, 1, 1, 0]) / np.sqrt(2))


def test_four_mode_model(four):
    assert la.inner(four.Psi, four.Psi) == pytest.approx(1, abs=1e-15)
    # ||(1/2)(psi1 + psi2)||^2 = 1/2
    assert la.inner(four.Psi, four.E @ four.Psi).real == pytest.approx(0.5, abs=1e-15)
    np.testing.assert_array_equal(four.L, np.diag([1, 1, 0, 0]))
    np.testing.assert_array_equal(four.E, np.kron(four.L, np.eye(2)))
    np.testing.assert_array_equal(four.Eplus, np.kron(four.Lplus, np.eye(2)))
    np.testing.assert_array_equal(four.T, np.kron(np.eye(4), np.diag([0, 1])))
    four.validate(1e-12)


def test_mode_projectors_resolve_identity(four):
    P = mdl.mode_projectors(four)
    np.testing.assert_array_equal(sum(P), np.eye(4))
    for i, pi in enumerate(P):
        for j, pj in enumerate(P):
            np.testing.assert_array_equal(pi @ pj, pi if i == j else 0)
    np.testing.assert_array_equal(P[0] + P[1], four.L)
    np.testing.assert_array_equal(P[2] + P[3], np.eye(4) - four.L)


def test_lplus_entries_and_trace():
    lp = build_lplus()
    assert lp[0, 0] == 0.75 and lp[0, 2] == -0.25
    assert np.trace(lp).real == pytest.approx(2, abs=1e-15)
    literal = np.array(mdl.LPLUS_QUARTERS) / 4
    assert np.abs(lp - literal).max() <= 1e-15


def test_lplus_projection_exact_rational():
    from fractions import Fraction

    M = [list(r) for r in mdl.LPLUS_RATIONAL]
    sq = [[sum(M[i][k] * M[k][j] for k in range(4)) for j in range(4)] for i in range(4)]
    assert sq == M
    assert all(M[i][j] == M[j][i] for i in range(4) for j in range(4))
    assert sum(M[i][i] for i in range(4)) == Fraction(2)


def test_embed_spatial(four):
    np.testing.assert_array_equal(embed_spatial(np.eye(4), 4), np.eye(8))
    v = embed_spatial(four.L, 4) @ four.Psi
    assert np.vdot(v, v).real == pytest.approx(0.5, abs=1e-15)
    ep = embed_spatial(four.Lplus, 4)
    assert la.frobenius_norm(la.commutator(ep, four.T)) <= 1e-12
    with pytest.raises(la.DimensionError):
        embed_spatial(np.eye(3), 4)


def test_round_trip(four):
    back = parse_model(dump_model(four))
    for name in ("L", "E", "T", "Psi", "Lplus", "Eplus"):
        assert np.abs(getattr(back, name) - getattr(four, name)).max() <= 1e-15


def _config(**over):
    doc = mdl.model_to_config(build_four_mode_model())
    doc.update(over)
    return doc


def test_rejects_unnormalized_state():
    doc = _config()
    doc["state"] = (0.9 * np.array(doc["state"])).tolist()
    with pytest.raises(InvariantViolation) as info:
        parse_model(json.dumps(doc))
    assert info.value.residual.name == "Psi.norm"


def test_rejects_non_idempotent_L():
    doc = _config()
    L = np.array(doc["operators"]["L"])
    L[0, 0, 0] = 0.8
    doc["operators"]["L"] = L.tolist()
    with pytest.raises(InvariantViolation) as info:
        parse_model(json.dumps(doc))
    assert info.value.residual.name == "L.idempotence"
    assert "idempotence" in str(info.value)
    # unchecked load still works so callers can report the failure
    assert parse_model(json.dumps(doc), check=False).L[0, 0] == 0.8


@pytest.mark.parametrize(
    "text",
    [
        "not json",
        "[]",
        json.dumps({"dim_K": 2, "state": [[1, 0]] * 4}),
        json.dumps({"dim_K": 0, "state": [], "operators": {"L": []}}),
        json.dumps({"dim_K": 2, "state": [[1, 0]] * 3, "operators": {"L": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]]}}),
        json.dumps({"dim_K": 2, "state": [[1, 0]] * 4, "operators": {"L": [[1, 0]], "Q": []}}),
    ],
)
def test_parse_errors(text):
    with pytest.raises(ModelError):
        parse_model(text)


def test_screen_events_in_config():
    doc = _config()
    f = np.kron(np.diag([1, 0, 1, 0]), np.eye(2))
    doc["operators"]["F"] = [mdl._encode(f), mdl._encode(np.eye(8) - f)]
    m = parse_model(json.dumps(doc))
    assert len(m.screen_events) == 2
    doc["operators"]["F"] = mdl._encode(f)
    assert len(parse_model(json.dumps(doc)).screen_events) == 1


def test_indicator_events_are_ancilla_trivial():
    events = mdl.indicator_events(4)
    assert len(events) == 14
    t = mdl.detector_projection(4)
    for f in events:
        assert all(r.passed for r in la.is_projection(f))
        assert la.frobenius_norm(la.commutator(t, f)) == 0
    assert len(mdl.indicator_events(10)) == 10
