import json
from fractions import Fraction as F

import pytest
from hypothesis import given, settings

from coboundary.errors import MalformedCertificateError, PreconditionError
from coboundary.exact_solver import solve_step
from coboundary.pipeline import decompose_domain
from coboundary.rational import IntervalSet
from coboundary.serialize import (
    decode_certificate,
    decode_hybrid,
    decode_set,
    encode_certificate,
    encode_decomposition,
    encode_hybrid,
    encode_set,
    jsonable,
    parse_rat,
)
from coboundary.tower import solve_tower
from coboundary.verify import verify_certificate

from conftest import atom_plus_ramp, hybrid_affine, interval_sets, mean_zero_steps, step


def roundtrip(obj):
    return json.loads(json.dumps(obj))


def test_parse_rat_accepts_strings_and_ints_only():
    assert parse_rat("-3/4") == F(-3, 4)
    assert parse_rat(" 2 ") == 2
    assert parse_rat(5) == 5
    for bad in (0.5, True, "x", "1/0", None):
        with pytest.raises(PreconditionError):
            parse_rat(bad)


@given(interval_sets())
def test_set_roundtrip(S):
    assert decode_set(roundtrip(encode_set(S))) == S


def test_hybrid_roundtrip_keeps_samples():
    f = atom_plus_ramp()
    back = decode_hybrid(roundtrip(encode_hybrid(f)))
    assert back == f


def test_hybrid_polynomial_grid_form():
    f = decode_hybrid({"sampled": {"grid": {"lo": "0", "hi": "1", "steps": 4}, "polynomial": ["-1/2", "1"],
                                   "lipschitz": "1"}})
    assert f.sampled_part.values == (F(-1, 2), F(-1, 4), 0, F(1, 4), F(1, 2))
    assert f.step_part.domain == IntervalSet.unit()


def test_hybrid_rejects_uncovered_samples_and_empty_input():
    with pytest.raises(PreconditionError, match="cover"):
        decode_hybrid({"step": [{"lo": "0", "hi": "1/2", "value": "0"}],
                       "sampled": {"grid": ["0", "1"], "values": ["0", "0"]}})
    with pytest.raises(PreconditionError):
        decode_hybrid({})


@settings(max_examples=25, deadline=None)
@given(mean_zero_steps())
def test_step_certificate_roundtrip_still_verifies(f):
    cert = solve_step(f)
    data = roundtrip(encode_certificate(cert))
    back = decode_certificate(data)
    assert back.T == cert.T and back.g == cert.g and back.exact
    assert verify_certificate(back).passed
    assert encode_certificate(back) == data


def test_tower_certificate_roundtrip():
    cert = solve_tower(IntervalSet.unit(), hybrid_affine(1, F(-1, 2), 64), F(1, 10), F(1, 100), 10)
    back = decode_certificate(roundtrip(encode_certificate(cert, {"seed": 0})))
    assert back.approximant == cert.approximant and back.residual_bound == cert.residual_bound
    assert verify_certificate(back).passed


def test_no_floats_in_output():
    data = encode_certificate(solve_tower(IntervalSet.unit(), hybrid_affine(1, F(-1, 2), 16), F(1, 10),
                                          F(1, 10), 6))

    def walk(x):
        assert not isinstance(x, float)
        if isinstance(x, dict):
            for v in x.values():
                walk(v)
        elif isinstance(x, list):
            for v in x:
                walk(v)

    walk(data)


def test_malformed_certificate():
    with pytest.raises(MalformedCertificateError):
        decode_certificate({"f": {}})
    data = encode_certificate(solve_step(step((0, "1/2", 1), ("1/2", 1, -1))))
    data["eps"] = 0.1
    with pytest.raises(MalformedCertificateError):
        decode_certificate(data)


def test_decomposition_encoding():
    data = encode_decomposition(decompose_domain(atom_plus_ramp()))
    assert data["R_B0"] == "5/12" and data["total_measure"] == "1"
    assert data["blocks"][0]["y"] == "1/4"


def test_jsonable_keeps_ints_and_bools():
    assert jsonable({"a": 3, "b": True, "c": F(1, 2), "d": (F(1), None)}) == {"a": 3, "b": True, "c": "1/2",
                                                                              "d": ["1", None]}
