import json

import numpy as np
import pytest

from bimat import Bimatrix, DimensionError, InputError, build_target, rendezvous_target
from bimat import serialization as ser
from oracles import rand_bim, rand_system


def test_complex_encoding():
    assert ser.encode_complex(1 - 2j) == [1.0, -2.0]
    assert ser.decode_complex(3) == 3
    assert ser.decode_complex([1, -2]) == 1 - 2j
    with pytest.raises(InputError):
        ser.decode_complex(True)
    with pytest.raises(InputError):
        ser.decode_complex([1, 2, 3])


def test_bimatrix_round_trip(rng):
    b = rand_bim(rng, 2, 3)
    text = ser.dumps(ser.encode_bimatrix(b))
    back = ser.decode_bimatrix(json.loads(text))
    assert np.array_equal(back.p1, b.p1) and np.array_equal(back.p2, b.p2)


def test_real_entries_accepted():
    b = ser.decode_bimatrix({"p1": [[1, 2], [3, 4]]})
    assert np.array_equal(b.p1, [[1, 2], [3, 4]]) and not np.any(b.p2)


def test_matrix_validation():
    with pytest.raises(InputError):
        ser.decode_matrix([1, 2])
    with pytest.raises(InputError):
        ser.decode_matrix([])
    with pytest.raises(DimensionError):
        ser.decode_matrix([[1, 2], [3]])
    with pytest.raises(InputError):
        ser.decode_real_matrix([[[1, 1]]])
    with pytest.raises(InputError, match="missing field 'p1'"):
        ser.decode_bimatrix({"p2": [[1]]})


def test_dumps_is_deterministic_and_exact():
    x = 0.1 + 0.2
    text = ser.dumps({"b": [x, -0.0], "a": [[1.5, 2.0]], "c": True, "d": None})
    assert text == ser.dumps({"b": [x, -0.0], "a": [[1.5, 2.0]], "c": True, "d": None})
    obj = json.loads(text)
    assert list(obj) == ["b", "a", "c", "d"]
    assert obj["b"][0] == x
    assert "0.30000000000000004" in text
    assert ser.dumps(float("nan")) == "null\n"


def test_system_round_trip(rng):
    sys_ = rand_system(rng, 3, 2, time_domain="discrete")
    back = ser.decode_system(json.loads(ser.dumps(ser.encode_system(sys_))))
    assert back.time_domain == "discrete" and back.structure == sys_.structure
    assert np.array_equal(back.a.p1, sys_.a.p1)


def test_target_round_trip():
    t = rendezvous_target(1.0, 0.5)
    enc = json.loads(ser.dumps(ser.encode_target(t)))
    back = ser.target_from_report(enc)
    assert np.array_equal(back.f_real, t.f_real)
    again = ser.decode_target(enc)
    assert np.array_equal(again.f_real, t.f_real)
    from_gamma = ser.decode_target({"gamma": [-1, -2, [-1, 1], [-1, -1]]})
    assert from_gamma.n == 2


def test_second_order_decode():
    m2 = ser.decode_second_order({"mass": [[1]], "damping": [[0]], "stiffness": [[1]],
                                  "input": [[1]]})
    assert m2.n == 1 and m2.q == 1
