import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qadconv import reference
from qadconv.errors import CodecRangeError, OracleDomainError
from qadconv.fixedpoint import (
    ACTIVATIONS,
    FixedPointCodec,
    FunctionOracle,
    abs_recovery_oracle,
    activation_oracle,
    arccos_oracle,
    real_recovery_oracle,
)


def test_encode_known_pattern():
    codec = FixedPointCodec(4)
    assert codec.encode(0.625) == 0b1010
    assert codec.encode(0.0) == 0
    assert codec.decode(0b1010) == 0.625


def test_signed_encode_two_complement():
    codec = FixedPointCodec(4, signed=True)
    pattern = codec.encode(-0.5)
    assert pattern == (-8) % 32
    assert codec.decode(pattern) == -0.5
    assert codec.decode(codec.encode(-1.0)) == -1.0


def test_round_half_up():
    codec = FixedPointCodec(3)
    # 0.0625 is exactly half an LSB; half-up sends it to 1/8
    assert codec.encode(0.0625) == 1
    assert codec.encode(0.0624) == 0
    signed = FixedPointCodec(3, signed=True)
    assert signed.decode(signed.encode(-0.0625)) == 0.0


def test_clamp_window():
    codec = FixedPointCodec(4)
    assert codec.decode(codec.encode(1.0)) == codec.vmax
    with pytest.raises(CodecRangeError):
        codec.encode(1.0 + 2.0**-3)
    signed = FixedPointCodec(4, signed=True)
    assert signed.decode(signed.encode(-1.05)) == -1.0
    with pytest.raises(CodecRangeError):
        signed.encode(-1.2)


def test_roundtrip_exact_on_representable():
    for signed in (False, True):
        codec = FixedPointCodec(5, signed=signed)
        for v in codec.values():
            assert codec.decode(codec.encode(v)) == v


@given(st.floats(min_value=0.0, max_value=1.0), st.integers(min_value=1, max_value=10))
def test_quantization_bound(frac, m):
    codec = FixedPointCodec(m)
    v = frac * codec.vmax
    err = abs(codec.decode(codec.encode(v)) - v)
    assert err <= 2.0 ** -(m + 1) + 1e-12


def test_values_cover_range():
    codec = FixedPointCodec(2, signed=True)
    got = sorted(codec.values().tolist())
    assert got == [-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75]


def test_oracle_build_and_lookup():
    codec = FixedPointCodec(3)
    orc = FunctionOracle.build("half", lambda x: x / 2, (codec,), codec)
    for code in range(8):
        v = codec.decode(code)
        assert codec.decode(orc.lookup(code)) == pytest.approx(
            reference.quantize_unsigned(v / 2, 3)
        )


def test_oracle_rejects_out_of_window_outputs():
    codec = FixedPointCodec(3)
    with pytest.raises(OracleDomainError):
        FunctionOracle.build("double", lambda x: 2 * x, (codec,), codec)


def test_oracle_evaluate_checks_domain():
    orc = abs_recovery_oracle(4)
    assert orc.evaluate(0.5) == pytest.approx(1.0)
    assert orc.evaluate(0.25) == pytest.approx(0.0)
    with pytest.raises(OracleDomainError):
        orc.evaluate(0.1)


def test_arity_two_packs_first_input_low():
    codec = FixedPointCodec(2)
    orc = FunctionOracle.build(
        "first", lambda x, y: x, (codec, codec), codec
    )
    # packed = x_code | y_code << 2; output must follow x only
    for x in range(4):
        for y in range(4):
            assert orc.table[x | (y << 2)] == x


def test_arccos_oracle_endpoints():
    orc = arccos_oracle(4)
    assert orc.evaluate(0.0) == pytest.approx(1.0)
    assert orc.evaluate(math.sqrt(2) / 2) == pytest.approx(0.5)
    # table clamps phi=1 to the top code
    assert orc.lookup(0) == 15


def test_arccos_composition_recovers_input():
    m = 6
    orc = arccos_oracle(m)
    codec = FixedPointCodec(m)
    worst = 0.0
    for code in range(1 << m):
        d = codec.decode(code)
        phi = codec.decode(orc.lookup(code))
        worst = max(worst, abs(math.cos(math.pi * phi / 2) - d))
    assert worst <= 2 * 2.0**-m


def test_recovery_tables_are_branch_symmetric():
    for orc in (abs_recovery_oracle(3, guard_bits=2), real_recovery_oracle(3, guard_bits=2)):
        t = orc.in_codecs[0].m
        for b in range(1, 1 << t):
            assert orc.table[b] == orc.table[(1 << t) - b]


def test_recovery_tables_match_reference():
    for m, g, signed, orc in (
        (5, 3, False, abs_recovery_oracle(5, guard_bits=3)),
        (5, 3, True, real_recovery_oracle(5, guard_bits=3)),
    ):
        want = reference.recovery_decoded_table(m + g, m, signed)
        got = orc.decoded_outputs()
        np.testing.assert_allclose(got, want)


def test_abs_recovery_scalar_map():
    orc = abs_recovery_oracle(8)
    # theta for r=0.7 via the inverse relation, then forward through the map
    theta = math.asin(math.sqrt((1 + 0.49) / 2)) / math.pi
    assert orc.evaluate(theta) == pytest.approx(0.7, abs=1e-12)


def test_abs_recovery_table_bias_near_zero():
    # the dyadic bin theta=1/4 evaluates half a cell high; the square root
    # blows that up to ~0.11 at t=8. Documented behavior, not a bug.
    orc = abs_recovery_oracle(5, guard_bits=3)
    code = orc.lookup((1 << 8) // 4)
    assert orc.out_codec.decode(code) == 0.125


def test_real_recovery_endpoints():
    orc = real_recovery_oracle(4)
    assert orc.evaluate(0.25) == pytest.approx(0.0)
    assert orc.evaluate(0.5) == pytest.approx(1.0)
    assert orc.evaluate(0.0) == pytest.approx(-1.0)


def test_activation_registry():
    assert set(ACTIVATIONS) == {"identity", "square", "tanh", "relu-capped", "product"}
    orc = activation_oracle("tanh", 6)
    assert orc.evaluate(0.0) == pytest.approx(0.0)
    assert orc.evaluate(0.6) == pytest.approx(math.tanh(0.6))
    sq = activation_oracle("square", 5, in_signed=True)
    assert sq.evaluate(-0.5) == pytest.approx(0.25)
    prod = activation_oracle("product", 3)
    assert prod.arity == 2
    assert prod.evaluate(0.5, 0.5) == pytest.approx(0.25)


def test_activation_accepts_callable():
    orc = activation_oracle(lambda x: x / 4, 4)
    assert orc.name in ("<lambda>", "user")
    assert orc.evaluate(0.5) == pytest.approx(0.125)


def test_unknown_activation():
    with pytest.raises(OracleDomainError):
        activation_oracle("sigmoid", 4)
