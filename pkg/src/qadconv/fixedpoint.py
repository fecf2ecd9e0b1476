"""Binary-fraction codecs and the classical lookup oracles used in circuits.

A codec maps real values to small integer codes (m fractional bits, optional
two's-complement sign bit). A FunctionOracle carries both a double-precision
scalar map (evaluate) and a frozen code-to-code table (table) that the
circuit-level XOR oracles consume. For most oracles the table is just
encode(f(decode(code))); the phase-recovery oracles build their tables
differently, see their docstrings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CodecRangeError, OracleDomainError


@dataclass(frozen=True)
class FixedPointCodec:
    """Fixed-point codec with m fraction bits, round half up.

    Unsigned codes cover [0, 1 - 2^-m]; signed codes add one bit and cover
    [-1, 1 - 2^-m] in two's complement. Values up to one LSB outside the
    covered range clamp to the nearest endpoint; anything further raises.
    """

    m: int
    signed: bool = False

    def __post_init__(self):
        if self.m < 1:
            raise CodecRangeError("need at least one fraction bit")

    @property
    def width(self) -> int:
        return self.m + 1 if self.signed else self.m

    @property
    def code_min(self) -> int:
        return -(1 << self.m) if self.signed else 0

    @property
    def code_max(self) -> int:
        return (1 << self.m) - 1

    @property
    def vmin(self) -> float:
        return self.code_min / (1 << self.m)

    @property
    def vmax(self) -> float:
        return self.code_max / (1 << self.m)

    def encode(self, v: float) -> int:
        """Value -> bit pattern (two's complement when signed)."""
        v = float(v)
        if not math.isfinite(v):
            raise CodecRangeError(f"cannot encode {v!r}")
        lsb = 2.0**-self.m
        if v < self.vmin - lsb or v > self.vmax + lsb:
            raise CodecRangeError(
                f"{v!r} outside [{self.vmin}, {self.vmax}] by more than one LSB"
            )
        k = int(math.floor(v * (1 << self.m) + 0.5))
        k = min(max(k, self.code_min), self.code_max)
        return k % (1 << self.width)

    def decode(self, pattern: int) -> float:
        pattern = int(pattern) % (1 << self.width)
        k = pattern
        if self.signed and k >= (1 << self.m):
            k -= 1 << (self.m + 1)
        return k / (1 << self.m)

    def decode_array(self, patterns) -> np.ndarray:
        p = np.asarray(patterns, dtype=np.int64) % (1 << self.width)
        if self.signed:
            p = np.where(p >= (1 << self.m), p - (1 << (self.m + 1)), p)
        return p / float(1 << self.m)

    def values(self) -> np.ndarray:
        """Decoded value of every pattern, in pattern order."""
        return self.decode_array(np.arange(1 << self.width))


def _pack(codes, widths) -> int:
    packed = 0
    shift = 0
    for c, w in zip(codes, widths):
        packed |= (int(c) % (1 << w)) << shift
        shift += w
    return packed


@dataclass(frozen=True)
class FunctionOracle:
    """A named classical function with a frozen fixed-point lookup table.

    The table maps a packed input pattern (first input in the low bits) to
    an output bit pattern, and is what circuit oracles apply. evaluate()
    is the same function in plain double precision with domain checking.
    """

    name: str
    fn: object
    in_codecs: tuple
    out_codec: FixedPointCodec
    table: np.ndarray
    domain: tuple

    @classmethod
    def build(cls, name, fn, in_codecs, out_codec, domain=None, table=None):
        in_codecs = tuple(in_codecs)
        if domain is None:
            domain = tuple((c.vmin, c.vmax) for c in in_codecs)
        widths = [c.width for c in in_codecs]
        total = sum(widths)
        if table is None:
            table = np.zeros(1 << total, dtype=np.int64)
            for packed in range(1 << total):
                rem = packed
                vals = []
                for c in in_codecs:
                    vals.append(c.decode(rem % (1 << c.width)))
                    rem >>= c.width
                try:
                    table[packed] = out_codec.encode(fn(*vals))
                except CodecRangeError as exc:
                    raise OracleDomainError(
                        f"oracle {name!r} leaves the output range at input {vals}: {exc}"
                    ) from exc
        else:
            table = np.asarray(table, dtype=np.int64)
            if table.shape != (1 << total,):
                raise OracleDomainError(
                    f"table for {name!r} has {table.size} entries, expected {1 << total}"
                )
        return cls(name, fn, in_codecs, out_codec, table, tuple(domain))

    @property
    def arity(self) -> int:
        return len(self.in_codecs)

    @property
    def in_width(self) -> int:
        return sum(c.width for c in self.in_codecs)

    def evaluate(self, *values) -> float:
        """Double-precision value of the underlying function, domain-checked."""
        if len(values) != self.arity:
            raise OracleDomainError(
                f"oracle {self.name!r} takes {self.arity} inputs, got {len(values)}"
            )
        for v, (lo, hi), c in zip(values, self.domain, self.in_codecs):
            tol = 2.0**-c.m / 2.0
            if not lo - tol <= v <= hi + tol:
                raise OracleDomainError(
                    f"oracle {self.name!r} input {v!r} outside [{lo}, {hi}]"
                )
        return float(self.fn(*values))

    def lookup(self, *codes) -> int:
        """Packed table lookup on input bit patterns."""
        widths = [c.width for c in self.in_codecs]
        return int(self.table[_pack(codes, widths)])

    def decoded_outputs(self) -> np.ndarray:
        """Decoded output value for every packed input pattern."""
        return self.out_codec.decode_array(self.table)


# ---------------------------------------------------------------------------
# Specific oracles.


def arccos_oracle(m: int) -> FunctionOracle:
    """phi = (2/pi) arccos(d) on unsigned m-bit fractions.

    d=0 maps to phi=1, one LSB above the largest representable value, so the
    table clamps it to the top code; the scalar map still returns 1.0.
    """
    codec = FixedPointCodec(m)

    def fn(d):
        return (2.0 / math.pi) * math.acos(min(max(d, -1.0), 1.0))

    return FunctionOracle.build("arccos", fn, (codec,), codec, domain=((0.0, 1.0),))


def _recovery_table(t: int, m: int, signed: bool) -> np.ndarray:
    """Fold each t-bit phase pattern through b <-> 2^t - b, then evaluate the
    recovery map at the cell midpoint and round into m bits. The fold makes
    the table exactly symmetric between the two phase-estimation branches."""
    out = FixedPointCodec(m, signed=signed)
    b = np.arange(1 << t, dtype=np.int64)
    fold = np.minimum(b, (1 << t) - b)
    theta = (fold + 0.5) / (1 << t)
    val = 2.0 * np.sin(np.pi * theta) ** 2 - 1.0
    if not signed:
        val = np.sqrt(np.clip(val, 0.0, None))
    codes = np.clip(
        np.floor(val * (1 << m) + 0.5).astype(np.int64), out.code_min, out.code_max
    )
    return codes % (1 << out.width)


def abs_recovery_oracle(m: int, guard_bits: int = 0) -> FunctionOracle:
    """r = sqrt(2 sin^2(pi theta) - 1) from an (m+guard_bits)-bit phase.

    The scalar map clamps radicands within one output LSB of zero and raises
    below that. The circuit table is built midpoint-folded (see
    _recovery_table), which keeps it total and branch-symmetric.
    """
    t = m + guard_bits
    in_codec = FixedPointCodec(t)
    out_codec = FixedPointCodec(m)

    def fn(theta):
        rad = 2.0 * math.sin(math.pi * theta) ** 2 - 1.0
        if rad < -(2.0**-m):
            raise OracleDomainError(
                f"recovery radicand {rad!r} below tolerance at theta={theta!r}"
            )
        return math.sqrt(max(rad, 0.0))

    return FunctionOracle.build(
        "abs-recovery",
        fn,
        (in_codec,),
        out_codec,
        domain=((0.25, 0.75),),
        table=_recovery_table(t, m, signed=False),
    )


def real_recovery_oracle(m: int, guard_bits: int = 0) -> FunctionOracle:
    """x = 2 sin^2(pi theta) - 1 from an (m+guard_bits)-bit phase, signed out."""
    t = m + guard_bits
    in_codec = FixedPointCodec(t)
    out_codec = FixedPointCodec(m, signed=True)

    def fn(theta):
        return 2.0 * math.sin(math.pi * theta) ** 2 - 1.0

    return FunctionOracle.build(
        "real-recovery",
        fn,
        (in_codec,),
        out_codec,
        domain=((0.0, 1.0),),
        table=_recovery_table(t, m, signed=True),
    )


ACTIVATIONS = {
    "identity": (lambda x: x, 1),
    "square": (lambda x: x * x, 1),
    "tanh": (math.tanh, 1),
    "relu-capped": (lambda x: min(max(x, 0.0), 1.0), 1),
    "product": (lambda x, y: x * y, 2),
}


def activation_oracle(
    f, m: int, in_signed: bool = False, out_signed: bool = False, arity: int | None = None
) -> FunctionOracle:
    """Look up (or wrap) an activation and freeze it as an oracle.

    f is a registry name or a callable. The input codec(s) are signed when
    in_signed is set, which is how recovered real parts are fed back in.
    """
    if callable(f):
        name = getattr(f, "__name__", "user")
        fn = f
        if arity is None:
            arity = 1
    else:
        if f not in ACTIVATIONS:
            raise OracleDomainError(
                f"unknown activation {f!r}; known: {sorted(ACTIVATIONS)}"
            )
        fn, reg_arity = ACTIVATIONS[f]
        name = f
        if arity is None:
            arity = reg_arity
    in_codec = FixedPointCodec(m, signed=in_signed)
    out_codec = FixedPointCodec(m, signed=out_signed)
    return FunctionOracle.build(name, fn, (in_codec,) * arity, out_codec)
