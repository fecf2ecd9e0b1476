"""Register layouts, composable gate sequences, QFT, and phase estimation.

A CircuitOp is an immutable list of small gate records. Applying one copies
the amplitude buffer once and then runs each gate's in-place kernel, so a
few thousand gates on a million amplitudes stay fast. Inversion, control
wrapping, and gate counting all work structurally on the records.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import core
from .errors import RegisterError


@dataclass(frozen=True)
class RegisterLayout:
    """Named contiguous qubit ranges allocated from qubit 0 upward."""

    registers: tuple[tuple[str, int, int], ...]  # (name, start, width)

    @classmethod
    def build(cls, *specs) -> "RegisterLayout":
        regs = []
        names = set()
        start = 0
        for name, width in specs:
            width = int(width)
            if width < 0:
                raise RegisterError(f"register {name!r} has negative width")
            if name in names:
                raise RegisterError(f"duplicate register name {name!r}")
            names.add(name)
            regs.append((name, start, width))
            start += width
        return cls(tuple(regs))

    @property
    def n_qubits(self) -> int:
        return sum(w for _, _, w in self.registers)

    def reg(self, name: str) -> tuple[int, int]:
        for nm, s, w in self.registers:
            if nm == name:
                return (s, w)
        raise RegisterError(f"no register named {name!r}")

    def start(self, name: str) -> int:
        return self.reg(name)[0]

    def width(self, name: str) -> int:
        return self.reg(name)[1]

    def qubits(self, name: str) -> range:
        s, w = self.reg(name)
        return range(s, s + w)

    def value(self, index: int, name: str) -> int:
        s, w = self.reg(name)
        return (index >> s) & ((1 << w) - 1)

    def names(self) -> tuple[str, ...]:
        return tuple(nm for nm, _, _ in self.registers)


_SELF_INVERSE = {"h", "x", "y", "z"}
_ANGLE_GATES = {"ry", "rz", "phase"}


def _matrix_for(name: str, params: tuple) -> np.ndarray:
    if name == "h":
        return core.H_MATRIX
    if name == "x":
        return core.X_MATRIX
    if name == "y":
        return core.Y_MATRIX
    if name == "z":
        return core.Z_MATRIX
    if name == "ry":
        return core.ry_matrix(params[0])
    if name == "rz":
        return core.rz_matrix(params[0])
    if name == "phase":
        return core.phase_matrix(params[0])
    raise RegisterError(f"unknown single-qubit gate {name!r}")


def _fmt(x) -> str:
    if isinstance(x, complex):
        return f"{x.real!r}{x.imag:+}j".replace("+-", "-")
    return repr(x)


def _ctrl_str(controls) -> str:
    return ",".join(f"{q}={v}" for q, v in controls)


@dataclass(frozen=True)
class SingleGate:
    name: str
    target: int
    params: tuple = ()
    controls: tuple = ()
    tag: str = ""

    @property
    def category(self) -> str:
        return "single"

    @property
    def primitive_count(self) -> int:
        return 1

    def used_qubits(self):
        return {self.target} | {q for q, _ in self.controls}

    def with_controls(self, extra) -> "SingleGate":
        return replace(self, controls=self.controls + tuple(extra))

    def dagger(self) -> "SingleGate":
        if self.name in _SELF_INVERSE:
            return self
        if self.name in _ANGLE_GATES:
            return replace(self, params=(-self.params[0],))
        raise RegisterError(f"no inverse rule for gate {self.name!r}")

    def apply_inplace(self, amps, n):
        core.apply_single_inplace(
            amps, n, self.target, _matrix_for(self.name, self.params), self.controls
        )

    def to_line(self) -> str:
        p = ",".join(_fmt(x) for x in self.params)
        return f"{self.name} t={self.target} c=[{_ctrl_str(self.controls)}] p=[{p}]"


@dataclass(frozen=True)
class MatrixGate:
    """Escape hatch for tests: an explicit 2x2 unitary."""

    target: int
    matrix: np.ndarray
    controls: tuple = ()
    tag: str = ""

    @property
    def category(self) -> str:
        return "single"

    @property
    def primitive_count(self) -> int:
        return 1

    def used_qubits(self):
        return {self.target} | {q for q, _ in self.controls}

    def with_controls(self, extra) -> "MatrixGate":
        return replace(self, controls=self.controls + tuple(extra))

    def dagger(self) -> "MatrixGate":
        return replace(self, matrix=self.matrix.conj().T)

    def apply_inplace(self, amps, n):
        core.apply_single_inplace(amps, n, self.target, self.matrix, self.controls)

    def to_line(self) -> str:
        m = ",".join(_fmt(complex(x)) for x in self.matrix.ravel())
        return f"u t={self.target} c=[{_ctrl_str(self.controls)}] m=[{m}]"


@dataclass(frozen=True)
class SwapGate:
    q1: int
    q2: int
    controls: tuple = ()
    tag: str = ""

    @property
    def category(self) -> str:
        return "swap"

    @property
    def primitive_count(self) -> int:
        return 1

    def used_qubits(self):
        return {self.q1, self.q2} | {q for q, _ in self.controls}

    def with_controls(self, extra) -> "SwapGate":
        return replace(self, controls=self.controls + tuple(extra))

    def dagger(self) -> "SwapGate":
        return self

    def apply_inplace(self, amps, n):
        core.apply_swap_inplace(amps, n, self.q1, self.q2, self.controls)

    def to_line(self) -> str:
        return f"swap q=[{self.q1},{self.q2}] c=[{_ctrl_str(self.controls)}]"


@dataclass(frozen=True)
class ZeroReflectionGate:
    """I - 2|0..0><0..0| on the listed qubits (tensored with identity)."""

    qubits: tuple
    controls: tuple = ()
    tag: str = ""

    @property
    def category(self) -> str:
        return "reflect"

    @property
    def primitive_count(self) -> int:
        return 1

    def used_qubits(self):
        return set(self.qubits) | {q for q, _ in self.controls}

    def with_controls(self, extra) -> "ZeroReflectionGate":
        return replace(self, controls=self.controls + tuple(extra))

    def dagger(self) -> "ZeroReflectionGate":
        return self

    def apply_inplace(self, amps, n):
        core.apply_zero_reflection_inplace(amps, n, self.qubits, self.controls)

    def to_line(self) -> str:
        qs = ",".join(str(q) for q in self.qubits)
        return f"reflect0 q=[{qs}] c=[{_ctrl_str(self.controls)}]"


@dataclass(frozen=True)
class PhaseTableGate:
    """Diagonal gate over a register: amplitude *= phases[value]."""

    start: int
    width: int
    phases: tuple
    controls: tuple = ()
    tag: str = ""

    @property
    def category(self) -> str:
        return "phase-table"

    @property
    def primitive_count(self) -> int:
        return 1 << self.width

    def used_qubits(self):
        return set(range(self.start, self.start + self.width)) | {
            q for q, _ in self.controls
        }

    def with_controls(self, extra) -> "PhaseTableGate":
        return replace(self, controls=self.controls + tuple(extra))

    def dagger(self) -> "PhaseTableGate":
        return replace(self, phases=tuple(np.conj(p) for p in self.phases))

    def apply_inplace(self, amps, n):
        core.apply_phase_table_inplace(
            amps, n, (self.start, self.width), self.phases, self.controls
        )

    def to_line(self) -> str:
        ph = ",".join(_fmt(complex(p)) for p in self.phases)
        return (
            f"phasetable r=[{self.start}:{self.start + self.width}] "
            f"c=[{_ctrl_str(self.controls)}] v=[{ph}]"
        )


@dataclass(frozen=True)
class BasisOracleGate:
    """XOR oracle |a>|b> -> |a>|b XOR table[a]>; self-inverse."""

    in_start: int
    in_width: int
    out_start: int
    out_width: int
    table: tuple
    label: str = ""
    controls: tuple = ()
    tag: str = ""

    @property
    def category(self) -> str:
        return "oracle"

    @property
    def primitive_count(self) -> int:
        # charged as one black-box arithmetic call; see gate_counts
        return 1

    def used_qubits(self):
        qs = set(range(self.in_start, self.in_start + self.in_width))
        qs |= set(range(self.out_start, self.out_start + self.out_width))
        return qs | {q for q, _ in self.controls}

    def with_controls(self, extra) -> "BasisOracleGate":
        return replace(self, controls=self.controls + tuple(extra))

    def dagger(self) -> "BasisOracleGate":
        return self

    def apply_inplace(self, amps, n):
        core.apply_basis_oracle_inplace(
            amps,
            n,
            (self.in_start, self.in_width),
            (self.out_start, self.out_width),
            np.asarray(self.table, dtype=np.int64),
            self.controls,
        )

    def to_line(self) -> str:
        t = ",".join(str(int(x)) for x in self.table)
        return (
            f"oracle {self.label or 'f'} in=[{self.in_start}:{self.in_start + self.in_width}] "
            f"out=[{self.out_start}:{self.out_start + self.out_width}] "
            f"c=[{_ctrl_str(self.controls)}] t=[{t}]"
        )


@dataclass(frozen=True)
class MultiplexedRyGate:
    """Ry on a target with the angle selected by a key register's value."""

    key_start: int
    key_width: int
    target: int
    angles: tuple
    controls: tuple = ()
    tag: str = ""

    @property
    def category(self) -> str:
        return "mux-ry"

    @property
    def primitive_count(self) -> int:
        return 1 << self.key_width

    def used_qubits(self):
        qs = set(range(self.key_start, self.key_start + self.key_width))
        qs.add(self.target)
        return qs | {q for q, _ in self.controls}

    def with_controls(self, extra) -> "MultiplexedRyGate":
        return replace(self, controls=self.controls + tuple(extra))

    def dagger(self) -> "MultiplexedRyGate":
        return replace(self, angles=tuple(-a for a in self.angles))

    def apply_inplace(self, amps, n):
        core.apply_multiplexed_ry_inplace(
            amps,
            n,
            (self.key_start, self.key_width),
            self.target,
            np.asarray(self.angles, dtype=np.float64),
            self.controls,
        )

    def to_line(self) -> str:
        a = ",".join(repr(float(x)) for x in self.angles)
        return (
            f"muxry k=[{self.key_start}:{self.key_start + self.key_width}] "
            f"t={self.target} c=[{_ctrl_str(self.controls)}] a=[{a}]"
        )


@dataclass(frozen=True)
class CircuitOp:
    """An ordered gate sequence with value semantics."""

    gates: tuple
    label: str = ""

    def then(self, other: "CircuitOp", label: str | None = None) -> "CircuitOp":
        return CircuitOp(self.gates + other.gates, label or self.label)

    def __add__(self, other: "CircuitOp") -> "CircuitOp":
        return self.then(other)

    def inverse(self) -> "CircuitOp":
        return CircuitOp(
            tuple(g.dagger() for g in reversed(self.gates)),
            f"{self.label}^-1" if self.label else "",
        )

    def controlled(self, *controls) -> "CircuitOp":
        """Add (qubit, value) control pairs to every gate."""
        used = self.used_qubits()
        for q, _ in controls:
            if q in used:
                raise RegisterError(f"control qubit {q} collides with the circuit")
        return CircuitOp(
            tuple(g.with_controls(controls) for g in self.gates), self.label
        )

    def used_qubits(self) -> set:
        qs = set()
        for g in self.gates:
            qs |= g.used_qubits()
        return qs

    def apply(self, state: core.StateVector, on_gate=None) -> core.StateVector:
        n = state.n_qubits
        amps = state.amps.copy()
        for g in self.gates:
            g.apply_inplace(amps, n)
            if on_gate is not None:
                on_gate(g)
        return core.StateVector(n, amps)

    def gate_counts(self) -> dict:
        counts: dict[str, int] = {}
        for g in self.gates:
            counts[g.category] = counts.get(g.category, 0) + 1
        return counts

    def primitive_count(self) -> int:
        return sum(g.primitive_count for g in self.gates)

    def to_lines(self) -> list[str]:
        return [g.to_line() for g in self.gates]


def controlled_wrap(circuit: CircuitOp, control: int) -> CircuitOp:
    """Every gate gains `control` (value 1) as an additional control."""
    return circuit.controlled((control, 1))


# ---------------------------------------------------------------------------
# QFT / IQFT.


def qft_op(start: int, width: int) -> CircuitOp:
    """Exact discrete Fourier transform over a register's value space.

    Maps |k> to (1/sqrt(T)) sum_b e^{2 pi i k b / T} |b> with T = 2**width.
    """
    if width < 1:
        raise RegisterError("qft needs a register of width >= 1")
    gates: list = []
    for j in range(width - 1, -1, -1):
        gates.append(SingleGate("h", start + j))
        for i in range(j - 1, -1, -1):
            gates.append(
                SingleGate(
                    "phase",
                    start + j,
                    params=(math.pi / 2 ** (j - i),),
                    controls=((start + i, 1),),
                )
            )
    for k in range(width // 2):
        gates.append(SwapGate(start + k, start + width - 1 - k))
    return CircuitOp(tuple(gates), label=f"qft[{start}:{start + width}]")


def iqft_op(start: int, width: int) -> CircuitOp:
    return qft_op(start, width).inverse()


def qft(state: core.StateVector, reg) -> core.StateVector:
    return qft_op(*reg).apply(state)


def iqft(state: core.StateVector, reg) -> core.StateVector:
    return iqft_op(*reg).apply(state)


# ---------------------------------------------------------------------------
# Phase estimation.

PE_CTRL_TAG = "pe-ctrl-entry"


def phase_estimate_op(unitary: CircuitOp, regp) -> CircuitOp:
    """Textbook phase estimation as a flat circuit.

    Hadamards on the phase register, then controlled powers U^(2^j) with the
    control on register bit j (the unitary is applied 2^j times, so the
    controlled-unitary application count is exactly 2^t - 1), then the
    inverse QFT. The first gate of each controlled application is tagged so
    callers can count applications honestly at run time.
    """
    s, t = regp
    if t < 1:
        raise RegisterError("phase register must have at least one bit")
    used = unitary.used_qubits()
    if used & set(range(s, s + t)):
        raise RegisterError("phase register collides with the unitary's qubits")
    if not unitary.gates:
        raise RegisterError("cannot phase-estimate an empty circuit")
    gates: list = [SingleGate("h", s + j) for j in range(t)]
    for j in range(t):
        cg = unitary.controlled((s + j, 1))
        entry = replace(cg.gates[0], tag=PE_CTRL_TAG)
        block = (entry,) + cg.gates[1:]
        for _ in range(1 << j):
            gates.extend(block)
    gates.extend(iqft_op(s, t).gates)
    return CircuitOp(tuple(gates), label="phase-estimate")


def phase_estimate(
    state: core.StateVector, unitary: CircuitOp, regp, on_gate=None
) -> core.StateVector:
    """Apply phase estimation to a state whose phase register is |0..0>."""
    s, t = regp
    mass = register_distribution_zero_mass(state, regp)
    if mass > 1e-12:
        raise RegisterError(
            f"phase register [{s}:{s + t}) carries probability {mass:.3e}, expected 0"
        )
    return phase_estimate_op(unitary, regp).apply(state, on_gate=on_gate)


def register_distribution_zero_mass(state: core.StateVector, reg) -> float:
    """Probability that the register is NOT all zeros."""
    dist = core.register_distribution(state, [reg]).ravel()
    return float(1.0 - dist[0])


def count_tagged(tag: str):
    """A gate callback/counter pair for CircuitOp.apply."""
    box = {"count": 0}

    def on_gate(g):
        if g.tag == tag:
            box["count"] += 1

    return box, on_gate


def round_guard_table(t: int, m: int) -> np.ndarray:
    """Round a t-bit phase fraction to the nearest m-bit fraction, half up.

    The result wraps modulo 2**m: a pattern just below 1 rounds to 0, which
    is the right thing for phases living on the unit circle.
    """
    if not 0 < m <= t:
        raise RegisterError(f"need 0 < m <= t, got m={m}, t={t}")
    g = t - m
    b = np.arange(1 << t, dtype=np.int64)
    return ((b + ((1 << g) >> 1)) >> g) % (1 << m)


def round_guard_bits(state: core.StateVector, regp, reg_out) -> core.StateVector:
    """XOR the rounded m-bit estimate of the regp fraction into reg_out."""
    t = regp[1]
    m = reg_out[1]
    table = round_guard_table(t, m)
    return core.apply_basis_oracle(state, regp, reg_out, table)
