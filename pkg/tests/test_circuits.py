import numpy as np
import pytest

from qadconv import circuits, core, reference
from qadconv.circuits import (
    BasisOracleGate,
    CircuitOp,
    MultiplexedRyGate,
    PhaseTableGate,
    RegisterLayout,
    SingleGate,
    SwapGate,
    ZeroReflectionGate,
)
from qadconv.errors import RegisterError


def random_state(n, seed=0):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return core.from_amplitudes(v / np.linalg.norm(v))


def test_layout_allocates_contiguously():
    lay = RegisterLayout.build(("a", 2), ("b", 3), ("c", 1))
    assert lay.n_qubits == 6
    assert lay.reg("a") == (0, 2)
    assert lay.reg("b") == (2, 3)
    assert lay.reg("c") == (5, 1)
    assert lay.value(0b101100, "b") == 0b011
    assert list(lay.qubits("c")) == [5]


def test_layout_allows_zero_width():
    lay = RegisterLayout.build(("a", 0), ("b", 2))
    assert lay.reg("a") == (0, 0)
    assert lay.value(3, "a") == 0


def test_layout_rejects_duplicates():
    with pytest.raises(RegisterError):
        RegisterLayout.build(("a", 1), ("a", 2))


def test_circuit_inverse_roundtrip():
    st = random_state(3, seed=1)
    op = CircuitOp(
        (
            SingleGate("h", 0),
            SingleGate("ry", 1, params=(0.7,)),
            SingleGate("phase", 2, params=(0.3,), controls=((0, 1),)),
            SwapGate(0, 2),
            ZeroReflectionGate((0, 1)),
            PhaseTableGate(0, 2, phases=(1, 1j, -1, -1j)),
            MultiplexedRyGate(0, 2, 2, angles=(0.1, 0.2, 0.3, 0.4)),
            BasisOracleGate(0, 2, 2, 1, table=(0, 1, 1, 0)),
        )
    )
    back = (op + op.inverse()).apply(st)
    np.testing.assert_allclose(back.amps, st.amps, atol=1e-12)


def test_circuit_then_composes_in_order():
    st = core.new_zero_state(1)
    x_then_h = CircuitOp((SingleGate("x", 0),)).then(CircuitOp((SingleGate("h", 0),)))
    got = x_then_h.apply(st)
    np.testing.assert_allclose(got.amps, [1 / np.sqrt(2), -1 / np.sqrt(2)], atol=1e-12)


def test_controlled_adds_to_every_gate():
    op = CircuitOp((SingleGate("x", 0), SwapGate(0, 1)))
    cop = op.controlled((2, 1))
    assert all(g.controls == ((2, 1),) for g in cop.gates)


def test_controlled_rejects_collision():
    op = CircuitOp((SingleGate("x", 0),))
    with pytest.raises(RegisterError):
        op.controlled((0, 1))


def test_controlled_circuit_leaves_zero_branch_alone():
    st = core.apply_single(core.new_zero_state(4), 3, core.H_MATRIX)
    cop = circuits.qft_op(0, 3).controlled((3, 1))
    out = cop.apply(st)
    np.testing.assert_allclose(out.amps[:8], st.amps[:8])
    assert abs(np.linalg.norm(out.amps[8:]) - np.linalg.norm(st.amps[8:])) < 1e-12


def test_gate_counts_and_lines():
    op = circuits.qft_op(0, 2)
    counts = op.gate_counts()
    assert counts["single"] == 3
    assert counts["swap"] == 1
    lines = op.to_lines()
    assert len(lines) == 4
    assert lines[0].startswith("h ")


def test_qft_matches_dft_matrix():
    for w in (1, 2, 3, 4):
        mat = reference.dense_unitary(circuits.qft_op(0, w), w)
        np.testing.assert_allclose(mat, reference.dft_matrix(1 << w), atol=1e-12)


def test_qft_on_offset_register():
    # acting on qubits [1, 3) of a 4-qubit state touches nothing else
    st = random_state(4, seed=2)
    op = circuits.qft_op(1, 2)
    out = op.apply(st)
    there = core.register_distribution(st, [(0, 1), (3, 1)])
    after = core.register_distribution(out, [(0, 1), (3, 1)])
    np.testing.assert_allclose(after, there, atol=1e-12)


def test_iqft_inverts_qft():
    st = random_state(3, seed=3)
    out = circuits.iqft_op(0, 3).apply(circuits.qft_op(0, 3).apply(st))
    np.testing.assert_allclose(out.amps, st.amps, atol=1e-12)


def phase_unitary(theta, qubit=0):
    return CircuitOp((SingleGate("phase", qubit, params=(2 * np.pi * theta,)),))


def test_phase_estimate_dyadic_is_exact():
    t = 4
    for theta in (0.0, 1 / 16, 5 / 16, 15 / 16):
        st = core.apply_single(core.new_zero_state(1 + t), 0, core.X_MATRIX)
        out = circuits.phase_estimate(st, phase_unitary(theta), (1, t))
        dist = core.register_distribution(out, [(1, t)]).ravel()
        assert dist[int(theta * 16)] == pytest.approx(1.0, abs=1e-12)


def test_phase_estimate_matches_closed_form():
    t = 5
    for theta in (1 / 3, 0.2137, 0.77):
        st = core.apply_single(core.new_zero_state(1 + t), 0, core.X_MATRIX)
        out = circuits.phase_estimate(st, phase_unitary(theta), (1, t))
        dist = core.register_distribution(out, [(1, t)]).ravel()
        np.testing.assert_allclose(
            dist, reference.pe_distribution(theta, t), atol=1e-12
        )


def test_phase_estimate_application_count():
    t = 6
    st = core.apply_single(core.new_zero_state(1 + t), 0, core.X_MATRIX)
    box, cb = circuits.count_tagged(circuits.PE_CTRL_TAG)
    circuits.phase_estimate_op(phase_unitary(1 / 3), (1, t)).apply(st, on_gate=cb)
    assert box["count"] == 2**t - 1


def test_phase_estimate_rejects_dirty_register():
    t = 3
    st = core.apply_single(core.new_zero_state(1 + t), 2, core.H_MATRIX)
    with pytest.raises(RegisterError):
        circuits.phase_estimate(st, phase_unitary(0.25), (1, t))


def test_phase_estimate_rejects_overlap():
    with pytest.raises(RegisterError):
        circuits.phase_estimate_op(phase_unitary(0.25, qubit=1), (1, 3))


def test_round_guard_table_half_up():
    table = circuits.round_guard_table(3, 2)
    np.testing.assert_array_equal(table, [0, 1, 1, 2, 2, 3, 3, 0])


def test_round_guard_table_brute_force():
    t, m = 6, 3
    table = circuits.round_guard_table(t, m)
    for b in range(1 << t):
        best = round(b / 2 ** (t - m) + 1e-12)  # ties go up
        assert table[b] == best % (1 << m)


def test_round_guard_bits_oracle():
    t, m = 4, 2
    st = core.new_zero_state(t + m)
    for q in range(t):
        st = core.apply_single(st, q, core.H_MATRIX)
    out = circuits.round_guard_bits(st, (0, t), (t, m))
    joint = core.register_distribution(out, [(0, t), (t, m)])
    table = circuits.round_guard_table(t, m)
    for b in range(1 << t):
        assert joint[b, table[b]] == pytest.approx(1 / 2**t, abs=1e-12)


def test_multiplexed_ry_gate_equals_controlled_rotations():
    st = random_state(3, seed=4)
    gate = MultiplexedRyGate(0, 2, 2, angles=(0.3, 1.2, 0.0, 2.5))
    got = CircuitOp((gate,)).apply(st)
    want = st
    for v, ang in enumerate(gate.angles):
        if ang == 0.0:
            continue
        ctl = tuple((b, (v >> b) & 1) for b in range(2))
        want = core.apply_single(want, 2, core.ry_matrix(ang), controls=ctl)
    np.testing.assert_allclose(got.amps, want.amps, atol=1e-12)


def test_primitive_count_charges_tables_by_size():
    gate = MultiplexedRyGate(0, 3, 3, angles=tuple(np.linspace(0, 1, 8)))
    assert gate.primitive_count == 8
    assert SingleGate("h", 0).primitive_count == 1
    op = circuits.qft_op(0, 3)
    assert op.primitive_count() == len(op.gates)
