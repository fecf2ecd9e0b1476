"""Nonlinear amplitude transformation and the amplitude perceptron.

The pipeline reads each amplitude into fixed-point registers (real part,
and the imaginary part too when the activation uses it), rotates an
ancilla so its |0> branch carries f of those registers, and runs the
readout circuits again to clear the registers. Each readout block is a
palindrome (load, estimate, copy out, un-estimate, un-load), so it is its
own inverse; when the activation ignores the imaginary register the two
imag blocks sit adjacent in the circuit and cancel exactly, and the
pipeline skips them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import core
from .circuits import (
    BasisOracleGate,
    CircuitOp,
    MultiplexedRyGate,
    SingleGate,
    SwapGate,
    phase_estimate_op,
)
from .errors import ConfigError, RegisterError, ResourceLimitError, ZeroSuccessError
from .fixedpoint import FunctionOracle, activation_oracle, real_recovery_oracle
from .prep import PrepTree, synthesize_ua
from .qadc import g_prime_from_prep, hadamard_layer, part_layout, w_from_prep
from .qdac import amplitude_amplify, grover_rounds

MODES = ("postselect", "sample", "amplify")


@dataclass(frozen=True)
class AnsatzCircuit:
    """Alternating rotation and entangling layers on the data register.

    params has shape (layers, n_qubits, 2): a y angle and a z angle per
    qubit per layer, followed by a ring of controlled-Z. A layer whose
    parameters are all exactly zero is skipped entirely (the
    identity-at-zero convention), so the zero vector is the identity.
    """

    n_qubits: int
    layers: int
    params: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.params, dtype=np.float64)
        want = (self.layers, self.n_qubits, 2)
        if p.shape != want:
            raise ConfigError("params", f"expected shape {want}, got {p.shape}")
        object.__setattr__(self, "params", p)

    @property
    def param_count(self) -> int:
        return 2 * self.n_qubits * self.layers

    @classmethod
    def zeros(cls, n_qubits: int, layers: int) -> "AnsatzCircuit":
        return cls(n_qubits, layers, np.zeros((layers, n_qubits, 2)))

    def with_params(self, params) -> "AnsatzCircuit":
        return replace(self, params=np.asarray(params, dtype=np.float64))

    def op(self, start: int = 0) -> CircuitOp:
        n = self.n_qubits
        gates = []
        ring = [(i, i + 1) for i in range(n - 1)]
        if n > 2:
            ring.append((n - 1, 0))
        for layer in self.params:
            if not layer.any():
                continue
            for q in range(n):
                gates.append(SingleGate("ry", start + q, params=(float(layer[q, 0]),)))
            for q in range(n):
                gates.append(SingleGate("rz", start + q, params=(float(layer[q, 1]),)))
            for a, b in ring:
                gates.append(SingleGate("z", start + b, controls=((start + a, 1),)))
        return CircuitOp(tuple(gates), label="ansatz")


def tensor_encode(tree: PrepTree, copies: int = 2,
                  cap: int = core.DEFAULT_QUBIT_CAP) -> core.StateVector:
    """Load the same data into `copies` disjoint registers.

    The result's amplitudes are products: with two copies,
    amps[(i << n) | j] = c_i * c_j.
    """
    if copies < 1:
        raise ConfigError("copies", "need at least one copy")
    n = tree.depth
    state = core.new_zero_state(n * copies, cap=cap)
    ua = synthesize_ua(tree)
    op = CircuitOp(())
    for i in range(copies):
        op = op + ua.op(start=i * n)
    return op.apply(state)


@dataclass(frozen=True)
class NonlinearOutcome:
    success: bool
    attempts: int
    output: core.StateVector
    amplitudes: np.ndarray
    target: np.ndarray
    fidelity: float
    success_probability: float
    empirical_probability: float
    predicted_probability: float
    leakage: float
    mode: str


def _resolve_activation(f, m: int) -> FunctionOracle:
    if isinstance(f, FunctionOracle):
        if not f.out_codec.signed or f.out_codec.m != m:
            raise ConfigError("f", "output codec must be signed with matching m")
        if any(not c.signed or c.m != m for c in f.in_codecs):
            raise ConfigError("f", "input codecs must be signed with matching m")
        return f
    return activation_oracle(f, m, in_signed=True, out_signed=True)


def _classical_target(c: np.ndarray, f: FunctionOracle) -> np.ndarray:
    if f.arity == 1:
        vals = np.array([f.fn(float(x)) for x in c.real])
    else:
        vals = np.array([f.fn(float(x), float(y)) for x, y in zip(c.real, c.imag)])
    norm = math.sqrt(float((vals**2).sum()))
    if norm == 0.0:
        raise ZeroSuccessError("the activation vanishes on every input amplitude")
    return vals / norm


def nonlinear_transform(tree: PrepTree, f, n: int, m: int, g: int,
                        rng=None, mode: str = "postselect", shots: int = 2048,
                        rounds=None, cap: int = core.DEFAULT_QUBIT_CAP) -> NonlinearOutcome:
    if n != tree.depth:
        raise ConfigError("n", f"tree has {tree.depth} address qubits, got n={n}")
    f = _resolve_activation(f, m)
    c = tree.amplitudes()
    target = _classical_target(c, f)
    ua = synthesize_ua(tree)
    return _pipeline(lambda start: ua.op(start=start), target, n, f, m, g,
                     rng=rng, mode=mode, shots=shots, rounds=rounds, cap=cap)


def _pipeline(prep_builder, target, n, f, m, g, rng, mode, shots, rounds, cap):
    if mode not in MODES:
        raise ConfigError("mode", f"unknown mode {mode!r}")
    base = part_layout(n, m, g)
    prep = prep_builder(base.start("data"))
    w_re = w_from_prep(base, prep, imag=False)
    pe_re = phase_estimate_op(g_prime_from_prep(base, w_re), base.reg("regp"))
    rec = real_recovery_oracle(m, guard_bits=g)
    mw = rec.out_codec.width
    nb = base.n_qubits
    two_regs = f.arity == 2
    key = (nb, 2 * mw if two_regs else mw)
    anc = nb + key[1]
    total = anc + 1
    if total > cap:
        raise ResourceLimitError(
            f"{total} qubits ({(1 << total) * 16 / 2**20:.0f} MiB) exceeds the cap of {cap}"
        )

    regp_s, t = base.reg("regp")
    table = tuple(int(x) for x in rec.table)

    def copy_out(out_start: int) -> CircuitOp:
        return CircuitOp(
            (
                BasisOracleGate(
                    in_start=regp_s, in_width=t,
                    out_start=out_start, out_width=mw,
                    table=table, label=rec.name,
                ),
            ),
            label="recover",
        )

    if two_regs:
        w_im = w_from_prep(base, prep, imag=True)
        pe_im = phase_estimate_op(g_prime_from_prep(base, w_im), base.reg("regp"))

    fvals = np.clip(f.decoded_outputs(), -1.0, 1.0)
    if not np.any(fvals):
        raise ZeroSuccessError("every quantized activation value is zero")
    mux = CircuitOp(
        (
            MultiplexedRyGate(
                key_start=key[0], key_width=key[1], target=anc,
                angles=tuple(2.0 * np.arccos(fvals)),
            ),
        ),
        label="f-rotation",
    )

    # forward: registers are tensored in as late as possible
    state = (hadamard_layer(base, "ad") + w_re + pe_re).apply(core.new_zero_state(nb))
    state = copy_out(nb).apply(core.tensor(core.new_zero_state(mw), state))
    state = (pe_re.inverse() + w_re.inverse()).apply(state)
    if two_regs:
        state = (w_im + pe_im).apply(state)
        state = copy_out(nb + mw).apply(core.tensor(core.new_zero_state(mw), state))
        state = (pe_im.inverse() + w_im.inverse()).apply(state)

    # success probability predicted from the pipeline's own registers
    key_joint = core.register_distribution(state, [(0, n), key]).reshape(1 << n, -1)
    predicted = float((key_joint @ (fvals**2)).sum())

    state = mux.apply(core.tensor(core.new_zero_state(1), state))
    inverse_ops = []
    if two_regs:
        inverse_ops += [w_im + pe_im, copy_out(nb + mw), pe_im.inverse() + w_im.inverse()]
    inverse_ops += [w_re + pe_re, copy_out(nb), pe_re.inverse() + w_re.inverse()]
    for op in inverse_ops:
        state = op.apply(state)

    branch, p_exact = core.postselect(state, anc, 0)
    clean, clean_mass = core.clean_component(branch, [(0, n)])
    amps = clean.amps
    fidelity = float(abs(np.vdot(target, amps)))
    leakage = 1.0 - float(clean_mass)

    if mode == "postselect":
        empirical, attempts, success = p_exact, 1, True
    elif mode == "sample":
        if rng is None:
            raise ConfigError("rng", "sample mode needs a seeded generator")
        hits = int(rng.binomial(shots, p_exact))
        empirical, attempts, success = hits / shots, shots, hits > 0
    else:
        r = grover_rounds(p_exact) if rounds is None else int(rounds)
        procedure = hadamard_layer(base, "ad") + w_re + pe_re
        procedure = procedure + copy_out(nb) + pe_re.inverse() + w_re.inverse()
        if two_regs:
            procedure = (procedure + w_im + pe_im + copy_out(nb + mw)
                         + pe_im.inverse() + w_im.inverse())
        procedure = procedure + mux
        for op in inverse_ops:
            procedure = procedure + op
        boosted = amplitude_amplify(procedure, total, anc, r)
        boost_branch, p_boost = core.postselect(boosted, anc, 0)
        clean, clean_mass = core.clean_component(boost_branch, [(0, n)])
        amps = clean.amps
        fidelity = float(abs(np.vdot(target, amps)))
        leakage = 1.0 - float(clean_mass)
        empirical, attempts, success = p_boost, 1 + 2 * r, True

    return NonlinearOutcome(
        success=success,
        attempts=attempts,
        output=clean,
        amplitudes=amps,
        target=np.asarray(target, dtype=np.float64),
        fidelity=fidelity,
        success_probability=float(p_exact),
        empirical_probability=float(empirical),
        predicted_probability=predicted,
        leakage=float(leakage),
        mode=mode,
    )


# ---------------------------------------------------------------------------
# Amplitude perceptron.


def perceptron_run(tree: PrepTree, ansatz: AnsatzCircuit, sigma, m: int, g: int,
                   rng=None, mode: str = "postselect", shots: int = 2048,
                   cap: int = core.DEFAULT_QUBIT_CAP) -> NonlinearOutcome:
    """Forward pass: load, rotate by the ansatz, then the nonlinear pipeline.

    The activation reads the real-part register only, matching the
    real-vector framing of the perceptron.
    """
    n = tree.depth
    if ansatz.n_qubits != n:
        raise ConfigError("ansatz", f"ansatz spans {ansatz.n_qubits} qubits, data has {n}")
    f = _resolve_activation(sigma, m)
    if f.arity != 1:
        raise ConfigError("sigma", "the perceptron activation takes one argument")
    ua = synthesize_ua(tree)
    rotated = (ua.op(0) + ansatz.op(0)).apply(core.new_zero_state(n))
    target = _classical_target(rotated.amps, f)
    return _pipeline(
        lambda start: ua.op(start=start) + ansatz.op(start=start),
        target, n, f, m, g, rng=rng, mode=mode, shots=shots, rounds=None, cap=cap,
    )


def perceptron_forward(tree: PrepTree, ansatz: AnsatzCircuit, sigma, m: int, g: int,
                       cap: int = core.DEFAULT_QUBIT_CAP) -> core.StateVector:
    return perceptron_run(tree, ansatz, sigma, m, g, cap=cap).output


@dataclass(frozen=True)
class PerceptronReadout:
    k: int
    estimate: float
    shots: int
    p_zero: float
    standard_error: float


def swap_test_readout(output: core.StateVector, k: int, shots: int, rng) -> PerceptronReadout:
    """Estimate |<k|output>|^2 from a sampled swap test against |k>."""
    if shots < 1:
        raise ConfigError("shots", "need at least one shot")
    if rng is None:
        raise ConfigError("rng", "readout sampling needs a seeded generator")
    n = output.n_qubits
    if not 0 <= k < (1 << n):
        raise RegisterError(f"basis index {k} out of range for {n} qubits")
    anc = 2 * n
    amps = np.zeros(1 << (anc + 1), dtype=np.complex128)
    amps[(k << n):(k << n) + (1 << n)] = output.amps
    state = core.StateVector(anc + 1, amps)
    gates = [SingleGate("h", anc)]
    gates.extend(SwapGate(i, n + i, controls=((anc, 1),)) for i in range(n))
    gates.append(SingleGate("h", anc))
    state = CircuitOp(tuple(gates)).apply(state)
    p_zero = float(core.register_distribution(state, [(anc, 1)])[0])
    p_hat = int(rng.binomial(shots, p_zero)) / shots
    estimate = min(max(2.0 * p_hat - 1.0, 0.0), 1.0)
    return PerceptronReadout(
        k=k,
        estimate=estimate,
        shots=shots,
        p_zero=p_zero,
        standard_error=math.sqrt(p_hat * (1.0 - p_hat) / shots),
    )


@dataclass(frozen=True)
class TrainResult:
    theta: np.ndarray
    loss: float
    trace: tuple
    evaluations: int


def train_demo(objective, ansatz: AnsatzCircuit, tree: PrepTree, sigma, m: int, g: int,
               shots: int, rng, budget: int = 50, optimizer: str = "coordinate",
               step: float = 0.4) -> TrainResult:
    """Tune the ansatz so swap-test readouts match the target overlaps.

    Gradient-free coordinate search: nudge one angle at a time, keep
    improvements. Every loss evaluation draws from its own spawned RNG
    stream, so results do not depend on evaluation order.
    """
    if optimizer != "coordinate":
        raise ConfigError("optimizer", f"unknown optimizer {optimizer!r}")
    objective = np.asarray(objective, dtype=np.float64)
    n_out = 1 << tree.depth
    if objective.shape != (n_out,):
        raise ConfigError("objective", f"need {n_out} target readouts")

    def loss_of(params) -> float:
        child = rng.spawn(1)[0]
        out = perceptron_run(tree, ansatz.with_params(params), sigma, m, g).output
        total = 0.0
        for k in range(n_out):
            est = swap_test_readout(out, k, shots, child).estimate
            total += (est - objective[k]) ** 2
        return total

    theta = ansatz.params.copy()
    if budget < 1:
        return TrainResult(theta=theta, loss=math.inf, trace=(), evaluations=0)

    best_loss = loss_of(theta)
    trace = [best_loss]
    evals = 1
    flat_size = theta.size
    coord = 0
    width = step
    stale = 0
    while evals < budget:
        moved = False
        for delta in (width, -width):
            if evals >= budget:
                break
            cand = theta.copy()
            cand.flat[coord] += delta
            l = loss_of(cand)
            evals += 1
            if l < best_loss:
                theta, best_loss, moved = cand, l, True
            trace.append(best_loss)
            if moved:
                break
        coord = (coord + 1) % flat_size
        stale = 0 if moved else stale + 1
        if stale >= flat_size:
            width *= 0.5
            stale = 0
    return TrainResult(theta=theta, loss=best_loss, trace=tuple(trace), evaluations=evals)
