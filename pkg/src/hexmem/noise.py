"""Noise models and parity-measurement decomposition.

Five circuit-level models share one physical error rate p:

* ``sd6`` — standard depolarizing, CX-based ancilla parity measurement,
  six time steps per three-layer round.
* ``si1000`` — superconducting-inspired, CZ-based with combined
  measure+reset, nine time steps per round; 1q rotations at p/10, init 2p,
  measurement 5p, idle p/10, resonator idle 2p.
* ``em3`` — native two-qubit parity measurements with the correlated
  compound error (uniform over {I,X,Y,Z}^2 x {flip, no flip} with
  probability p, Paulis applied before the measurement); boundary
  single-qubit measurements use the 8-element set and are non-demolition.
* ``sdem3`` — like em3 but the MPP error is an uncorrelated
  DEPOLARIZE2(p) after the measurement plus an independent record flip p.
* ``siem3000`` — measurement-axis two-qubit Pauli with probability p,
  independent perpendicular single-qubit flips p, independent record
  flip p, all alongside the em3 init/readout/idle rates.

``decompose_gates`` lowers the abstract MPP circuit to the model's gate
set; ``apply_noise`` inserts the channels. Decomposition preserves
measurement order, so detector/observable record sets are remapped, not
recomputed; only deterministic reference parities may change.
"""

from __future__ import annotations

from dataclasses import dataclass

from .builder import ExperimentSpec, build_memory_circuit, LAYER_SEQUENCE
from .circuit import Circuit, Instruction, Rec, iter_unrolled
from .paulis import SparsePauli

MODEL_NAMES = ("sd6", "si1000", "em3", "sdem3", "siem3000")
EM3_FAMILY = ("em3", "sdem3", "siem3000")

# Time steps per three-layer round.
CYCLE_TICKS = {"sd6": 6, "si1000": 9, "em3": 3, "sdem3": 3, "siem3000": 3}


@dataclass(frozen=True)
class NoiseModel:
    name: str
    p: float

    def __post_init__(self):
        if self.name not in MODEL_NAMES:
            raise ValueError(f"unknown noise model {self.name!r}")
        if not (0.0 <= self.p <= 1.0):
            raise ValueError("base error rate must be in [0, 1]")

    @property
    def uses_ancillas(self) -> bool:
        return self.name in ("sd6", "si1000")

    @property
    def cycle_ticks(self) -> int:
        return CYCLE_TICKS[self.name]

    # Derived per-gate rates.
    @property
    def two_qubit_gate(self) -> float:
        return self.p

    @property
    def one_qubit_gate(self) -> float:
        return self.p / 10 if self.name == "si1000" else self.p

    @property
    def init_flip(self) -> float:
        if self.name == "si1000":
            return 2 * self.p
        if self.name in EM3_FAMILY:
            return self.p / 2
        return self.p

    @property
    def measure_flip(self) -> float:
        if self.name == "si1000":
            return 5 * self.p
        if self.name in EM3_FAMILY:
            return self.p / 2
        return self.p

    @property
    def idle(self) -> float:
        return self.p / 10 if self.name == "si1000" else self.p

    @property
    def resonator_idle(self) -> float:
        return 2 * self.p if self.name == "si1000" else 0.0


# Basis of the error that flips a measurement's recorded outcome.
_FLIP_ERROR = {"X": "Z_ERROR", "Y": "X_ERROR", "Z": "X_ERROR"}

# Permutation action (conjugation, signs dropped) of the 1q Cliffords used.
_GATE_PERM = {
    "H": {"X": "Z", "Z": "X", "Y": "Y"},
    "H_YZ": {"Y": "Z", "Z": "Y", "X": "X"},
    "H_XY": {"X": "Y", "Y": "X", "Z": "Z"},
    "C_XYZ": {"X": "Y", "Y": "Z", "Z": "X"},
    "C_ZYX": {"X": "Z", "Z": "Y", "Y": "X"},
}
_PERM_GATE = {tuple(sorted(p.items())): g for g, p in _GATE_PERM.items()}
_INVOLUTION = {"X": {"X": "Z", "Z": "X", "Y": "Y"},
               "Y": {"Y": "Z", "Z": "Y", "X": "X"},
               "Z": {"X": "X", "Y": "Y", "Z": "Z"}}


def _rotation_gate(prev_basis: str, next_basis: str) -> str | None:
    """Single Clifford moving the data frame between edge bases."""
    rp = _INVOLUTION[prev_basis]
    rn = _INVOLUTION[next_basis]
    perm = {b: rn[rp[b]] for b in "XYZ"}
    if all(perm[b] == b for b in "XYZ"):
        return None
    return _PERM_GATE[tuple(sorted(perm.items()))]


# ----------------------------------------------------------------------
# Structured view of the abstract circuit
# ----------------------------------------------------------------------

@dataclass
class _Layer:
    basis: str
    edges: list[SparsePauli]
    annotations: list[tuple[str, tuple[float, ...], list[int]]]
    # annotations hold absolute abstract record indices


@dataclass
class _AbstractExperiment:
    coords: dict[int, tuple[float, float]]
    data: list[int]
    init_rotation: str
    init_basis: str
    layers: list[_Layer]
    final_basis: str
    final_targets: list[SparsePauli]
    final_annotations: list


def _read_abstract(circuit: Circuit) -> _AbstractExperiment:
    coords = circuit.qubit_coords
    stream = [i for i in iter_unrolled(circuit.instructions)
              if i.name not in ("QUBIT_COORDS", "TICK")]
    it = iter(stream)
    inst = next(it)
    if inst.name != "R":
        raise ValueError("expected transversal reset at circuit start")
    data = sorted(int(q) for q in inst.targets)
    inst = next(it)
    if inst.name not in ("H", "H_YZ"):
        raise ValueError("expected transversal init rotation")
    init_rotation = inst.name
    init_basis = "X" if inst.name == "H" else "Y"

    layers: list[_Layer] = []
    final_targets: list[SparsePauli] = []
    final_annotations: list = []
    final_basis = init_basis
    abs_rec = 0
    current: _Layer | None = None
    is_final = False
    for inst in it:
        if inst.name == "MPP":
            targets = list(inst.targets)
            bases = {b for t in targets for _, b in t}
            sizes = {len(t) for t in targets}
            if sizes == {1} and len(targets) == len(data):
                is_final = True
                final_targets = targets
                (final_basis,) = bases
            else:
                (basis,) = bases
                current = _Layer(basis, targets, [])
                layers.append(current)
            abs_rec += len(targets)
        elif inst.name in ("DETECTOR", "OBSERVABLE_INCLUDE", "SHIFT_COORDS"):
            recs = [abs_rec + t.offset for t in inst.targets]
            entry = (inst.name, inst.args, recs)
            if is_final:
                final_annotations.append(entry)
            elif current is not None:
                current.annotations.append(entry)
        else:
            raise ValueError(f"unexpected instruction {inst.name} in abstract "
                             "memory circuit")
    if len(layers) % 3:
        raise ValueError("layer count is not a whole number of rounds")
    return _AbstractExperiment(coords, data, init_rotation, init_basis,
                               layers, final_basis, final_targets,
                               final_annotations)


# ----------------------------------------------------------------------
# Decomposition to gate-level circuits
# ----------------------------------------------------------------------

class _Emitter:
    """Accumulates instructions while remapping measurement records."""

    def __init__(self, coords):
        self.out: list[Instruction] = []
        self.coords = dict(coords)
        self.rec_map: dict[int, int] = {}
        self.new_recs = 0
        self.pending: list = []

    def emit(self, name, targets=(), args=()):
        self.out.append(Instruction(name, tuple(targets), tuple(args)))

    def measure(self, name, targets, abstract_indices, args=()):
        self.emit(name, targets, args)
        for a in abstract_indices:
            self.rec_map[a] = self.new_recs
            self.new_recs += 1
        self.flush()

    def queue(self, annotations):
        self.pending.extend(annotations)
        self.flush()

    def flush(self):
        while self.pending:
            name, args, recs = self.pending[0]
            if any(r not in self.rec_map for r in recs):
                return
            targets = tuple(Rec(self.rec_map[r] - self.new_recs)
                            for r in sorted(recs, key=self.rec_map.get))
            self.out.append(Instruction(name, targets, tuple(args)))
            self.pending.pop(0)

    def tick(self):
        self.emit("TICK")

    def finish(self) -> Circuit:
        if self.pending:
            raise AssertionError("unresolved annotations after decomposition")
        header = [Instruction("QUBIT_COORDS", (q,), (float(x), float(y)))
                  for q, (x, y) in sorted(self.coords.items())]
        return Circuit(header + self.out)


def _edge_midpoint(pauli: SparsePauli, coords) -> tuple[float, float]:
    qs = pauli.qubits
    if len(qs) == 2:
        (x1, y1), (x2, y2) = coords[qs[0]], coords[qs[1]]
        return ((x1 + x2) / 2, (y1 + y2) / 2)
    (q,) = qs
    x, y = coords[q]
    x, y = int(x), int(y)
    basis = pauli.basis_on(q)
    if "YXZ"[y % 3] == basis:
        return (x, y + 0.5)
    if "YXZ"[(y - 1) % 3] == basis:
        return (x, y - 0.5)
    return (x + 0.5, y) if (x + y) % 2 == 0 else (x - 0.5, y)


class _Decomposer:
    def __init__(self, exp: _AbstractExperiment, model: NoiseModel):
        self.exp = exp
        self.model = model
        self.em = _Emitter(exp.coords)
        self.even = {q for q in exp.data
                     if (exp.coords[q][0] + exp.coords[q][1]) % 2 == 0}
        self.ancilla_of: dict[tuple, int] = {}
        next_index = max(exp.data) + 1
        rec = 0
        self.layer_info = []
        for layer in exp.layers:
            entries = []
            for pauli in layer.edges:
                key = (frozenset(pauli.qubits), layer.basis)
                if key not in self.ancilla_of:
                    self.ancilla_of[key] = next_index
                    self.em.coords[next_index] = _edge_midpoint(
                        pauli, exp.coords)
                    next_index += 1
                anc = self.ancilla_of[key]
                ev = [q for q in pauli.qubits if q in self.even]
                od = [q for q in pauli.qubits if q not in self.even]
                entries.append((anc, ev[0] if ev else None,
                                od[0] if od else None, rec))
                rec += 1
            self.layer_info.append(entries)
        self.final_first_rec = rec

    # helpers ------------------------------------------------------------

    def _rot(self, prev: str, nxt: str, qubits) -> None:
        gate = _rotation_gate(prev, nxt)
        if gate is not None and qubits:
            self.em.emit(gate, sorted(qubits))

    def _queue_layer_annotations(self, round_index: int) -> None:
        for k in range(3):
            self.em.queue(self.exp.layers[3 * round_index + k].annotations)

    def run(self) -> Circuit:
        if self.model.name == "sd6":
            self._run_sd6()
        else:
            self._run_si1000()
        return self.em.finish()

    # SD6: CX-based, six ticks per round ----------------------------------

    def _run_sd6(self) -> None:
        em, exp = self.em, self.exp
        data = exp.data
        evens = sorted(self.even)
        odds = sorted(set(data) - self.even)
        rounds = len(exp.layers) // 3
        em.emit("R", data)
        em.tick()
        # The transversal prep rotation merges with the first layer's basis
        # change: the data frame starts at the init basis over |0..0>.
        prev_basis = exp.init_basis
        for r in range(rounds):
            bases = [exp.layers[3 * r + k].basis for k in range(3)]
            infos = [self.layer_info[3 * r + k] for k in range(3)]
            self._queue_layer_annotations(r)
            last = r == rounds - 1
            if r == 0:
                self._rot(prev_basis, bases[0], evens)
                em.emit("R", sorted(e[0] for e in infos[0]))
                em.tick()
            for t in range(6):
                ell = t // 2
                second = t % 2
                ancs = [e[0] for e in infos[ell]]
                side = [(e[1 + second], e[0]) for e in infos[ell]]
                pairs = [(d, a) for d, a in side if d is not None]
                if pairs:
                    em.emit("CX", [q for p in pairs for q in p])
                if second == 0:
                    # Rotate the other parity toward this layer's basis.
                    prev = bases[ell - 1] if ell else prev_basis
                    self._rot(prev, bases[ell], odds)
                    if ell == 1:
                        em.measure("M", [e[0] for e in infos[0]],
                                   [e[3] for e in infos[0]])
                    if ell == 2:
                        em.measure("M", [e[0] for e in infos[1]],
                                   [e[3] for e in infos[1]])
                    if ell == 0 and r > 0:
                        prev_infos = self.layer_info[3 * r - 1]
                        em.measure("M", [e[0] for e in prev_infos],
                                   [e[3] for e in prev_infos])
                else:
                    if ell < 2:
                        self._rot(bases[ell], bases[ell + 1], evens)
                        em.emit("R", sorted(e[0] for e in infos[ell + 1]))
                    elif not last:
                        nxt = self.exp.layers[3 * r + 3].basis
                        self._rot(bases[2], nxt, evens)
                        em.emit("R", sorted(
                            e[0] for e in self.layer_info[3 * r + 3]))
                em.tick()
            prev_basis = bases[2]
        self._final_readout(prev_basis, measure_leftover=True)

    # SI1000: CZ-based with combined measure+reset, nine ticks -------------

    def _run_si1000(self) -> None:
        em, exp = self.em, self.exp
        data = exp.data
        evens = sorted(self.even)
        odds = sorted(set(data) - self.even)
        rounds = len(exp.layers) // 3
        em.emit("R", data)
        em.tick()
        prev_basis = exp.init_basis
        for r in range(rounds):
            bases = [exp.layers[3 * r + k].basis for k in range(3)]
            infos = [self.layer_info[3 * r + k] for k in range(3)]
            self._queue_layer_annotations(r)
            all_anc = [e[0] for lay in infos for e in lay]
            if r == 0:
                em.emit("R", all_anc)
            else:
                prev_infos = [self.layer_info[3 * (r - 1) + k]
                              for k in range(3)]
                em.measure("MR",
                           [e[0] for lay in prev_infos for e in lay],
                           [e[3] for lay in prev_infos for e in lay])
            em.tick()
            em.emit("H", all_anc)
            self._rot(prev_basis, bases[0], evens)
            em.tick()
            for ell in range(3):
                for second in (0, 1):
                    side = [(e[1 + second], e[0]) for e in infos[ell]]
                    pairs = [(d, a) for d, a in side if d is not None]
                    if pairs:
                        em.emit("CZ", [q for p in pairs for q in p])
                    if second == 0:
                        prev = bases[ell - 1] if ell else prev_basis
                        self._rot(prev, bases[ell], odds)
                        if ell > 0:
                            em.emit("H", [e[0] for e in infos[ell - 1]])
                    elif ell < 2:
                        self._rot(bases[ell], bases[ell + 1], evens)
                    em.tick()
            em.emit("H", [e[0] for e in infos[2]])
            em.tick()
            prev_basis = bases[2]
        last_infos = [self.layer_info[len(exp.layers) - 3 + k]
                      for k in range(3)]
        em.measure("M", [e[0] for lay in last_infos for e in lay],
                   [e[3] for lay in last_infos for e in lay])
        self._final_readout(prev_basis, measure_leftover=False)

    def _final_readout(self, prev_basis: str, measure_leftover: bool) -> None:
        em, exp = self.em, self.exp
        if measure_leftover:
            last_infos = self.layer_info[len(exp.layers) - 1]
            em.measure("M", [e[0] for e in last_infos],
                       [e[3] for e in last_infos])
        self._rot(prev_basis, exp.final_basis, exp.data)
        em.tick()
        em.measure("M", exp.data,
                   range(self.final_first_rec,
                         self.final_first_rec + len(exp.data)))
        em.queue(exp.final_annotations)


def decompose_gates(circuit: Circuit, model: NoiseModel) -> Circuit:
    """Lower the abstract MPP circuit into the model's native gates.

    EM3-family models measure parities natively, so decomposition is the
    identity. SD6 pipelines CX-based edge measurements into six ticks per
    round; SI1000 into nine with parallel measure+reset.
    """
    if not model.uses_ancillas:
        return circuit.copy()
    return _Decomposer(_read_abstract(circuit), model).run()


# ----------------------------------------------------------------------
# Noise insertion
# ----------------------------------------------------------------------

_GATE_1Q = ("H", "H_YZ", "H_XY", "C_XYZ", "C_ZYX")


def _em3_mpp_noise(model: NoiseModel, inst: Instruction, is_final: bool):
    """(before, mpp_arg, after) channel instructions for one MPP layer."""
    p = model.p
    before: list[Instruction] = []
    after: list[Instruction] = []
    arg: tuple[float, ...] = ()
    if p == 0:
        return before, arg, after
    if is_final:
        flip = _FLIP_ERROR[next(iter(inst.targets[0]))[1]]
        qubits = tuple(q for t in inst.targets for q in t.qubits)
        before.append(Instruction(flip, qubits, (model.measure_flip,)))
        return before, arg, after
    if model.name == "em3":
        for t in inst.targets:
            before.append(Instruction("COMPOUND_MEAS_ERROR", (t,), (p,)))
        return before, arg, after
    if model.name == "sdem3":
        arg = (p,)
        pairs = [t for t in inst.targets if len(t) == 2]
        singles = [t for t in inst.targets if len(t) == 1]
        if pairs:
            after.append(Instruction(
                "DEPOLARIZE2", tuple(q for t in pairs for q in t.qubits), (p,)))
        if singles:
            after.append(Instruction(
                "DEPOLARIZE1", tuple(q for t in singles for q in t.qubits), (p,)))
        return before, arg, after
    # siem3000
    arg = (p,)
    perp: list[int] = []
    basis = None
    for t in inst.targets:
        basis = next(iter(t))[1]
        if len(t) == 2:
            before.append(Instruction("E", (t,), (p,)))
        perp.extend(t.qubits)
    if perp:
        before.append(Instruction(_FLIP_ERROR[basis], tuple(perp), (p,)))
    return before, arg, after


def apply_noise(circuit: Circuit, model: NoiseModel) -> Circuit:
    """Insert the model's error channels into a (decomposed) circuit.

    SD6/SI1000 inputs still containing multi-qubit MPP instructions are
    decomposed first. With p = 0 the output is the input (decomposed)
    circuit unchanged.
    """
    if model.uses_ancillas and any(
            i.name == "MPP" for i in iter_unrolled(circuit.instructions)):
        circuit = decompose_gates(circuit, model)
    p = model.p
    stream = list(iter_unrolled(circuit.instructions))
    mpp_positions = [k for k, i in enumerate(stream)
                     if i.name in ("MPP", "M", "MR")]
    final_meas_pos = mpp_positions[-1] if mpp_positions else -1

    all_qubits = sorted(circuit.qubit_coords)
    out: list[Instruction] = []
    tick_buf: list[tuple[int, Instruction]] = []

    def flush_tick():
        used: set[int] = set()
        mr_active: set[int] = set()
        for pos, inst in tick_buf:
            if inst.name in ("DETECTOR", "OBSERVABLE_INCLUDE",
                             "SHIFT_COORDS", "QUBIT_COORDS"):
                continue
            for t in inst.targets:
                if isinstance(t, int):
                    used.add(t)
                elif isinstance(t, SparsePauli):
                    used.update(t.qubits)
            if inst.name in ("M", "MR", "R", "MPP"):
                for t in inst.targets:
                    if isinstance(t, int):
                        mr_active.add(t)
                    else:
                        mr_active.update(t.qubits)
        for pos, inst in tick_buf:
            name = inst.name
            if name == "MPP" and p > 0:
                before, arg, after = _em3_mpp_noise(
                    model, inst, pos == final_meas_pos)
                out.extend(before)
                out.append(Instruction("MPP", inst.targets, arg))
                out.extend(after)
            elif name in ("M", "MR") and p > 0:
                out.append(Instruction("X_ERROR", inst.targets,
                                       (model.measure_flip,)))
                out.append(inst)
                if name == "MR":
                    out.append(Instruction("X_ERROR", inst.targets,
                                           (model.init_flip,)))
            elif name == "R" and p > 0:
                out.append(inst)
                out.append(Instruction("X_ERROR", inst.targets,
                                       (model.init_flip,)))
            elif name in ("CX", "CZ") and p > 0:
                out.append(inst)
                out.append(Instruction("DEPOLARIZE2", inst.targets,
                                       (model.two_qubit_gate,)))
            elif name in _GATE_1Q and p > 0:
                out.append(inst)
                out.append(Instruction("DEPOLARIZE1", inst.targets,
                                       (model.one_qubit_gate,)))
            else:
                out.append(inst)
        if p > 0 and used:
            idle = [q for q in all_qubits if q not in used]
            if idle and model.idle > 0:
                out.append(Instruction("DEPOLARIZE1", tuple(idle),
                                       (model.idle,)))
            if mr_active and model.resonator_idle > 0:
                resting = [q for q in all_qubits if q not in mr_active]
                if resting:
                    out.append(Instruction("DEPOLARIZE1", tuple(resting),
                                           (model.resonator_idle,)))
        tick_buf.clear()

    for pos, inst in enumerate(stream):
        if inst.name == "TICK":
            flush_tick()
            out.append(inst)
        else:
            tick_buf.append((pos, inst))
    flush_tick()
    return Circuit(out)


def noisy_memory_circuit(spec: ExperimentSpec, model: NoiseModel) -> Circuit:
    """Build, decompose, and noise a memory experiment in one call."""
    return apply_noise(build_memory_circuit(spec), model)
