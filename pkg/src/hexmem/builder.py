"""Noiseless planar honeycomb memory-experiment circuits.

A memory experiment is: transversal init, two boot rounds, a repeated
two-round block of the six edge-measurement layers X Y Z X Z Y, and a
transversal readout that closes the open face checks and the logical
observable.

Detector discovery is generic: every face accumulates a "collection" each
time the two most recent layers measure its two edge colors; consecutive
collections are compared and a detector is emitted exactly when the
symbolic stabilizer-flow tableau proves the comparison deterministic.
Boundary-face skips, the never-collected corner faces, boot-time special
cases, and the final closures all fall out of that rule. A bulk-face
comparison that fails validation is a build error, not a silent drop.
"""

from __future__ import annotations

from dataclasses import dataclass

from .circuit import Circuit, Instruction, Rec
from .lattice import Edge, Face, Patch, PatchSpec, cut_patch
from .paulis import SparsePauli
from .tableau import MeasExpr, SymbolicTableau

LAYER_SEQUENCE = "XYZXZY"
OBSERVABLE_VERTICAL = "V"
OBSERVABLE_HORIZONTAL = "H"

# Transversal init/readout basis per protected observable. The vertical
# observable starts as an X string; the horizontal one starts as a Y string
# (an X-basis start provably anticommutes with the first green layer).
INIT_BASIS = {"V": "X", "H": "Y"}
_INIT_ROTATION = {"X": "H", "Y": "H_YZ"}


class BuildError(RuntimeError):
    """A schedule/flow mismatch while constructing a circuit."""


@dataclass(frozen=True)
class ExperimentSpec:
    """A memory experiment: patch, protected observable, length, model tag.

    ``rounds`` counts edge-measurement rounds of three layers each the way
    the reference listing does: two boot rounds, (rounds-4)/2 repetitions of
    a two-round block, and a final transversal closure counted as two more.
    ``model`` only tags downstream noise/decomposition choices.
    """

    patch: PatchSpec
    observable: str = OBSERVABLE_VERTICAL
    rounds: int = 6
    model: str = "em3"

    def __post_init__(self):
        if self.observable not in ("V", "H"):
            raise ValueError("observable must be 'V' or 'H'")
        if self.rounds < 6 or self.rounds % 2:
            raise ValueError("rounds must be an even integer >= 6")

    @property
    def repeat_count(self) -> int:
        return (self.rounds - 4) // 2


def _third_basis(a: str, b: str) -> str:
    return ({"X", "Y", "Z"} - {a, b}).pop()


# ----------------------------------------------------------------------
# Observable dances
# ----------------------------------------------------------------------

def _vertical_dance(patch: Patch) -> tuple[dict[str, list[Edge]], SparsePauli]:
    spec = patch.spec
    h = spec.height
    if spec.sheared:
        return _sheared_vertical_dance(patch)
    column = spec.width // 2
    col_qubits = {y: patch.index_of.get((column, y)) for y in range(h)}
    if any(q is None for q in col_qubits.values()):
        raise BuildError(
            f"no full-height column at x={column} for the vertical "
            f"observable on {spec}")
    greens: list[Edge] = []
    blues: list[Edge] = []
    for e in patch.edges:
        if e.family != "v" or e.anchor[0] != column:
            continue
        if e.basis == "Y":
            greens.append(e)
        elif e.basis == "Z":
            blues.append(e)
    initial = SparsePauli({patch.index_of[(column, y)]: "X"
                           for y in range(h) if y % 3 != 2})
    return {"X": [], "Y": greens, "Z": blues}, initial


def _sheared_vertical_dance(patch: Patch) -> tuple[dict[str, list[Edge]], SparsePauli]:
    """Vertical observable on a sheared patch: the string drifts one column
    right every three rows, staying parallel to the diagonal boundaries.

    Pairs sit on the green vertical edges (1+k, 3k); the connectors are the
    blue horizontal (1+k, 3k+1)-(2+k, 3k+1), the blue vertical at column
    2+k, and the two boundary singles.
    """
    spec = patch.spec
    h = spec.height
    segments = h // 3
    lookup = patch.edge_by_key
    greens: list[Edge] = []
    blues: list[Edge] = []
    try:
        blues.append(lookup[("v", 1, -1)])  # bottom boundary single
        for k in range(segments):
            c = 1 + k
            greens.append(lookup[("v", c, 3 * k)])
            if k + 1 < segments:
                blues.append(lookup[("h", c, 3 * k + 1)])
                blues.append(lookup[("v", c + 1, 3 * k + 2)])
        blues.append(lookup[("h", segments, h - 2)])
        blues.append(lookup[("v", segments + 1, h - 1)])  # top single
    except KeyError as err:
        raise BuildError(
            f"sheared vertical observable path missing edge {err} on {spec}")
    initial = SparsePauli({q: "X" for e in greens for q in e.qubits})
    return {"X": [], "Y": greens, "Z": blues}, initial


def _horizontal_dance(patch: Patch) -> tuple[dict[str, list[Edge]], SparsePauli]:
    h = patch.spec.height
    y0 = (h // 6) * 3 + 1
    blues = [e for e in patch.edges if e.family == "h" and e.anchor[1] == y0]
    greens = [e for e in patch.edges if e.family == "h" and e.anchor[1] == y0 + 1]
    rows = {q for (x, y), q in patch.index_of.items() if y in (y0, y0 + 1)}
    initial = SparsePauli({q: "Y" for q in rows})
    return {"X": [], "Y": greens, "Z": blues}, initial


def observable_path(spec: ExperimentSpec) -> list[tuple[str, tuple[SparsePauli, ...]]]:
    """The per-layer edge products multiplied into the logical observable.

    One entry per layer of the repeating six-layer cycle; red layers
    contribute no multiplications.
    """
    patch = cut_patch(spec.patch)
    dance = (_vertical_dance if spec.observable == "V" else _horizontal_dance)
    updates, _ = dance(patch)
    return [(basis, tuple(e.pauli for e in updates[basis]))
            for basis in LAYER_SEQUENCE]


# ----------------------------------------------------------------------
# Construction
# ----------------------------------------------------------------------

class _Builder:
    def __init__(self, spec: ExperimentSpec):
        self.spec = spec
        self.patch = cut_patch(spec.patch)
        self.n = self.patch.num_qubits
        self.init_basis = INIT_BASIS[spec.observable]
        dance = (_vertical_dance if spec.observable == "V"
                 else _horizontal_dance)
        self.updates, self.obs = dance(self.patch)
        other = (_horizontal_dance if spec.observable == "V"
                 else _vertical_dance)
        try:
            self.other_updates, self.other_obs = other(self.patch)
        except BuildError:
            # Tall sheared patches have no full column; the untested
            # observable is then not tracked.
            self.other_updates, self.other_obs = None, None

        self.tableau = SymbolicTableau(self.n)
        self.exprs: list[MeasExpr] = []
        self.obs_expr = MeasExpr(0, 0)
        self.num_records = 0
        self.edge_last_rec: dict[tuple, int] = {}
        self.face_prev: dict[tuple, frozenset[int]] = {}
        self.out: list[Instruction] = []
        self.faces_by_basis: dict[str, list[Face]] = {"X": [], "Y": [], "Z": []}
        for f in self.patch.faces:
            if not f.never_collected:
                self.faces_by_basis[f.basis].append(f)

    # -- emission helpers ------------------------------------------------

    def _emit(self, name, targets=(), args=()):
        self.out.append(Instruction(name, tuple(targets), tuple(args)))

    def _emit_recs(self, name, args, rec_indices):
        targets = tuple(Rec(r - self.num_records) for r in sorted(rec_indices))
        self.out.append(Instruction(name, targets, tuple(args)))

    def _measure_layer(self, paulis: list[SparsePauli]) -> list[int]:
        self._emit("MPP", paulis)
        indices = []
        for p in paulis:
            self.exprs.append(self.tableau.measure_pauli(p))
            indices.append(self.num_records)
            self.num_records += 1
        return indices

    def _xor_expr(self, recs) -> MeasExpr:
        acc = MeasExpr(0, 0)
        for r in recs:
            acc = acc ^ self.exprs[r]
        return acc

    # -- main sections -----------------------------------------------------

    def init_segment(self) -> None:
        for q, (x, y) in enumerate(self.patch.coords):
            self._emit("QUBIT_COORDS", (q,), (float(x), float(y)))
        everyone = tuple(range(self.n))
        self._emit("R", everyone)
        self.tableau_reset_all()
        self._emit("TICK")
        rot = _INIT_ROTATION[self.init_basis]
        self._emit(rot, everyone)
        if rot == "H":
            self.tableau.h(everyone)
        else:
            self.tableau.h_yz(everyone)
        self._emit("TICK")

    def tableau_reset_all(self) -> None:
        for q in range(self.n):
            self.tableau.reset(q)

    def layer(self, t: int) -> None:
        basis = LAYER_SEQUENCE[t % 6]
        edges = self.patch.edges_of_basis(basis)
        recs = self._measure_layer([e.pauli for e in edges])
        for e, r in zip(edges, recs):
            self.edge_last_rec[e.key] = r

        self._check_observables(basis)
        upd = self.updates[basis]
        if upd:
            upd_recs = [self.edge_last_rec[e.key] for e in upd]
            self._emit_recs("OBSERVABLE_INCLUDE", (0.0,), upd_recs)
            for e in upd:
                self.obs = self.obs * e.pauli
            self.obs_expr = self.obs_expr ^ self._xor_expr(upd_recs)
        if self.other_updates is not None:
            for e in self.other_updates[basis]:
                self.other_obs = self.other_obs * e.pauli

        if t == 0:
            for e, r in zip(edges, recs):
                if self.exprs[r].deterministic:
                    mx, my = e.midpoint
                    self._emit_recs("DETECTOR", (mx, my, 0.0), [r])
        else:
            prev_basis = LAYER_SEQUENCE[(t - 1) % 6]
            self._face_detectors(basis, prev_basis, in_boot=t < 6)
        self._emit("SHIFT_COORDS", (), (0.0, 0.0, 1.0))
        self._emit("TICK")

    def _check_observables(self, basis: str) -> None:
        for e in self.patch.edges_of_basis(basis):
            if not self.obs.commutes_with(e.pauli):
                raise BuildError(
                    f"observable anticommutes with {e.pauli} in {basis} layer")
            if self.other_obs is not None and not self.other_obs.commutes_with(e.pauli):
                raise BuildError(
                    f"companion observable anticommutes with {e.pauli}")

    def _face_detectors(self, basis: str, prev_basis: str, in_boot: bool) -> None:
        color = _third_basis(basis, prev_basis)
        for face in self.faces_by_basis[color]:
            group = frozenset(self.edge_last_rec[e.key] for e in face.edges)
            prev = self.face_prev.get(face.center)
            if prev is None:
                part = frozenset(self.edge_last_rec[e.key]
                                 for e in face.edges_of_basis(basis))
                candidates = [group, part]
            else:
                candidates = [prev ^ group]
            for cand in candidates:
                if self._xor_expr(cand).deterministic:
                    self._emit_recs("DETECTOR",
                                    (face.center[0], face.center[1], 0.0), cand)
                    break
            else:
                if face.is_bulk and prev is not None and not in_boot:
                    raise BuildError(
                        f"steady-state bulk face {face.center} lost determinism")
            self.face_prev[face.center] = group

    def final_segment(self) -> None:
        basis = self.init_basis
        paulis = [SparsePauli.single(q, basis) for q in range(self.n)]
        recs = self._measure_layer(paulis)
        final_rec = dict(zip(range(self.n), recs))

        def close(faces, group_of, t_offset):
            for face in faces:
                prev = self.face_prev.get(face.center)
                if prev is None:
                    continue
                cand = prev ^ group_of(face)
                if self._xor_expr(cand).deterministic:
                    self._emit_recs(
                        "DETECTOR",
                        (face.center[0], face.center[1], float(t_offset)), cand)
                elif face.is_bulk:
                    raise BuildError(
                        f"bulk face {face.center} failed to close at readout")

        # Faces whose stabilizer is the readout basis are read directly.
        close(self.faces_by_basis[basis],
              lambda f: frozenset(final_rec[q] for q in f.qubits), 1)
        # The readout also stands in for one more edge layer of its basis.
        last_basis = LAYER_SEQUENCE[5]
        if last_basis != basis:
            color = _third_basis(last_basis, basis)

            def virtual_group(f):
                group = {self.edge_last_rec[e.key]
                         for e in f.edges_of_basis(last_basis)}
                for e in f.edges_of_basis(basis):
                    group.update(final_rec[q] for q in e.qubits)
                return frozenset(group)

            close(self.faces_by_basis[color], virtual_group, 0)
        else:
            # Readout in the last layer's basis re-reads each of its edges
            # directly; without these per-edge closures a data flip between
            # that layer and the readout would escape undetected.
            for e in self.patch.edges_of_basis(last_basis):
                cand = frozenset({self.edge_last_rec[e.key]}
                                 | {final_rec[q] for q in e.qubits})
                expr = self._xor_expr(cand)
                if not expr.deterministic:
                    raise BuildError(
                        f"time-boundary edge closure at {e.midpoint} "
                        "is not deterministic")
                mx, my = e.midpoint
                self._emit_recs("DETECTOR", (mx, my, 0.0), cand)

        support = self.obs.qubits
        if any(b != basis for _, b in self.obs):
            raise BuildError("observable not in readout basis at closure")
        obs_recs = [final_rec[q] for q in support]
        self._emit_recs("OBSERVABLE_INCLUDE", (0.0,), obs_recs)
        self.obs_expr = self.obs_expr ^ self._xor_expr(obs_recs)
        if not self.obs_expr.deterministic:
            raise BuildError("logical observable is not deterministic")


def build_memory_circuit(spec: ExperimentSpec) -> Circuit:
    """Build the noiseless memory circuit for ``spec``.

    Every emitted detector and the logical observable are validated to be
    deterministic by symbolic stabilizer flow; the repeating block is
    checked to be cycle-uniform before it is folded into a REPEAT.
    """
    b = _Builder(spec)
    b.init_segment()
    marks = [len(b.out)]
    # Boot (two rounds) plus three explicit cycles: the first repeat
    # iteration reaches back into the boot, the later two must be
    # identical, proving the steady state.
    for t in range(24):
        b.layer(t)
        if t % 6 == 5:
            marks.append(len(b.out))
    boot = b.out[marks[0]:marks[1]]
    cycles = [b.out[marks[i]:marks[i + 1]] for i in range(1, 4)]
    if not (cycles[0] == cycles[1] == cycles[2]):
        raise BuildError("repeat block is not cycle-uniform")
    b.final_segment()
    final = b.out[marks[4]:]

    header = b.out[:marks[0]]
    body = tuple(cycles[0])
    circuit = Circuit(header + boot)
    circuit.instructions.append(
        Instruction("REPEAT", (), (float(spec.repeat_count),), body))
    circuit.instructions.extend(final)
    circuit.validate()
    return circuit


@dataclass(frozen=True)
class DetectorPlan:
    """Steady-state detector schedule: which faces announce at which layer.

    ``slots[k]`` lists, for cycle layer k (basis ``LAYER_SEQUENCE[k]``), the
    (face center, face basis, relative record offsets) of every detector.
    """

    slots: tuple[tuple[tuple[tuple[float, float], str, tuple[int, ...]], ...], ...]


def detector_plan(spec: ExperimentSpec) -> DetectorPlan:
    """Extract the per-cycle detector comparison plan from the built circuit."""
    circuit = build_memory_circuit(spec)
    patch = cut_patch(spec.patch)
    face_basis = {f.center: f.basis for f in patch.faces}
    repeat = next(i for i in circuit.instructions if i.name == "REPEAT")
    slots: list[list] = []
    current: list = []
    pending: list[list] = []
    for inst in repeat.body:
        if inst.name == "MPP":
            current = []
            pending.append(current)
        elif inst.name == "DETECTOR":
            center = (inst.args[0], inst.args[1])
            offsets = tuple(t.offset for t in inst.targets)
            current.append((center, face_basis[center], offsets))
    return DetectorPlan(slots=tuple(tuple(s) for s in pending))
