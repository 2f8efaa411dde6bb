"""Circuit intermediate representation with a Stim-compatible text format.

The instruction vocabulary is the subset needed for planar honeycomb memory
experiments plus one extension:

* ``QUBIT_COORDS, R, H, H_YZ, H_XY, C_XYZ, C_ZYX, CX, CZ, M, MR, MPP, TICK,
  DETECTOR, OBSERVABLE_INCLUDE, SHIFT_COORDS, REPEAT`` and the noise channels
  ``X_ERROR, Y_ERROR, Z_ERROR, DEPOLARIZE1, DEPOLARIZE2, E`` follow stim's
  text conventions, so noiseless circuits diff cleanly against reference
  files.
* ``COMPOUND_MEAS_ERROR(p) <pauli-product>`` is our extension: with
  probability p, draw uniformly from {I,X,Y,Z}^n x {flip, no flip} (the
  identity/no-flip element included), apply the Pauli part just before the
  next MPP instruction, and flip the record of that MPP's combined target
  with identical support and bases.

Record targets are strictly negative lookbacks (``rec[-k]``) into the
measurement history, resolved over the unrolled instruction stream.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Union

from .paulis import SparsePauli


@dataclass(frozen=True)
class Rec:
    """A measurement-record lookback target; ``offset`` is strictly negative."""

    offset: int

    def __post_init__(self):
        if self.offset >= 0:
            raise ValueError(f"record lookback must be negative, got {self.offset}")

    def __str__(self) -> str:
        return f"rec[{self.offset}]"


Target = Union[int, Rec, SparsePauli]

# Instructions whose targets are single qubit indices.
_QUBIT_GATES = {"R", "H", "H_YZ", "H_XY", "C_XYZ", "C_ZYX", "M", "MR",
                "X_ERROR", "Y_ERROR", "Z_ERROR", "DEPOLARIZE1"}
_PAIR_GATES = {"CX", "CZ", "DEPOLARIZE2"}
_PAULI_GATES = {"MPP", "E", "COMPOUND_MEAS_ERROR"}
_REC_GATES = {"DETECTOR", "OBSERVABLE_INCLUDE"}
_NOISE_GATES = {"X_ERROR", "Y_ERROR", "Z_ERROR", "DEPOLARIZE1", "DEPOLARIZE2",
                "E", "COMPOUND_MEAS_ERROR"}
_ALIASES = {"CNOT": "CX", "MZ": "M", "MRZ": "MR", "CORRELATED_ERROR": "E"}
KNOWN_INSTRUCTIONS = (_QUBIT_GATES | _PAIR_GATES | _PAULI_GATES | _REC_GATES
                      | {"QUBIT_COORDS", "TICK", "SHIFT_COORDS", "REPEAT"})


@dataclass(frozen=True)
class Instruction:
    """One circuit instruction.

    ``body`` is only populated for REPEAT, whose repetition count is
    ``args[0]``.
    """

    name: str
    targets: tuple[Target, ...] = ()
    args: tuple[float, ...] = ()
    body: tuple["Instruction", ...] = ()

    def __post_init__(self):
        if self.name not in KNOWN_INSTRUCTIONS:
            raise ValueError(f"unknown instruction {self.name!r}")
        if self.name == "REPEAT":
            if not self.body or not self.args or int(self.args[0]) < 1:
                raise ValueError("REPEAT requires a body and count >= 1")
        if self.name in _NOISE_GATES or (self.name == "MPP" and self.args):
            p = self.args[0]
            if not (0.0 <= p <= 1.0):
                raise ValueError(f"probability argument {p} outside [0, 1]")

    @property
    def repeat_count(self) -> int:
        return int(self.args[0])

    @property
    def num_records(self) -> int:
        if self.name in ("M", "MR", "MPP"):
            return len(self.targets)
        return 0

    @property
    def is_noise(self) -> bool:
        return self.name in _NOISE_GATES or (self.name == "MPP" and bool(self.args))


def _fmt_num(v: float) -> str:
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


class Circuit:
    """An ordered instruction list plus qubit coordinate metadata.

    Immutable by convention after construction: builders append to
    ``instructions`` while assembling, then the circuit is shared read-only.
    """

    def __init__(self, instructions: Iterable[Instruction] = ()):
        self.instructions: list[Instruction] = list(instructions)

    # ------------------------------------------------------------------
    # Metadata
    # ------------------------------------------------------------------

    @property
    def qubit_coords(self) -> dict[int, tuple[float, float]]:
        coords: dict[int, tuple[float, float]] = {}
        for inst in self.instructions:
            if inst.name == "QUBIT_COORDS":
                (q,) = inst.targets
                coords[int(q)] = (inst.args[0], inst.args[1])
        return coords

    @property
    def num_qubits(self) -> int:
        best = -1
        for inst in iter_unrolled(self.instructions):
            for t in inst.targets:
                if isinstance(t, int):
                    best = max(best, t)
                elif isinstance(t, SparsePauli):
                    best = max(best, max(t.qubits, default=-1))
        return best + 1

    @property
    def num_measurements(self) -> int:
        return sum(i.num_records for i in iter_unrolled(self.instructions))

    @property
    def num_detectors(self) -> int:
        return sum(1 for i in iter_unrolled(self.instructions) if i.name == "DETECTOR")

    @property
    def num_observables(self) -> int:
        best = -1
        for i in iter_unrolled(self.instructions):
            if i.name == "OBSERVABLE_INCLUDE":
                best = max(best, int(i.args[0]))
        return best + 1

    def append(self, name: str, targets: Iterable[Target] = (),
               args: Iterable[float] = (), body: Iterable[Instruction] = ()) -> None:
        self.instructions.append(
            Instruction(name, tuple(targets), tuple(args), tuple(body)))

    def copy(self) -> "Circuit":
        return Circuit(self.instructions)

    # ------------------------------------------------------------------
    # Validation
    # ------------------------------------------------------------------

    def validate(self) -> None:
        """Check coordinate coverage and record-lookback resolution.

        Raises ValueError on a dangling ``rec[]`` reference or an
        instruction touching a qubit with no declared coordinates.
        """
        coords = self.qubit_coords
        seen = 0
        for inst in iter_unrolled(self.instructions):
            for t in inst.targets:
                if isinstance(t, Rec):
                    if seen + t.offset < 0:
                        raise ValueError(
                            f"dangling record reference rec[{t.offset}] "
                            f"with only {seen} prior measurements")
                elif isinstance(t, int) and inst.name != "QUBIT_COORDS":
                    if t not in coords:
                        raise ValueError(f"qubit {t} has no coordinates")
                elif isinstance(t, SparsePauli):
                    for q in t.qubits:
                        if q not in coords:
                            raise ValueError(f"qubit {q} has no coordinates")
            seen += inst.num_records

    # ------------------------------------------------------------------
    # Equality on the unrolled stream
    # ------------------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Circuit):
            return NotImplemented
        return list(iter_unrolled(self.instructions)) == list(iter_unrolled(other.instructions))

    def __repr__(self) -> str:
        return f"<Circuit of {len(self.instructions)} instructions>"

    def __str__(self) -> str:
        return serialize_circuit(self)


def iter_unrolled(instructions: Iterable[Instruction]) -> Iterator[Instruction]:
    """Yield instructions with REPEAT blocks expanded."""
    for inst in instructions:
        if inst.name == "REPEAT":
            for _ in range(inst.repeat_count):
                yield from iter_unrolled(inst.body)
        else:
            yield inst


def unroll(circuit: Circuit) -> Circuit:
    """Return an equivalent circuit with no REPEAT instructions.

    Measurement-record and detector semantics are unchanged because
    lookbacks are relative offsets into the unrolled history.
    """
    return Circuit(iter_unrolled(circuit.instructions))


# ----------------------------------------------------------------------
# Text format
# ----------------------------------------------------------------------

def _serialize_targets(inst: Instruction) -> str:
    parts: list[str] = []
    for t in inst.targets:
        if isinstance(t, Rec):
            parts.append(str(t))
        elif isinstance(t, SparsePauli):
            if inst.name == "E":
                # stim spells correlated errors with space-separated factors.
                parts.extend(f"{b}{q}" for q, b in t)
            else:
                parts.append(str(t))
        else:
            parts.append(str(t))
    return " ".join(parts)


def serialize_circuit(circuit: Circuit) -> str:
    """Render the circuit in the text format; parses back to an equal circuit."""
    lines: list[str] = []

    def emit(instructions: Iterable[Instruction], indent: str) -> None:
        for inst in instructions:
            if inst.name == "REPEAT":
                lines.append(f"{indent}REPEAT {inst.repeat_count} {{")
                emit(inst.body, indent + "    ")
                lines.append(f"{indent}}}")
                continue
            head = inst.name
            if inst.args:
                head += "(" + ", ".join(_fmt_num(a) for a in inst.args) + ")"
            tail = _serialize_targets(inst)
            lines.append(f"{indent}{head} {tail}".rstrip())
        return None

    emit(circuit.instructions, "")
    return "\n".join(lines) + ("\n" if lines else "")


import re

_INSTRUCTION_RE = re.compile(r"^([A-Z][A-Z_0-9]*)(\(([^)]*)\))?\s*(.*)$")


class CircuitSyntaxError(ValueError):
    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


def _parse_targets(name: str, raw: list[str], line_number: int) -> tuple[Target, ...]:
    targets: list[Target] = []
    try:
        if name in _REC_GATES:
            for tok in raw:
                if not (tok.startswith("rec[") and tok.endswith("]")):
                    raise ValueError(f"expected rec[...] target, got {tok!r}")
                targets.append(Rec(int(tok[4:-1])))
        elif name == "E":
            # One combined product from space-separated factors.
            if raw:
                targets.append(SparsePauli.from_string("*".join(raw)))
        elif name in _PAULI_GATES:
            for tok in raw:
                targets.append(SparsePauli.from_string(tok))
        else:
            for tok in raw:
                targets.append(int(tok))
    except ValueError as err:
        raise CircuitSyntaxError(str(err), line_number) from None
    return tuple(targets)


def parse_circuit(text: str) -> Circuit:
    """Parse circuit text; raises CircuitSyntaxError with a line number."""
    stack: list[list[Instruction]] = [[]]
    repeat_counts: list[int] = []

    for line_number, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.split("#", 1)[0].strip()
        if not line:
            continue
        if line == "}":
            if len(stack) == 1:
                raise CircuitSyntaxError("unmatched '}'", line_number)
            body = stack.pop()
            count = repeat_counts.pop()
            if not body:
                raise CircuitSyntaxError("empty REPEAT block", line_number)
            stack[-1].append(Instruction("REPEAT", (), (count,), tuple(body)))
            continue
        if line.startswith("REPEAT"):
            rest = line[len("REPEAT"):].strip()
            if not rest.endswith("{"):
                raise CircuitSyntaxError("REPEAT must open a '{' block", line_number)
            try:
                count = int(rest[:-1].strip())
            except ValueError:
                raise CircuitSyntaxError(f"bad REPEAT count {rest[:-1].strip()!r}",
                                         line_number) from None
            if count < 1:
                raise CircuitSyntaxError("REPEAT count must be >= 1", line_number)
            stack.append([])
            repeat_counts.append(count)
            continue

        m = _INSTRUCTION_RE.match(line)
        if not m:
            raise CircuitSyntaxError(f"malformed instruction {line!r}", line_number)
        name, argtext, tail = m.group(1), m.group(3), m.group(4)
        raw_targets = tail.split()
        if argtext is not None:
            try:
                args = tuple(float(a) for a in argtext.split(",") if a.strip())
            except ValueError:
                raise CircuitSyntaxError(f"bad arguments in {line!r}", line_number) from None
        else:
            args = ()
        name = _ALIASES.get(name, name)
        if name not in KNOWN_INSTRUCTIONS:
            raise CircuitSyntaxError(f"unknown instruction {name!r}", line_number)

        targets = _parse_targets(name, raw_targets, line_number)
        try:
            stack[-1].append(Instruction(name, targets, args))
        except ValueError as err:
            raise CircuitSyntaxError(str(err), line_number) from None

    if len(stack) != 1:
        raise CircuitSyntaxError("unterminated REPEAT block", line_number)
    circuit = Circuit(stack[0])
    # Surface dangling rec[] references at parse time.
    seen = 0
    for inst in iter_unrolled(circuit.instructions):
        for t in inst.targets:
            if isinstance(t, Rec) and seen + t.offset < 0:
                raise ValueError(
                    f"dangling record reference rec[{t.offset}] "
                    f"(only {seen} prior measurements)")
        seen += inst.num_records
    return circuit


def strip_noise(circuit: Circuit) -> Circuit:
    """Drop noise channels and MPP flip arguments, preserving structure."""
    def scrub(instructions: Iterable[Instruction]) -> list[Instruction]:
        out = []
        for inst in instructions:
            if inst.name in _NOISE_GATES:
                continue
            if inst.name == "REPEAT":
                out.append(Instruction("REPEAT", (), inst.args, tuple(scrub(inst.body))))
            elif inst.name == "MPP" and inst.args:
                out.append(Instruction("MPP", inst.targets))
            else:
                out.append(inst)
        return out

    return Circuit(scrub(circuit.instructions))
