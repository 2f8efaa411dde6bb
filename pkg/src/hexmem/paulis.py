"""Sparse Pauli products over indexed qubits.

Signs are intentionally not tracked: all measurement conventions in this
package use unsigned Pauli products, and outcome bookkeeping lives in the
simulators.
"""

from __future__ import annotations

from typing import Iterable, Iterator, Mapping

BASES = ("X", "Y", "Z")

# Product table for single-qubit Paulis with phases dropped: X*Y -> Z etc.,
# P*P -> identity (absent from the sparse map).
_MUL = {
    ("X", "Y"): "Z",
    ("Y", "X"): "Z",
    ("Y", "Z"): "X",
    ("Z", "Y"): "X",
    ("X", "Z"): "Y",
    ("Z", "X"): "Y",
}


class SparsePauli:
    """An unsigned tensor product of X/Y/Z over non-negative qubit indices.

    Identity factors are never stored and qubit indices are unique, so two
    SparsePauli values are equal iff they act identically (up to sign).
    Instances are immutable and hashable.
    """

    __slots__ = ("_terms", "_order", "_hash")

    def __init__(self, terms: Mapping[int, str] | Iterable[tuple[int, str]] = ()):
        items = dict(terms)
        for q, b in items.items():
            if not isinstance(q, int) or q < 0:
                raise ValueError(f"qubit index must be a non-negative int, got {q!r}")
            if b not in BASES:
                raise ValueError(f"basis must be one of X/Y/Z, got {b!r}")
        # Canonical order for equality/hashing; construction order kept so
        # serialized targets match reference listings byte for byte.
        self._terms: tuple[tuple[int, str], ...] = tuple(sorted(items.items()))
        self._order: tuple[tuple[int, str], ...] = tuple(items.items())
        self._hash = hash(self._terms)

    @staticmethod
    def from_string(text: str) -> "SparsePauli":
        """Parse a combined target like ``"X1*X2"`` or ``"Y0"``."""
        terms: dict[int, str] = {}
        for part in text.split("*"):
            part = part.strip()
            if len(part) < 2 or part[0] not in BASES:
                raise ValueError(f"malformed Pauli target {part!r}")
            try:
                q = int(part[1:])
            except ValueError:
                raise ValueError(f"malformed Pauli target {part!r}") from None
            if q in terms:
                raise ValueError(f"qubit {q} repeated in Pauli product {text!r}")
            terms[q] = part[0]
        return SparsePauli(terms)

    @staticmethod
    def single(qubit: int, basis: str) -> "SparsePauli":
        return SparsePauli({qubit: basis})

    @property
    def terms(self) -> dict[int, str]:
        return dict(self._terms)

    @property
    def qubits(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self._terms)

    @property
    def weight(self) -> int:
        return len(self._terms)

    def basis_on(self, qubit: int) -> str | None:
        for q, b in self._terms:
            if q == qubit:
                return b
        return None

    def commutes_with(self, other: "SparsePauli") -> bool:
        """True iff the two products commute.

        They anticommute on each shared qubit with differing bases; the
        products commute iff that count is even.
        """
        mine = dict(self._terms)
        clashes = 0
        for q, b in other._terms:
            ob = mine.get(q)
            if ob is not None and ob != b:
                clashes += 1
        return clashes % 2 == 0

    def __mul__(self, other: "SparsePauli") -> "SparsePauli":
        terms = dict(self._terms)
        for q, b in other._terms:
            mine = terms.get(q)
            if mine is None:
                terms[q] = b
            elif mine == b:
                del terms[q]
            else:
                terms[q] = _MUL[(mine, b)]
        return SparsePauli(terms)

    def restricted_to(self, qubits: Iterable[int]) -> "SparsePauli":
        keep = set(qubits)
        return SparsePauli({q: b for q, b in self._terms if q in keep})

    def __iter__(self) -> Iterator[tuple[int, str]]:
        return iter(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SparsePauli) and self._terms == other._terms

    def __hash__(self) -> int:
        return self._hash

    def __str__(self) -> str:
        if not self._terms:
            return "I"
        return "*".join(f"{b}{q}" for q, b in self._order)

    def __repr__(self) -> str:
        return f"SparsePauli({dict(self._terms)!r})"
