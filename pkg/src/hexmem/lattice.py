"""Hexagonal-lattice patches with typed boundaries.

The brick-wall embedding places data qubits on integer coordinates:

* vertical edges (x, y)-(x, y+1) carry basis ``"YXZ"[y % 3]``,
* horizontal edges (x, y)-(x+1, y) exist iff x+y is even and carry basis
  ``"YXZ"[(y + 1) % 3]``,
* hexagonal faces have top-left corners (x, y) with x+y even, span columns
  {x, x+1} and rows {y, y+1, y+2}, and carry the third basis
  ``"YXZ"[(y + 2) % 3]``.

A patch is cut out of the infinite tiling purely subtractively: edges are
kept or discarded based on their midpoint, qubits that lose edges drop out,
and surviving edges that lost one endpoint become single-qubit boundary
measurements of the same basis. The straight cut oscillates so the two
vertical boundaries run straight up-and-down; the sheared cut follows the
lattice diagonal (requires even width).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

from .paulis import SparsePauli

EDGE_BASIS = "YXZ"

# Left-boundary cut offsets for the straight (squiggling) geometry, keyed by
# edge-midpoint y mod 6. Chosen so the cut maximizes graphlike distance;
# fixed against the reference 4x6 coordinate set.
_SQUIGGLE_OFFSETS = {
    0.0: -0.25, 0.5: -0.25, 1.0: 0.25, 1.5: 0.25, 2.0: 0.25, 2.5: 0.25,
    3.0: 0.25, 3.5: -0.25, 4.0: -0.25, 4.5: -0.25, 5.0: -0.75, 5.5: -0.25,
}


@dataclass(frozen=True)
class PatchSpec:
    """Rectangular patch request: data-qubit columns x rows, geometry."""

    width: int
    height: int
    sheared: bool = False

    def __post_init__(self):
        if self.width < 2:
            raise ValueError("patch width must be >= 2")
        if self.height < 3 or self.height % 3:
            raise ValueError("patch height must be a positive multiple of 3")
        if self.sheared and self.width % 2:
            raise ValueError("sheared geometry requires even width")

    @property
    def geometry(self) -> str:
        return "sheared" if self.sheared else "straight"


@dataclass(frozen=True)
class Edge:
    """A kept (possibly truncated) parity-measurement edge.

    ``anchor`` is the infinite-lattice low/left endpoint; ``qubits`` holds
    the surviving data-qubit indices, even-sublattice endpoint first.
    """

    family: str  # "v" or "h"
    anchor: tuple[int, int]
    basis: str
    qubits: tuple[int, ...]
    coords: tuple[tuple[int, int], ...]

    @property
    def key(self) -> tuple[str, int, int]:
        return (self.family, self.anchor[0], self.anchor[1])

    @property
    def is_single(self) -> bool:
        return len(self.qubits) == 1

    @property
    def midpoint(self) -> tuple[float, float]:
        x, y = self.anchor
        return (x, y + 0.5) if self.family == "v" else (x + 0.5, y)

    @property
    def pauli(self) -> SparsePauli:
        return SparsePauli({q: self.basis for q in self.qubits})


@dataclass(frozen=True)
class Face:
    """A hexagonal face truncated to the patch."""

    center: tuple[float, float]
    basis: str
    qubits: tuple[int, ...]
    edges: tuple[Edge, ...]

    @property
    def is_bulk(self) -> bool:
        return len(self.qubits) == 6

    @functools.cached_property
    def single_bases(self) -> frozenset[str]:
        return frozenset(e.basis for e in self.edges if e.is_single)

    @property
    def leaf_basis(self) -> str | None:
        """The cut-edge basis for a boundary face; None for bulk faces."""
        bases = self.single_bases
        return next(iter(bases)) if len(bases) == 1 else None

    @property
    def never_collected(self) -> bool:
        """Corner faces whose cut edges mix colors form no detectors."""
        return len(self.single_bases) > 1

    def edges_of_basis(self, basis: str) -> tuple[Edge, ...]:
        return tuple(e for e in self.edges if e.basis == basis)

    @property
    def stabilizer(self) -> SparsePauli:
        return SparsePauli({q: self.basis for q in self.qubits})


@dataclass
class Patch:
    spec: PatchSpec
    coords: tuple[tuple[int, int], ...]  # index -> (x, y)
    edges: tuple[Edge, ...]  # in measurement-layer emission order
    faces: tuple[Face, ...]

    @functools.cached_property
    def index_of(self) -> dict[tuple[int, int], int]:
        return {c: i for i, c in enumerate(self.coords)}

    @functools.cached_property
    def edge_by_key(self) -> dict[tuple[str, int, int], Edge]:
        return {e.key: e for e in self.edges}

    def edges_of_basis(self, basis: str) -> tuple[Edge, ...]:
        return tuple(e for e in self.edges if e.basis == basis)

    @property
    def num_qubits(self) -> int:
        return len(self.coords)

    @property
    def num_edges(self) -> int:
        return len(self.edges)


def _edge_kept(spec: PatchSpec, family: str, x: int, y: int) -> bool:
    mx, my = (x, y + 0.5) if family == "v" else (x + 0.5, y)
    if my < -0.5 or my > spec.height - 0.5:
        return False
    if spec.sheared:
        if mx * 3 < my - 1:
            return False
        if (mx - spec.width) * 3 > my:
            return False
        return True
    if mx < _SQUIGGLE_OFFSETS[my % 6]:
        return False
    dy = 0 if spec.width % 2 else 3
    if mx > spec.width - _SQUIGGLE_OFFSETS[(my + dy) % 6]:
        return False
    return True


def _candidate_edges(spec: PatchSpec):
    """All kept infinite-lattice edges as (family, anchor, basis, endpoints)."""
    shear_span = (spec.height + 2) // 3 if spec.sheared else 2
    for x in range(-2, spec.width + shear_span + 1):
        for y in range(-1, spec.height + 1):
            if _edge_kept(spec, "v", x, y):
                yield ("v", (x, y), EDGE_BASIS[y % 3], ((x, y), (x, y + 1)))
            if (x + y) % 2 == 0 and _edge_kept(spec, "h", x, y):
                yield ("h", (x, y), EDGE_BASIS[(y + 1) % 3], ((x, y), (x + 1, y)))


def cut_patch(spec: PatchSpec) -> Patch:
    """Cut a finite patch out of the infinite tiling.

    Data qubits are the lattice sites participating in all three of their
    edges; kept edges that lose an endpoint become single-qubit boundary
    measurements.
    """
    raw = list(_candidate_edges(spec))
    incidence: dict[tuple[int, int], int] = {}
    for _, _, _, endpoints in raw:
        for c in endpoints:
            incidence[c] = incidence.get(c, 0) + 1
    data = sorted(c for c, n in incidence.items() if n == 3)
    index_of = {c: i for i, c in enumerate(data)}

    edges = []
    for family, anchor, basis, endpoints in raw:
        present = [c for c in endpoints if c in index_of]
        if not present:
            continue
        # Even-sublattice endpoint first, matching the reference ordering.
        present.sort(key=lambda c: (c[0] + c[1]) % 2)
        edges.append(Edge(
            family=family, anchor=anchor, basis=basis,
            qubits=tuple(index_of[c] for c in present),
            coords=tuple(present)))

    # Measurement emission order: vertical family by (x, y) anchor, then
    # horizontal family by (x, y) anchor.
    edges.sort(key=lambda e: (e.family == "h", e.anchor))

    edge_lookup = {e.key: e for e in edges}
    faces = []
    for x in range(-3, spec.width + (spec.height + 2) // 3 + 2):
        for y in range(-2, spec.height):
            if (x + y) % 2:
                continue
            qubits = [index_of[c] for c in
                      ((x, y), (x, y + 1), (x, y + 2),
                       (x + 1, y), (x + 1, y + 1), (x + 1, y + 2))
                      if c in index_of]
            if len(qubits) < 2:
                continue
            hex_edge_keys = [("h", x, y), ("v", x, y), ("v", x + 1, y),
                             ("v", x, y + 1), ("v", x + 1, y + 1),
                             ("h", x, y + 2)]
            face_edges = tuple(edge_lookup[k] for k in hex_edge_keys
                               if k in edge_lookup)
            face_basis = EDGE_BASIS[(y + 2) % 3]
            # A kept edge with no surviving face qubit overlap can't happen;
            # faces list only edges wholly about this hexagon.
            faces.append(Face(
                center=(x + 0.5, y + 1), basis=face_basis,
                qubits=tuple(sorted(qubits)), edges=face_edges))

    faces.sort(key=lambda f: (not f.is_bulk, f.center))
    patch = Patch(spec=spec, coords=tuple(data), edges=tuple(edges),
                  faces=tuple(faces))
    _check_patch(patch)
    return patch


def _check_patch(patch: Patch) -> None:
    spec = patch.spec
    if not spec.sheared and len(patch.coords) != spec.width * spec.height:
        # Odd widths drop one site where the two boundary phases meet.
        expected = spec.width * spec.height
        if spec.width % 2 == 0 or len(patch.coords) != expected - 1:
            raise AssertionError(
                f"unexpected qubit count {len(patch.coords)} for {spec}")
    # Degree bound and per-layer coverage: every qubit has exactly one edge
    # of each basis.
    per_qubit: dict[int, set[str]] = {}
    for e in patch.edges:
        for q in e.qubits:
            bases = per_qubit.setdefault(q, set())
            if e.basis in bases:
                raise AssertionError("qubit measured twice in one layer")
            bases.add(e.basis)
    for q in range(patch.num_qubits):
        if per_qubit.get(q, set()) != {"X", "Y", "Z"}:
            raise AssertionError(f"qubit {q} does not touch all three bases")
    # Interior edges join two faces of their own color; singles are boundary.
    for f in patch.faces:
        for e in f.edges:
            if not e.is_single and len(f.qubits) == 6:
                assert e.basis != f.basis


def vertical_squiggle_path(spec: PatchSpec) -> dict:
    """Describe the straight geometry's vertical boundaries.

    Returns the per-row leftmost column and the cut (single-qubit) edges of
    the two vertical boundaries.
    """
    if spec.sheared:
        raise ValueError("squiggle path is defined for straight geometry")
    patch = cut_patch(spec)
    by_row: dict[int, list[int]] = {}
    for (x, y) in patch.coords:
        by_row.setdefault(y, []).append(x)
    x_left = {y: min(xs) for y, xs in by_row.items()}
    x_right = {y: max(xs) for y, xs in by_row.items()}
    side_singles = [
        e for e in patch.edges
        if e.is_single and e.coords[0][0] in (x_left[e.coords[0][1]],
                                              x_right[e.coords[0][1]])
        and e.basis == "Y"
    ]
    return {
        "x_left": x_left,
        "x_right": x_right,
        "cut_edges": tuple(side_singles),
    }


def candidate_size(model: str, distance: int) -> PatchSpec:
    """Closed-form smallest patch expected to reach ``distance`` both ways."""
    model = model.lower()
    if model in ("em3", "sdem3", "siem3000"):
        return PatchSpec(2 * distance, 3 * distance)
    if model in ("sd6", "si1000"):
        h = 2 * distance
        h += (-h) % 3
        return PatchSpec(distance + 1, max(h, 3))
    raise ValueError(f"unknown model {model!r}")


def default_aspect(model: str, target_distance: int, verify: bool = True) -> PatchSpec:
    """Smallest default-aspect patch whose graphlike distance reaches the
    target in both directions.

    SD6/SI1000 use the 1:2 width:height family, the direct-measurement
    models 2:3. With ``verify`` the candidate's horizontal and vertical
    graphlike distances are recomputed from the detector error model and
    dimensions are rounded up (never down) until both reach the target.
    """
    if target_distance < 1:
        raise ValueError("target distance must be >= 1")
    spec = candidate_size(model, target_distance)
    if not verify:
        return spec
    from . import dem  # circular at import time only

    w, h = spec.width, spec.height
    for _ in range(12):
        dh = dem.directional_distance(model, PatchSpec(w, h), "H")
        dv = dem.directional_distance(model, PatchSpec(w, h), "V")
        if dh >= target_distance and dv >= target_distance:
            return PatchSpec(w, h)
        if dh < target_distance:
            w += 1
        if dv < target_distance:
            h += 3
    raise AssertionError(
        f"aspect search failed for {model} distance {target_distance}")
