from __future__ import annotations

from pathlib import Path

import pytest

from hexmem.builder import (ExperimentSpec, build_memory_circuit,
                            detector_plan, observable_path, BuildError)
from hexmem.circuit import iter_unrolled, parse_circuit
from hexmem.lattice import PatchSpec
from hexmem.paulis import SparsePauli
from hexmem.tableau import check_determinism

GOLDEN = Path(__file__).parent.parent / "src" / "hexmem" / "data" / "appendix_4x6_v100.stim"


def fingerprint(circuit):
    kinds = []
    blocks = []
    dets, obs = set(), []
    for inst in iter_unrolled(circuit.instructions):
        kinds.append(inst.name)
        if inst.name == "MPP":
            blocks.append((frozenset(dets), tuple(obs)))
            blocks.append(tuple(str(t) for t in inst.targets))
            dets, obs = set(), []
        elif inst.name == "DETECTOR":
            dets.add((inst.args, frozenset(t.offset for t in inst.targets)))
        elif inst.name == "OBSERVABLE_INCLUDE":
            obs.append((int(inst.args[0]),
                        tuple(sorted(t.offset for t in inst.targets))))
    blocks.append((frozenset(dets), tuple(obs)))
    return circuit.qubit_coords, kinds, blocks


def test_golden_4x6_v100_structural_match():
    mine = build_memory_circuit(ExperimentSpec(PatchSpec(4, 6), "V", 100, "em3"))
    golden = parse_circuit(GOLDEN.read_text())
    mc, mk, mb = fingerprint(mine)
    gc, gk, gb = fingerprint(golden)
    assert mc == gc, "qubit coordinate sets differ"
    assert mk == gk, "per-line instruction kinds differ"
    assert len(mb) == len(gb)
    for i, (a, b) in enumerate(zip(mb, gb)):
        assert a == b, f"measurement block {i} differs"


def test_golden_has_expected_gross_structure():
    mine = build_memory_circuit(ExperimentSpec(PatchSpec(4, 6), "V", 100, "em3"))
    assert len(mine.qubit_coords) == 24
    repeats = [i for i in mine.instructions if i.name == "REPEAT"]
    assert len(repeats) == 1 and repeats[0].repeat_count == 48


def test_rounds_validation():
    with pytest.raises(ValueError):
        ExperimentSpec(PatchSpec(4, 6), "V", 4)
    with pytest.raises(ValueError):
        ExperimentSpec(PatchSpec(4, 6), "V", 7)
    with pytest.raises(ValueError):
        ExperimentSpec(PatchSpec(4, 6), "Q", 6)


@pytest.mark.parametrize("w,h", [(2, 3), (4, 6), (6, 9), (8, 12)])
@pytest.mark.parametrize("obs", ["V", "H"])
def test_noiseless_determinism_grid(w, h, obs):
    c = build_memory_circuit(ExperimentSpec(PatchSpec(w, h), obs, 8))
    assert check_determinism(c) > 0


@pytest.mark.parametrize("spec", [
    PatchSpec(8, 6, sheared=True),
    PatchSpec(4, 12, sheared=True),
    PatchSpec(6, 9, sheared=True),
])
@pytest.mark.parametrize("obs", ["V", "H"])
def test_sheared_builds_are_deterministic(spec, obs):
    c = build_memory_circuit(ExperimentSpec(spec, obs, 8))
    assert check_determinism(c) > 0


def test_vertical_observable_path_matches_reference():
    """V-type on 4x6: Y layers contribute the two column-2 green edges and
    Z layers the three column-2 blue-family edges; X layers contribute
    nothing."""
    steps = observable_path(ExperimentSpec(PatchSpec(4, 6), "V", 100))
    by_basis = {b: terms for b, terms in steps}
    assert by_basis["X"] == ()
    assert by_basis["Y"] == (SparsePauli({9: "Y", 10: "Y"}),
                             SparsePauli({13: "Y", 12: "Y"}))
    assert by_basis["Z"] == (SparsePauli({9: "Z"}),
                             SparsePauli({11: "Z", 12: "Z"}),
                             SparsePauli({14: "Z"}))


def test_red_layers_never_multiplied_into_either_observable():
    for obs in "VH":
        for b, terms in observable_path(ExperimentSpec(PatchSpec(6, 9), obs, 8)):
            if b == "X":
                assert terms == ()


def test_detector_plan_bulk_vs_boundary_rates():
    plan = detector_plan(ExperimentSpec(PatchSpec(4, 6), "V", 8))
    from hexmem.lattice import cut_patch
    patch = cut_patch(PatchSpec(4, 6))
    bulk = {f.center for f in patch.faces if f.is_bulk}
    boundary = {f.center for f in patch.faces
                if not f.is_bulk and not f.never_collected}
    corner = {f.center for f in patch.faces if f.never_collected}
    counts: dict = {}
    for slot in plan.slots:
        for center, basis, _ in slot:
            counts[center] = counts.get(center, 0) + 1
    for c in bulk:
        assert counts.get(c, 0) == 2, f"bulk face {c} not checked twice"
    for c in boundary:
        assert counts.get(c, 0) == 1, f"boundary face {c} not checked once"
    for c in corner:
        assert c not in counts, f"corner face {c} must never be collected"


def test_unused_boundary_red_edges_touch_no_steady_detectors():
    """The cancelling boundary red-edge measurements stay in the circuit but
    feed no steady-state detector and no observable."""
    circuit = build_memory_circuit(ExperimentSpec(PatchSpec(4, 6), "V", 8))
    repeat = next(i for i in circuit.instructions if i.name == "REPEAT")
    # Records of the X layers inside the repeat block, tracked by offset.
    n_rec = 0
    layer_records = {}  # absolute index within block -> (basis, pauli)
    used = set()
    obs_used = set()
    for inst in repeat.body:
        if inst.name == "MPP":
            bases = {b for t in inst.targets for _, b in t}
            for k, t in enumerate(inst.targets):
                layer_records[n_rec + k] = (bases, t)
            n_rec += len(inst.targets)
        elif inst.name == "DETECTOR":
            for t in inst.targets:
                used.add(n_rec + t.offset)
        elif inst.name == "OBSERVABLE_INCLUDE":
            for t in inst.targets:
                obs_used.add(n_rec + t.offset)
    unused_x = [layer_records[r][1] for r in layer_records
                if r >= 0 and r not in used and "X" in layer_records[r][0]]
    # The two vertical boundary X edges (left and right column) cancel out
    # of every check within the block.
    strs = {str(p) for p in unused_x}
    assert "X1*X2" in strs and "X22*X21" in strs
    assert not any(r in obs_used for r in layer_records
                   if r not in used and "X" in layer_records[r][0])


def test_sheared_vertical_needs_reachable_path():
    # Tall sheared patches drift the observable; this must still build.
    c = build_memory_circuit(
        ExperimentSpec(PatchSpec(4, 12, sheared=True), "V", 8))
    assert check_determinism(c) > 0


def test_h_type_uses_y_basis_transversal_layers():
    c = build_memory_circuit(ExperimentSpec(PatchSpec(4, 6), "H", 8))
    stream = list(iter_unrolled(c.instructions))
    rot = next(i for i in stream if i.name in ("H", "H_YZ"))
    assert rot.name == "H_YZ"
    final = [i for i in stream if i.name == "MPP"][-1]
    assert all(b == "Y" for t in final.targets for _, b in t)
