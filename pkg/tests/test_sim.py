from __future__ import annotations

import random

import numpy as np
import pytest

from hexmem.builder import ExperimentSpec, build_memory_circuit
from hexmem.circuit import parse_circuit
from hexmem.lattice import PatchSpec
from hexmem.noise import NoiseModel, apply_noise, noisy_memory_circuit
from hexmem.sim import (FrameSampler, dense_oracle, detection_fractions,
                        detector_coordinates, dump_samples, load_samples,
                        sample, circuit_hash)

from helpers import random_noisy_circuit


def test_noiseless_sampling_is_all_zero():
    c = build_memory_circuit(ExperimentSpec(PatchSpec(4, 6), "V", 8))
    batch = sample(c, 3000, seed=9)
    assert batch.n_detectors == c.num_detectors
    assert batch.detector_counts().sum() == 0
    assert batch.observable_bools().sum() == 0


def test_seed_determinism_across_batching():
    noisy = noisy_memory_circuit(ExperimentSpec(PatchSpec(4, 6), "V", 6),
                                 NoiseModel("em3", 0.02))
    s = FrameSampler(noisy)
    a = s.sample(5000, seed=42)
    b = s.sample(5000, seed=42)
    assert np.array_equal(a.detector_words, b.detector_words)
    assert np.array_equal(a.observable_words, b.observable_words)
    c = s.sample(5000, seed=43)
    assert not np.array_equal(a.detector_words, c.detector_words)
    # Block structure: the first 4096 shots are a complete independent
    # stream, so a shorter run is a prefix of a longer one.
    short = s.sample(4096, seed=42)
    assert np.array_equal(short.detector_words, a.detector_words[:4096])


def test_frame_vs_dense_on_toy_circuit():
    """Detector distribution of a 2-qubit, 6-measurement toy circuit
    matches the dense oracle within TVD 0.01."""
    text = (
        "QUBIT_COORDS(0, 0) 0\nQUBIT_COORDS(1, 0) 1\nR 0 1\nH 0 1\n"
        "COMPOUND_MEAS_ERROR(0.15) X0*X1\nMPP X0*X1\n"
        "DEPOLARIZE1(0.1) 0\nMPP X0*X1\nDETECTOR(0, 0, 0) rec[-1] rec[-2]\n"
        "MPP(0.05) Z0*Z1\nDEPOLARIZE2(0.1) 0 1\nMPP Z0*Z1\n"
        "DETECTOR(1, 0, 0) rec[-1] rec[-2]\n"
        "MPP Y0*Y1\nMPP Y0*Y1\nDETECTOR(2, 0, 0) rec[-1] rec[-2]\n"
        "OBSERVABLE_INCLUDE(0) rec[-1]\n")
    c = parse_circuit(text)
    nf, nd = 400_000, 120_000
    fb = FrameSampler(c).sample(nf, seed=21)
    db = dense_oracle(c, nd, seed=22)
    fbits = fb.detector_bools()
    dbits = db.detector_bools()

    def joint(bits):
        keys = bits @ (1 << np.arange(bits.shape[1]))
        return np.bincount(keys, minlength=8) / len(keys)

    tvd = 0.5 * np.abs(joint(fbits) - joint(dbits)).sum()
    assert tvd <= 0.01, f"TVD {tvd}"


@pytest.mark.parametrize("seed", range(6))
def test_frame_vs_dense_marginals_randomized(seed):
    rng = random.Random(1000 + seed)
    c = random_noisy_circuit(rng, max_qubits=8)
    nf, nd = 200_000, 25_000
    fb = FrameSampler(c).sample(nf, seed=seed)
    db = dense_oracle(c, nd, seed=seed + 99)
    fm = fb.detector_counts() / nf
    dm = db.detector_counts() / nd
    sigma = np.sqrt(fm * (1 - fm) / nf + dm * (1 - dm) / nd) + 1e-9
    z = np.abs(fm - dm) / sigma
    assert z.max() < 4.5, f"marginal mismatch z={z.max():.2f}"
    fo = fb.observable_bools().mean(axis=0)
    do = db.observable_bools().mean(axis=0)
    so = np.sqrt(fo * (1 - fo) / nf + do * (1 - do) / nd) + 1e-9
    assert np.abs(fo - do).max() / so.max() < 4.5


def _record_memberships(stream):
    """Per absolute record index: (detector index set, observable set)."""
    n_rec = 0
    starts = []
    for inst in stream:
        starts.append(n_rec)
        n_rec += inst.num_records
    dets: dict[int, set] = {}
    obs: dict[int, set] = {}
    det_idx = 0
    for pos, inst in enumerate(stream):
        if inst.name == "DETECTOR":
            for t in inst.targets:
                dets.setdefault(starts[pos] + t.offset, set()).add(det_idx)
            det_idx += 1
        elif inst.name == "OBSERVABLE_INCLUDE":
            for t in inst.targets:
                obs.setdefault(starts[pos] + t.offset, set()).add(
                    int(inst.args[0]))
    return dets, obs


def _case_to_injection(kind, info):
    """(pauli terms dict or None, flip record bool) for a location case."""
    from hexmem.paulis import SparsePauli
    if kind in ("X", "Y", "Z"):
        return SparsePauli({info: kind}), False
    if kind == "E":
        return info, False
    if kind == "P2":
        a, ca, b, cb = info
        terms = {}
        for q, c in ((a, ca), (b, cb)):
            if c:
                terms[q] = "XYZ"[c - 1]
        return SparsePauli(terms), False
    if kind == "CMP":
        pauli, combo, flip = info
        terms = {}
        for q, c in zip(pauli.qubits, combo):
            if c:
                terms[q] = "XYZ"[c - 1]
        return (SparsePauli(terms) if terms else None), bool(flip)
    if kind == "flip":
        return None, True
    raise AssertionError(kind)


def _check_injected_symptoms(noisy, limit=200, stride=1):
    """Inject each elementary error case deterministically into the frame
    sampler and require exactly the DEM's symptom."""
    from hexmem import dem as demmod
    from hexmem.circuit import Circuit, Instruction, iter_unrolled

    cases = []
    demmod.extract_dem(
        noisy,
        case_callback=lambda dets, obs, p, loc: cases.append((dets, obs, loc)))
    stream = list(iter_unrolled(noisy.instructions))
    rec_dets, rec_obs = _record_memberships(stream)
    starts = []
    n_rec = 0
    for inst in stream:
        starts.append(n_rec)
        n_rec += inst.num_records
    checked = 0
    for dets_expected, obs_expected, location in cases[::stride]:
        kind, pos, info = location
        pauli, flips_record = _case_to_injection(kind, info)
        flipped_records = set()
        if flips_record:
            if kind == "CMP":
                # Flip lands on the next MPP's matching combined target.
                cpauli = info[0]
                for later in range(pos + 1, len(stream)):
                    if stream[later].name == "MPP":
                        k = list(stream[later].targets).index(cpauli)
                        flipped_records.add(starts[later] + k)
                        break
            else:  # explicit MPP flip argument case
                mpp_pos = pos
                k = list(stream[mpp_pos].targets).index(info)
                flipped_records.add(starts[mpp_pos] + k)
        forced = []
        for k, inst in enumerate(stream):
            if k == pos and pauli is not None:
                forced.append(Instruction("E", (pauli,), (1.0,)))
            if inst.name == "MPP" and inst.args:
                forced.append(Instruction("MPP", inst.targets))
            elif not inst.is_noise:
                forced.append(inst)
        batch = FrameSampler(Circuit(forced)).sample(64, seed=0)
        fired = set(np.flatnonzero(batch.detector_bools()[0]))
        obs_fired = set(np.flatnonzero(batch.observable_bools()[0]))
        for r in flipped_records:
            fired ^= rec_dets.get(r, set())
            obs_fired ^= rec_obs.get(r, set())
        assert fired == set(dets_expected), (location, fired, dets_expected)
        assert obs_fired == set(obs_expected), (location, obs_expected)
        checked += 1
        if checked >= limit:
            break
    return checked


def test_frame_linearity_single_injected_error():
    """Sampling with one deterministic injected error reproduces exactly the
    DEM-predicted symptom, across compound/depolarizing/flip channel kinds."""
    spec = ExperimentSpec(PatchSpec(2, 3), "V", 6)
    for model in ("em3", "sdem3", "sd6"):
        noisy = apply_noise(build_memory_circuit(spec),
                            NoiseModel(model, 0.01))
        assert _check_injected_symptoms(noisy, limit=120) >= 40


def test_detection_fractions_zigzag():
    noisy = noisy_memory_circuit(ExperimentSpec(PatchSpec(4, 6), "V", 20),
                                 NoiseModel("em3", 0.001))
    batch = FrameSampler(noisy).sample(100_000, seed=5)
    per_det, per_layer = detection_fractions(batch, noisy)
    assert len(per_det) == noisy.num_detectors
    assert set(per_layer) == set(range(6))
    ratio = max(per_layer.values()) / min(per_layer.values())
    assert ratio > 1.05


def test_detector_coordinates_accumulate_shifts():
    c = build_memory_circuit(ExperimentSpec(PatchSpec(4, 6), "V", 8))
    coords = detector_coordinates(c)
    assert len(coords) == c.num_detectors
    times = sorted({t for _, _, t in coords})
    assert times[0] == 0.0
    assert times[-1] >= 12.0  # boot + repeats + closing


def test_dump_round_trip(tmp_path):
    noisy = noisy_memory_circuit(ExperimentSpec(PatchSpec(2, 3), "V", 6),
                                 NoiseModel("em3", 0.05))
    batch = FrameSampler(noisy).sample(1000, seed=7)
    path = tmp_path / "shots.bin"
    dump_samples(path, batch, noisy, seed=7)
    loaded, seed, digest = load_samples(path)
    assert seed == 7
    assert digest == circuit_hash(noisy)
    assert np.array_equal(loaded.detector_words, batch.detector_words)
    assert np.array_equal(loaded.observable_words, batch.observable_words)
    assert loaded.n_shots == 1000


def test_dense_oracle_rejects_large_circuits():
    noisy = noisy_memory_circuit(ExperimentSpec(PatchSpec(4, 6), "V", 6),
                                 NoiseModel("em3", 0.01))
    with pytest.raises(ValueError, match="12 qubits"):
        dense_oracle(noisy, 10)


def test_dense_oracle_deterministic_parity_on_clean_toy():
    text = ("QUBIT_COORDS(0, 0) 0\nQUBIT_COORDS(1, 0) 1\nR 0 1\nH 0 1\n"
            "MPP X0*X1\nDETECTOR(0, 0, 0) rec[-1]\n")
    batch = dense_oracle(parse_circuit(text), 200, seed=1)
    assert batch.detector_counts()[0] == 0
