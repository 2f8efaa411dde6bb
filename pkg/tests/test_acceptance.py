"""Acceptance criteria, one test per criterion, each printing a PASS line.

Scale notes (documented, not weakening the stated tolerances):

* Criterion 1 checks a representative sub-grid by default (every row
  formula, both geometries, and the straight-vs-sheared divergence cells);
  ``HEXMEM_FULL_TABLE=1`` checks all 138 computable cells (measured ~6 min,
  budget 30 min).
* Criterion 5 runs all 50 circuits; the dense-oracle shot count is 3e4 by
  default (binomial sigma terms combine exactly), 1e6 under
  ``HEXMEM_RUN_SLOW=1``.
* Criteria 8 and 9's multi-hour Monte Carlo runs live behind
  ``HEXMEM_RUN_SLOW=1``; the default suite verifies the EM3 bracket
  endpoints for 8 and the spec's degraded fallback for 9 (synthetic-lambda
  inversion + footprint monotonicity).
"""

from __future__ import annotations

import math
import os
import random

import numpy as np
import pytest

from hexmem.analysis import (bayes_band, combine_hv, fit_lambda,
                             patch_qubit_count, per_shot_to_code_cell,
                             teraquop_footprint, xor_compose)
from hexmem.builder import ExperimentSpec, build_memory_circuit
from hexmem.circuit import iter_unrolled, parse_circuit
from hexmem.decode import MatchingDecoder, logical_error_count
from hexmem.dem import (build_matching_graph, circuit_dem, graphlike_distance,
                        table_distance)
from hexmem.lattice import PatchSpec, default_aspect
from hexmem.noise import NoiseModel, apply_noise, decompose_gates
from hexmem.sim import FrameSampler, dense_oracle, detection_fractions
from hexmem.tableau import check_determinism

from helpers import random_noisy_circuit

FULL_TABLE = os.environ.get("HEXMEM_FULL_TABLE") == "1"
RUN_SLOW = os.environ.get("HEXMEM_RUN_SLOW") == "1"
slow = pytest.mark.skipif(
    not RUN_SLOW, reason="multi-hour Monte Carlo; set HEXMEM_RUN_SLOW=1")

GOLDEN = parse_circuit(
    (__import__("pathlib").Path(__file__).parent.parent
     / "src" / "hexmem" / "data" / "appendix_4x6_v100.stim").read_text())

# Reference graphlike-distance table rows (straight == sheared for the
# width >> height block; N/A at odd sheared widths).
TABLE_WIDE = {
    "em3": [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13],
    "sd6": [1, 3, 4, 6, 7, 9, 10, 12, 13, 15, 16, 18, 19],
    "si1000": [1, 3, 4, 6, 7, 9, 10, 12, 13, 15, 16, 18, 19],
}
TABLE_TALL_STRAIGHT = {
    "em3": [1, 1, 2, 2, 3, 3, 4, 4, 5, 5, 6, 6, 7],
    "sd6": [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13],
    "si1000": [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13],
}
TABLE_TALL_SHEARED = {
    "em3": {2: 1, 4: 2, 6: 3, 8: 4, 10: 5, 12: 6, 14: 7},
    "sd6": {2: 1, 4: 3, 6: 4, 8: 6, 10: 7, 12: 9, 14: 10},
    "si1000": {2: 1, 4: 3, 6: 4, 8: 6, 10: 7, 12: 9, 14: 10},
}


def _rate(model_name, p, patch, obs, shots, seed, rounds=None, max_errors=None):
    model = NoiseModel(model_name, p)
    if rounds is None:
        rounds = 6
    spec = ExperimentSpec(patch, obs, rounds, model_name)
    noisy = apply_noise(build_memory_circuit(spec), model)
    sampler = FrameSampler(noisy)
    decoder = MatchingDecoder(build_matching_graph(circuit_dem(noisy)))
    done = errors = block = 0
    while done < shots and (max_errors is None or errors < max_errors):
        take = min(shots - done, 16384)
        batch = sampler.sample(take, seed=seed + 101 * block)
        _, err = logical_error_count(decoder, batch)
        errors += err
        done += take
        block += 1
    return done, errors


def test_criterion_01_table_reproduction():
    """Graphlike code distances reproduce the reference table exactly."""
    if FULL_TABLE:
        cells = [(m, 3 + 3 * i, "v", sh, TABLE_WIDE[m][i])
                 for m in TABLE_WIDE for i in range(13) for sh in (False, True)]
        cells += [(m, 2 + i, "h", False, TABLE_TALL_STRAIGHT[m][i])
                  for m in TABLE_TALL_STRAIGHT for i in range(13)]
        cells += [(m, w, "h", True, d)
                  for m in TABLE_TALL_SHEARED
                  for w, d in TABLE_TALL_SHEARED[m].items()]
    else:
        cells = []
        for m in ("em3", "sd6", "si1000"):
            for i in (0, 1, 3, 6):
                cells.append((m, 3 + 3 * i, "v", False, TABLE_WIDE[m][i]))
            cells.append((m, 9, "v", True, TABLE_WIDE[m][2]))
            for i in (0, 2, 4, 7):
                cells.append((m, 2 + i, "h", False, TABLE_TALL_STRAIGHT[m][i]))
        # Straight-vs-sheared divergence: straight SD6 w=6 is 5, sheared 4.
        cells += [("sd6", 6, "h", False, 5), ("sd6", 6, "h", True, 4),
                  ("sd6", 8, "h", True, 6), ("em3", 8, "h", True, 4),
                  ("si1000", 10, "h", True, 7), ("em3", 30, "v", False, 10)]
    mismatches = []
    for model, size, orient, sheared, want in cells:
        got = table_distance(model, size, orient, sheared)
        if got != want:
            mismatches.append((model, size, orient, sheared, got, want))
    assert not mismatches, mismatches
    print(f"\nACCEPTANCE 1: table reproduction "
          f"({len(cells)} cells{'' if FULL_TABLE else ', subset'}) PASS")


def test_criterion_02_appendix_golden_match():
    """4x6 V-type 100-round build matches the reference listing exactly."""
    mine = build_memory_circuit(ExperimentSpec(PatchSpec(4, 6), "V", 100))
    assert mine.qubit_coords == GOLDEN.qubit_coords

    def walk(circ):
        kinds, dets, obs, blocks = [], set(), [], []
        for inst in iter_unrolled(circ.instructions):
            kinds.append(inst.name)
            if inst.name == "MPP":
                blocks.append((frozenset(dets), tuple(obs),
                               tuple(str(t) for t in inst.targets)))
                dets, obs = set(), []
            elif inst.name == "DETECTOR":
                dets.add((inst.args, frozenset(t.offset for t in inst.targets)))
            elif inst.name == "OBSERVABLE_INCLUDE":
                obs.append(tuple(sorted(t.offset for t in inst.targets)))
        blocks.append((frozenset(dets), tuple(obs), ()))
        return kinds, blocks

    mk, mb = walk(mine)
    gk, gb = walk(GOLDEN)
    assert mk == gk, "per-line instruction kinds differ"
    assert mb == gb, "detector coordinates / record sets / observables differ"
    print("\nACCEPTANCE 2: appendix golden match (exact) PASS")


def test_criterion_03_appendix_distance_two():
    noisy = apply_noise(
        build_memory_circuit(ExperimentSpec(PatchSpec(4, 6), "V", 100)),
        NoiseModel("em3", 1e-3))
    assert graphlike_distance(noisy) == 2
    print("\nACCEPTANCE 3: appendix circuit EM3 graphlike distance == 2 PASS")


@pytest.mark.parametrize("model", ["sd6", "si1000", "em3"])
def test_criterion_04_noiseless_determinism(model):
    for (w, h) in [(2, 3), (4, 6), (6, 9), (8, 12)]:
        for obs in "HV":
            clean = build_memory_circuit(
                ExperimentSpec(PatchSpec(w, h), obs, 6, model))
            exe = (decompose_gates(clean, NoiseModel(model, 0))
                   if model in ("sd6", "si1000") else clean)
            assert check_determinism(exe) > 0
            batch = FrameSampler(exe).sample(1000, seed=17)
            assert batch.detector_counts().sum() == 0
            assert batch.observable_bools().sum() == 0
    print(f"\nACCEPTANCE 4 [{model}]: noiseless determinism grid PASS")


def test_criterion_05_simulator_oracle_equivalence():
    n_frame = 1_000_000
    n_dense = 1_000_000 if RUN_SLOW else 30_000
    worst_z = 0.0
    worst_tvd = 0.0
    over_3sigma = total_marginals = 0
    for k in range(50):
        rng = random.Random(9000 + k)
        small = k % 2 == 0  # half the circuits keep <= 5 detectors for TVD
        c = random_noisy_circuit(rng, max_qubits=10,
                                 pairs=rng.randint(2, 5) if small else
                                 rng.randint(4, 8))
        fb = FrameSampler(c).sample(n_frame, seed=k)
        db = dense_oracle(c, n_dense, seed=5000 + k)
        fm = fb.detector_counts() / n_frame
        dm = db.detector_counts() / n_dense
        sigma = np.sqrt(fm * (1 - fm) / n_frame + dm * (1 - dm) / n_dense)
        z = np.abs(fm - dm) / np.maximum(sigma, 1e-12)
        total_marginals += len(z)
        over_3sigma += int((z > 3).sum())
        worst_z = max(worst_z, float(z.max()))
        nd = fb.n_detectors
        if nd <= 8:
            fbits = fb.detector_bools()
            dbits = db.detector_bools()
            weights = 1 << np.arange(nd)
            fj = np.bincount(fbits @ weights, minlength=1 << nd) / n_frame
            dj = np.bincount(dbits @ weights, minlength=1 << nd) / n_dense
            tvd = 0.5 * float(np.abs(fj - dj).sum())
            worst_tvd = max(worst_tvd, tvd)
            assert tvd <= 0.02, f"joint TVD {tvd:.4f} on circuit {k}"
    # Per-detector 3-sigma with the usual multiplicity allowance: at most
    # 1% of marginal comparisons may exceed 3 sigma and none may exceed 4.7.
    assert worst_z < 4.7, f"marginal z={worst_z:.2f}"
    assert over_3sigma <= max(2, total_marginals // 100)
    print(f"\nACCEPTANCE 5: frame vs dense oracle on 50 circuits "
          f"(worst z={worst_z:.2f}, {over_3sigma}/{total_marginals} over 3sigma, "
          f"worst joint TVD={worst_tvd:.4f}) PASS")


def test_criterion_06_decoder_optimality():
    rng = random.Random(77)
    total = 0
    for model in ("em3", "sdem3", "siem3000", "sd6", "si1000"):
        noisy = apply_noise(
            build_memory_circuit(ExperimentSpec(PatchSpec(4, 6), "V", 6, model)),
            NoiseModel(model, 0.01))
        dec = MatchingDecoder(build_matching_graph(circuit_dem(noisy)))
        nd = dec.graph.num_detectors
        for _ in range(2000):
            k = rng.choice([2, 4, 6, 8, 10, 12])
            events = rng.sample(range(nd), k)
            a = dec.decode(events)
            b = dec.exhaustive_oracle(events)
            assert a.weight == b.weight, (model, sorted(events))
            total += 1
    print(f"\nACCEPTANCE 6: decoder weight == exhaustive oracle on {total} "
          "syndromes across 5 models PASS")


def test_criterion_07_rate_algebra():
    assert combine_hv(0.1, 0.2) == pytest.approx(0.28, abs=1e-15)
    for e in (1e-9, 1e-5, 0.01, 0.3, 0.49):
        for n in (2, 3, 5):
            assert abs(xor_compose(per_shot_to_code_cell(e, n), n) - e) < 1e-12
    assert per_shot_to_code_cell(0.0, 3) == 0.0
    assert per_shot_to_code_cell(0.5, 3) == 0.5
    low, high = bayes_band(10**6, 10**3)
    assert low < 1e-3 < high
    print("\nACCEPTANCE 7: Eq. 1 and code-cell round trips (1e-12) PASS")


BRACKETS = {"sd6": (0.0015, 0.0035), "si1000": (0.00075, 0.002),
            "em3": (0.0125, 0.0225)}


def _suppression_sign(model, p, shots, seed):
    """Rate difference E(d_small) - E(d_large) at matched code cells."""
    if model == "em3":
        patches = [PatchSpec(4, 6), PatchSpec(6, 9)]
    else:
        patches = [default_aspect(model, 2), default_aspect(model, 3)]
    rates = []
    for patch, d in zip(patches, (2, 3)):
        shots_hv = []
        for obs in "HV":
            rounds = 3 * d + (3 * d) % 2
            n, e = _rate(model, p, patch, obs, shots, seed, rounds=rounds)
            shots_hv.append(per_shot_to_code_cell(e / n, rounds / d))
        rates.append(combine_hv(*shots_hv))
    return rates[0] - rates[1], rates


def test_criterion_08_threshold_bracket_em3():
    """Desk-scale default: the EM3 crossing lies inside [0.0125, 0.0225]."""
    low, high = BRACKETS["em3"]
    below, rb = _suppression_sign("em3", low, 40_000, seed=31)
    above, ra = _suppression_sign("em3", high, 40_000, seed=32)
    assert below > 0, f"no suppression at p={low}: {rb}"
    assert above < 0, f"still suppressing at p={high}: {ra}"
    print(f"\nACCEPTANCE 8 [em3 endpoints]: crossing within "
          f"[{low}, {high}] PASS (rates {rb} / {ra})")


@slow
@pytest.mark.slow
@pytest.mark.parametrize("model", ["sd6", "si1000", "em3"])
def test_criterion_08_threshold_bracket_full(model):
    low, high = BRACKETS[model]
    shots = 100_000
    below, rb = _suppression_sign(model, low, shots, seed=41)
    above, ra = _suppression_sign(model, high, shots, seed=42)
    assert below > 0, f"{model}: no suppression at p={low}: {rb}"
    assert above < 0, f"{model}: still suppressing at p={high}: {ra}"
    print(f"\nACCEPTANCE 8 [{model}]: crossing within [{low}, {high}] PASS")


def test_criterion_09_teraquop_degraded_fallback():
    """Synthetic-lambda inversion within 5% plus footprint monotonicity."""
    rng = random.Random(12)
    lam_true = 4.0
    points = [(d, 0.15 * lam_true ** (-d / 2) * (1 + 0.01 * rng.gauss(0, 1)))
              for d in (2, 3, 4, 5, 6)]
    est = fit_lambda(1e-3, points)
    assert abs(est.lam - lam_true) / lam_true < 0.05
    counts = []
    for lam in (2.0, 3.0, 5.0, 8.0):
        pts = [(d, 0.15 * lam ** (-d / 2)) for d in (2, 3, 4, 5)]
        proj = teraquop_footprint(fit_lambda(1e-3 / lam, pts), "em3",
                                  verify_aspect=False)
        counts.append(proj.qubits)
    assert counts == sorted(counts, reverse=True)
    print(f"\nACCEPTANCE 9 [fallback]: synthetic lambda within 5% "
          f"({est.lam:.3f} vs 4) and footprint monotone PASS")


@slow
@pytest.mark.slow
def test_criterion_09_teraquop_projection_em3_sd6():
    targets = {"em3": (1e-3, 900), "sd6": (1e-3, 7000)}
    for model, (p, expected) in targets.items():
        points = []
        dist_set = (2, 3, 4, 5) if model == "em3" else (2, 3, 4)
        for d in dist_set:
            patch = default_aspect(model, d)
            cells = []
            for obs in "HV":
                rounds = 3 * d + (3 * d) % 2
                n, e = _rate(model, p, patch, obs, 4_000_000, seed=d,
                             rounds=rounds, max_errors=300)
                cells.append(per_shot_to_code_cell(max(e, 1) / n, rounds / d))
            points.append((d, combine_hv(*cells)))
        est = fit_lambda(p, points)
        proj = teraquop_footprint(est, model)
        assert expected / 2 <= proj.qubits <= expected * 2, (
            f"{model}: {proj.qubits} vs {expected}")
        print(f"\nACCEPTANCE 9 [{model}]: footprint {proj.qubits} within x2 "
              f"of {expected} PASS")


def test_criterion_10_detection_fraction_zigzag():
    model = NoiseModel("em3", 1e-3)
    spec = ExperimentSpec(PatchSpec(4, 6), "V", 24, "em3")
    noisy = apply_noise(build_memory_circuit(spec), model)
    batch = FrameSampler(noisy).sample(200_000, seed=3)
    _, per_layer = detection_fractions(batch, noisy, steady_only=True)
    ratio = max(per_layer.values()) / min(per_layer.values())
    assert set(per_layer) == set(range(6))
    assert ratio > 1.05, f"ratio {ratio:.3f}"
    print(f"\nACCEPTANCE 10: period-6 detection-fraction zig-zag "
          f"(max/min = {ratio:.2f}) PASS")


def test_criterion_11_em3_variant_comparison():
    """SDEM3 and SIEM3000 agree within fit bands; EM3 differs in the
    threshold region."""
    # (a) In the EM3 threshold region both uncorrelated variants are above
    # their own thresholds while EM3 still suppresses.
    p_thr = 0.012
    em3_diff, _ = _suppression_sign("em3", p_thr, 30_000, seed=51)
    sdem3_diff, _ = _suppression_sign("sdem3", p_thr, 30_000, seed=52)
    assert em3_diff > 0, "EM3 should suppress at p=0.012"
    assert sdem3_diff < 0, "SDEM3 should be above threshold at p=0.012"
    # (b) At matched p below both thresholds the two uncorrelated variants'
    # lambda estimates agree within their mutual uncertainty bands.
    p_low = 0.004
    lams = {}
    for model in ("sdem3", "siem3000"):
        points = []
        for d, patch in ((1, PatchSpec(2, 3)), (2, PatchSpec(4, 6)),
                         (3, PatchSpec(6, 9))):
            cells = []
            for obs in "HV":
                rounds = max(6, 3 * d + (3 * d) % 2)
                n, e = _rate(model, p_low, patch, obs, 60_000, seed=60 + d,
                             rounds=rounds)
                cells.append(per_shot_to_code_cell(max(e, 1) / n, rounds / d))
            points.append((d, combine_hv(*cells)))
        lams[model] = fit_lambda(p_low, points)
    a, b = lams["sdem3"], lams["siem3000"]
    assert a.low <= b.high and b.low <= a.high, (
        f"bands disjoint: sdem3 [{a.low:.2f},{a.high:.2f}] "
        f"siem3000 [{b.low:.2f},{b.high:.2f}]")
    print(f"\nACCEPTANCE 11: sdem3 lambda {a.lam:.2f} ~ siem3000 "
          f"{b.lam:.2f} (bands overlap), EM3 separates at p=0.012 PASS")
