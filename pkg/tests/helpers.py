"""Shared test helpers: randomized noisy circuits with valid detectors."""

from __future__ import annotations

import random

from hexmem.circuit import Circuit, Rec
from hexmem.paulis import SparsePauli

_GATES_1Q = ("H", "H_YZ", "H_XY", "C_XYZ", "C_ZYX")


def random_noisy_circuit(rng: random.Random, max_qubits: int = 10,
                         p: float = 0.05, pairs: int = 4) -> Circuit:
    """A random Clifford circuit whose detectors compare repeated Pauli
    measurements, so every detector parity is deterministic by construction
    while noise channels of every supported kind land in between."""
    n = rng.randint(2, max_qubits)
    c = Circuit()
    for q in range(n):
        c.append("QUBIT_COORDS", (q,), (float(q), 0.0))
    c.append("R", range(n))
    records = 0
    obs_members = []

    def random_gates(k):
        for _ in range(k):
            if n >= 2 and rng.random() < 0.5:
                a, b = rng.sample(range(n), 2)
                c.append(rng.choice(("CX", "CZ")), (a, b))
            else:
                c.append(rng.choice(_GATES_1Q), (rng.randrange(n),))

    def random_noise():
        kind = rng.randrange(5)
        if kind == 0:
            c.append(rng.choice(("X_ERROR", "Z_ERROR", "Y_ERROR")),
                     (rng.randrange(n),), (p,))
        elif kind == 1:
            c.append("DEPOLARIZE1", (rng.randrange(n),), (p,))
        elif kind == 2 and n >= 2:
            a, b = rng.sample(range(n), 2)
            c.append("DEPOLARIZE2", (a, b), (p,))
        elif kind == 3 and n >= 2:
            a, b = rng.sample(range(n), 2)
            c.append("E", (SparsePauli({a: rng.choice("XYZ"),
                                        b: rng.choice("XYZ")}),), (p,))
        else:
            c.append("X_ERROR", (rng.randrange(n),), (p,))

    random_gates(rng.randint(1, 6))
    for _ in range(pairs):
        support = rng.sample(range(n), rng.randint(1, min(2, n)))
        pauli = SparsePauli({q: rng.choice("XYZ") for q in support})
        use_compound = rng.random() < 0.4
        if use_compound:
            c.append("COMPOUND_MEAS_ERROR", (pauli,), (p,))
        flip = (p,) if rng.random() < 0.4 else ()
        c.append("MPP", (pauli,), flip)
        records += 1
        random_noise()
        c.append("MPP", (pauli,))
        records += 1
        c.append("DETECTOR", (Rec(-1), Rec(-2)),
                 (float(records), 0.0, 0.0))
        if rng.random() < 0.5:
            # Whole pairs keep the observable parity deterministic.
            obs_members += [records - 2, records - 1]
        random_gates(rng.randint(0, 2))
        random_noise()
    if obs_members:
        c.append("OBSERVABLE_INCLUDE",
                 tuple(Rec(m - records) for m in obs_members), (0.0,))
    return c
