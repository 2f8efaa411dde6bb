"""Stabilizer tableaus with exact sign tracking.

Two variants share the gate algebra:

* :class:`SymbolicTableau` — numpy bit-packed rows whose signs are affine
  expressions in "fresh outcome" symbols, one per non-deterministic
  measurement. Running a noiseless circuit through it yields each
  measurement record as ``const XOR parity(symbol subset)``; a parity of
  records is deterministic iff its symbol subsets cancel. This is the
  arbiter used to validate detectors and observables at build time.

* :class:`DenseTableau` — plain-int rows with concrete random outcomes and
  explicit Pauli noise injection; the reference simulator backing
  ``sim.dense_oracle``.

Row convention follows the standard destabilizer/stabilizer tableau: rows
``0..n-1`` are destabilizers, ``n..2n-1`` stabilizers, initialized to
``X_i`` / ``Z_i`` for the all-zeros state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .paulis import SparsePauli

_W = 64


def _popcount_words(arr: np.ndarray) -> np.ndarray:
    return np.bitwise_count(arr).sum(axis=-1, dtype=np.int64)


@dataclass(frozen=True)
class MeasExpr:
    """A measurement outcome as ``const XOR parity(symbols & mask)``."""

    const: int
    symbols: int

    def __xor__(self, other: "MeasExpr") -> "MeasExpr":
        return MeasExpr(self.const ^ other.const, self.symbols ^ other.symbols)

    @property
    def deterministic(self) -> bool:
        return self.symbols == 0


_ZERO_EXPR = MeasExpr(0, 0)


class SymbolicTableau:
    """Bit-packed tableau with symbolic measurement phases."""

    def __init__(self, num_qubits: int):
        n = self.n = num_qubits
        w = self.w = max(1, -(-n // _W))
        self.x = np.zeros((2 * n, w), dtype=np.uint64)
        self.z = np.zeros((2 * n, w), dtype=np.uint64)
        self.sign = np.zeros(2 * n, dtype=np.uint8)
        self._sym_words = 4
        self.sym = np.zeros((2 * n, self._sym_words), dtype=np.uint64)
        self.num_symbols = 0
        for q in range(n):
            self.x[q, q // _W] |= np.uint64(1 << (q % _W))
            self.z[n + q, q // _W] |= np.uint64(1 << (q % _W))

    # -- helpers -------------------------------------------------------

    def _pauli_words(self, pauli: SparsePauli) -> tuple[np.ndarray, np.ndarray]:
        px = np.zeros(self.w, dtype=np.uint64)
        pz = np.zeros(self.w, dtype=np.uint64)
        for q, b in pauli:
            bit = np.uint64(1 << (q % _W))
            if b != "Z":
                px[q // _W] |= bit
            if b != "X":
                pz[q // _W] |= bit
        return px, pz

    def _anticommute_mask(self, px: np.ndarray, pz: np.ndarray) -> np.ndarray:
        acc = (self.x & pz[None, :]) ^ (self.z & px[None, :])
        return (_popcount_words(acc) & 1).astype(bool)

    @staticmethod
    def _phase_exponent(x1, z1, x2, z2) -> np.ndarray:
        """Sum over qubits of the i-exponent when multiplying P1*P2, mod 4."""
        y1 = x1 & z1
        X1 = x1 & ~z1
        Z1 = z1 & ~x1
        y2 = x2 & z2
        X2 = x2 & ~z2
        Z2 = z2 & ~x2
        plus = (y1 & Z2) | (X1 & y2) | (Z1 & X2)
        minus = (y1 & X2) | (X1 & Z2) | (Z1 & y2)
        return (_popcount_words(plus) - _popcount_words(minus)) % 4

    def _rowmul(self, rows: np.ndarray, pivot: int) -> None:
        """row_h <- row_h * row_pivot for each h in rows.

        Stabilizer rows get exact phase/symbol tracking (their pairwise
        products are Hermitian); destabilizer rows only need their Pauli
        part, their phases are never read.
        """
        if rows.size == 0:
            return
        stab = rows[rows >= self.n]
        if stab.size:
            k = self._phase_exponent(
                self.x[pivot][None, :], self.z[pivot][None, :],
                self.x[stab], self.z[stab])
            k = (k + 2 * self.sign[stab].astype(np.int64)
                 + 2 * int(self.sign[pivot])) % 4
            if np.any(k & 1):
                raise AssertionError("stabilizer product phase not real")
            self.sign[stab] = (k >> 1).astype(np.uint8)
            self.sym[stab] ^= self.sym[pivot]
        self.x[rows] ^= self.x[pivot]
        self.z[rows] ^= self.z[pivot]

    def _fresh_symbol(self) -> int:
        s = self.num_symbols
        self.num_symbols += 1
        if s >= self._sym_words * _W:
            extra = np.zeros((2 * self.n, self._sym_words), dtype=np.uint64)
            self.sym = np.concatenate([self.sym, extra], axis=1)
            self._sym_words *= 2
        return s

    def _sym_int(self, row: int) -> int:
        return int.from_bytes(self.sym[row].tobytes(), "little")

    # -- gates ---------------------------------------------------------

    def _bits(self, qubits) -> tuple[np.ndarray, np.ndarray]:
        px = np.zeros(self.w, dtype=np.uint64)
        for q in qubits:
            px[q // _W] |= np.uint64(1 << (q % _W))
        return px, px

    def h(self, qubits) -> None:
        m, _ = self._bits(qubits)
        xq = self.x & m
        zq = self.z & m
        self.sign ^= (_popcount_words(xq & zq) & 1).astype(np.uint8)
        self.x ^= xq ^ zq
        self.z ^= zq ^ xq

    def h_yz(self, qubits) -> None:
        m, _ = self._bits(qubits)
        xq = self.x & m
        zq = self.z & m
        self.sign ^= (_popcount_words(xq & ~zq) & 1).astype(np.uint8)
        self.x ^= xq ^ (xq ^ zq)  # x' = x ^ z (within mask)

    def h_xy(self, qubits) -> None:
        m, _ = self._bits(qubits)
        xq = self.x & m
        zq = self.z & m
        self.sign ^= (_popcount_words(zq & ~xq) & 1).astype(np.uint8)
        self.z ^= zq ^ (xq ^ zq)  # z' = x ^ z

    def c_xyz(self, qubits) -> None:
        # X -> Y -> Z -> X, no sign flips: x' = x ^ z, z' = x.
        m, _ = self._bits(qubits)
        xq = self.x & m
        zq = self.z & m
        self.x ^= xq ^ (xq ^ zq)
        self.z ^= zq ^ xq

    def c_zyx(self, qubits) -> None:
        # X -> Z, Z -> Y, Y -> X: x' = z, z' = x ^ z.
        m, _ = self._bits(qubits)
        xq = self.x & m
        zq = self.z & m
        self.x ^= xq ^ zq
        self.z ^= zq ^ (xq ^ zq)

    def _two_qubit(self, pairs, kind: str) -> None:
        for c, t in pairs:
            wc, bc = c // _W, np.uint64(1 << (c % _W))
            wt, bt = t // _W, np.uint64(1 << (t % _W))
            xc = (self.x[:, wc] & bc) != 0
            zc = (self.z[:, wc] & bc) != 0
            xt = (self.x[:, wt] & bt) != 0
            zt = (self.z[:, wt] & bt) != 0
            if kind == "CX":
                self.sign ^= (xc & zt & ~(xt ^ zc)).astype(np.uint8)
                flip_t = xc
                flip_c = zt
                self.x[:, wt] ^= np.where(flip_t, bt, np.uint64(0))
                self.z[:, wc] ^= np.where(flip_c, bc, np.uint64(0))
            else:  # CZ
                self.sign ^= (xc & xt & (zc ^ zt)).astype(np.uint8)
                self.z[:, wt] ^= np.where(xc, bt, np.uint64(0))
                self.z[:, wc] ^= np.where(xt, bc, np.uint64(0))

    def cx(self, pairs) -> None:
        self._two_qubit(pairs, "CX")

    def cz(self, pairs) -> None:
        self._two_qubit(pairs, "CZ")

    # -- measurement / reset --------------------------------------------

    def measure_pauli(self, pauli: SparsePauli) -> MeasExpr:
        """Measure an unsigned Pauli product; non-demolition."""
        n = self.n
        px, pz = self._pauli_words(pauli)
        anti = self._anticommute_mask(px, pz)
        anti_stab = np.flatnonzero(anti[n:])
        if anti_stab.size:
            pivot = int(anti_stab[0]) + n
            others = np.flatnonzero(anti)
            others = others[others != pivot]
            self._rowmul(others, pivot)
            # Destabilizer slot records the old stabilizer; the new
            # stabilizer is P with a fresh random outcome symbol.
            d = pivot - n
            self.x[d] = self.x[pivot]
            self.z[d] = self.z[pivot]
            self.sign[d] = self.sign[pivot]
            self.sym[d] = self.sym[pivot]
            self.x[pivot] = px
            self.z[pivot] = pz
            s = self._fresh_symbol()
            self.sign[pivot] = 0
            self.sym[pivot] = 0
            self.sym[pivot, s // _W] = np.uint64(1 << (s % _W))
            return MeasExpr(0, 1 << s)

        # Deterministic: compose P from stabilizer rows flagged by
        # anticommuting destabilizer partners.
        hits = np.flatnonzero(anti[:n])
        acc_x = np.zeros(self.w, dtype=np.uint64)
        acc_z = np.zeros(self.w, dtype=np.uint64)
        phase = 0
        const = 0
        syms = 0
        for i in hits:
            row = n + int(i)
            k = self._phase_exponent(acc_x[None, :], acc_z[None, :],
                                     self.x[row][None, :], self.z[row][None, :])
            phase = (phase + int(k[0]) + 2 * int(self.sign[row])) % 4
            acc_x ^= self.x[row]
            acc_z ^= self.z[row]
            syms ^= self._sym_int(row)
        if not (np.array_equal(acc_x, px) and np.array_equal(acc_z, pz)):
            raise AssertionError("deterministic measurement does not match "
                                 "stabilizer composition")
        if phase % 2:
            raise AssertionError("imaginary phase composing measurement")
        const = (phase // 2) % 2
        return MeasExpr(const, syms)

    def apply_pauli_conditioned(self, pauli: SparsePauli, condition: MeasExpr) -> None:
        """Apply a Pauli iff the (possibly symbolic) condition bit is 1."""
        if condition.const == 0 and condition.symbols == 0:
            return
        px, pz = self._pauli_words(pauli)
        anti = self._anticommute_mask(px, pz)
        if condition.const:
            self.sign[anti] ^= 1
        if condition.symbols:
            mask = np.frombuffer(
                condition.symbols.to_bytes(self._sym_words * 8, "little"),
                dtype=np.uint64).copy()
            self.sym[anti] ^= mask[None, :]

    def reset(self, qubit: int) -> None:
        expr = self.measure_pauli(SparsePauli.single(qubit, "Z"))
        self.apply_pauli_conditioned(SparsePauli.single(qubit, "X"), expr)


def check_determinism(circuit) -> int:
    """Symbolically verify every detector and observable parity of a
    noiseless circuit is deterministic; returns the number checked.

    Noise channels (and MPP flip arguments) are ignored; raises
    AssertionError naming the first non-deterministic annotation.
    """
    from .circuit import iter_unrolled  # local import to avoid a cycle

    tab = SymbolicTableau(circuit.num_qubits)
    exprs: list[MeasExpr] = []
    obs: dict[int, MeasExpr] = {}
    checked = 0
    for inst in iter_unrolled(circuit.instructions):
        name = inst.name
        if name == "R":
            for q in inst.targets:
                tab.reset(q)
        elif name == "H":
            tab.h(list(inst.targets))
        elif name == "H_YZ":
            tab.h_yz(list(inst.targets))
        elif name == "H_XY":
            tab.h_xy(list(inst.targets))
        elif name == "C_XYZ":
            tab.c_xyz(list(inst.targets))
        elif name == "C_ZYX":
            tab.c_zyx(list(inst.targets))
        elif name == "CX":
            t = inst.targets
            tab.cx([(t[i], t[i + 1]) for i in range(0, len(t), 2)])
        elif name == "CZ":
            t = inst.targets
            tab.cz([(t[i], t[i + 1]) for i in range(0, len(t), 2)])
        elif name in ("M", "MR"):
            for q in inst.targets:
                exprs.append(tab.measure_pauli(SparsePauli.single(q, "Z")))
                if name == "MR":
                    tab.apply_pauli_conditioned(
                        SparsePauli.single(q, "X"), exprs[-1])
        elif name == "MPP":
            for pauli in inst.targets:
                exprs.append(tab.measure_pauli(pauli))
        elif name == "DETECTOR":
            acc = _ZERO_EXPR
            for t in inst.targets:
                acc = acc ^ exprs[len(exprs) + t.offset]
            if not acc.deterministic:
                raise AssertionError(
                    f"non-deterministic detector {inst.args}")
            checked += 1
        elif name == "OBSERVABLE_INCLUDE":
            k = int(inst.args[0])
            acc = obs.get(k, _ZERO_EXPR)
            for t in inst.targets:
                acc = acc ^ exprs[len(exprs) + t.offset]
            obs[k] = acc
    for k, acc in obs.items():
        if not acc.deterministic:
            raise AssertionError(f"non-deterministic observable {k}")
        checked += 1
    return checked


class DenseTableau:
    """Concrete-outcome tableau over plain ints, for small reference sims."""

    def __init__(self, num_qubits: int, rng):
        self.n = num_qubits
        self.rng = rng
        self.rx = [1 << q for q in range(num_qubits)] + [0] * num_qubits
        self.rz = [0] * num_qubits + [1 << q for q in range(num_qubits)]
        self.sign = [0] * (2 * num_qubits)

    @staticmethod
    def _phase_exp(x1: int, z1: int, x2: int, z2: int) -> int:
        y1 = x1 & z1
        ex1 = x1 & ~z1
        ez1 = z1 & ~x1
        y2 = x2 & z2
        ex2 = x2 & ~z2
        ez2 = z2 & ~x2
        plus = (y1 & ez2) | (ex1 & y2) | (ez1 & ex2)
        minus = (y1 & ex2) | (ex1 & ez2) | (ez1 & y2)
        return (plus.bit_count() - minus.bit_count()) % 4

    def _mul_into(self, h: int, p: int) -> None:
        k = self._phase_exp(self.rx[p], self.rz[p], self.rx[h], self.rz[h])
        k = (k + 2 * self.sign[h] + 2 * self.sign[p]) % 4
        self.sign[h] = k >> 1
        self.rx[h] ^= self.rx[p]
        self.rz[h] ^= self.rz[p]

    # -- gates (bitmask qubit sets) -------------------------------------

    def h(self, m: int) -> None:
        for i in range(2 * self.n):
            xq = self.rx[i] & m
            zq = self.rz[i] & m
            self.sign[i] ^= (xq & zq).bit_count() & 1
            self.rx[i] ^= xq ^ zq
            self.rz[i] ^= zq ^ xq

    def h_yz(self, m: int) -> None:
        for i in range(2 * self.n):
            xq = self.rx[i] & m
            zq = self.rz[i] & m
            self.sign[i] ^= (xq & ~zq).bit_count() & 1
            self.rx[i] ^= xq ^ (xq ^ zq)

    def h_xy(self, m: int) -> None:
        for i in range(2 * self.n):
            xq = self.rx[i] & m
            zq = self.rz[i] & m
            self.sign[i] ^= (zq & ~xq).bit_count() & 1
            self.rz[i] ^= zq ^ (xq ^ zq)

    def c_xyz(self, m: int) -> None:
        for i in range(2 * self.n):
            xq = self.rx[i] & m
            zq = self.rz[i] & m
            self.rx[i] ^= xq ^ (xq ^ zq)
            self.rz[i] ^= zq ^ xq

    def c_zyx(self, m: int) -> None:
        for i in range(2 * self.n):
            xq = self.rx[i] & m
            zq = self.rz[i] & m
            self.rx[i] ^= xq ^ zq
            self.rz[i] ^= zq ^ (xq ^ zq)

    def cx(self, c: int, t: int) -> None:
        bc, bt = 1 << c, 1 << t
        for i in range(2 * self.n):
            xc = bool(self.rx[i] & bc)
            zc = bool(self.rz[i] & bc)
            xt = bool(self.rx[i] & bt)
            zt = bool(self.rz[i] & bt)
            if xc and zt and not (xt ^ zc):
                self.sign[i] ^= 1
            if xc:
                self.rx[i] ^= bt
            if zt:
                self.rz[i] ^= bc

    def cz(self, a: int, b: int) -> None:
        ba, bb = 1 << a, 1 << b
        for i in range(2 * self.n):
            xa = bool(self.rx[i] & ba)
            za = bool(self.rz[i] & ba)
            xb = bool(self.rx[i] & bb)
            zb = bool(self.rz[i] & bb)
            if xa and xb and (za ^ zb):
                self.sign[i] ^= 1
            if xa:
                self.rz[i] ^= bb
            if xb:
                self.rz[i] ^= ba

    def apply_pauli(self, px: int, pz: int) -> None:
        """Apply a (sign-free) Pauli error: flip anticommuting row signs."""
        for i in range(2 * self.n):
            if ((self.rx[i] & pz) ^ (self.rz[i] & px)).bit_count() & 1:
                self.sign[i] ^= 1

    def measure(self, px: int, pz: int) -> int:
        n = self.n
        pivot = -1
        for i in range(n, 2 * n):
            if ((self.rx[i] & pz) ^ (self.rz[i] & px)).bit_count() & 1:
                pivot = i
                break
        if pivot >= 0:
            for i in range(2 * n):
                if i == pivot:
                    continue
                if ((self.rx[i] & pz) ^ (self.rz[i] & px)).bit_count() & 1:
                    if i >= n:
                        self._mul_into(i, pivot)
                    else:
                        # Destabilizer phases are never read.
                        self.rx[i] ^= self.rx[pivot]
                        self.rz[i] ^= self.rz[pivot]
            d = pivot - n
            self.rx[d] = self.rx[pivot]
            self.rz[d] = self.rz[pivot]
            self.sign[d] = self.sign[pivot]
            out = self.rng.random() < 0.5
            self.rx[pivot] = px
            self.rz[pivot] = pz
            self.sign[pivot] = int(out)
            return int(out)

        acc_x = acc_z = 0
        phase = 0
        for i in range(n):
            if ((self.rx[i] & pz) ^ (self.rz[i] & px)).bit_count() & 1:
                row = n + i
                phase = (phase + self._phase_exp(acc_x, acc_z,
                                                 self.rx[row], self.rz[row])
                         + 2 * self.sign[row]) % 4
                acc_x ^= self.rx[row]
                acc_z ^= self.rz[row]
        assert acc_x == px and acc_z == pz and phase % 2 == 0
        return (phase // 2) % 2

    def reset(self, q: int) -> None:
        out = self.measure(0, 1 << q)
        if out:
            self.apply_pauli(1 << q, 0)
