"""Sherrington-Kirkpatrick problem instances and spin-configuration encoding.

A configuration of n Ising spins is encoded as a basis-state index in
[0, 2^n): bit i of the index is 0 for sigma_i = +1 and 1 for sigma_i = -1,
with the least-significant bit holding spin 1. Every module in this package
shares that convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MIN_SPINS = 2
MAX_SPINS = 14


class InstanceFormatError(ValueError):
    """Raised when an instance file cannot be parsed or fails validation."""


def _check_size(n: int) -> None:
    if not MIN_SPINS <= n <= MAX_SPINS:
        raise ValueError(
            f"spin count n={n} outside supported range [{MIN_SPINS}, {MAX_SPINS}]; "
            f"the simulator enumerates all 2^n states and caps n at {MAX_SPINS}"
        )


@dataclass(frozen=True)
class SKInstance:
    """Frozen SK problem: couplings J_ij (i<j, row-major), fields h_i, size, seed."""

    n: int
    couplings: np.ndarray
    fields: np.ndarray
    seed: int
    instance_id: str = field(default="")

    def __post_init__(self):
        _check_size(self.n)
        couplings = np.asarray(self.couplings, dtype=np.float64)
        fields = np.asarray(self.fields, dtype=np.float64)
        m = self.n * (self.n - 1) // 2
        if couplings.shape != (m,):
            raise ValueError(f"expected {m} couplings for n={self.n}, got {couplings.shape}")
        if fields.shape != (self.n,):
            raise ValueError(f"expected {self.n} fields, got {fields.shape}")
        if not (np.all(np.isfinite(couplings)) and np.all(np.isfinite(fields))):
            raise ValueError("couplings and fields must be finite")
        couplings.setflags(write=False)
        fields.setflags(write=False)
        object.__setattr__(self, "couplings", couplings)
        object.__setattr__(self, "fields", fields)
        if not self.instance_id:
            object.__setattr__(self, "instance_id", f"sk{self.n:02d}-{self.seed & (2**64 - 1):016x}")

    @property
    def num_states(self) -> int:
        return 1 << self.n

    def coupling_matrix(self) -> np.ndarray:
        """Strictly upper-triangular (n, n) matrix with J[i, j] for i < j."""
        J = np.zeros((self.n, self.n))
        J[np.triu_indices(self.n, k=1)] = self.couplings
        return J


def generate_instance(n: int, seed: int) -> SKInstance:
    """Draw i.i.d. standard-normal couplings and fields from a seeded stream.

    Pure function of (n, seed): the same arguments reproduce the instance
    bit-exactly. Uses a counter-based generator so instance streams derived
    from distinct seeds never overlap.
    """
    _check_size(n)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed & (2**64 - 1), n])))
    couplings = rng.standard_normal(n * (n - 1) // 2)
    fields = rng.standard_normal(n)
    return SKInstance(n=n, couplings=couplings, fields=fields, seed=seed)


def spins_from_index(index: int, n: int) -> np.ndarray:
    """Decode a basis-state index into the spin vector (sigma_1, ..., sigma_n)."""
    if not 0 <= index < (1 << n):
        raise ValueError(f"index {index} out of range for n={n}")
    bits = (index >> np.arange(n)) & 1
    return 1 - 2 * bits


def index_from_spins(spins: np.ndarray) -> int:
    """Inverse of spins_from_index."""
    spins = np.asarray(spins)
    if not np.all(np.abs(spins) == 1):
        raise ValueError("spins must be +1/-1")
    bits = (1 - spins) // 2
    return int(np.sum(bits << np.arange(len(spins))))


def energy(inst: SKInstance, index: int) -> float:
    """E(sigma) = sum_{i<j} J_ij sigma_i sigma_j + sum_i h_i sigma_i."""
    s = spins_from_index(index, inst.n)
    J = inst.coupling_matrix()
    return float(s @ J @ s + inst.fields @ s)


def all_energies(inst: SKInstance) -> np.ndarray:
    """Energies of every basis state, indexed by configuration index."""
    n = inst.n
    k = np.arange(1 << n)
    s = 1 - 2 * ((k[:, None] >> np.arange(n)) & 1)
    J = inst.coupling_matrix()
    return np.einsum("ki,ij,kj->k", s, J, s, optimize=True) + s @ inst.fields


def save_instance(inst: SKInstance, path) -> None:
    """Write the self-describing text format (see load_instance)."""
    lines = [f"n={inst.n}", f"seed={inst.seed}", "couplings:"]
    idx = 0
    for i in range(1, inst.n + 1):
        for j in range(i + 1, inst.n + 1):
            lines.append(f"{i} {j} {float(inst.couplings[idx])!r}")
            idx += 1
    lines.append("fields:")
    for i in range(1, inst.n + 1):
        lines.append(f"{i} {float(inst.fields[i - 1])!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_instance(path) -> SKInstance:
    """Parse the text format: `n=`, `seed=` header, then 1-based coupling and field lines.

    Round trip through save_instance is bit-exact (values are written with
    shortest round-trip decimal repr).
    """
    n = None
    seed = None
    couplings = {}
    fields = {}
    section = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                if line.startswith("n="):
                    n = int(line[2:])
                elif line.startswith("seed="):
                    seed = int(line[5:])
                elif line == "couplings:":
                    section = "couplings"
                elif line == "fields:":
                    section = "fields"
                elif section == "couplings":
                    i_s, j_s, v_s = line.split()
                    couplings[(int(i_s), int(j_s))] = float(v_s)
                elif section == "fields":
                    i_s, v_s = line.split()
                    fields[int(i_s)] = float(v_s)
                else:
                    raise ValueError("line outside any section")
            except ValueError as exc:
                raise InstanceFormatError(f"{path}: line {lineno}: cannot parse {line!r}: {exc}") from exc
    if n is None or seed is None:
        raise InstanceFormatError(f"{path}: missing n= or seed= header")
    m = n * (n - 1) // 2
    if len(couplings) != m:
        raise InstanceFormatError(f"{path}: expected {m} couplings for n={n}, found {len(couplings)}")
    if len(fields) != n:
        raise InstanceFormatError(f"{path}: expected {n} fields, found {len(fields)}")
    J = np.empty(m)
    idx = 0
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            if (i, j) not in couplings:
                raise InstanceFormatError(f"{path}: missing coupling ({i}, {j})")
            J[idx] = couplings[(i, j)]
            idx += 1
    h = np.empty(n)
    for i in range(1, n + 1):
        if i not in fields:
            raise InstanceFormatError(f"{path}: missing field {i}")
        h[i - 1] = fields[i]
    return SKInstance(n=n, couplings=J, fields=h, seed=seed)
