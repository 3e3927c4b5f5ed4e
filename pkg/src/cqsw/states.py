"""Sources with quantum side information: a classical symbol distribution
paired with one density operator per symbol, plus n-fold extensions and
JSON file ingestion.
"""

from __future__ import annotations

import itertools
import json

import numpy as np

from cqsw.errors import (
    CapExceededError,
    DimensionMismatchError,
    InvariantViolation,
    ParseError,
)
from cqsw.operators import check_hermitian, eig_hermitian, tensor

_PROB_TOL = 1e-12
_TRACE_TOL = 1e-10
DEFAULT_CAP = 4096


class DensityOperator:
    """PSD matrix with unit trace (small tolerance)."""

    __slots__ = ("matrix",)

    def __init__(self, matrix, check: bool = True):
        m = check_hermitian(matrix)
        if check:
            tr = float(np.real(np.trace(m)))
            if abs(tr - 1.0) > _TRACE_TOL:
                raise InvariantViolation("trace", f"trace {tr} is not 1")
            w, _ = eig_hermitian(m)
            if w.size and float(w[0]) < -_TRACE_TOL:
                raise InvariantViolation("psd", f"eigenvalue {float(w[0]):.3e} < 0")
        self.matrix = m

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


class CQState:
    """Classical-quantum source: symbols, probabilities, side information."""

    def __init__(self, alphabet, probs, side_info, check: bool = True):
        self.alphabet = [str(a) for a in alphabet]
        self.probs = np.asarray(probs, dtype=float)
        self.side_info = [
            r if isinstance(r, DensityOperator) else DensityOperator(r, check=check)
            for r in side_info
        ]
        if not (len(self.alphabet) == len(self.probs) == len(self.side_info)):
            raise InvariantViolation(
                "lengths",
                f"{len(self.alphabet)} symbols, {len(self.probs)} probs, "
                f"{len(self.side_info)} side-info operators",
            )
        dims = {r.dim for r in self.side_info}
        if len(dims) != 1:
            raise DimensionMismatchError(f"side-info dimensions differ: {sorted(dims)}")
        self.dim_b = dims.pop()
        if check:
            if np.any(self.probs < 0):
                raise InvariantViolation("probs", "negative probability")
            total = float(np.sum(self.probs))
            if abs(total - 1.0) > _PROB_TOL * max(1, len(self.probs)):
                raise InvariantViolation("probs", f"probabilities sum to {total}")

    @property
    def size_x(self) -> int:
        return len(self.alphabet)

    def blocks(self):
        """Pairs (p(x), rho_B^x matrix) for the nonzero-probability symbols."""
        return [
            (float(p), r.matrix)
            for p, r in zip(self.probs, self.side_info)
            if p > 0.0
        ]

    def __eq__(self, other):
        if not isinstance(other, CQState):
            return NotImplemented
        return (
            self.alphabet == other.alphabet
            and np.array_equal(self.probs, other.probs)
            and all(
                np.array_equal(a.matrix, b.matrix)
                for a, b in zip(self.side_info, other.side_info)
            )
        )


def as_joint_operator(s: CQState) -> np.ndarray:
    """Block-diagonal joint operator with block x equal to p(x) rho_B^x."""
    d = s.dim_b
    out = np.zeros((s.size_x * d, s.size_x * d), dtype=np.complex128)
    for i, (p, r) in enumerate(zip(s.probs, s.side_info)):
        out[i * d:(i + 1) * d, i * d:(i + 1) * d] = p * r.matrix
    return out


def marginal_b(s: CQState) -> DensityOperator:
    m = np.zeros((s.dim_b, s.dim_b), dtype=np.complex128)
    for p, r in zip(s.probs, s.side_info):
        m += p * r.matrix
    return DensityOperator(m)


def uniform_tau(size: int) -> np.ndarray:
    return np.eye(size) / size


def power_state(s: CQState, n: int, cap: int = DEFAULT_CAP) -> CQState:
    """The n-fold memoryless extension over the alphabet of length-n strings."""
    if n < 1:
        raise ValueError("n must be positive")
    if n == 1:
        return s
    total = (s.size_x ** n) * (s.dim_b ** n)
    if total > cap:
        raise CapExceededError(
            f"n-fold state dimension {total} exceeds cap {cap}"
        )
    alphabet = []
    probs = []
    ops = []
    for idx in itertools.product(range(s.size_x), repeat=n):
        alphabet.append("".join(s.alphabet[i] for i in idx))
        probs.append(float(np.prod([s.probs[i] for i in idx])))
        ops.append(DensityOperator(tensor(*(s.side_info[i].matrix for i in idx)), check=False))
    return CQState(alphabet, probs, ops, check=False)


def _matrix_to_json(m: np.ndarray):
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _matrix_from_json(rows, d: int, which: int) -> np.ndarray:
    if len(rows) != d:
        raise ParseError(f"rho[{which}]: expected {d} rows, got {len(rows)}")
    out = np.zeros((d, d), dtype=np.complex128)
    for i, row in enumerate(rows):
        if len(row) != d:
            raise ParseError(f"rho[{which}] row {i}: expected {d} entries")
        for j, pair in enumerate(row):
            if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
                raise ParseError(f"rho[{which}][{i}][{j}]: expected [re, im] pair")
            out[i, j] = complex(float(pair[0]), float(pair[1]))
    return out


def save_state(s: CQState, path) -> None:
    doc = {
        "alphabet": s.alphabet,
        "probs": [float(p) for p in s.probs],
        "dim_b": s.dim_b,
        "rho": [_matrix_to_json(r.matrix) for r in s.side_info],
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")


def load_state(path) -> CQState:
    with open(path, encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise ParseError(f"line {e.lineno}: {e.msg}") from e
    for field in ("alphabet", "probs", "dim_b", "rho"):
        if field not in doc:
            raise ParseError(f"missing field `{field}`")
    d = doc["dim_b"]
    if not isinstance(d, int) or d < 1:
        raise ParseError("dim_b: expected a positive integer")
    mats = [_matrix_from_json(rows, d, k) for k, rows in enumerate(doc["rho"])]
    return CQState(doc["alphabet"], doc["probs"], mats)
