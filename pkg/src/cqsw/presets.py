"""Ready-made example sources used by tests and the CLI."""

from __future__ import annotations

import numpy as np

from cqsw.operators import random_density
from cqsw.states import CQState, DensityOperator

KET0 = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=np.complex128)
KET1 = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=np.complex128)
KETPLUS = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=np.complex128)


def zero_plus_source(p: float = 0.5) -> CQState:
    """Uniform bit with side information |0> for symbol 0 and |+> for symbol 1."""
    return CQState(["0", "1"], [p, 1.0 - p], [KET0, KETPLUS])


def perfect_side_info() -> CQState:
    """Uniform bit with orthogonal pure side information: decoder knows x."""
    return CQState(["0", "1"], [0.5, 0.5], [KET0, KET1])


def no_side_info(p=None, dim_b: int = 2) -> CQState:
    """Side information independent of the symbol (maximally mixed)."""
    if p is None:
        p = [0.5, 0.5]
    p = list(p)
    tau = np.eye(dim_b) / dim_b
    return CQState([str(i) for i in range(len(p))], p, [tau] * len(p))


def doubly_symmetric(q: float = 0.11) -> CQState:
    """Uniform bit whose side information is the bit flipped with probability q.

    The side-info operators are diagonal, so the source is classical and
    H(X|B) equals the binary entropy of q.
    """
    rho0 = np.diag([1.0 - q, q]).astype(np.complex128)
    rho1 = np.diag([q, 1.0 - q]).astype(np.complex128)
    return CQState(["0", "1"], [0.5, 0.5], [rho0, rho1])


def random_cq_state(rng: np.random.Generator, size_x: int = 2, dim_b: int = 2,
                    full_rank: bool = True) -> CQState:
    """Random source: Dirichlet symbol weights, Wishart-style side information."""
    probs = rng.dirichlet(np.ones(size_x))
    ops = []
    for _ in range(size_x):
        rank = dim_b if full_rank else int(rng.integers(1, dim_b + 1))
        ops.append(DensityOperator(random_density(rng, dim_b, rank), check=False))
    return CQState([str(i) for i in range(size_x)], probs, ops, check=False)


def random_commuting_state(rng: np.random.Generator, size_x: int = 2,
                           dim_b: int = 2) -> CQState:
    """Random source whose side-info operators are all diagonal (classical)."""
    probs = rng.dirichlet(np.ones(size_x))
    ops = []
    for _ in range(size_x):
        diag = rng.dirichlet(np.ones(dim_b))
        ops.append(DensityOperator(np.diag(diag).astype(np.complex128), check=False))
    return CQState([str(i) for i in range(size_x)], probs, ops, check=False)
