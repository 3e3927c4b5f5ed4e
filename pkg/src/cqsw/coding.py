"""Compression codes with quantum side information at desk scale: encoders,
measurement decoders, exact error probabilities, brute-force optimal codes,
and the auxiliary-state success-probability comparison.

A blocklength-n code bins source sequences into w_size indices; the decoder
for each bin is a POVM over sequences acting on the n-fold side system.
Sequences are indexed lexicographically, matching the n-fold product order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from cqsw.errors import (
    CapExceededError,
    InvariantViolation,
    NoConvergenceError,
    POVMInvalidError,
)
from cqsw.operators import (
    eig_hermitian,
    inv_sqrt_on_support,
    nonneg_projector,
    positive_part,
    positive_projector,
    trace_norm,
)
from cqsw.states import CQState, DensityOperator, marginal_b, power_state
from cqsw.variational import DummyState

_POVM_TOL = 1e-9
_CERT_GAP = 1e-6
_FP_RESIDUAL = 1e-8
_FP_MAX_ITERS = 5000
_BRUTE_CAP = 10_000_000


@dataclass
class Code:
    """Deterministic encoder plus one decoding POVM per bin.

    encoder[i] is the bin of the i-th source sequence; decoder[w][i] is the
    POVM element announcing sequence i when the bin is w (missing indices
    mean the zero operator).
    """

    n: int
    w_size: int
    encoder: np.ndarray
    decoder: list

    def __post_init__(self):
        self.encoder = np.asarray(self.encoder, dtype=int)
        if len(self.decoder) != self.w_size:
            raise InvariantViolation("decoder", "one POVM required per bin")
        if np.any(self.encoder < 0) or np.any(self.encoder >= self.w_size):
            raise InvariantViolation("encoder", "bin index out of range")
        for w, povm in enumerate(self.decoder):
            total = None
            for i, pi in povm.items():
                pi = np.asarray(pi)
                wmin = float(np.min(np.linalg.eigvalsh(pi)))
                if wmin < -_POVM_TOL:
                    raise POVMInvalidError(
                        f"bin {w}, outcome {i}: eigenvalue {wmin:.3e} below zero"
                    )
                total = pi.copy() if total is None else total + pi
            if total is None:
                raise POVMInvalidError(f"bin {w}: empty POVM")
            dev = float(np.max(np.abs(total - np.eye(total.shape[0]))))
            if dev > _POVM_TOL:
                raise POVMInvalidError(f"bin {w}: completeness off by {dev:.3e}")

    @property
    def rate(self) -> float:
        return math.log2(self.w_size) / self.n


@dataclass
class ErrorReport:
    p_error: float
    p_success: float
    per_symbol: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if abs(self.p_error + self.p_success - 1.0) > 1e-12:
            raise InvariantViolation("p", "error and success must sum to one")


def _success_on_blocks(blocks, code: Code) -> tuple[float, np.ndarray]:
    per = np.zeros(len(blocks))
    for i, blk in enumerate(blocks):
        povm = code.decoder[int(code.encoder[i])]
        pi = povm.get(i)
        if pi is None:
            continue
        per[i] = float(np.real(np.trace(np.asarray(pi) @ blk)))
    return float(np.sum(per)), per


def error_probability(s: CQState, n: int, code: Code,
                      cap: int = 4096) -> ErrorReport:
    """Exact error probability of the code on the n-fold source."""
    sn = power_state(s, n, cap=cap)
    if code.n != n:
        raise InvariantViolation("n", "code blocklength mismatch")
    blocks = [p * r for p, r in zip(sn.probs,
                                    (m.matrix for m in sn.side_info))]
    succ, per = _success_on_blocks(blocks, code)
    succ = min(max(succ, 0.0), 1.0)
    return ErrorReport(1.0 - succ, succ, per)


class BinningEncoder:
    """Uniform random binning with counter-based randomness: the bin of a
    sequence depends only on (seed, sequence index)."""

    def __init__(self, n: int, w_size: int, seed: int):
        if w_size < 1:
            raise InvariantViolation("w_size", "need at least one bin")
        self.n = n
        self.w_size = w_size
        self.seed = seed

    def __call__(self, index: int) -> int:
        bit = np.random.Philox(key=self.seed, counter=[0, 0, 0, index])
        return int(np.random.Generator(bit).integers(0, self.w_size))

    def table(self, size: int) -> np.ndarray:
        return np.array([self(i) for i in range(size)], dtype=int)


def random_binning(n: int, w_size: int, seed: int) -> BinningEncoder:
    return BinningEncoder(n, w_size, seed)


def pgm_decoder(s: CQState, n: int, encoder, w_size: int,
                cap: int = 4096) -> Code:
    """Pretty good measurement decoder for a given binning.

    Per sequence, Lambda is the projector onto the nonnegative eigenspace of
    p(x) rho^x - rho_B / w_size (n-fold operators); within each bin the
    elements are conjugated by the inverse square root of their sum, and the
    deficiency goes to the first sequence of the bin (bin 0's first sequence
    when the bin is empty).
    """
    sn = power_state(s, n, cap=cap)
    size = sn.size_x
    if isinstance(encoder, BinningEncoder):
        table = encoder.table(size)
    else:
        table = np.array([encoder(i) for i in range(size)], dtype=int)
    rho_b = marginal_b(sn).matrix
    d = rho_b.shape[0]
    lambdas = [
        nonneg_projector(p * r.matrix - rho_b / w_size)
        for p, r in zip(sn.probs, sn.side_info)
    ]
    decoder = []
    eye = np.eye(d)
    for w in range(w_size):
        members = [i for i in range(size) if table[i] == w]
        povm = {}
        if not members:
            povm[0] = eye.copy()
            decoder.append(povm)
            continue
        total = np.zeros((d, d), dtype=np.complex128)
        for i in members:
            total += lambdas[i]
        half = inv_sqrt_on_support(total)
        acc = np.zeros((d, d), dtype=np.complex128)
        for i in members:
            povm[i] = half @ lambdas[i] @ half
            acc += povm[i]
        povm[members[0]] = povm[members[0]] + (eye - acc)
        decoder.append(povm)
    return Code(n, w_size, table, decoder)


def _complete_povm(mats: list, dim: int) -> list:
    """Spread the deficiency of a subnormalized POVM evenly."""
    acc = np.zeros((dim, dim), dtype=np.complex128)
    for m in mats:
        acc += m
    gap = (np.eye(dim) - acc) / len(mats)
    return [m + gap for m in mats]


def min_error_discrimination(ensemble):
    """Optimal discrimination of weighted states: POVM and success value.

    The success value is sum_i w_i Tr[Pi_i rho_i] with the weights taken as
    given (they need not be normalized). Two states are solved in closed
    form; larger ensembles by a damped fixed-point iteration whose result is
    certified against the dual optimality condition.
    """
    ens = [(float(w), np.asarray(getattr(r, "matrix", r), dtype=np.complex128))
           for w, r in ensemble]
    if not ens:
        raise InvariantViolation("ensemble", "need at least one state")
    if any(w < 0 for w, _ in ens):
        raise InvariantViolation("ensemble", "weights must be nonnegative")
    dim = ens[0][1].shape[0]
    if len(ens) == 1:
        return [np.eye(dim)], ens[0][0]
    if len(ens) == 2:
        (w0, r0), (w1, r1) = ens
        diff = w0 * r0 - w1 * r1
        p0 = positive_projector(diff)
        p1 = np.eye(dim) - p0
        succ = w0 * float(np.real(np.trace(p0 @ r0))) \
            + w1 * float(np.real(np.trace(p1 @ r1)))
        # closed form cross-check: (w0 + w1 + ||w0 r0 - w1 r1||_1) / 2
        succ_tn = 0.5 * (w0 + w1 + trace_norm(diff))
        if abs(succ - succ_tn) > 1e-9 * max(1.0, succ_tn):
            raise InvariantViolation("helstrom", "projector and trace-norm "
                                     "routes disagree")
        return [p0, p1], succ

    weighted = [w * r for w, r in ens]
    msum = sum(weighted)
    half = inv_sqrt_on_support(msum)
    povm = _complete_povm([half @ g @ half for g in weighted], dim)

    def certificate_gap(povm):
        y = sum(g @ p for g, p in zip(weighted, povm))
        y = (y + y.conj().T) / 2.0
        worst = 0.0
        for g in weighted:
            w, _ = eig_hermitian(y - g)
            worst = max(worst, -float(w[0]))
        return worst

    best_povm, best_gap = povm, certificate_gap(povm)
    for _ in range(_FP_MAX_ITERS):
        if best_gap <= _CERT_GAP:
            break
        m = sum(g @ p @ g for g, p in zip(weighted, povm))
        m = (m + m.conj().T) / 2.0
        half = inv_sqrt_on_support(m)
        new = _complete_povm([half @ g @ p @ g @ half
                              for g, p in zip(weighted, povm)], dim)
        povm = [0.5 * (a + b) for a, b in zip(povm, new)]
        gap = certificate_gap(povm)
        if gap < best_gap:
            best_povm, best_gap = povm, gap
    succ = sum(float(np.real(np.trace(p @ g)))
               for g, p in zip(weighted, best_povm))
    residual = float(np.max(np.abs(sum(best_povm) - np.eye(dim))))
    if best_gap > _CERT_GAP or residual > _FP_RESIDUAL:
        raise NoConvergenceError(
            "discrimination fixed point did not certify",
            diagnostics={"gap": best_gap, "residual": residual,
                         "povm": best_povm, "success": succ},
        )
    return best_povm, succ


def _canonical_encoders(size: int, w_size: int):
    """Deterministic encoders up to relabeling of the bins: the first
    sequence maps to bin 0 and each later sequence opens at most one new
    bin."""
    def rec(prefix, used):
        if len(prefix) == size:
            yield tuple(prefix)
            return
        top = min(used + 1, w_size)
        for w in range(top):
            prefix.append(w)
            yield from rec(prefix, max(used, w + 1))
            prefix.pop()
    yield from rec([], 0)


def optimal_error_bruteforce(s: CQState, n: int, w_size: int,
                             cap: int = 4096):
    """Ground-truth optimal code: enumerate encoders up to bin relabeling
    and give each bin its optimal discrimination measurement."""
    sn = power_state(s, n, cap=cap)
    size = sn.size_x
    if w_size ** size > _BRUTE_CAP:
        raise CapExceededError(
            f"{w_size}^{size} encoders exceed the {_BRUTE_CAP} cap"
        )
    d = sn.dim_b
    blocks = [(p, r.matrix) for p, r in zip(sn.probs, sn.side_info)]
    best = None
    for table in _canonical_encoders(size, w_size):
        succ = 0.0
        decoder = []
        for w in range(w_size):
            members = [i for i in range(size) if table[i] == w]
            if not members:
                decoder.append({0: np.eye(d)})
                continue
            sub = [(blocks[i][0], blocks[i][1]) for i in members]
            povm, sw = min_error_discrimination(sub)
            succ += sw
            entry = {i: m for i, m in zip(members, povm)}
            decoder.append(entry)
        if best is None or succ > best[0]:
            best = (succ, np.array(table, dtype=int), decoder)
    succ, table, decoder = best
    succ = min(max(succ, 0.0), 1.0)
    code = Code(n, w_size, table, decoder)
    return ErrorReport(1.0 - succ, succ, None), code


def empirical_exponents(s: CQState, n: int, rate: float, decoder_kind: str,
                        trials: int, seed: int, cap: int = 4096):
    """Encoder-averaged error and success exponents under random binning.

    decoder_kind selects the measurement: "pgm" or "optimal" (per-bin
    optimal discrimination). Returns (-log2 avg error, -log2 avg success),
    both divided by n; +inf marks a vanishing average.
    """
    if decoder_kind not in ("pgm", "optimal"):
        raise ValueError(f"unknown decoder kind {decoder_kind!r}")
    w_size = max(1, math.ceil(2.0 ** (n * rate)))
    err_sum = 0.0
    succ_sum = 0.0
    ss = np.random.SeedSequence(seed)
    for child in ss.spawn(trials):
        enc = random_binning(n, w_size, int(child.generate_state(1)[0]))
        if decoder_kind == "pgm":
            code = pgm_decoder(s, n, enc, w_size, cap=cap)
        else:
            code = _optimal_decoder_for(s, n, enc, w_size, cap=cap)
        rep = error_probability(s, n, code, cap=cap)
        err_sum += rep.p_error
        succ_sum += rep.p_success
    avg_err = err_sum / trials
    avg_succ = succ_sum / trials
    e_hat = math.inf if avg_err <= 0 else -math.log2(avg_err) / n
    sc_hat = math.inf if avg_succ <= 0 else -math.log2(avg_succ) / n
    return e_hat, sc_hat


def _optimal_decoder_for(s: CQState, n: int, encoder, w_size: int,
                         cap: int = 4096) -> Code:
    sn = power_state(s, n, cap=cap)
    size = sn.size_x
    if isinstance(encoder, BinningEncoder):
        table = encoder.table(size)
    else:
        table = np.array([encoder(i) for i in range(size)], dtype=int)
    d = sn.dim_b
    decoder = []
    for w in range(w_size):
        members = [i for i in range(size) if table[i] == w]
        if not members:
            decoder.append({0: np.eye(d)})
            continue
        sub = [(sn.probs[i], sn.side_info[i].matrix) for i in members]
        povm, _ = min_error_discrimination(sub)
        decoder.append({i: m for i, m in zip(members, povm)})
    return Code(n, w_size, table, decoder)


def dummy_state_inequality_check(s: CQState, dummy: DummyState, code: Code,
                                 a: float, cap: int = 4096) -> bool:
    """Success probability comparison against an auxiliary source state:
    P_s(rho, C) >= 2^-a (P_s(dummy, C) - Tr[(dummy - 2^a rho)_+]),
    evaluated exactly, allowing 1e-10 slack."""
    if a <= 0:
        raise InvariantViolation("a", "a must be positive")
    dummy.validate_against(s)
    aux = CQState(s.alphabet, dummy.q, list(dummy.sigma))
    sn = power_state(s, code.n, cap=cap)
    an = power_state(aux, code.n, cap=cap)
    rho_blocks = [p * r.matrix for p, r in zip(sn.probs, sn.side_info)]
    aux_blocks = [q * m.matrix for q, m in zip(an.probs, an.side_info)]
    ps_rho, _ = _success_on_blocks(rho_blocks, code)
    ps_aux, _ = _success_on_blocks(aux_blocks, code)
    overshoot = sum(
        float(np.real(np.trace(positive_part(ab - (2.0 ** a) * rb))))
        for rb, ab in zip(rho_blocks, aux_blocks)
    )
    rhs = (2.0 ** -a) * (ps_aux - overshoot)
    return ps_rho >= rhs - 1e-10
