"""Second-order twirling channel and the purity moment it yields.

Averaging an operator on a doubled space over U (x) U conjugation projects it
onto span{I, S}, S being the swap of the two copies; the two coefficients are
linear in Tr(Theta) and Tr(S Theta).  Applied to the right operators this
reproduces the mean subsystem purity, giving a derivation route independent
of the Weingarten engine.  The selftest compares the two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .ensembles import haar_unitary
from .weingarten import BipartitionDims

MAX_NUMERIC_DIM = 6  # numeric_twirl2 materializes N^2 x N^2 operators


@dataclass(frozen=True)
class TwirlDecomposition:
    """Image of an operator under the two-copy twirl: c_id * I + c_swap * S."""

    coeff_identity: object
    coeff_swap: object
    dim: int

    def reconstruct(self) -> np.ndarray:
        """The twirled operator as a dense N^2 x N^2 matrix."""
        eye = np.eye(self.dim**2, dtype=complex)
        return complex(self.coeff_identity) * eye + complex(self.coeff_swap) * swap_matrix(self.dim)


def swap_matrix(N: int) -> np.ndarray:
    """Swap operator on C^N (x) C^N: S (u (x) v) = v (x) u."""
    s = np.zeros((N * N, N * N))
    for i in range(N):
        for j in range(N):
            s[j * N + i, i * N + j] = 1.0
    return s


def twirl2_decompose(trace_theta, swap_trace_theta, N: int) -> TwirlDecomposition:
    """Coefficients of the twirled operator from its two scalar invariants.

    c_id = (N Tr(Theta) - Tr(S Theta)) / (N (N^2 - 1)) and symmetrically for
    c_swap.  Exact for exact inputs (Fractions stay Fractions).  N = 1 has no
    two-dimensional commutant, hence the N >= 2 requirement.
    """
    if N < 2:
        raise ValueError(f"two-copy twirl needs N >= 2, got N={N}")
    den = N * (N**2 - 1)
    if isinstance(trace_theta, (int, Fraction)) and isinstance(swap_trace_theta, (int, Fraction)):
        c_id = Fraction(N * trace_theta - swap_trace_theta, den)
        c_swap = Fraction(N * swap_trace_theta - trace_theta, den)
    else:
        c_id = (N * trace_theta - swap_trace_theta) / den
        c_swap = (N * swap_trace_theta - trace_theta) / den
    return TwirlDecomposition(coeff_identity=c_id, coeff_swap=c_swap, dim=N)


def swap_partial_traces(dims: BipartitionDims) -> tuple[int, int]:
    """Traces of the two partially swapped identities on the doubled system.

    Swapping only the B factors gives trace n_b * n_a^2; swapping only the A
    factors gives n_a * n_b^2.  These two integers are the only inputs the
    twirl route needs beyond the decomposition coefficients.
    """
    return dims.n_b * dims.n_a**2, dims.n_a * dims.n_b**2


def m1_pure_via_twirl(dims: BipartitionDims) -> Fraction:
    """Mean subsystem purity of a Haar-random pure state, via the twirl.

    Two copies of a pure state have Tr(Theta) = Tr(S Theta) = 1; contracting
    the twirled operator with the A-swap turns the identity piece into the
    A-swapped trace and the full-swap piece into the B-swapped trace.
    """
    dec = twirl2_decompose(1, 1, dims.n)
    swap_b_trace, swap_a_trace = swap_partial_traces(dims)
    return dec.coeff_identity * swap_a_trace + dec.coeff_swap * swap_b_trace


def m1_mixed_via_twirl(dims: BipartitionDims, p2) -> Fraction:
    """Mean subsystem purity at fixed global spectrum, via the twirl.

    Purifying the mixed state and tracking only the two scalar invariants of
    the relevant doubled-space operator (the partially swapped identities of
    :func:`swap_partial_traces`), the twirled identity piece contracts to
    Tr Lambda^2 = p2 and the swap piece to 1.
    """
    p2 = Fraction(p2)
    if not Fraction(1, dims.n) <= p2 <= 1:
        raise ValueError(f"global purity must lie in [1/{dims.n}, 1], got {p2}")
    swap_b_trace, swap_a_trace = swap_partial_traces(dims)
    dec = twirl2_decompose(swap_b_trace, swap_a_trace, dims.n)
    return dec.coeff_identity * p2 + dec.coeff_swap * 1


def numeric_twirl2(theta: np.ndarray, n_mc: int, rng) -> np.ndarray:
    """Monte Carlo two-copy twirl: average of (U (x) U) Theta (U (x) U)^dag.

    For cross-checking the closed-form decomposition only; refuses N > 6 to
    keep the dense N^2 x N^2 algebra small.
    """
    theta = np.asarray(theta, dtype=complex)
    if theta.ndim != 2 or theta.shape[0] != theta.shape[1]:
        raise ValueError(f"expected a square operator, got shape {theta.shape}")
    N = math.isqrt(theta.shape[0])
    if N * N != theta.shape[0]:
        raise ValueError(f"operator dimension {theta.shape[0]} is not a square")
    if N > MAX_NUMERIC_DIM:
        raise ValueError(f"refusing N={N} > {MAX_NUMERIC_DIM} for the dense twirl")
    if n_mc < 1:
        raise ValueError("n_mc must be positive")
    acc = np.zeros_like(theta)
    for _ in range(n_mc):
        u = haar_unitary(N, rng)
        uu = np.kron(u, u)
        acc += uu @ theta @ uu.conj().T
    return acc / n_mc


def twirl2_apply(theta: np.ndarray) -> np.ndarray:
    """Closed-form two-copy twirl of a dense operator.

    Computes the two scalar invariants of Theta and reconstructs
    c_id * I + c_swap * S; the Monte Carlo route should converge to this.
    """
    theta = np.asarray(theta, dtype=complex)
    N = math.isqrt(theta.shape[0])
    if N * N != theta.shape[0]:
        raise ValueError(f"operator dimension {theta.shape[0]} is not a square")
    tr = complex(np.trace(theta))
    swap_tr = complex(np.trace(swap_matrix(N) @ theta))
    return twirl2_decompose(tr, swap_tr, N).reconstruct()
