"""Random-state ensembles and Monte Carlo estimators for subsystem purity.

Samplers: Haar unitaries, spectra induced by tracing half of a random pure
state, spectra confined to a thin shell of fixed global purity, and a joint
(U, Lambda) Metropolis chain weighted by exp(-beta * purity_A).  Estimators
report batch-means error bars and are bit-reproducible for a fixed seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from .weingarten import BipartitionDims

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
EIGENVALUE_FLOOR = -1e-10
MIN_ACCEPTANCE = 0.01
N_BATCHES = 50
DEFAULT_SHELL_EPS = 1e-3


class SamplerDiagnosticError(RuntimeError):
    """A Metropolis chain is too sick to trust (e.g. acceptance below 1%)."""


class DensityMatrix:
    """Validated density matrix: Hermitian, unit trace, eigenvalues >= -1e-10."""

    __slots__ = ("matrix",)

    def __init__(self, matrix) -> None:
        m = np.asarray(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > HERMITICITY_TOL:
            raise ValueError(f"matrix deviates from Hermitian by more than {HERMITICITY_TOL}")
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"trace {tr} differs from 1 by more than {TRACE_TOL}")
        if float(np.linalg.eigvalsh(m).min()) < EIGENVALUE_FLOOR:
            raise ValueError(f"eigenvalue below {EIGENVALUE_FLOOR}; not positive semidefinite")
        self.matrix = m

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __repr__(self) -> str:
        return f"DensityMatrix(dim={self.dim})"


class Spectrum:
    """Eigenvalue vector of a density matrix: entries in [0, 1] summing to 1."""

    __slots__ = ("values",)

    def __init__(self, values) -> None:
        v = np.asarray(values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError(f"expected a nonempty vector, got shape {v.shape}")
        if float(v.min()) < EIGENVALUE_FLOOR or float(v.max()) > 1.0 - EIGENVALUE_FLOOR:
            raise ValueError("spectrum entries must lie in [0, 1]")
        if abs(float(v.sum()) - 1.0) > TRACE_TOL:
            raise ValueError(f"spectrum sums to {v.sum()}, not 1 within {TRACE_TOL}")
        self.values = v

    @property
    def n(self) -> int:
        return self.values.size

    def __repr__(self) -> str:
        return f"Spectrum({self.values!r})"


@dataclass(frozen=True)
class McConfig:
    """Chain-length and step-size knobs shared by all Monte Carlo estimators."""

    burn_in: int = 1000
    n_samples: int = 20000
    thinning: int = 1
    step_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.burn_in < 0:
            raise ValueError(f"burn_in must be >= 0, got {self.burn_in}")
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be >= 1, got {self.n_samples}")
        if self.thinning < 1:
            raise ValueError(f"thinning must be >= 1, got {self.thinning}")
        if not self.step_scale > 0:
            raise ValueError(f"step_scale must be > 0, got {self.step_scale}")


@dataclass(frozen=True)
class EnsembleConfig:
    """Full specification of one sampled ensemble, seed included.

    x is the target global purity; None means unconstrained.  beta weights
    states by exp(-beta * purity_A) and may be negative.  Identical configs
    produce bit-identical sample streams.
    """

    dims: BipartitionDims
    x: Optional[float] = None
    beta: float = 0.0
    seed: int = 0
    shell_eps: float = 1e-3
    mc: McConfig = field(default_factory=McConfig)

    def __post_init__(self) -> None:
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must fit in 64 bits, got {self.seed}")
        if not self.shell_eps > 0:
            raise ValueError(f"shell_eps must be > 0, got {self.shell_eps}")
        if self.x is not None:
            _check_purity_target(self.dims.n, float(self.x))
        if not math.isfinite(self.beta):
            raise ValueError(f"beta must be finite, got {self.beta}")


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo estimate with a batch-means standard error."""

    mean: float
    stderr: float
    n: int
    autocorr_note: Optional[str] = None

    def __post_init__(self) -> None:
        if self.stderr < 0:
            raise ValueError(f"stderr must be >= 0, got {self.stderr}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")

    def as_json_dict(self) -> dict:
        return {
            "mean": self.mean,
            "stderr": self.stderr,
            "n": self.n,
            "autocorr_note": self.autocorr_note,
        }


def _check_purity_target(N: int, x: float) -> None:
    if not 1.0 / N <= x <= 1.0:
        raise ValueError(f"global purity must lie in [1/{N}, 1], got {x}")


def substream(seed: int, *ids: int) -> np.random.Generator:
    """Child RNG keyed by (seed, ids): deterministic, collision-free streams."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=ids))


def haar_unitary(N: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed N x N unitary: QR of a complex Ginibre matrix.

    The R diagonal is divided out by its phases, which removes the gauge
    freedom of QR and leaves exactly the Haar distribution.
    """
    z = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    q, r = np.linalg.qr(z / np.sqrt(2))
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def _haar_unitaries(N: int, count: int, rng: np.random.Generator) -> np.ndarray:
    # batched version of haar_unitary; same construction, stacked QR
    z = rng.standard_normal((count, N, N)) + 1j * rng.standard_normal((count, N, N))
    q, r = np.linalg.qr(z / np.sqrt(2))
    d = np.einsum("...ii->...i", r)
    return q * (d / np.abs(d))[:, None, :]


def sample_spectrum_induced(N: int, rng: np.random.Generator) -> Spectrum:
    """Spectrum of one half of a Haar-random pure state on an N x N product.

    The pure state is a normalized complex Gaussian vector; reshaped to an
    N x N matrix G, the reduced state is G G^dag / Tr(G G^dag).  Only the
    eigenvalues are returned (ascending).
    """
    g = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    w = np.linalg.eigvalsh(g @ g.conj().T)
    return Spectrum(w / w.sum())


class SimplexShellSampler:
    """Metropolis chain on the simplex slice |Tr Lambda^2 - x| <= shell_eps.

    The base target is the squared Vandermonde of the entries (eigenvalue
    repulsion of the trace-induced measure) restricted to the shell.  In
    polar coordinates about the simplex center, Lambda = center + r * u, the
    proposal draws the direction u by a projected-normal step (symmetric on
    the sphere) and the radius r uniformly over the shell interval.  The
    uniform radial draw ignores the r^(N-2) volume factor of the hyperplane
    measure, so the Hastings ratio carries (r'/r)^(N-2) alongside the
    Vandermonde ratio; callers add their own log-weight difference (the beta
    factor of the canonical ensemble) before accepting.
    """

    TARGET_ACCEPTANCE = 0.30
    ADAPT_GAIN = 0.05

    def __init__(self, N: int, x: float, shell_eps: float, step_scale: float = 1.0) -> None:
        if N < 2:
            raise ValueError(f"need N >= 2, got {N}")
        _check_purity_target(N, x)
        if not shell_eps > 0:
            raise ValueError(f"shell_eps must be > 0, got {shell_eps}")
        self.N = N
        self.x = float(x)
        lo = max(x - shell_eps, 1.0 / N)
        hi = min(x + shell_eps, 1.0)
        self.r_lo = math.sqrt(lo - 1.0 / N)
        self.r_hi = math.sqrt(hi - 1.0 / N)
        self.center = np.full(N, 1.0 / N)
        self._base_step = 0.55 * step_scale / math.sqrt(N)
        self.ang_step = self._base_step
        self.adapting = False
        self.lam: np.ndarray | None = None
        self.r = 0.0
        self.log_v2 = -math.inf
        self.proposed = 0
        self.accepted = 0

    def init_state(self) -> None:
        """Two-level starting point with Tr Lambda^2 = x exactly.

        Degenerate entries make the Vandermonde vanish; the stored log-weight
        is -inf, so the first feasible proposal is always accepted.
        """
        N, x = self.N, self.x
        a = 1.0 / N + math.sqrt(max(x - 1.0 / N, 0.0) * (N - 1) / N)
        rest = (1.0 - a) / (N - 1)
        lam = np.full(N, rest)
        lam[0] = a
        self._set_state(lam)

    def _set_state(self, lam: np.ndarray) -> None:
        self.lam = lam
        self.r = float(np.linalg.norm(lam - self.center))
        self.log_v2 = _log_vandermonde_sq(lam)

    def propose(self, rng: np.random.Generator):
        """Candidate (lam, log base ratio); None when outside the simplex."""
        if self.r > 0.0:
            u = (self.lam - self.center) / self.r
        else:
            u = np.zeros(self.N)  # degenerate start at the center: direction is free
        eta = rng.standard_normal(self.N)
        eta -= eta.mean()  # stay in the sum-zero tangent space
        w = u + self.ang_step * eta
        w -= w.mean()  # scrub rounding drift off the hyperplane
        u_new = w / np.linalg.norm(w)
        r_new = rng.uniform(self.r_lo, self.r_hi)
        lam_new = self.center + r_new * u_new
        self.proposed += 1
        if lam_new.min() < 0.0:
            return None
        log_ratio = (
            _log_vandermonde_sq(lam_new)
            - self.log_v2
            + (self.N - 2) * (_safe_log(r_new) - _safe_log(self.r))
        )
        return lam_new, r_new, log_ratio

    def accept(self, lam_new: np.ndarray, r_new: float) -> None:
        self.accepted += 1
        self.lam = lam_new
        self.r = r_new
        self.log_v2 = _log_vandermonde_sq(lam_new)

    def step(self, rng: np.random.Generator) -> bool:
        """One unweighted Metropolis step (no beta factor).  True if moved."""
        cand = self.propose(rng)
        moved = False
        if cand is not None:
            lam_new, r_new, log_ratio = cand
            if log_ratio >= 0 or math.log(rng.uniform()) < log_ratio:
                self.accept(lam_new, r_new)
                moved = True
        self.record(moved)
        return moved

    def record(self, accepted: bool) -> None:
        """Feed the step adaptation; callers of propose/accept must use this.

        Per-proposal stochastic approximation toward the target acceptance,
        multiplicative and bounded.  Active only while adapting (burn-in);
        estimates are always collected with the step frozen, which keeps the
        kept chain a plain Metropolis chain.
        """
        if not self.adapting:
            return
        drift = self.ADAPT_GAIN * ((1.0 if accepted else 0.0) - self.TARGET_ACCEPTANCE)
        self.ang_step = _bounded(
            self.ang_step * math.exp(drift),
            1e-3 * self._base_step,
            30.0 * self._base_step,
        )

    def reset_counters(self) -> None:
        self.proposed = self.accepted = 0

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposed if self.proposed else 0.0


def _safe_log(x: float) -> float:
    return math.log(x) if x > 0.0 else -math.inf


def _bounded(x: float, lo: float, hi: float) -> float:
    return min(max(x, lo), hi)


def _log_vandermonde_sq(lam: np.ndarray) -> float:
    diffs = lam[:, None] - lam[None, :]
    tri = np.abs(diffs[np.triu_indices(lam.size, k=1)])
    with np.errstate(divide="ignore"):
        return float(2.0 * np.sum(np.log(tri)))


def _flat_spectrum(N: int) -> Spectrum:
    return Spectrum(np.full(N, 1.0 / N))


def _vertex_spectrum(N: int) -> Spectrum:
    v = np.zeros(N)
    v[0] = 1.0
    return Spectrum(v)


def sample_spectrum_fixed_purity(
    N: int,
    x: float,
    shell_eps: float,
    rng: np.random.Generator,
    burn_in: int = 600,
    step_scale: float = 1.0,
) -> Spectrum:
    """One spectrum from the fixed-global-purity shell, via a fresh short chain.

    The degenerate ends are exact: x = 1/N gives the flat spectrum (the shell
    collapses to a point) and x = 1 a simplex vertex.  Raises
    SamplerDiagnosticError when the chain's acceptance drops below 1%.
    """
    _check_purity_target(N, x)
    if x == 1.0 / N:
        return _flat_spectrum(N)
    if x == 1.0:
        return _vertex_spectrum(N)
    sampler = SimplexShellSampler(N, x, shell_eps, step_scale)
    sampler.init_state()
    _equilibrate(sampler, burn_in, rng)
    for _ in range(max(burn_in // 4, 50)):
        sampler.step(rng)
    _require_healthy(sampler.acceptance_rate, "fixed-purity spectrum sampler")
    return Spectrum(sampler.lam)


def _equilibrate(sampler: SimplexShellSampler, burn_in: int, rng) -> None:
    # step-size adaptation is confined to burn-in; the kept chain is frozen
    sampler.adapting = True
    for _ in range(burn_in):
        sampler.step(rng)
    sampler.adapting = False
    sampler.reset_counters()


def _require_healthy(rate: float, what: str) -> None:
    if rate < MIN_ACCEPTANCE:
        raise SamplerDiagnosticError(
            f"{what}: acceptance rate {rate:.2%} below {MIN_ACCEPTANCE:.0%}; "
            "reduce step_scale or widen shell_eps"
        )


def assemble_state(spectrum: Spectrum, U: np.ndarray) -> DensityMatrix:
    """U diag(Lambda) U^dag as a validated DensityMatrix."""
    lam = spectrum.values
    m = (U * lam) @ U.conj().T
    m = (m + m.conj().T) / 2  # scrub rounding asymmetry, not unitarity errors
    return DensityMatrix(m)


def partial_trace(rho, dims: BipartitionDims, keep: str = "A") -> DensityMatrix:
    """Reduced density matrix on the kept factor.

    Composite index convention is A-major: row = n_b * (alpha - 1) + beta for
    A-row alpha and B-row beta, both 1-based.
    """
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    na, nb = dims.n_a, dims.n_b
    if m.shape != (na * nb, na * nb):
        raise ValueError(f"matrix shape {m.shape} does not match dims {na}x{nb}")
    t = m.reshape(na, nb, na, nb)
    if keep == "A":
        reduced = np.einsum("abcb->ac", t)
    elif keep == "B":
        reduced = np.einsum("abad->bd", t)
    else:
        raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")
    return DensityMatrix(reduced)


def purity(rho) -> float:
    """Tr rho^2."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    return float(np.einsum("ij,ji->", m, m).real)


def power_sums(spectrum: Spectrum, up_to: int) -> tuple[float, ...]:
    """(p_1, ..., p_up_to) with p_j = sum_i lambda_i^j."""
    if up_to < 1:
        raise ValueError(f"up_to must be >= 1, got {up_to}")
    v = spectrum.values
    return tuple(float(np.sum(v**j)) for j in range(1, up_to + 1))


def _batch_means(samples: np.ndarray) -> tuple[float, float, Optional[str]]:
    """Mean, batch-means stderr over 50 batches, and an ESS note if needed.

    Batch means absorb chain autocorrelation into the between-batch spread.
    The note fires when the implied effective sample size drops below half
    the nominal one.  The remainder after equal division is dropped from the
    front (the oldest, least equilibrated part of the stream).
    """
    xs = np.asarray(samples, dtype=float)
    n = xs.size
    mean = float(xs.mean())
    nb = min(N_BATCHES, n)
    if nb < 2:
        return mean, 0.0, None
    bs = n // nb
    bmeans = xs[n - nb * bs :].reshape(nb, bs).mean(axis=1)
    stderr = float(bmeans.std(ddof=1) / math.sqrt(nb))
    note = None
    s2 = float(xs.var(ddof=1))
    if stderr > 0 and s2 > 0:
        ess = s2 / stderr**2
        if ess < 0.5 * n:
            note = f"autocorrelated chain: effective sample size ~{ess:.0f} of {n}"
    return mean, stderr, note


def _purity_a_batch(rho: np.ndarray, na: int, nb: int) -> np.ndarray:
    # rho: (batch, N, N) -> purity of the A-reduction, per batch entry
    t = rho.reshape(-1, na, nb, na, nb)
    rho_a = np.einsum("nabcb->nac", t)
    return np.einsum("nac,nca->n", rho_a, rho_a).real


def mc_moment_fixed_spectrum(
    spectrum: Spectrum,
    dims: BipartitionDims,
    k: int,
    mc: McConfig,
    rng: np.random.Generator,
) -> McEstimate:
    """Monte Carlo k-th moment of subsystem purity at a fixed global spectrum.

    Averages purity_A(U Lambda U^dag)^k over mc.n_samples independent Haar
    unitaries; burn_in and thinning are irrelevant for iid draws and ignored.
    A flat spectrum makes the integrand constant in U and is returned exactly.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    lam = spectrum.values
    N = dims.n
    if lam.size != N:
        raise ValueError(f"spectrum has {lam.size} entries, dims give N={N}")
    if np.all(lam == lam[0]):
        # U Lambda U^dag = lam[0] * I for every U; nothing fluctuates
        pa = float(lam[0] ** 2 * dims.n_b**2 * dims.n_a)
        return McEstimate(mean=pa**k, stderr=0.0, n=mc.n_samples)
    vals = np.empty(mc.n_samples)
    done = 0
    while done < mc.n_samples:
        b = min(4096, mc.n_samples - done)
        u = _haar_unitaries(N, b, rng)
        rho = (u * lam) @ np.conj(np.swapaxes(u, 1, 2))
        vals[done : done + b] = _purity_a_batch(rho, dims.n_a, dims.n_b) ** k
        done += b
    mean, stderr, note = _batch_means(vals)
    return McEstimate(mean=mean, stderr=stderr, n=mc.n_samples, autocorr_note=note)


def estimate_avg_power_sums(
    dims: BipartitionDims,
    x: float,
    mc: McConfig,
    rng: np.random.Generator,
) -> tuple[McEstimate, McEstimate]:
    """Ensemble averages of Tr Lambda^3 and Tr Lambda^4 at fixed global purity.

    One shell chain on the full N-simplex; returns (p3, p4) estimates.  The
    degenerate targets x = 1/N and x = 1 pin the spectrum completely and come
    back exact with zero stderr.
    """
    N = dims.n
    _check_purity_target(N, x)
    if x == 1.0 / N:
        return (
            McEstimate(mean=N**-2.0, stderr=0.0, n=mc.n_samples),
            McEstimate(mean=N**-3.0, stderr=0.0, n=mc.n_samples),
        )
    if x == 1.0:
        return (
            McEstimate(mean=1.0, stderr=0.0, n=mc.n_samples),
            McEstimate(mean=1.0, stderr=0.0, n=mc.n_samples),
        )
    sampler = SimplexShellSampler(N, x, DEFAULT_SHELL_EPS, mc.step_scale)
    return _power_sum_chain(sampler, mc, rng)


def estimate_avg_power_sums_shell(
    dims: BipartitionDims,
    x: float,
    shell_eps: float,
    mc: McConfig,
    rng: np.random.Generator,
) -> tuple[McEstimate, McEstimate]:
    """Same as estimate_avg_power_sums but with an explicit shell width."""
    N = dims.n
    _check_purity_target(N, x)
    if x == 1.0 / N or x == 1.0:
        return estimate_avg_power_sums(dims, x, mc, rng)
    sampler = SimplexShellSampler(N, x, shell_eps, mc.step_scale)
    return _power_sum_chain(sampler, mc, rng)


def _power_sum_chain(
    sampler: SimplexShellSampler, mc: McConfig, rng: np.random.Generator
) -> tuple[McEstimate, McEstimate]:
    sampler.init_state()
    _equilibrate(sampler, mc.burn_in, rng)
    p3 = np.empty(mc.n_samples)
    p4 = np.empty(mc.n_samples)
    for i in range(mc.n_samples):
        for _ in range(mc.thinning):
            sampler.step(rng)
        lam = sampler.lam
        p3[i] = np.sum(lam**3)
        p4[i] = np.sum(lam**4)
    _require_healthy(sampler.acceptance_rate, "fixed-purity power-sum chain")
    m3, se3, note3 = _batch_means(p3)
    m4, se4, note4 = _batch_means(p4)
    return (
        McEstimate(mean=m3, stderr=se3, n=mc.n_samples, autocorr_note=note3),
        McEstimate(mean=m4, stderr=se4, n=mc.n_samples, autocorr_note=note4),
    )


def _gue_matrix(N: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    return (a + a.conj().T) / 2


def _unitary_exp(H: np.ndarray, eps: float) -> np.ndarray:
    # exp(i eps H) for Hermitian H, via its eigendecomposition
    w, v = np.linalg.eigh(H)
    return (v * np.exp(1j * eps * w)) @ v.conj().T


def mc_moment_canonical(config: EnsembleConfig, k: int = 1) -> McEstimate:
    """k-th moment of subsystem purity under the exp(-beta purity_A) ensemble.

    Joint Metropolis chain over (U, Lambda) against the Haar x shell base
    measure reweighted by exp(-beta * purity_A(U Lambda U^dag)).  One sweep
    is a U move (left multiplication by exp(i eps H), H a Hermitian Gaussian)
    followed by a Lambda move on the purity shell; normalization constants
    never enter, only weight ratios.

    x = 1/N collapses the base measure to the maximally mixed state, whose
    subsystem purity is 1/n_a no matter what U or beta do; that case returns
    exactly with zero stderr.  x = 1 pins Lambda to a vertex and only U moves.
    """
    if config.x is None:
        raise ValueError("canonical sampling needs a target purity x, got None (free)")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    dims = config.dims
    N = dims.n
    x = float(config.x)
    mc = config.mc
    if x == 1.0 / N:
        return McEstimate(mean=(1.0 / dims.n_a) ** k, stderr=0.0, n=mc.n_samples)

    rng = substream(config.seed)
    beta = float(config.beta)
    lam_fixed = x == 1.0
    if lam_fixed:
        lam = _vertex_spectrum(N).values
        shell = None
    else:
        shell = SimplexShellSampler(N, x, config.shell_eps, mc.step_scale)
        shell.init_state()
        # tune the spectrum step on the bare shell first; otherwise a short
        # joint burn-in can freeze a wildly mis-sized proposal
        _equilibrate(shell, max(600, min(mc.burn_in, 2000)), rng)
        lam = shell.lam

    u_mat = haar_unitary(N, rng)
    u_eps = 0.8 * mc.step_scale / math.sqrt(N)
    pa = _purity_a_of(u_mat, lam, dims)
    u_proposed = u_accepted = 0
    adapting = True

    def u_move() -> None:
        nonlocal u_mat, pa, u_proposed, u_accepted, u_eps
        u_proposed += 1
        v = _unitary_exp(_gue_matrix(N, rng), u_eps)
        u_new = v @ u_mat
        pa_new = _purity_a_of(u_new, lam, dims)
        log_ratio = -beta * (pa_new - pa)
        moved = log_ratio >= 0 or math.log(rng.uniform()) < log_ratio
        if moved:
            u_accepted += 1
            u_mat, pa = u_new, pa_new
        if adapting:
            # same per-proposal adaptation as the spectrum chain; at beta = 0
            # everything accepts and the rotation step rides the upper bound
            u_eps = _bounded(u_eps * math.exp(0.05 * (int(moved) - 0.3)), 1e-4, 2.5)

    def lam_move() -> None:
        nonlocal lam, pa
        cand = shell.propose(rng)
        if cand is None:
            shell.record(False)
            return
        lam_new, r_new, log_base = cand
        pa_new = _purity_a_of(u_mat, lam_new, dims)
        log_ratio = log_base - beta * (pa_new - pa)
        moved = log_ratio >= 0 or math.log(rng.uniform()) < log_ratio
        if moved:
            shell.accept(lam_new, r_new)
            lam, pa = lam_new, pa_new
        shell.record(moved)

    def sweep() -> None:
        u_move()
        if not lam_fixed:
            lam_move()

    if shell is not None:
        shell.adapting = True
    for _ in range(mc.burn_in):
        sweep()
    adapting = False
    u_proposed = u_accepted = 0
    if shell is not None:
        shell.adapting = False
        shell.reset_counters()
    vals = np.empty(mc.n_samples)
    for i in range(mc.n_samples):
        for _ in range(mc.thinning):
            sweep()
        vals[i] = pa**k
        if (i + 1) % 4096 == 0:
            # keep the product of many small rotations on the unitary manifold
            q, r = np.linalg.qr(u_mat)
            d = np.diagonal(r)
            u_mat = q * (d / np.abs(d))
            pa = _purity_a_of(u_mat, lam, dims)

    _require_healthy(u_accepted / max(u_proposed, 1), "canonical U chain")
    if shell is not None:
        _require_healthy(shell.acceptance_rate, "canonical spectrum chain")
    mean, stderr, note = _batch_means(vals)
    return McEstimate(mean=mean, stderr=stderr, n=mc.n_samples, autocorr_note=note)


def _purity_a_of(u_mat: np.ndarray, lam: np.ndarray, dims: BipartitionDims) -> float:
    rho = (u_mat * lam) @ u_mat.conj().T
    t = rho.reshape(dims.n_a, dims.n_b, dims.n_a, dims.n_b)
    rho_a = np.einsum("abcb->ac", t)
    return float(np.einsum("ac,ca->", rho_a, rho_a).real)
