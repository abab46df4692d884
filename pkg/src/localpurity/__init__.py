"""Moments of subsystem purity for bipartite quantum states.

Exact closed forms and a symmetric-group moment engine live in
:mod:`localpurity.weingarten`, random-state ensembles and Monte Carlo
estimators in :mod:`localpurity.ensembles`, the two-copy twirl route in
:mod:`localpurity.twirl`, and the underlying symmetric-group machinery in
:mod:`localpurity.symgroup`.  The most common entry points are re-exported
here.
"""

from .ensembles import (
    DensityMatrix,
    EnsembleConfig,
    McConfig,
    McEstimate,
    SamplerDiagnosticError,
    SimplexShellSampler,
    Spectrum,
    assemble_state,
    estimate_avg_power_sums,
    estimate_avg_power_sums_shell,
    haar_unitary,
    mc_moment_canonical,
    mc_moment_fixed_spectrum,
    partial_trace,
    power_sums,
    purity,
    sample_spectrum_fixed_purity,
    sample_spectrum_induced,
    substream,
)
from .selftest import CheckResult, run_selftest
from .symgroup import CharacterTable, Partition, Permutation
from .twirl import (
    TwirlDecomposition,
    m1_mixed_via_twirl,
    m1_pure_via_twirl,
    numeric_twirl2,
    swap_matrix,
    twirl2_apply,
    twirl2_decompose,
)
from .weingarten import (
    BipartitionDims,
    DegenerateDimensionError,
    PoleError,
    PowerSumPolynomial,
    WeingartenTable,
    beta_convergence_radius,
    closed_m1,
    closed_m1_polynomial,
    closed_m2_polynomial,
    closed_m2_spectrum,
    cumulant2,
    m1_balanced_asymptotic,
    m1_high_temperature,
    moment_polynomial,
    weingarten_coefficient,
    weingarten_table,
)

__version__ = "0.1.0"

__all__ = [
    "BipartitionDims",
    "CharacterTable",
    "CheckResult",
    "DegenerateDimensionError",
    "DensityMatrix",
    "EnsembleConfig",
    "McConfig",
    "McEstimate",
    "Partition",
    "Permutation",
    "PoleError",
    "PowerSumPolynomial",
    "SamplerDiagnosticError",
    "SimplexShellSampler",
    "Spectrum",
    "TwirlDecomposition",
    "WeingartenTable",
    "assemble_state",
    "beta_convergence_radius",
    "closed_m1",
    "closed_m1_polynomial",
    "closed_m2_polynomial",
    "closed_m2_spectrum",
    "cumulant2",
    "estimate_avg_power_sums",
    "estimate_avg_power_sums_shell",
    "haar_unitary",
    "m1_balanced_asymptotic",
    "m1_high_temperature",
    "m1_mixed_via_twirl",
    "m1_pure_via_twirl",
    "mc_moment_canonical",
    "mc_moment_fixed_spectrum",
    "moment_polynomial",
    "numeric_twirl2",
    "partial_trace",
    "power_sums",
    "purity",
    "run_selftest",
    "sample_spectrum_fixed_purity",
    "sample_spectrum_induced",
    "substream",
    "swap_matrix",
    "twirl2_apply",
    "twirl2_decompose",
    "weingarten_coefficient",
    "weingarten_table",
    "__version__",
]
