"""Phase-misalignment estimation and pure-state preparation over U(1).

The pipeline: a source state described by its number spectrum is consumed in
N copies by a covariant phase measurement, producing a posterior over the
misalignment angle gamma; the estimate is then used to prepare M copies of a
target state, and the quality of the conversion is the posterior-averaged
fidelity between prepared and true targets (the interconversion figure of
merit).

Everything here is exact up to floating point: posteriors and fidelities are
finite trigonometric polynomials, so the figure of merit is an inner product
of autocorrelation sequences and uniform-grid quadrature integrates it with no
discretization error.  The closed-form large-N/large-M expression is kept as a
prediction to compare against, never as the computation.
"""

from __future__ import annotations

import math
from dataclasses import InitVar, dataclass, field

import numpy as np

from .distributions import (
    GaussianModel,
    IntDistribution,
    amp_char_fn,
    char_fn,
    moments,
    power_convolve,
)
from .errors import (
    GappedSpectrumError,
    NegativeOffsetError,
    ResourceCapError,
    ZeroVarianceError,
)

TWO_PI = 2.0 * math.pi

# Guard against convolution powers whose (untrimmed) support would not fit a
# sane FFT; sweeps may lower it, nothing at desk scale should need to raise it.
DEFAULT_FFT_CAP = 1 << 23

# A rate schedule "converges" when the exact figure of merit increases along
# the grid and ends above this (artifact choice, configurable per call).
CONVERGENCE_THRESHOLD = 0.95


@dataclass(frozen=True)
class NumberState:
    """Standard-form pure state: nonnegative amplitudes sqrt(p_n) over numbers n.

    The spectrum must sit at nonnegative numbers and be gapless (no interior
    zeros); gapped spectra are rejected unless ``allow_gapped`` is set, which
    exists for negative tests only.
    """

    spectrum: IntDistribution
    allow_gapped: InitVar[bool] = False

    def __post_init__(self, allow_gapped: bool):
        if self.spectrum.offset < 0:
            raise NegativeOffsetError(
                f"number spectrum must start at n >= 0, got offset {self.spectrum.offset}"
            )
        if not allow_gapped and np.any(self.spectrum.probs == 0):
            raise GappedSpectrumError(
                "number spectrum has interior zeros; pass allow_gapped=True to bypass"
            )

    @property
    def mean(self) -> float:
        return moments(self.spectrum)[0]

    @property
    def variance(self) -> float:
        return moments(self.spectrum)[1]

    @property
    def asymmetry_free(self) -> bool:
        """True when the spectrum is a point mass, i.e. carries no phase information."""
        return len(self.spectrum) == 1


def standardize(raw_spectrum: IntDistribution, *, allow_gapped: bool = False) -> NumberState:
    """Wrap a number spectrum as a standard-form state, validating its hypotheses."""
    return NumberState(raw_spectrum, allow_gapped=allow_gapped)


@dataclass(frozen=True)
class PosteriorSpec:
    """Inputs of the misalignment posterior for an N-copy source.

    ``ncopy_spectrum`` is the exact N-copy number distribution; ``gauss`` is
    its Gaussian reference (mean N*mu, variance N*sigma^2), or None for an
    asymmetry-free source.
    """

    ncopy_spectrum: IntDistribution
    n_copies: int
    gauss: GaussianModel | None

    @classmethod
    def for_copies(cls, source: NumberState, n_copies: int) -> "PosteriorSpec":
        mu, var = moments(source.spectrum)
        gauss = GaussianModel(n_copies * mu, n_copies * var) if var > 0 else None
        return cls(power_convolve(source.spectrum, n_copies), n_copies, gauss)


def wrap_angle(gamma):
    """Reduce angles to the principal interval (-pi, pi]."""
    return math.pi - np.mod(math.pi - np.asarray(gamma, dtype=np.float64), TWO_PI)


def posterior_density_exact(spec: PosteriorSpec, gamma):
    """Exact misalignment posterior density (per radian) at gamma.

    This is the Born probability of the covariant measurement seeded by the
    uniform-amplitude vector: |Sum_n sqrt(P_n) e^{i n gamma}|^2 / (2 pi).
    It integrates to exactly 1 over (-pi, pi].
    """
    amp = amp_char_fn(spec.ncopy_spectrum, gamma)
    return (amp.real**2 + amp.imag**2) / TWO_PI if isinstance(amp, np.ndarray) else abs(amp) ** 2 / TWO_PI


def posterior_density_gauss(spec: PosteriorSpec, gamma):
    """Gaussian-model posterior density sqrt(2 V / pi) exp(-2 V gamma^2), V = N sigma^2."""
    if spec.gauss is None:
        raise ZeroVarianceError("asymmetry-free source: Gaussian posterior model undefined")
    v = spec.gauss.variance
    gamma = np.asarray(gamma, dtype=np.float64)
    out = math.sqrt(2.0 * v / math.pi) * np.exp(-2.0 * v * gamma * gamma)
    return float(out) if out.ndim == 0 else out


def _exact_cdf_grid(spec: PosteriorSpec, grid_points: int):
    edges = np.linspace(-math.pi, math.pi, grid_points + 1)
    density = posterior_density_exact(spec, edges)
    # trapezoid CDF on the edge grid; the density is smooth and periodic
    cdf = np.concatenate(([0.0], np.cumsum((density[1:] + density[:-1]) * 0.5 * np.diff(edges))))
    cdf /= cdf[-1]
    return edges, cdf


def sample_gamma(
    spec: PosteriorSpec,
    rng_seed,
    mode: str = "exact",
    size: int | None = None,
    grid_points: int | None = None,
):
    """Draw misalignment angles from the chosen posterior; deterministic per seed.

    ``mode="exact"`` inverts the exact posterior CDF on a dense uniform grid
    (``grid_points`` defaults to max(4096, 4 * support length)); ``"gauss"``
    draws from the Gaussian model and wraps into (-pi, pi].  ``rng_seed`` may
    be an integer seed or a numpy Generator.  Returns a scalar when ``size``
    is None, else an array of that length.
    """
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    count = 1 if size is None else int(size)
    if mode == "exact":
        points = grid_points or max(4096, 4 * len(spec.ncopy_spectrum))
        edges, cdf = _exact_cdf_grid(spec, points)
        draws = np.interp(rng.random(count), cdf, edges)
    elif mode == "gauss":
        if spec.gauss is None:
            raise ZeroVarianceError("asymmetry-free source: Gaussian posterior model undefined")
        sd = 1.0 / math.sqrt(4.0 * spec.gauss.variance)
        draws = wrap_angle(rng.normal(0.0, sd, count))
    else:
        raise ValueError(f"mode must be 'exact' or 'gauss', got {mode!r}")
    return float(draws[0]) if size is None else draws


def fidelity_pure_exact(target: NumberState, m_copies: int, gamma):
    """Exact M-copy overlap fidelity |Sum_n Q_n e^{i n gamma}|^2 at misalignment gamma."""
    ch = char_fn(power_convolve(target.spectrum, m_copies), gamma)
    return (ch.real**2 + ch.imag**2) if isinstance(ch, np.ndarray) else abs(ch) ** 2


def fidelity_pure_gauss(sigma_sq: float, m_copies: int, gamma):
    """Gaussian-model fidelity exp(-M sigma^2 gamma^2)."""
    if sigma_sq < 0:
        raise ValueError(f"sigma_sq must be >= 0, got {sigma_sq}")
    gamma = np.asarray(gamma, dtype=np.float64)
    out = np.exp(-m_copies * sigma_sq * gamma * gamma)
    return float(out) if out.ndim == 0 else out


def _autocorrelation(x: np.ndarray) -> np.ndarray:
    """a[k] = Sum_n x_n x_{n+k} for k = 0 .. len(x)-1, via FFT."""
    size = 1 << (2 * x.size - 1).bit_length()
    spectrum = np.fft.rfft(x, size)
    return np.fft.irfft(spectrum.real**2 + spectrum.imag**2, size)[: x.size]


def _fom_exact_from(ncopy_src: IntDistribution, ncopy_tgt: IntDistribution) -> float:
    a = _autocorrelation(np.sqrt(ncopy_src.probs))
    b = _autocorrelation(ncopy_tgt.probs)
    lags = min(a.size, b.size)
    return float(a[0] * b[0] + 2.0 * (a[1:lags] @ b[1:lags]))


def figure_of_merit_exact(
    source: NumberState, n_copies: int, target: NumberState, m_copies: int
) -> float:
    """Posterior-averaged exact fidelity for converting N source to M target copies.

    Both factors of the integrand are trigonometric polynomials, so the
    average over gamma collapses to Sum_k A_k B_k with A the autocorrelation
    of the N-copy amplitude sequence and B the autocorrelation of the M-copy
    probability sequence.  No quadrature is involved.
    """
    return _fom_exact_from(
        power_convolve(source.spectrum, n_copies),
        power_convolve(target.spectrum, m_copies),
    )


def figure_of_merit_quadrature(
    source: NumberState,
    n_copies: int,
    target: NumberState,
    m_copies: int,
    grid_points: int | None = None,
) -> float:
    """Same figure of merit via uniform-grid quadrature over (-pi, pi].

    With more grid points than twice the combined support span the rectangle
    rule is exact for the integrand, making this an independent cross-check of
    the autocorrelation route.
    """
    ncopy_src = power_convolve(source.spectrum, n_copies)
    ncopy_tgt = power_convolve(target.spectrum, m_copies)
    points = grid_points or (2 * (ncopy_src.span + ncopy_tgt.span) + 3)
    gamma = -math.pi + TWO_PI * (np.arange(points) + 0.5) / points
    amp = amp_char_fn(ncopy_src, gamma)
    ch = char_fn(ncopy_tgt, gamma)
    density = (amp.real**2 + amp.imag**2) / TWO_PI
    fidelity = ch.real**2 + ch.imag**2
    return float(density @ fidelity) * TWO_PI / points


def figure_of_merit_closed(
    sigma_phi_sq: float, n_copies: int, sigma_psi_sq: float, m_copies: int
) -> float:
    """Closed-form large-N/large-M figure of merit 1/sqrt(1 + M s_psi^2 / (2 N s_phi^2))."""
    if sigma_phi_sq <= 0:
        raise ZeroVarianceError(f"source variance must be positive, got {sigma_phi_sq}")
    return 1.0 / math.sqrt(1.0 + (m_copies * sigma_psi_sq) / (2.0 * n_copies * sigma_phi_sq))


def figure_of_merit_mc(
    source: NumberState,
    n_copies: int,
    target: NumberState,
    m_copies: int,
    draws: int,
    rng_seed,
    mode: str = "exact",
) -> tuple[float, float]:
    """Monte Carlo estimate (mean, standard error) of the figure of merit.

    Samples misalignments from the posterior and averages the exact fidelity;
    cross-validates the autocorrelation route.  Deterministic given the seed.
    """
    if draws < 100:
        raise ValueError(f"draws must be >= 100, got {draws}")
    spec = PosteriorSpec.for_copies(source, n_copies)
    gamma = sample_gamma(spec, rng_seed, mode=mode, size=draws)
    ch = char_fn(power_convolve(target.spectrum, m_copies), gamma)
    values = ch.real**2 + ch.imag**2
    estimate = float(values.mean())
    stderr = float(values.std(ddof=1) / math.sqrt(draws))
    return estimate, stderr


def posterior_gauss_distance(spec: PosteriorSpec, grid_points: int = 8192) -> float:
    """Total-variation distance between the exact posterior and its Gaussian model.

    Computed as 0.5 * integral of |exact - gauss| over (-pi, pi] on a uniform
    grid.  The Gaussian model is the unwrapped density; its mass outside the
    principal interval is negligible at the N where the model is meaningful.
    """
    gamma = -math.pi + TWO_PI * (np.arange(grid_points) + 0.5) / grid_points
    diff = np.abs(posterior_density_exact(spec, gamma) - posterior_density_gauss(spec, gamma))
    return float(0.5 * diff.sum() * TWO_PI / grid_points)


@dataclass(frozen=True)
class RateSchedule:
    """Yield schedule M(N): either M = ceil(N^a) ("power") or M = ceil(c N) ("linear")."""

    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in ("power", "linear"):
            raise ValueError(f"kind must be 'power' or 'linear', got {self.kind!r}")
        if self.kind == "power" and not (0 < self.value <= 1):
            raise ValueError(f"power exponent must lie in (0, 1], got {self.value}")
        if self.kind == "linear" and self.value <= 0:
            raise ValueError(f"linear slope must be positive, got {self.value}")

    def m_for(self, n: int) -> int:
        raw = n**self.value if self.kind == "power" else self.value * n
        # float pow round-off can land just above an integer (e.g. 400**0.5);
        # snap before taking the ceiling
        nearest = round(raw)
        if abs(raw - nearest) <= 1e-9 * max(1.0, abs(nearest)):
            return max(1, int(nearest))
        return max(1, math.ceil(raw))

    @property
    def label(self) -> str:
        if self.kind == "power":
            return f"M=ceil(N^{self.value:g})"
        return f"M=ceil({self.value:g}*N)"


@dataclass(frozen=True)
class RateRow:
    n_copies: int
    m_copies: int
    f_exact: float
    f_closed: float
    gap: float


@dataclass(frozen=True)
class RateReport:
    """Figure-of-merit table along a yield schedule, with a convergence verdict."""

    rows: tuple[RateRow, ...]
    schedule_label: str
    verdict: str
    threshold: float = CONVERGENCE_THRESHOLD
    grid: tuple[int, ...] = field(default=())


def ensure_fft_cap(
    source: NumberState, n_copies: int, target: NumberState, m_copies: int, cap: int
) -> None:
    """Refuse convolution powers whose untrimmed support would exceed ``cap`` points."""
    worst = max(n_copies * source.spectrum.span, m_copies * target.spectrum.span) + 1
    if worst > cap:
        raise ResourceCapError(
            f"support estimate {worst} exceeds fft_cap {cap} at N={n_copies}, M={m_copies}"
        )


def rate_analysis(
    source: NumberState,
    target: NumberState,
    schedule: RateSchedule,
    n_grid,
    *,
    threshold: float = CONVERGENCE_THRESHOLD,
    fft_cap: int = DEFAULT_FFT_CAP,
) -> RateReport:
    """Tabulate exact and closed-form figures of merit along M(N).

    Flags "converges" when the exact value increases strictly along the grid
    and its terminal value exceeds ``threshold``, "plateaus" otherwise.
    Raises `ResourceCapError` when an (untrimmed) convolution power would
    exceed ``fft_cap`` support points.
    """
    n_grid = [int(n) for n in n_grid]
    if not n_grid or any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ValueError("n_grid must be nonempty and strictly increasing")
    sigma_phi_sq = source.variance
    sigma_psi_sq = target.variance
    rows = []
    for n in n_grid:
        m = schedule.m_for(n)
        ensure_fft_cap(source, n, target, m, fft_cap)
        f_exact = figure_of_merit_exact(source, n, target, m)
        f_closed = figure_of_merit_closed(sigma_phi_sq, n, sigma_psi_sq, m)
        rows.append(RateRow(n, m, f_exact, f_closed, f_exact - f_closed))
    increasing = all(b.f_exact > a.f_exact for a, b in zip(rows, rows[1:]))
    verdict = "converges" if increasing and rows[-1].f_exact > threshold else "plateaus"
    return RateReport(tuple(rows), schedule.label, verdict, threshold, tuple(n_grid))
