"""One-dimensional double-slit realization of the four-mode model.

Each slit carries two aperture-limited Hermite-Gauss modes (orders 0 and 1),
orthonormalized on the grid. The far field is the scaled DFT of the slit-plane
amplitude; the screen coordinate is ``wavelength_scale * spatial_frequency``.

Composite states are amplitude vectors over ``{psi1..psi4} x {|0>, |1>}``
with the mode index slow and the ancilla fast, exactly as in
:mod:`eswsim.model`.

Screen bins: ``n_bins - 2`` cells of equal width covering roughly ``[-w, w]``,
where ``w`` defaults to two fringe periods, plus two outer cells reaching to
minus and plus infinity so every screen point lands in some bin. Interior
edges are snapped to the far-field sampling lattice. Bins are half-open
``[lo, hi)``.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import hermite

N_MODES = 4
ANCILLA_DIM = 2
PADDING = 4


@dataclass(frozen=True)
class GridSpec:
    n_points: int = 2048
    extent: float = 16.0

    def __post_init__(self):
        n = self.n_points
        if n < 256 or n & (n - 1):
            raise ValueError(f"n_points must be a power of two >= 256, got {n}")
        if not self.extent > 0:
            raise ValueError("extent must be positive")

    @property
    def spacing(self) -> float:
        return self.extent / self.n_points

    @property
    def coords(self) -> np.ndarray:
        return (np.arange(self.n_points) - self.n_points // 2) * self.spacing


@dataclass(frozen=True)
class SlitGeometry:
    slit_separation: float = 4.0
    slit_width: float = 1.0
    mode_waist: float = 0.4

    def __post_init__(self):
        if min(self.slit_separation, self.slit_width, self.mode_waist) <= 0:
            raise ValueError("slit geometry lengths must be positive")
        if not self.slit_width < self.slit_separation:
            raise ValueError("slit_width must be smaller than slit_separation")
        if self.mode_waist > self.slit_width / 2:
            raise ValueError("mode_waist must not exceed slit_width / 2")

    @property
    def centers(self) -> tuple[float, float]:
        """Slit 1 sits on the negative side."""
        half = self.slit_separation / 2
        return -half, half


@dataclass(frozen=True)
class WavePacket:
    grid: GridSpec
    amp: np.ndarray

    def __post_init__(self):
        if self.amp.shape != (self.grid.n_points,):
            raise ValueError("amplitude length must match the grid")

    @property
    def norm(self) -> float:
        """Discrete L2 norm ``sqrt(sum |amp|^2 dx)``."""
        return float(np.sqrt(np.sum(np.abs(self.amp) ** 2) * self.grid.spacing))

    def inner(self, other: WavePacket) -> complex:
        return complex(np.vdot(self.amp, other.amp) * self.grid.spacing)


def slit_window(grid: GridSpec, geom: SlitGeometry, slit: int) -> np.ndarray:
    """Boolean mask of the aperture of slit 1 or 2."""
    center = geom.centers[slit - 1]
    return np.abs(grid.coords - center) <= geom.slit_width / 2


def hermite_gauss(x: np.ndarray, order: int, waist: float) -> np.ndarray:
    """``H_n(sqrt2 x / w) exp(-x^2 / w^2)``, unnormalized."""
    coef = np.zeros(order + 1)
    coef[order] = 1.0
    return hermite.hermval(np.sqrt(2) * x / waist, coef) * np.exp(-(x**2) / waist**2)


def _gram_schmidt(vectors: list[np.ndarray], dx: float) -> list[np.ndarray]:
    out: list[np.ndarray] = []
    for v in vectors:
        w = v.astype(complex)
        for _ in range(2):
            for u in out:
                w = w - np.vdot(u, w) * dx * u
        w = w / np.sqrt(np.sum(np.abs(w) ** 2) * dx)
        out.append(w)
    return out


def make_slit_modes(grid: GridSpec, geom: SlitGeometry) -> tuple[WavePacket, ...]:
    """``(psi1, psi2, psi3, psi4)``: HG0 and HG1 at slit 1, then at slit 2.

    Each mode is cut off by its slit aperture, so it vanishes identically
    outside the window.
    """
    margin = 2 * geom.mode_waist
    if geom.slit_separation / 2 + geom.slit_width / 2 + margin > grid.extent / 2:
        raise ValueError("slits do not fit inside the grid with a 2*mode_waist margin")
    x = grid.coords
    raw = []
    for slit, center in enumerate(geom.centers, start=1):
        mask = slit_window(grid, geom, slit)
        for order in (0, 1):
            raw.append(np.where(mask, hermite_gauss(x - center, order, geom.mode_waist), 0.0))
    modes = _gram_schmidt(raw, grid.spacing)
    return tuple(WavePacket(grid, m) for m in modes)


def propagate(psi: WavePacket, wavelength_scale: float = 1.0, padding: int = PADDING) -> WavePacket:
    """Far-field amplitude on the screen coordinate.

    The slit-plane amplitude is zero-padded to ``padding * n`` points and
    Fourier transformed; the output grid has spacing
    ``wavelength_scale / (padding * extent)`` and the discrete norm is
    preserved.
    """
    if not wavelength_scale > 0:
        raise ValueError("wavelength_scale must be positive")
    n = psi.grid.n_points
    big = padding * n
    padded = np.zeros(big, dtype=complex)
    start = (big - n) // 2
    padded[start : start + n] = psi.amp
    spectrum = np.fft.fftshift(np.fft.fft(np.fft.ifftshift(padded), norm="ortho"))
    dx = psi.grid.spacing
    ds = wavelength_scale / (big * dx)
    out_grid = GridSpec(big, big * ds)
    return WavePacket(out_grid, spectrum * np.sqrt(dx / ds))


@dataclass(frozen=True)
class ScreenDistribution:
    bin_edges: np.ndarray
    prob: np.ndarray

    def __post_init__(self):
        if self.bin_edges.shape != (self.prob.shape[0] + 1,):
            raise ValueError("need one more edge than bins")
        if np.any(np.diff(self.bin_edges) <= 0):
            raise ValueError("bin edges must increase")

    @property
    def n_bins(self) -> int:
        return self.prob.shape[0]

    @property
    def bin_centers(self) -> np.ndarray:
        """Midpoints; the two unbounded bins use the interior bin width."""
        e = self.bin_edges
        inner = e[1:-1]
        width = inner[1] - inner[0] if inner.size > 1 else 1.0
        return np.concatenate([[inner[0] - width / 2], (inner[:-1] + inner[1:]) / 2, [inner[-1] + width / 2]])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["bin_center", "probability"])
            for c, p in zip(self.bin_centers, self.prob):
                writer.writerow([f"{c:.17g}", f"{p:.17g}"])


def read_histogram_csv(path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1]


def total_variation(p: ScreenDistribution, q: ScreenDistribution) -> float:
    if not np.array_equal(p.bin_edges, q.bin_edges):
        raise ValueError("distributions use different bins")
    return float(0.5 * np.sum(np.abs(p.prob - q.prob)))


@dataclass(frozen=True)
class Apparatus:
    """Grid, slits, propagation scale and screen binning, with cached modes."""

    grid: GridSpec = field(default_factory=GridSpec)
    geometry: SlitGeometry = field(default_factory=SlitGeometry)
    wavelength_scale: float = 1.0
    n_bins: int = 64
    screen_halfwidth: float | None = None

    def __post_init__(self):
        if self.n_bins < 3:
            raise ValueError("n_bins must be at least 3")
        if not self.wavelength_scale > 0:
            raise ValueError("wavelength_scale must be positive")

    @property
    def fringe_period(self) -> float:
        return self.wavelength_scale / self.geometry.slit_separation

    @property
    def halfwidth(self) -> float:
        if self.screen_halfwidth is not None:
            return self.screen_halfwidth
        return 2 * self.fringe_period

    @cached_property
    def modes(self) -> tuple[WavePacket, ...]:
        return make_slit_modes(self.grid, self.geometry)

    @cached_property
    def screen_modes(self) -> np.ndarray:
        """``(4, N)`` far-field amplitudes of the four modes."""
        return np.stack([propagate(m, self.wavelength_scale).amp for m in self.modes])

    @cached_property
    def screen_grid(self) -> GridSpec:
        return propagate(self.modes[0], self.wavelength_scale).grid

    @cached_property
    def bin_edges(self) -> np.ndarray:
        # interior widths are whole multiples of the far-field spacing and
        # edges sit half a sample off the lattice, so every interior bin holds
        # the same number of samples and none lies on an edge
        ds = self.screen_grid.spacing
        n_inner = self.n_bins - 2
        per_bin = max(1, int(round(2 * self.halfwidth / n_inner / ds)))
        k = np.arange(n_inner + 1)
        edges = (k - n_inner // 2) * per_bin * ds - ds / 2
        return np.concatenate([[-np.inf], edges, [np.inf]])

    @cached_property
    def screen_bin_index(self) -> np.ndarray:
        idx = np.searchsorted(self.bin_edges, self.screen_grid.coords, side="right") - 1
        counts = np.bincount(idx, minlength=self.n_bins)
        if np.any(counts == 0):
            raise ValueError("screen bins narrower than the far-field sampling; use fewer bins")
        return idx

    def bin_of(self, positions: np.ndarray) -> np.ndarray:
        return np.searchsorted(self.bin_edges, positions, side="right") - 1


@dataclass(frozen=True)
class Branch:
    outcome: int | None
    weight: float
    state: np.ndarray


@dataclass(frozen=True)
class Mixture:
    branches: tuple[Branch, ...]

    @property
    def total_weight(self) -> float:
        return float(sum(b.weight for b in self.branches))


def _as_state(state) -> np.ndarray:
    v = np.asarray(state, dtype=complex)
    if v.shape != (N_MODES * ANCILLA_DIM,):
        raise ValueError(f"expected {N_MODES * ANCILLA_DIM} composite amplitudes, got shape {v.shape}")
    return v


def apply_T_dephasing(state, tol: float = 1e-15) -> Mixture:
    """Non-selective measurement of ``T = 1 (x) |1><1|`` (Lueders rule).

    Branches with Born weight at or below ``tol`` are dropped.
    """
    v = np.asarray(state, dtype=complex)
    if v.ndim != 1 or v.size % ANCILLA_DIM:
        raise ValueError("state must be a composite vector over K (x) C^2")
    branches = []
    for outcome in (1, 0):
        proj = np.zeros_like(v).reshape(-1, ANCILLA_DIM)
        proj[:, outcome] = v.reshape(-1, ANCILLA_DIM)[:, outcome]
        proj = proj.ravel()
        weight = float(np.vdot(proj, proj).real)
        if weight > tol:
            branches.append(Branch(outcome, weight, proj / np.sqrt(weight)))
    return Mixture(tuple(branches))


def screen_density(state, apparatus: Apparatus) -> np.ndarray:
    """Probability mass on every far-field sample point.

    ``state`` is a composite amplitude vector or a :class:`Mixture`.
    """
    if isinstance(state, Mixture):
        return sum(b.weight * screen_density(b.state, apparatus) for b in state.branches)
    coeffs = _as_state(state).reshape(N_MODES, ANCILLA_DIM)
    fields = coeffs.T @ apparatus.screen_modes  # one far field per ancilla state
    return np.sum(np.abs(fields) ** 2, axis=0) * apparatus.screen_grid.spacing


def screen_distribution(state, apparatus: Apparatus | None = None) -> ScreenDistribution:
    """Exact binned screen distribution of a pure or dephased state."""
    apparatus = apparatus or Apparatus()
    dens = screen_density(state, apparatus)
    prob = np.bincount(apparatus.screen_bin_index, weights=dens, minlength=apparatus.n_bins)
    return ScreenDistribution(apparatus.bin_edges, prob)


def fringe_visibility(dist: ScreenDistribution, window: float = 0.5) -> float:
    """``(max - min)/(max + min)`` over the central ``window`` fraction of bins.

    Bin probabilities are smoothed by a 3-bin moving average first. Keep
    ``window < 1`` so the unbounded edge bins stay out of the estimate.
    """
    if not 0 < window <= 1:
        raise ValueError("window must lie in (0, 1]")
    p = dist.prob
    n = p.shape[0]
    smooth = np.convolve(p, np.ones(3) / 3, mode="same")
    smooth[0], smooth[-1] = (p[0] + p[1]) / 2, (p[-2] + p[-1]) / 2
    k = max(1, int(round(window * n)))
    start = (n - k) // 2
    sel = smooth[start : start + k]
    hi, lo = sel.max(), sel.min()
    if hi + lo == 0:
        return 0.0
    return float((hi - lo) / (hi + lo))


# --- named states -----------------------------------------------------------


def composite_state(spatial_by_ancilla: dict[int, np.ndarray]) -> np.ndarray:
    """Assemble ``sum_a phi_a (x) |a>`` from mode-coefficient vectors."""
    out = np.zeros((N_MODES, ANCILLA_DIM), dtype=complex)
    for a, phi in spatial_by_ancilla.items():
        out[:, a] = phi
    return out.ravel()


def entangled_state() -> np.ndarray:
    """``((psi1 + psi2)|1> + (psi3 + psi4)|0>)/2``."""
    return composite_state({1: np.array([1, 1, 0, 0]) / 2, 0: np.array([0, 0, 1, 1]) / 2})


def coherent_state() -> np.ndarray:
    """``(psi1 + psi3)/sqrt2 (x) |1>``: fundamental modes of both slits, in phase."""
    return composite_state({1: np.array([1, 0, 1, 0]) / np.sqrt(2)})


def uniform_product_state() -> np.ndarray:
    """``(psi1 + psi2 + psi3 + psi4)/2 (x) |1>``."""
    return composite_state({1: np.ones(4) / 2})


# --- Monte Carlo ----------------------------------------------------------


@dataclass(frozen=True)
class RunRecord:
    trial: int
    t_outcome: int | None
    position: float

    def to_json(self) -> str:
        return json.dumps({"trial": self.trial, "t_outcome": self.t_outcome, "position": self.position})


def trial_uniforms(seed: int, start: int, count: int) -> np.ndarray:
    """Two uniforms in ``[0, 1)`` per trial, ``shape (count, 2)``.

    Trial ``i`` reads Philox block ``i`` under key ``seed``, so its draws do
    not depend on how trials are chunked or scheduled.
    """
    gen = np.random.Philox(key=seed, counter=[start, 0, 0, 0])
    raw = gen.random_raw(4 * count).reshape(count, 4)[:, :2]
    return (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53


def _sample_points(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(cdf, u * cdf[-1], side="right")
    return np.minimum(idx, cdf.shape[0] - 1)


@dataclass(frozen=True)
class SimulationResult:
    trials: np.ndarray
    t_outcomes: np.ndarray  # 1, 0, or -1 when T was not measured
    positions: np.ndarray
    histogram: ScreenDistribution

    @property
    def records(self) -> list[RunRecord]:
        return [
            RunRecord(int(i), None if t < 0 else int(t), float(x))
            for i, t, x in zip(self.trials, self.t_outcomes, self.positions)
        ]

    @property
    def fraction_t1(self) -> float:
        measured = self.t_outcomes >= 0
        return float(np.mean(self.t_outcomes[measured] == 1)) if measured.any() else float("nan")

    def write_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for rec in self.records:
                fh.write(rec.to_json() + "\n")


def simulate_runs(
    state,
    measure_T: bool,
    n_runs: int,
    seed: int,
    apparatus: Apparatus | None = None,
    chunk_size: int = 1 << 14,
    workers: int = 1,
) -> SimulationResult:
    """Sample ``n_runs`` particles, optionally reading the detector first.

    With ``measure_T`` each run draws ``t`` from the Born weights, collapses
    the state by the Lueders rule and then draws a screen point from that
    branch; otherwise the screen point is drawn from the undisturbed state.
    Output is ordered by trial index whatever ``chunk_size`` and ``workers``.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be at least 1")
    apparatus = apparatus or Apparatus()
    coords = apparatus.screen_grid.coords
    if measure_T:
        mix = apply_T_dephasing(state)
        outcomes = np.array([b.outcome for b in mix.branches])
        weights = np.array([b.weight for b in mix.branches])
        cum_w = np.cumsum(weights) / weights.sum()
        cdfs = [np.cumsum(screen_density(b.state, apparatus)) for b in mix.branches]
    else:
        cdfs = [np.cumsum(screen_density(_as_state(state), apparatus))]

    def run_chunk(start: int) -> tuple[np.ndarray, np.ndarray]:
        count = min(chunk_size, n_runs - start)
        u = trial_uniforms(seed, start, count)
        if measure_T:
            branch = np.minimum(np.searchsorted(cum_w, u[:, 0], side="right"), len(cdfs) - 1)
            t = outcomes[branch]
        else:
            branch = np.zeros(count, dtype=int)
            t = np.full(count, -1)
        pts = np.empty(count, dtype=int)
        for b, cdf in enumerate(cdfs):
            sel = branch == b
            pts[sel] = _sample_points(cdf, u[sel, 1])
        return t.astype(np.int8), coords[pts]

    starts = range(0, n_runs, chunk_size)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run_chunk, starts))
    else:
        parts = [run_chunk(s) for s in starts]
    t_out = np.concatenate([p[0] for p in parts])
    pos = np.concatenate([p[1] for p in parts])
    counts = np.bincount(apparatus.bin_of(pos), minlength=apparatus.n_bins)
    hist = ScreenDistribution(apparatus.bin_edges, counts / n_runs)
    return SimulationResult(np.arange(n_runs), t_out, pos, hist)


def screen_event_operator(apparatus: Apparatus, bins) -> np.ndarray:
    """Screen event ``F`` for a set of bins, compressed to the mode space.

    Returns ``G (x) 1`` on ``span{psi_k} (x) C^2`` where
    ``G_jk = sum_{s in bins} conj(psi_j(s)) psi_k(s) ds``. ``G`` is positive
    but not a projection: it is the restriction of the screen indicator to
    the four-mode subspace.
    """
    mask = np.isin(apparatus.screen_bin_index, np.atleast_1d(bins))
    amps = apparatus.screen_modes[:, mask]
    g = amps.conj() @ amps.T * apparatus.screen_grid.spacing
    return np.kron(g, np.eye(ANCILLA_DIM))
