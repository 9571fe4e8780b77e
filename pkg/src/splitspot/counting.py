"""Monte Carlo photon counting: scanned coincidence maps and triple coincidences.

Random streams
--------------
``simulate_scan`` gives grid point ``k`` (row-major index) its own generator
seeded from ``SeedSequence(seed, spawn_key=(k,))``, so results do not depend
on evaluation order or worker count. ``simulate_triple`` draws from a single
``default_rng(seed)`` in a fixed order.

Coincidence electronics
-----------------------
Pulses are closed intervals ``[t, t + pulse_width]``. :func:`window_coincidence`
counts overlapping pulses of two free-running streams. The triple experiment
is trigger-gated: a channel registers for a trigger at ``t`` when an unused
event of that channel has ``t + lo <= t' <= t + hi`` (one-to-one matching); ``logic="gated"`` uses
``(lo, hi) = (0, pulse_width)`` and ``logic="overlap"`` uses
``(-pulse_width, pulse_width)``.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from . import defaults
from .biphoton import (
    Scene,
    density_table,
    detection_point,
    marginal_density,
    normalized_pair_density,
    pump_radial_weight,
    q_jacobian,
    transverse_q,
)
from .errors import (
    CalibrationError,
    DetectorOverlap,
    EnvelopeTooLoose,
    SortOrderViolation,
)
from .phasematch import longitudinal_weight, split_deviation

MIN_ACCEPTANCE = 1e-4


@dataclass(frozen=True)
class Detector:
    center: tuple[float, float]
    aperture_diameter: float = defaults.PCM_APERTURE
    quantum_efficiency: float = 0.1
    dark_rate: float = 0.0

    def __post_init__(self):
        if not self.aperture_diameter > 0:
            raise ValueError("aperture diameter must be positive")
        if not 0 < self.quantum_efficiency <= 1:
            raise ValueError("quantum efficiency must lie in (0, 1]")
        if self.dark_rate < 0:
            raise ValueError("dark rate must be >= 0")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))

    @property
    def radius(self) -> float:
        return 0.5 * self.aperture_diameter

    def contains(self, x, y):
        return (np.asarray(x) - self.center[0]) ** 2 + (np.asarray(y) - self.center[1]) ** 2 <= self.radius**2

    def nodes(self, n_r: int = 3, n_az: int = 8):
        """Disk quadrature (x, y, weight); weights sum to the aperture area."""
        return disk_nodes(self.center, self.radius, n_r, n_az)


def disk_nodes(center, radius, n_r=3, n_az=8):
    # Gauss-Legendre in r^2 (uniform in area) times a uniform azimuthal rule
    t, w = np.polynomial.legendre.leggauss(n_r)
    r = radius * np.sqrt(0.5 * (t + 1.0))
    phi = (np.arange(n_az) + 0.5) * (2.0 * math.pi / n_az)
    x = center[0] + (r[:, None] * np.cos(phi)[None, :]).ravel()
    y = center[1] + (r[:, None] * np.sin(phi)[None, :]).ravel()
    weights = np.repeat(0.5 * w * math.pi * radius**2 / n_az, n_az)
    return x, y, weights


@dataclass(frozen=True)
class GateConfig:
    trigger_gate: float = defaults.TRIGGER_GATE
    pulse_width: float = defaults.PULSE_WIDTH
    effective_window: float | None = None
    logic: str = "gated"

    def __post_init__(self):
        if self.effective_window is None:
            object.__setattr__(self, "effective_window", 2.0 * self.pulse_width)
        if not (self.trigger_gate > 0 and self.pulse_width > 0 and self.effective_window > 0):
            raise ValueError("gate times must be positive")
        if self.logic not in ("gated", "overlap"):
            raise ValueError(f"unknown coincidence logic {self.logic!r}")

    @property
    def offsets(self) -> tuple[float, float]:
        if self.logic == "gated":
            return 0.0, self.pulse_width
        return -self.pulse_width, self.pulse_width


@dataclass(frozen=True)
class CountRecord:
    duration: float
    trig: int = 0
    top: int = 0
    bot: int = 0
    ctop: int = 0
    cbot: int = 0
    triple: int = 0

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("duration must be >= 0")
        if self.triple > min(self.ctop, self.cbot):
            raise ValueError("triple count exceeds a coincidence count")
        if self.ctop > min(self.trig, self.top) or self.cbot > min(self.trig, self.bot):
            raise ValueError("coincidence count exceeds a singles count")

    def _rate(self, n):
        return n / self.duration if self.duration > 0 else 0.0

    @property
    def R_trig(self):
        return self._rate(self.trig)

    @property
    def R_top(self):
        return self._rate(self.top)

    @property
    def R_bot(self):
        return self._rate(self.bot)

    @property
    def R_ctop(self):
        return self._rate(self.ctop)

    @property
    def R_cbot(self):
        return self._rate(self.cbot)

    @property
    def R_triple(self):
        return self._rate(self.triple)


@dataclass(frozen=True)
class ScanGrid:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    step: float
    dwell: float = 1000.0

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("scan step must be positive")
        if self.step < defaults.MIN_STEP:
            warnings.warn(f"scan step {self.step} cm is below the 10 um stage resolution", stacklevel=2)
        if self.x_max < self.x_min or self.y_max < self.y_min:
            raise ValueError("scan grid is empty")
        if self.dwell < 0:
            raise ValueError("dwell must be >= 0")

    @staticmethod
    def _axis(lo, hi, step):
        n = int(math.floor((hi - lo) / step + 1e-9)) + 1
        # 6 significant digits so coordinates survive a CSV round trip exactly
        return np.array([float(f"{lo + i * step:.6g}") for i in range(n)])

    @property
    def xs(self) -> np.ndarray:
        return self._axis(self.x_min, self.x_max, self.step)

    @property
    def ys(self) -> np.ndarray:
        return self._axis(self.y_min, self.y_max, self.step)


@dataclass(frozen=True)
class CountMap:
    """Values on a rectangular grid; ``values[j, i]`` sits at ``(xs[i], ys[j])``."""

    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray

    @property
    def step(self) -> float:
        return float(min(np.min(np.diff(self.xs)), np.min(np.diff(self.ys))))


@dataclass(frozen=True)
class ScanResult:
    grid: ScanGrid
    records: tuple = field(repr=False)

    def _map(self, attr):
        vals = np.array([[getattr(r, attr) for r in row] for row in self.records], dtype=float)
        return CountMap(self.grid.xs, self.grid.ys, vals)

    def coincidence_map(self) -> CountMap:
        return self._map("ctop")

    def singles_map(self) -> CountMap:
        return self._map("top")

    @property
    def total_coincidences(self) -> int:
        return int(sum(r.ctop for row in self.records for r in row))


# --- pair sampling -------------------------------------------------------------


def _sample_sum(scene: Scene, table, m: int, rng: np.random.Generator):
    """Exact draws of the transverse sum Q from |F(Q)|^2 restricted to |Q| <= Q_max."""
    pump = scene.pump
    got = []
    n = 0
    while n < m:
        k = max(2 * (m - n), 1024)
        t = rng.uniform(0.0, table.t_max, k)
        t = t[rng.random(k) * table.radial_peak < pump_radial_weight(pump, t)]
        got.append(t)
        n += t.size
    t = np.concatenate(got)[:m]
    Q = np.sqrt(2.0 * t) / pump.w0
    ang = rng.uniform(-math.pi, math.pi, m)
    return Q * np.cos(ang), Q * np.sin(ang)


def sample_pairs(scene: Scene, n: int, rng: np.random.Generator, fixed_region: Detector | None = None):
    """Draw ``n`` photon-pair landing points by rejection sampling.

    Proposal: the transverse sum ``Q`` is drawn exactly from the pump
    transform ``|F(Q)|^2``; the half difference ``D`` is uniform over the
    ring band of the truncation region (see ``DensityTable``). Candidates are
    accepted with the longitudinal weight ``sinc^2``, which is bounded by 1.
    With ``fixed_region`` the first photon is instead uniform over that
    aperture in the detection plane, the second is ``Q - q_first``, and the
    acceptance also carries the first photon's area Jacobian over its
    maximum on the aperture.

    Returns ``(sx, sy, ix, iy)`` arrays in cm.
    """
    if n <= 0:
        return tuple(np.empty(0) for _ in range(4))
    table = density_table(scene)
    l_c = scene.crystal.length
    if fixed_region is not None:
        cx, cy = fixed_region.center
        rho_min = max(0.0, math.hypot(cx, cy) - fixed_region.radius)
        jac_max = float(q_jacobian(scene, rho_min, 0.0)) * (1.0 + 1e-9)

    out = [[], [], [], []]
    have = 0
    acc_rate = None
    while have < n:
        need = n - have
        m = int(min(2_000_000, max(20_000, 1.3 * need / acc_rate))) if acc_rate else 100_000
        Qx, Qy = _sample_sum(scene, table, m, rng)
        if fixed_region is None:
            r = np.sqrt(rng.uniform(table.d_lo**2, table.d_hi**2, m))
            phi = rng.uniform(-math.pi, math.pi, m)
            Dx, Dy = r * np.cos(phi), r * np.sin(phi)
            qsx, qsy = 0.5 * Qx + Dx, 0.5 * Qy + Dy
            qix, qiy = 0.5 * Qx - Dx, 0.5 * Qy - Dy
            weight = 1.0
            ok = np.ones(m, dtype=bool)
        else:
            rr = fixed_region.radius * np.sqrt(rng.random(m))
            pp = rng.uniform(-math.pi, math.pi, m)
            sx = cx + rr * np.cos(pp)
            sy = cy + rr * np.sin(pp)
            qsx, qsy = transverse_q(scene, sx, sy)
            qix, qiy = Qx - qsx, Qy - qsy
            weight = q_jacobian(scene, sx, sy) / jac_max
            ok = table.in_region(qsx, qsy, qix, qiy)
        dkz = np.sqrt(scene.k_s**2 - qsx**2 - qsy**2) + np.sqrt(scene.k_s**2 - qix**2 - qiy**2) - scene.k_P
        keep = ok & (rng.random(m) < longitudinal_weight(dkz, l_c) * weight)
        acc_rate = max(keep.mean(), 1e-12)
        if acc_rate < MIN_ACCEPTANCE:
            raise EnvelopeTooLoose(f"rejection acceptance {acc_rate:.3g} below {MIN_ACCEPTANCE}")
        idx = np.flatnonzero(keep)[:need]
        if fixed_region is None:
            px, py = detection_point(scene, qsx[idx], qsy[idx])
        else:
            px, py = sx[idx], sy[idx]
        ix_, iy_ = detection_point(scene, qix[idx], qiy[idx])
        for lst, arr in zip(out, (px, py, ix_, iy_)):
            lst.append(arr)
        have += idx.size
    return tuple(np.concatenate(lst) for lst in out)


def sample_pair(scene: Scene, rng: np.random.Generator, fixed_region: Detector | None = None):
    """Single pair ``((sx, sy), (ix, iy))``; see :func:`sample_pairs`."""
    sx, sy, ix, iy = sample_pairs(scene, 1, rng, fixed_region)
    return (float(sx[0]), float(sy[0])), (float(ix[0]), float(iy[0]))


# --- detection probabilities (quadrature) ---------------------------------------

# photons per pair: either photon of the pair can reach a given aperture


def hit_probability(scene: Scene, det: Detector, n_r=6, n_az=16) -> float:
    x, y, w = det.nodes(n_r, n_az)
    return 2.0 * float(np.sum(w * marginal_density(scene, x, y)))


def joint_probability(scene: Scene, a: Detector, b: Detector, n_r=(3, 16), n_az=(8, 48)) -> float:
    """Probability per pair that one photon lands in ``a`` and the other in ``b``."""
    ax, ay, aw = a.nodes(n_r[0], n_az[0])
    bx, by, bw = b.nodes(n_r[1], n_az[1])
    dens = normalized_pair_density(scene, (ax[:, None], ay[:, None]), (bx[None, :], by[None, :]))
    return 2.0 * float(aw @ dens @ bw)


def split_spot_positions(scene: Scene) -> tuple[tuple[float, float], tuple[float, float]]:
    """Expected (top, bottom) spot centres opposite a fixed detector at (-R, 0)."""
    R = scene.ring_radius
    delta = split_deviation(scene.pump.l, scene.ring_theta, scene.k_P, scene.k_s, scene.pump.z_R)
    return (R * math.cos(delta), R * math.sin(delta)), (R * math.cos(delta), -R * math.sin(delta))


def default_fixed_detector(scene: Scene, **kwargs) -> Detector:
    return Detector((-scene.ring_radius, 0.0), **kwargs)


# --- scan -----------------------------------------------------------------------


def _point_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def scan_expectations(scene, fixed, scan_det, grid):
    """Per-grid-point pair probabilities: (P_fixed, P_scan[ny, nx], P_joint[ny, nx])."""
    xs, ys = grid.xs, grid.ys
    X, Y = np.meshgrid(xs, ys)
    fx, fy, fw = fixed.nodes()
    ox, oy, ow = disk_nodes((0.0, 0.0), scan_det.radius)
    P_fixed = 2.0 * float(np.sum(fw * marginal_density(scene, fx, fy)))
    px = X.ravel()[:, None] + ox[None, :]
    py = Y.ravel()[:, None] + oy[None, :]
    P_scan = 2.0 * (marginal_density(scene, px, py) @ ow)
    joint = np.zeros(px.shape[0])
    for k in range(fx.size):
        joint += fw[k] * (normalized_pair_density(scene, (fx[k], fy[k]), (px, py)) @ ow)
    joint *= 2.0
    return P_fixed, P_scan.reshape(X.shape), joint.reshape(X.shape)


def _scan_point(rng, dwell, fixed_pair_rate, p_cond, scan_other_rate, fixed_dark, scan_dark, gate):
    n_fixed_pairs = rng.poisson(fixed_pair_rate * dwell)
    n_true = rng.binomial(n_fixed_pairs, min(1.0, p_cond))
    n_scan = n_true + rng.poisson(scan_other_rate * dwell) + rng.poisson(scan_dark * dwell)
    trig = n_fixed_pairs + rng.poisson(fixed_dark * dwell)
    # each scanning-detector click opens a gate on the fixed detector
    p_acc = -math.expm1(-(fixed_pair_rate + fixed_dark) * gate)
    n_acc = min(rng.binomial(n_scan - n_true, p_acc), trig - n_true)
    return CountRecord(dwell, trig=int(trig), top=int(n_scan), ctop=int(n_true + n_acc))


def simulate_scan(
    scene: Scene,
    fixed_detector: Detector,
    grid: ScanGrid,
    pair_rate: float,
    gates: GateConfig = GateConfig(),
    seed: int = 0,
    scan_detector: Detector | None = None,
    workers: int = 1,
) -> ScanResult:
    """Raster the scanning detector over ``grid`` with the fixed detector held in place.

    ``scan_detector`` supplies aperture, efficiency and dark rate of the
    moving detector (its centre is ignored). Each point simulates ``dwell``
    seconds: pairs whose photon reaches the fixed detector are Poisson, the
    partner is found in the scanning aperture with the conditional pair
    probability, and every scanning-detector click opens a trigger gate in
    which an unrelated fixed-detector click counts as an accidental.
    """
    if scan_detector is None:
        scan_detector = Detector((0.0, 0.0), dark_rate=fixed_detector.dark_rate,
                                 quantum_efficiency=fixed_detector.quantum_efficiency)
    if pair_rate < 0:
        raise ValueError("pair rate must be >= 0")
    eta_f = fixed_detector.quantum_efficiency
    eta_s = scan_detector.quantum_efficiency
    P_fixed, P_scan, joint = scan_expectations(scene, fixed_detector, scan_detector, grid)
    fixed_pair_rate = pair_rate * eta_f * P_fixed
    p_cond = eta_s * joint / P_fixed if P_fixed > 0 else np.zeros_like(joint)
    scan_other = np.maximum(pair_rate * eta_s * P_scan - fixed_pair_rate * p_cond, 0.0)
    ny, nx = joint.shape

    def run(index):
        j, i = divmod(index, nx)
        return _scan_point(
            _point_rng(seed, index), grid.dwell, fixed_pair_rate, p_cond[j, i], scan_other[j, i],
            fixed_detector.dark_rate, scan_detector.dark_rate, gates.trigger_gate,
        )

    indices = range(nx * ny)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            flat = list(pool.map(run, indices, chunksize=64))
    else:
        flat = [run(k) for k in indices]
    records = tuple(tuple(flat[j * nx:(j + 1) * nx]) for j in range(ny))
    return ScanResult(grid, records)


# --- coincidence logic ----------------------------------------------------------


def _check_sorted(name, t):
    t = np.ascontiguousarray(t, dtype=float)
    if t.size > 1 and np.any(np.diff(t) < 0):
        raise SortOrderViolation(f"{name} event times are not sorted ascending")
    return t


@njit(cache=True)
def _greedy_overlap(a, b, w):
    i = 0
    j = 0
    count = 0
    while i < a.size and j < b.size:
        if b[j] < a[i] - w:
            j += 1
        elif b[j] > a[i] + w:
            i += 1
        else:
            count += 1
            i += 1
            j += 1
    return count


def window_coincidence(event_times_a, event_times_b, pulse_width: float) -> int:
    """Count overlapping pulse pairs between two sorted streams.

    Pulses ``[t, t + pulse_width]`` overlap when ``|t_a - t_b| <= pulse_width``
    (touching counts). A linear merge pairs each event with the earliest
    still-unmatched partner, so every event is used at most once.
    """
    a = _check_sorted("first", event_times_a)
    b = _check_sorted("second", event_times_b)
    return int(_greedy_overlap(a, b, float(pulse_width)))


@njit(cache=True)
def _greedy_gate(trig, chan, lo, hi):
    hit = np.zeros(trig.size, dtype=np.bool_)
    j = 0
    for i in range(trig.size):
        while j < chan.size and chan[j] < trig[i] + lo:
            j += 1
        if j < chan.size and chan[j] <= trig[i] + hi:
            hit[i] = True
            j += 1
    return hit


def gated_hits(trigger_times, channel_times, lo: float, hi: float) -> np.ndarray:
    """Per trigger: is a channel event matched inside ``[t + lo, t + hi]``?

    Triggers are served in time order and take the earliest unused channel
    event in their window, so a channel event confirms at most one trigger.
    """
    t = _check_sorted("trigger", trigger_times)
    c = _check_sorted("channel", channel_times)
    return _greedy_gate(t, c, float(lo), float(hi))


def _poisson_in_windows(rng, rate, starts, lo, hi):
    """Poisson events at ``rate`` restricted to the union of ``[s + lo, s + hi]``."""
    if starts.size == 0 or rate <= 0:
        return np.empty(0), 0.0
    a = starts + lo
    b = starts + hi
    run_end = np.maximum.accumulate(b)
    new = np.ones(a.size, dtype=bool)
    new[1:] = a[1:] > run_end[:-1]
    seg_a = a[new]
    last = np.flatnonzero(new)
    seg_b = run_end[np.r_[last[1:] - 1, a.size - 1]]
    lengths = seg_b - seg_a
    total = float(lengths.sum())
    n = rng.poisson(rate * total)
    u = np.sort(rng.random(n)) * total
    cum = np.concatenate(([0.0], np.cumsum(lengths)))
    k = np.clip(np.searchsorted(cum, u, side="right") - 1, 0, lengths.size - 1)
    return seg_a[k] + (u - cum[k]), total


def check_overlap(*dets: Detector):
    for i in range(len(dets)):
        for j in range(i + 1, len(dets)):
            a, b = dets[i], dets[j]
            if math.dist(a.center, b.center) < a.radius + b.radius:
                raise DetectorOverlap(f"detector apertures {i} and {j} overlap")


def simulate_triple(
    model: str,
    scene: Scene,
    trig_detector: Detector,
    top_detector: Detector,
    bot_detector: Detector,
    pair_rate: float,
    gates: GateConfig = GateConfig(),
    duration: float = defaults.MEASURED_DURATION,
    seed: int = 0,
    background: bool = True,
) -> CountRecord:
    """Event-level triple-coincidence run.

    Each detected trigger from a pair heralds a partner photon drawn from the
    pair density conditioned on the trigger aperture. ``"quantum"``: one
    partner, landing in at most one of top/bottom. ``"semiclassical"``: the
    top and bottom spots are fed by independent partner realizations, so a
    trigger can be followed by both. Dark triggers and uncorrelated channel
    singles enter the same gates in both models; ``background=False``
    removes them (and dark triggers) so only heralded partners remain.
    """
    if model not in ("quantum", "semiclassical"):
        raise ValueError(f"unknown model {model!r}")
    check_overlap(trig_detector, top_detector, bot_detector)
    if duration <= 0:
        return CountRecord(0.0)
    rng = np.random.default_rng(seed)
    lo, hi = gates.offsets

    p_trig = hit_probability(scene, trig_detector)
    heralded_rate = pair_rate * trig_detector.quantum_efficiency * p_trig
    n_pair_trig = rng.poisson(heralded_rate * duration)
    n_dark_trig = rng.poisson(trig_detector.dark_rate * duration) if background else 0
    t_pair = rng.random(n_pair_trig) * duration
    t_dark = rng.random(n_dark_trig) * duration

    def partner_hits(det, n):
        # thin by efficiency first, then place only the surviving partners
        eta = det.quantum_efficiency
        keep = np.flatnonzero(rng.random(n) < eta)
        sx, sy, ix, iy = sample_pairs(scene, keep.size, rng, fixed_region=trig_detector)
        hit = np.zeros(n, dtype=bool)
        hit[keep] = det.contains(ix, iy)
        return hit

    if model == "quantum":
        eta_max = max(top_detector.quantum_efficiency, bot_detector.quantum_efficiency)
        keep = np.flatnonzero(rng.random(n_pair_trig) < eta_max)
        sx, sy, ix, iy = sample_pairs(scene, keep.size, rng, fixed_region=trig_detector)
        u = rng.random(keep.size) * eta_max
        hit_top = np.zeros(n_pair_trig, dtype=bool)
        hit_bot = np.zeros(n_pair_trig, dtype=bool)
        hit_top[keep] = top_detector.contains(ix, iy) & (u < top_detector.quantum_efficiency)
        hit_bot[keep] = bot_detector.contains(ix, iy) & (u < bot_detector.quantum_efficiency)
    else:
        hit_top = partner_hits(top_detector, n_pair_trig)
        hit_bot = partner_hits(bot_detector, n_pair_trig)

    t_all = np.concatenate([t_pair, t_dark])
    order = np.argsort(t_all, kind="stable")
    t_trig = t_all[order]

    counts = {}
    for name, det, hits in (("top", top_detector, hit_top), ("bot", bot_detector, hit_bot)):
        heralded_into = pair_rate * trig_detector.quantum_efficiency * det.quantum_efficiency * joint_probability(
            scene, trig_detector, det)
        uncorrelated = det.dark_rate + max(
            pair_rate * det.quantum_efficiency * hit_probability(scene, det) - heralded_into, 0.0)
        if not background:
            uncorrelated = 0.0
        partner_t = t_pair[hits]
        local, covered = _poisson_in_windows(rng, uncorrelated, t_trig, lo, hi)
        rest = rng.poisson(uncorrelated * max(duration - covered, 0.0))
        channel = np.sort(np.concatenate([partner_t, local]))
        counts[name] = (gated_hits(t_trig, channel, lo, hi), partner_t.size + local.size + rest)

    (g_top, n_top), (g_bot, n_bot) = counts["top"], counts["bot"]
    return CountRecord(
        duration,
        trig=int(t_trig.size),
        top=int(n_top),
        bot=int(n_bot),
        ctop=int(g_top.sum()),
        cbot=int(g_bot.sum()),
        triple=int((g_top & g_bot).sum()),
    )


# --- calibration ----------------------------------------------------------------


@dataclass(frozen=True)
class TripleSetup:
    pair_rate: float
    trig: Detector
    top: Detector
    bot: Detector


def default_triple_detectors(scene: Scene, grin_diameter: float = 0.18, trig_efficiency: float = 0.25):
    top_c, bot_c = split_spot_positions(scene)
    trig = default_fixed_detector(scene, quantum_efficiency=trig_efficiency)
    return trig, Detector(top_c, grin_diameter), Detector(bot_c, grin_diameter)


def calibrate_triple(
    scene: Scene,
    trig: Detector,
    top: Detector,
    bot: Detector,
    targets: dict = defaults.MEASURED_RATES,
    gates: GateConfig = GateConfig(),
) -> TripleSetup:
    """Choose pair rate, channel efficiencies and uncorrelated singles to reproduce measured rates.

    Trigger efficiency and dark rate are kept; every other free parameter
    is solved from ``R_trig``, ``R_ctop``/``R_top`` and ``R_cbot``/``R_bot``.
    """
    check_overlap(trig, top, bot)
    lo, hi = gates.offsets
    w = hi - lo
    p_trig = hit_probability(scene, trig)
    R_trig = targets["R_trig"]
    heralded = R_trig - trig.dark_rate
    if heralded <= 0 or p_trig <= 0:
        raise CalibrationError("trigger rate cannot be produced by pairs")
    pair_rate = heralded / (trig.quantum_efficiency * p_trig)

    solved = {}
    for name, det in (("top", top), ("bot", bot)):
        R_c = targets[f"R_c{name}"]
        R_single = targets[f"R_{name}"]
        p_cond = joint_probability(scene, trig, det) / p_trig
        p_single = hit_probability(scene, det)
        a = 0.0
        for _ in range(100):
            unc = R_single - heralded * a
            miss = math.exp(-unc * w)
            # R_c = heralded [1 - (1 - a) miss] + dark_trig [1 - miss]
            target = (R_c - trig.dark_rate * (1.0 - miss)) / heralded
            a_new = 1.0 - (1.0 - target) / miss
            if abs(a_new - a) < 1e-15:
                break
            a = a_new
        eta = a / p_cond if p_cond > 0 else math.inf
        if not 0 < eta <= 1:
            raise CalibrationError(f"{name}: required efficiency {eta:.3g} outside (0, 1]")
        dark = R_single - pair_rate * eta * p_single
        if dark < 0:
            raise CalibrationError(f"{name}: pair photons alone exceed the singles rate")
        solved[name] = Detector(det.center, det.aperture_diameter, eta, dark)
    return TripleSetup(pair_rate, trig, solved["top"], solved["bot"])
