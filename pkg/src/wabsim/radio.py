"""Link budget, beam selection and capacity for the FR2 backhaul and FR1 access.

Bearings are compass degrees (0 = north, clockwise). Powers in dBm, gains in
dBi, losses in dB.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .mcs import DEFAULT_SLOPE, bler, get_table, link_adapt  # noqa: F401  (re-exported)

THERMAL_NOISE_DBM_HZ = -174.0
SIDELOBE_FLOOR_DB = 30.0

# 38.101-1 / 38.101-2 maximum transmission bandwidth, N_RB
_NRB = {
    (40e6, 30e3): 106,
    (20e6, 30e3): 51,
    (100e6, 30e3): 273,
    (20e6, 15e3): 106,
    (50e6, 120e3): 32,
    (100e6, 120e3): 66,
    (200e6, 120e3): 132,
    (400e6, 120e3): 264,
}


class Band(enum.Enum):
    FR1 = "FR1"
    FR2 = "FR2"


class Direction(enum.Enum):
    DL = "dl"
    UL = "ul"


def n_prb_for(bandwidth_hz: float, scs_hz: float) -> int:
    try:
        return _NRB[(float(bandwidth_hz), float(scs_hz))]
    except KeyError:
        raise ValueError(f"no N_RB entry for {bandwidth_hz / 1e6:g} MHz at {scs_hz / 1e3:g} kHz") from None


@dataclass(frozen=True)
class RadioConfig:
    """PHY parameters of one band. Per-direction fields are ``(dl, ul)`` pairs.

    ``eirp_dbm`` is the transmitter EIRP in each direction and ``rx_gain_dbi``
    the receive gain referenced by RSRP/SINR at the receiving end.
    ``max_sinr_db`` caps the SINR to model transmitter EVM and receiver
    impairments. ``efficiency`` is the implementation-loss multiplier.
    """

    band: Band
    carrier_hz: float
    bandwidth_hz: float
    scs_hz: float
    n_prb: int
    tdd_dl_fraction: float = 0.8
    eirp_dbm: tuple[float, float] = (0.0, 0.0)
    rx_gain_dbi: tuple[float, float] = (0.0, 0.0)
    noise_figure_db: tuple[float, float] = (9.0, 9.0)
    max_sinr_db: tuple[float, float] = (math.inf, math.inf)
    mimo_layers: int = 1
    mcs_table: tuple[str, str] = ("qam256", "qam64")
    efficiency: tuple[float, float] = (1.0, 1.0)
    bler_slope: float = DEFAULT_SLOPE
    target_bler: float = 0.1

    def __post_init__(self):
        if self.n_prb != n_prb_for(self.bandwidth_hz, self.scs_hz):
            raise ValueError(f"n_prb {self.n_prb} inconsistent with bandwidth/SCS")
        if not 0 < self.tdd_dl_fraction < 1:
            raise ValueError("tdd_dl_fraction must lie in (0, 1)")
        if self.mimo_layers < 1:
            raise ValueError("mimo_layers must be >= 1")
        for e in self.efficiency:
            if not 0 < e <= 1:
                raise ValueError("efficiency factors must lie in (0, 1]")
        for t in self.mcs_table:
            get_table(t)

    @property
    def n_subcarriers(self) -> int:
        return 12 * self.n_prb

    @property
    def occupied_bandwidth_hz(self) -> float:
        return self.n_subcarriers * self.scs_hz

    def pick(self, pair, direction: Direction):
        return pair[0] if direction is Direction.DL else pair[1]

    def tdd_fraction(self, direction: Direction) -> float:
        return self.tdd_dl_fraction if direction is Direction.DL else 1.0 - self.tdd_dl_fraction

    def with_overrides(self, overrides: dict) -> RadioConfig:
        kw = {}
        for key, value in overrides.items():
            if key not in self.__dataclass_fields__ or key == "band":
                raise KeyError(key)
            cur = getattr(self, key)
            if isinstance(cur, tuple):
                if isinstance(value, dict):
                    value = (value.get("dl", cur[0]), value.get("ul", cur[1]))
                value = tuple(value)
            kw[key] = value
        if ("bandwidth_hz" in kw or "scs_hz" in kw) and "n_prb" not in kw:
            kw["n_prb"] = n_prb_for(kw.get("bandwidth_hz", self.bandwidth_hz), kw.get("scs_hz", self.scs_hz))
        return replace(self, **kw)

    def to_dict(self) -> dict:
        out = {}
        for name in self.__dataclass_fields__:
            v = getattr(self, name)
            if isinstance(v, Band):
                v = v.value
            elif isinstance(v, tuple):
                v = {"dl": v[0], "ul": v[1]}
            out[name] = v
        return out


def fr2_default() -> RadioConfig:
    """Commercial FR2 cell: 27.2 GHz, 200 MHz at 120 kHz, TDD 4:1.

    AAU EIRP 70 dBm, CPE EIRP 40 dBm, 2x2 MIMO. Receive gains are zero
    because the EIRPs already include the transmit arrays; RSRP is referenced
    to the antenna port.
    """
    return RadioConfig(
        band=Band.FR2,
        carrier_hz=27.2e9,
        bandwidth_hz=200e6,
        scs_hz=120e3,
        n_prb=132,
        tdd_dl_fraction=0.8,
        eirp_dbm=(70.0, 40.0),
        rx_gain_dbi=(0.0, 20.0),
        noise_figure_db=(9.0, 9.0),
        max_sinr_db=(30.0, 30.0),
        mimo_layers=2,
        mcs_table=("qam256", "qam64"),
        efficiency=(1.0, 1.0),
    )


def fr1_default() -> RadioConfig:
    """Prototype SDR gNB: 40 MHz at 30 kHz, SISO, 20 dBm, TDD 4:1."""
    return RadioConfig(
        band=Band.FR1,
        carrier_hz=3.6e9,
        bandwidth_hz=40e6,
        scs_hz=30e3,
        n_prb=106,
        tdd_dl_fraction=0.8,
        eirp_dbm=(20.0, 23.0),
        rx_gain_dbi=(0.0, 2.0),
        noise_figure_db=(7.0, 7.0),
        max_sinr_db=(20.5, 12.0),
        mimo_layers=1,
        mcs_table=("qam64", "qam64"),
        efficiency=(0.30, 0.08),
    )


def default_config(band: Band) -> RadioConfig:
    return fr2_default() if band is Band.FR2 else fr1_default()


# propagation -----------------------------------------------------------------


@dataclass(frozen=True)
class Los:
    def to_dict(self) -> dict:
        return {"kind": "Los"}


@dataclass(frozen=True)
class Nlos:
    """Blocked by ``obstruction_count`` polygons, ``trees`` of them foliage.

    ``excess_from_m`` is where the NLOS exponent starts to apply, measured
    from the transmitter; 1 m gives the plain log-distance law.
    """

    obstruction_count: int
    trees: int = 0
    excess_from_m: float = 1.0

    def __post_init__(self):
        if self.obstruction_count < 1 or not 0 <= self.trees <= self.obstruction_count:
            raise ValueError("need obstruction_count >= 1 and 0 <= trees <= obstruction_count")

    def to_dict(self) -> dict:
        return {"kind": "Nlos", "obstruction_count": self.obstruction_count, "trees": self.trees,
                "excess_from_m": self.excess_from_m}


@dataclass(frozen=True)
class Indoor:
    """Behind a glass facade and/or interior walls, ``depth_m`` inside."""

    glass: bool
    walls: int = 0
    depth_m: float = 0.0
    excess_from_m: float = 1.0

    def __post_init__(self):
        if self.walls < 0 or self.depth_m < 0:
            raise ValueError("walls and depth_m must be non-negative")

    def to_dict(self) -> dict:
        return {"kind": "Indoor", "glass": self.glass, "walls": self.walls, "depth_m": self.depth_m,
                "excess_from_m": self.excess_from_m}


LosState = Los | Nlos | Indoor


@dataclass(frozen=True)
class EnvParams:
    n_los: float = 2.0
    n_nlos: float = 3.2
    building_loss_db: float = 15.0
    tree_loss_db: float = 8.0
    glass_loss_db: float = 8.0
    wall_loss_db: float = 15.0
    indoor_loss_db_per_m: float = 0.5

    def with_overrides(self, overrides: dict) -> EnvParams:
        return replace(self, **overrides)


def default_env(band: Band) -> EnvParams:
    if band is Band.FR2:
        return EnvParams()
    return EnvParams(n_nlos=3.0, glass_loss_db=2.0, wall_loss_db=10.0, indoor_loss_db_per_m=0.2)


def fspl_1m(carrier_hz: float) -> float:
    return 20 * math.log10(carrier_hz) - 147.55


def path_loss(distance_m: float, carrier_hz: float, los: LosState, env: EnvParams = EnvParams()) -> float:
    """Log-distance path loss with additive obstruction and O2I terms."""
    if distance_m < 1:
        raise ValueError("distance_m must be >= 1")
    pl = fspl_1m(carrier_hz) + 10 * env.n_los * math.log10(distance_m)
    nlos_like = isinstance(los, Nlos) or (isinstance(los, Indoor) and los.walls > 0)
    if nlos_like:
        ref = min(max(1.0, los.excess_from_m), distance_m)
        pl += 10 * (env.n_nlos - env.n_los) * math.log10(distance_m / ref)
    if isinstance(los, Nlos):
        buildings = los.obstruction_count - los.trees
        pl += buildings * env.building_loss_db + los.trees * env.tree_loss_db
    elif isinstance(los, Indoor):
        if los.glass:
            pl += env.glass_loss_db
        pl += los.walls * env.wall_loss_db + los.depth_m * env.indoor_loss_db_per_m
    return pl


def per_re_eirp(cfg: RadioConfig, direction: Direction) -> float:
    return cfg.pick(cfg.eirp_dbm, direction) - 10 * math.log10(cfg.n_subcarriers)


def rsrp(tx: RadioConfig, pl_db: float, beam_gain_dbi: float = 0.0, direction: Direction = Direction.DL) -> float:
    """Per-resource-element received reference power."""
    return per_re_eirp(tx, direction) - pl_db + tx.pick(tx.rx_gain_dbi, direction) + beam_gain_dbi


def noise_per_re(cfg: RadioConfig, direction: Direction) -> float:
    return THERMAL_NOISE_DBM_HZ + 10 * math.log10(cfg.scs_hz) + cfg.pick(cfg.noise_figure_db, direction)


def sinr(cfg: RadioConfig, rsrp_dbm: float, direction: Direction = Direction.DL) -> float:
    """SNR per RE, combined with the impairment ceiling ``max_sinr_db``."""
    snr = rsrp_dbm - noise_per_re(cfg, direction)
    cap = cfg.pick(cfg.max_sinr_db, direction)
    if math.isinf(cap):
        return snr
    return -10 * math.log10(10 ** (-snr / 10) + 10 ** (-cap / 10))


# beams -------------------------------------------------------------------------


@dataclass(frozen=True)
class Beam:
    azimuth_deg: float
    beamwidth_deg: float
    gain_dbi: float

    def gain_at(self, bearing_deg: float) -> float:
        """Gaussian main lobe (3 dB at half beamwidth) over a flat floor."""
        off = angle_diff(bearing_deg, self.azimuth_deg)
        att = min(12.0 * (off / self.beamwidth_deg) ** 2, SIDELOBE_FLOOR_DB)
        return self.gain_dbi - att


@dataclass(frozen=True)
class BeamSet:
    ssb_beams: tuple[Beam, ...]
    csirs_refinements_per_ssb: int = 4
    csirs_extra_gain_db: float = 6.0

    def __post_init__(self):
        if not self.ssb_beams:
            raise ValueError("beam set is empty")
        if self.csirs_refinements_per_ssb < 1:
            raise ValueError("need at least one CSI-RS refinement per SSB")
        if any(b.gain_dbi <= 0 for b in self.ssb_beams):
            raise ValueError("beam gains must be positive")

    @property
    def central_refinement(self) -> int:
        return (self.csirs_refinements_per_ssb - 1) // 2

    def csirs_beams(self, ssb_idx: int) -> tuple[Beam, ...]:
        parent = self.ssb_beams[ssb_idx]
        n = self.csirs_refinements_per_ssb
        width = parent.beamwidth_deg / n
        return tuple(
            Beam(parent.azimuth_deg + (j - (n - 1) / 2) * width, width, parent.gain_dbi + self.csirs_extra_gain_db)
            for j in range(n)
        )

    @property
    def peak_csirs_gain(self) -> float:
        return max(b.gain_dbi for b in self.ssb_beams) + self.csirs_extra_gain_db


def sector_beams(center_deg: float, n_ssb: int = 8, beamwidth_deg: float = 15.0, gain_dbi: float = 20.0,
                 refinements: int = 4) -> BeamSet:
    """``n_ssb`` SSB beams tiling a sector centred on ``center_deg`` edge to edge."""
    first = center_deg - (n_ssb - 1) / 2 * beamwidth_deg
    beams = tuple(Beam((first + i * beamwidth_deg) % 360, beamwidth_deg, gain_dbi) for i in range(n_ssb))
    return BeamSet(beams, refinements)


def angle_diff(a: float, b: float) -> float:
    """Absolute angular distance in degrees, in [0, 180]."""
    d = (a - b) % 360.0
    return 360.0 - d if d > 180.0 else d


def bearing(src, dst) -> float:
    """Compass bearing from ``src`` to ``dst`` (x east, y north)."""
    return math.degrees(math.atan2(dst[0] - src[0], dst[1] - src[1])) % 360.0


@dataclass(frozen=True)
class BeamJitter:
    """Per-beam dB perturbations: ``ssb`` shape (n_ssb,), ``csirs`` (n_ssb, n_ref)."""

    ssb: np.ndarray
    csirs: np.ndarray

    @classmethod
    def zero(cls, beams: BeamSet) -> BeamJitter:
        n = len(beams.ssb_beams)
        return cls(np.zeros(n), np.zeros((n, beams.csirs_refinements_per_ssb)))

    @classmethod
    def draw(cls, rng: np.random.Generator, beams: BeamSet, ssb_sigma_db: float, csirs_sigma_db: float) -> BeamJitter:
        n = len(beams.ssb_beams)
        ssb = rng.normal(0.0, 1.0, n) * ssb_sigma_db
        csirs = rng.normal(0.0, 1.0, (n, beams.csirs_refinements_per_ssb)) * csirs_sigma_db
        return cls(ssb, csirs)


def select_beam(beams: BeamSet, bearing_deg: float, channel_jitter: BeamJitter | None = None) -> tuple[int, int]:
    """Best SSB by received power, then the best CSI-RS refinement inside it.

    Ties resolve to the lowest index.
    """
    jit = channel_jitter or BeamJitter.zero(beams)
    ssb_power = [b.gain_at(bearing_deg) + jit.ssb[i] for i, b in enumerate(beams.ssb_beams)]
    ssb_idx = int(np.argmax(ssb_power))
    csirs_power = [b.gain_at(bearing_deg) + jit.csirs[ssb_idx][j] for j, b in enumerate(beams.csirs_beams(ssb_idx))]
    return ssb_idx, int(np.argmax(csirs_power))


def beam_gain(beams: BeamSet, ssb_idx: int, csirs_idx: int, bearing_deg: float) -> float:
    """Gain of the serving CSI-RS beam relative to the best achievable, <= 0."""
    return beams.csirs_beams(ssb_idx)[csirs_idx].gain_at(bearing_deg) - beams.peak_csirs_gain


@dataclass(frozen=True)
class CpeAntenna:
    """Fixed directional WAB-MT array; gain penalty for off-axis arrivals."""

    beamwidth_deg: float = 60.0
    max_penalty_db: float = 20.0

    def penalty(self, pointing_deg: float, arrival_deg: float) -> float:
        off = angle_diff(pointing_deg, arrival_deg)
        return min(12.0 * (off / self.beamwidth_deg) ** 2, self.max_penalty_db)


# link state and capacity ---------------------------------------------------------


@dataclass(frozen=True)
class LinkState:
    rsrp_dbm: float
    sinr_db: float
    mcs: int
    bler: float
    serving_ssb: int = 0
    serving_csirs: int = 0
    los: LosState = field(default_factory=Los)

    def __post_init__(self):
        if not 0.0 <= self.bler <= 1.0:
            raise ValueError("bler outside [0, 1]")
        if not 0 <= self.mcs <= 28:
            raise ValueError("mcs outside 0-28")

    def to_dict(self) -> dict:
        return {
            "rsrp_dbm": self.rsrp_dbm,
            "sinr_db": self.sinr_db,
            "mcs": self.mcs,
            "bler": self.bler,
            "serving_ssb": self.serving_ssb,
            "serving_csirs": self.serving_csirs,
            "los": self.los.to_dict(),
        }


def link_throughput(cfg: RadioConfig, mcs: int, bler_: float, direction: Direction) -> float:
    """Goodput in bit/s of a full-buffer link."""
    if not 0.0 <= bler_ < 1.0:
        if bler_ == 1.0:
            return 0.0
        raise ValueError("bler outside [0, 1]")
    table = get_table(cfg.pick(cfg.mcs_table, direction))
    return (
        table.se(mcs)
        * cfg.occupied_bandwidth_hz
        * cfg.mimo_layers
        * cfg.tdd_fraction(direction)
        * (1.0 - bler_)
        * cfg.pick(cfg.efficiency, direction)
    )


def spectral_efficiency(throughput_bps: float, bandwidth_hz: float) -> float:
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth_hz must be positive")
    return throughput_bps / bandwidth_hz


def adapt(cfg: RadioConfig, direction: Direction, sinr_db: float, reported_sinr_db: float | None = None) -> tuple[int, float]:
    """Pick MCS from the reported SINR, then score it against the actual SINR.

    A stale report (CSI delay) is what makes BLER overshoot its target when
    the channel drops between report and transmission.
    """
    table = cfg.pick(cfg.mcs_table, direction)
    basis = sinr_db if reported_sinr_db is None else reported_sinr_db
    m = link_adapt(basis, table, cfg.target_bler, cfg.bler_slope)
    return m, bler(sinr_db, m, table, cfg.bler_slope)
