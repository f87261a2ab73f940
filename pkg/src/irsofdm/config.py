"""Scenario configuration: system scalars, geometry, path loss, file I/O.

Power-like quantities are stored in linear units (watts); dB/dBm values in
config files are converted exactly once at parse time.
"""

from dataclasses import dataclass, field, asdict, replace
import json
import math

from .reflection import CarrierGrid, CircuitParams, FitParams, DEFAULT_FIT


def circuit_from_dict(d: dict) -> CircuitParams:
    """CircuitParams from a config-file section (SI units)."""
    return CircuitParams(**d)


def circuit_to_dict(params: CircuitParams) -> dict:
    return asdict(params)


def load_circuit(path) -> CircuitParams:
    raw = load_config_file(path)
    return circuit_from_dict(raw.get("circuit", raw))


def db_to_linear(x_db):
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x):
    return 10.0 * math.log10(x)


def dbm_to_watts(x_dbm):
    return 10.0 ** (x_dbm / 10.0) * 1e-3


@dataclass(frozen=True)
class Geometry:
    """Relative placement of transmitter array, surface and users.

    The transmit array is a uniform linear array with spacing ``d_a``; the
    surface is a square uniform planar array with element spacing ``d_i``.
    Users sit at distance ``d_iu`` from the surface reference element with
    per-user azimuth angles ``user_phases`` (drawn per realization when None).
    """

    d_bi: float = 50.0   # transmitter-surface distance, m
    d_iu: float = 1.0    # surface-user distance, m
    d_a: float = 0.3     # antenna spacing, m
    d_i: float = 0.03    # surface element spacing, m
    user_phases: tuple | None = None  # radians, one per user

    def __post_init__(self):
        for name in ("d_bi", "d_iu", "d_a", "d_i"):
            if getattr(self, name) <= 0:
                raise ValueError(f"geometry distance {name} must be positive")
        if self.user_phases is not None:
            object.__setattr__(self, "user_phases", tuple(float(p) for p in self.user_phases))


@dataclass(frozen=True)
class PathLoss:
    """Distance-power-law attenuation: zeta0 * d**-eps per link, amplitude sqrt."""

    zeta0: float = 1e-3   # reference attenuation at 1 m, linear
    eps_bi: float = 2.8
    eps_iu: float = 2.5
    eps_bu: float = 3.7

    def __post_init__(self):
        if not 0 < self.zeta0 <= 1:
            raise ValueError("zeta0 must be in (0, 1]")
        for name in ("eps_bi", "eps_iu", "eps_bu"):
            if getattr(self, name) < 2:
                raise ValueError(f"path-loss exponent {name} must be >= 2")


@dataclass(frozen=True)
class SystemConfig:
    """All scenario scalars for one simulated downlink."""

    n_subcarriers: int = 64   # N
    n_tx: int = 4             # transmit antennas
    n_users: int = 3          # K
    n_elements: int = 64      # M, must be a perfect square
    n_taps: int = 16          # D, channel impulse response length
    cp_len: int = 16          # cyclic prefix length, >= n_taps
    n_subbands: int = 4       # sub-band count for the phase search
    carrier_ghz: float = 2.4
    bandwidth_ghz: float = 0.1
    power_w: float = db_to_linear(-5.0)   # total transmit power, W
    noise_w: float = dbm_to_watts(-70.0)  # per-subcarrier noise power, W
    phase_bits: int | None = None         # None: continuous phase shifters
    geometry: Geometry = field(default_factory=Geometry)
    pathloss: PathLoss = field(default_factory=PathLoss)
    fit: FitParams = field(default_factory=FitParams)

    def __post_init__(self):
        validate_config(self)

    def grid(self) -> CarrierGrid:
        return CarrierGrid(self.carrier_ghz, self.bandwidth_ghz, self.n_subcarriers)

    @property
    def sqrt_m(self) -> int:
        return int(round(math.sqrt(self.n_elements)))


def validate_config(cfg: SystemConfig):
    """Raise ValueError on an inconsistent configuration."""
    if min(cfg.n_subcarriers, cfg.n_tx, cfg.n_users, cfg.n_elements) < 1:
        raise ValueError("dimensions must be positive")
    root = int(round(math.sqrt(cfg.n_elements)))
    if root * root != cfg.n_elements:
        raise ValueError(f"n_elements={cfg.n_elements} must be a perfect square (UPA)")
    if cfg.n_taps < 1 or cfg.n_taps > cfg.cp_len:
        raise ValueError("tap count must satisfy 1 <= n_taps <= cp_len")
    if cfg.n_taps > cfg.n_subcarriers:
        raise ValueError("tap count cannot exceed the subcarrier count")
    if cfg.n_subcarriers % cfg.n_subbands:
        raise ValueError("n_subbands must divide n_subcarriers")
    if cfg.power_w <= 0 or cfg.noise_w <= 0:
        raise ValueError("power and noise must be positive")
    if cfg.phase_bits is not None and cfg.phase_bits < 1:
        raise ValueError("phase_bits must be >= 1 when set")
    if cfg.geometry.user_phases is not None and len(cfg.geometry.user_phases) != cfg.n_users:
        raise ValueError("user_phases must provide one angle per user")


def paper_defaults() -> SystemConfig:
    """Full-scale scenario (N=64, M=64, 3 users, 16 taps)."""
    return SystemConfig()


def desk_defaults() -> SystemConfig:
    """Scaled-down scenario for fast regression runs (N=16, M=16, 2 users)."""
    return SystemConfig(
        n_subcarriers=16, n_tx=4, n_users=2, n_elements=16,
        n_taps=4, cp_len=4, n_subbands=4,
    )


def tiny_defaults() -> SystemConfig:
    """Minimal dimensions used by the analytic cross-checks (N=8, M=4)."""
    return SystemConfig(
        n_subcarriers=8, n_tx=2, n_users=2, n_elements=4,
        n_taps=2, cp_len=2, n_subbands=2,
    )


# --------------------------------------------------------------------------
# Config file schema (JSON).  dB-valued fields are converted here, once.
# --------------------------------------------------------------------------

_SYSTEM_INT_FIELDS = (
    "n_subcarriers", "n_tx", "n_users", "n_elements", "n_taps", "cp_len", "n_subbands",
)


def config_to_dict(cfg: SystemConfig) -> dict:
    d = {k: getattr(cfg, k) for k in _SYSTEM_INT_FIELDS}
    d["carrier_ghz"] = cfg.carrier_ghz
    d["bandwidth_ghz"] = cfg.bandwidth_ghz
    d["power_dbw"] = linear_to_db(cfg.power_w)
    d["noise_dbm"] = linear_to_db(cfg.noise_w) + 30.0
    d["phase_bits"] = cfg.phase_bits
    d["geometry"] = asdict(cfg.geometry)
    if d["geometry"]["user_phases"] is not None:
        d["geometry"]["user_phases"] = list(d["geometry"]["user_phases"])
    pl = asdict(cfg.pathloss)
    pl["zeta0_db"] = linear_to_db(pl.pop("zeta0"))
    d["pathloss"] = pl
    d["fit"] = {"a": list(cfg.fit.a), "b": list(cfg.fit.b), "c": list(cfg.fit.c)}
    return d


def config_from_dict(d: dict) -> SystemConfig:
    kwargs = {k: int(d[k]) for k in _SYSTEM_INT_FIELDS if k in d}
    if "carrier_ghz" in d:
        kwargs["carrier_ghz"] = float(d["carrier_ghz"])
    if "bandwidth_ghz" in d:
        kwargs["bandwidth_ghz"] = float(d["bandwidth_ghz"])
    if "power_dbw" in d:
        kwargs["power_w"] = db_to_linear(float(d["power_dbw"]))
    if "noise_dbm" in d:
        kwargs["noise_w"] = dbm_to_watts(float(d["noise_dbm"]))
    if "phase_bits" in d:
        kwargs["phase_bits"] = None if d["phase_bits"] is None else int(d["phase_bits"])
    if "geometry" in d:
        g = dict(d["geometry"])
        if g.get("user_phases") is not None:
            g["user_phases"] = tuple(g["user_phases"])
        kwargs["geometry"] = Geometry(**g)
    if "pathloss" in d:
        p = dict(d["pathloss"])
        if "zeta0_db" in p:
            p["zeta0"] = db_to_linear(p.pop("zeta0_db"))
        kwargs["pathloss"] = PathLoss(**p)
    if "fit" in d:
        kwargs["fit"] = FitParams(**{k: tuple(v) for k, v in d["fit"].items()})
    return SystemConfig(**kwargs)


def load_config_file(path) -> dict:
    """Parse a JSON config file into its raw sections (system/solver/sweep)."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ValueError(f"config file {path} must contain a JSON object")
    return raw


def load_system_config(path) -> SystemConfig:
    raw = load_config_file(path)
    return config_from_dict(raw.get("system", raw))


def save_config_file(path, system: SystemConfig, solver=None, sweep=None, circuit=None):
    doc = {"system": config_to_dict(system)}
    if solver is not None:
        doc["solver"] = solver if isinstance(solver, dict) else asdict(solver)
    if sweep is not None:
        doc["sweep"] = sweep
    if circuit is not None:
        doc["circuit"] = circuit if isinstance(circuit, dict) else circuit_to_dict(circuit)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


__all__ = [
    "Geometry", "PathLoss", "SystemConfig",
    "validate_config", "paper_defaults", "desk_defaults", "tiny_defaults",
    "db_to_linear", "linear_to_db", "dbm_to_watts",
    "config_to_dict", "config_from_dict",
    "load_config_file", "load_system_config", "save_config_file",
    "replace", "DEFAULT_FIT",
]
