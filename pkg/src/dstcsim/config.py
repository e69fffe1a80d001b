"""Experiment configuration: defaults, key=value parsing, validation.

The config format is flat ``key=value`` text: one or more assignments per
line, ``#`` starts a comment.  Unknown keys and out-of-range values raise
:class:`ConfigError` naming the offending key.
"""

from dataclasses import dataclass

__all__ = ["ConfigError", "SimConfig", "parse_config", "parse_snr_grid", "DEFAULT_SNR_GRID"]

SCHEMES = ("buffered", "non-buffered", "no-selection", "single-user-bound", "direct")
POLICIES = ("exhaustive", "greedy", "random", "fixed-pairs")
DETECTORS = ("rake", "mmse")
BUFFER_MODES = ("fixed", "dynamic-snr", "dynamic-power")

DEFAULT_SNR_GRID = tuple(float(v) for v in range(0, 17, 2))


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending parameter."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class SimConfig:
    """All parameters of one experiment sweep."""

    users: int = 3
    relays: int = 6
    gain: int = 16
    symbols: int = 1000
    packets: int = 100
    snr_db: tuple = DEFAULT_SNR_GRID
    scheme: str = "buffered"
    policy: str = "exhaustive"
    detector_relay: str = "mmse"
    detector_dest: str = "rake"
    buffer_mode: str = "fixed"
    capacity: int = 6
    j_min: int = 1
    j_max: int = 12
    d1: float = 2.0
    d2: int = 2
    d3: int = 2
    gamma: float = 1e-3
    seed: int = 12345

    def __post_init__(self):
        _validate(self)

    @property
    def blocks_per_packet(self) -> int:
        return self.symbols // 2


def _validate(cfg: SimConfig) -> None:
    if cfg.users < 1:
        raise ConfigError("users", f"must be >= 1, got {cfg.users}")
    if cfg.relays < 0:
        raise ConfigError("relays", f"must be >= 0, got {cfg.relays}")
    if cfg.relays == 0 and cfg.scheme != "direct":
        raise ConfigError("relays", "0 relays is only valid with scheme=direct")
    if cfg.relays == 1 and cfg.scheme != "direct":
        raise ConfigError("relays", "pair selection needs at least 2 relays")
    if cfg.gain < 1:
        raise ConfigError("gain", f"must be >= 1, got {cfg.gain}")
    if cfg.symbols < 2 or cfg.symbols % 2 != 0:
        raise ConfigError("symbols", f"must be a positive even count, got {cfg.symbols}")
    if cfg.packets < 1:
        raise ConfigError("packets", f"must be >= 1, got {cfg.packets}")
    if not cfg.snr_db:
        raise ConfigError("snr", "grid must be nonempty")
    if cfg.scheme not in SCHEMES:
        raise ConfigError("scheme", f"must be one of {SCHEMES}, got {cfg.scheme!r}")
    if cfg.policy not in POLICIES:
        raise ConfigError("policy", f"must be one of {POLICIES}, got {cfg.policy!r}")
    if cfg.scheme == "non-buffered" and cfg.policy == "fixed-pairs":
        raise ConfigError("policy", "fixed-pairs with no buffers is the no-selection scheme")
    needs_even = cfg.policy == "fixed-pairs" or cfg.scheme == "no-selection"
    if needs_even and cfg.relays % 2 != 0:
        raise ConfigError("relays", f"fixed pairing needs an even relay count, got {cfg.relays}")
    if cfg.detector_relay not in DETECTORS:
        raise ConfigError("detector_relay", f"must be one of {DETECTORS}, got {cfg.detector_relay!r}")
    if cfg.detector_dest not in DETECTORS:
        raise ConfigError("detector_dest", f"must be one of {DETECTORS}, got {cfg.detector_dest!r}")
    if cfg.buffer_mode not in BUFFER_MODES:
        raise ConfigError("buffer", f"must be one of {BUFFER_MODES}, got {cfg.buffer_mode!r}")
    if cfg.j_min < 1 or cfg.j_min > cfg.j_max:
        raise ConfigError("j_min", f"need 1 <= j_min <= j_max, got [{cfg.j_min}, {cfg.j_max}]")
    if not cfg.j_min <= cfg.capacity <= cfg.j_max:
        raise ConfigError("capacity", f"must lie in [{cfg.j_min}, {cfg.j_max}], got {cfg.capacity}")
    if cfg.d1 <= 0:
        raise ConfigError("d1", f"must be > 0, got {cfg.d1}")
    if cfg.d2 < 1:
        raise ConfigError("d2", f"must be >= 1, got {cfg.d2}")
    if cfg.d3 < 1:
        raise ConfigError("d3", f"must be >= 1, got {cfg.d3}")
    if cfg.gamma <= 0:
        raise ConfigError("gamma", f"must be > 0, got {cfg.gamma}")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed", f"must fit in an unsigned 64-bit integer, got {cfg.seed}")


def parse_snr_grid(text: str) -> tuple:
    """SNR grid from ``a:b:step`` (inclusive), a comma list, or one value."""
    text = text.strip()
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError("expected a:b:step")
            start, stop, step = (float(p) for p in parts)
            if step <= 0:
                raise ValueError("step must be > 0")
            if stop < start:
                raise ValueError("stop must be >= start")
            grid = []
            value = start
            while value <= stop + 1e-9:
                grid.append(round(value, 9))
                value += step
            return tuple(grid)
        if "," in text:
            return tuple(float(p) for p in text.split(","))
        return (float(text),)
    except ValueError as exc:
        raise ConfigError("snr", str(exc)) from None


_INT_KEYS = {
    "users": "users",
    "relays": "relays",
    "gain": "gain",
    "symbols": "symbols",
    "packets": "packets",
    "capacity": "capacity",
    "j_min": "j_min",
    "j_max": "j_max",
    "d2": "d2",
    "d3": "d3",
    "seed": "seed",
}
_FLOAT_KEYS = {"d1": "d1", "gamma": "gamma"}
_CHOICE_KEYS = {
    "scheme": ("scheme", SCHEMES),
    "policy": ("policy", POLICIES),
    "detector_relay": ("detector_relay", DETECTORS),
    "detector_dest": ("detector_dest", DETECTORS),
    "buffer": ("buffer_mode", BUFFER_MODES),
}


def parse_config(text: str, **overrides) -> SimConfig:
    """Build a validated :class:`SimConfig` from key=value text.

    An empty config yields the default scenario (3 users, 6 relays, gain 16,
    1000-symbol packets, buffer capacity 6, SNR 0..16 dB in 2-dB steps).
    Keyword overrides are applied after the text, mirroring CLI flags.
    """
    fields = {}
    for raw_line in text.splitlines():
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        for token in line.split():
            if "=" not in token:
                raise ConfigError(token, "expected key=value")
            key, value = token.split("=", 1)
            key = key.strip()
            value = value.strip()
            if key in _INT_KEYS:
                try:
                    fields[_INT_KEYS[key]] = int(value)
                except ValueError:
                    raise ConfigError(key, f"expected an integer, got {value!r}") from None
            elif key in _FLOAT_KEYS:
                try:
                    fields[_FLOAT_KEYS[key]] = float(value)
                except ValueError:
                    raise ConfigError(key, f"expected a number, got {value!r}") from None
            elif key in _CHOICE_KEYS:
                attr, choices = _CHOICE_KEYS[key]
                if value not in choices:
                    raise ConfigError(key, f"must be one of {choices}, got {value!r}")
                fields[attr] = value
            elif key == "snr":
                fields["snr_db"] = parse_snr_grid(value)
            else:
                raise ConfigError(key, "unknown key")
    fields.update(overrides)
    try:
        return SimConfig(**fields)
    except ConfigError:
        raise
    except TypeError as exc:
        raise ConfigError("config", str(exc)) from None
