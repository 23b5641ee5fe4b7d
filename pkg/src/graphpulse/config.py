"""Run configuration: a dataclass plus a flat key=value config-file reader."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class RunConfig:
    world_size: int = 1
    buffersz_bytes: int = 28 * 1024
    passes: tuple[str, ...] = ()
    seed: int = 0
    short_circuit: bool = True
    sync_mode: str = "bulk"  # bulk | legacy
    frontier_seed: str = "auto"  # auto: fixSource targets if any, else all vertices
    max_pulses: int = 0  # 0 means 4 * vertex count
    # cost-model constants; only relative comparisons are ever asserted
    get_epoch_cost: int = 16
    per_byte_cost: int = 1
    chunk_epoch_cost: int = 64
    legacy_msg_setup_cost: int = 32
    trace: bool = False

    def pulse_limit(self, n: int) -> int:
        return self.max_pulses if self.max_pulses > 0 else 4 * max(n, 1)


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(name: str, raw: str):
    raw = raw.strip()
    if name == "passes":
        return tuple(p.strip() for p in raw.split(",") if p.strip())
    if raw.lower() in ("true", "false"):
        return raw.lower() == "true"
    try:
        return int(raw)
    except ValueError:
        return raw


def load_config(path: str, base: RunConfig | None = None) -> RunConfig:
    """Read "key = value" lines; '#' starts a comment; unknown keys are rejected."""
    cfg = base or RunConfig()
    overrides = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _FIELD_TYPES:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            overrides[key] = _coerce(key, value)
    return replace(cfg, **overrides)
