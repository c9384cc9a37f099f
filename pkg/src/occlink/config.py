"""TOML configuration: camera timing and link settings.

A user file only needs the keys it changes; everything else comes from
the packaged ``default.toml``. Sweep grids reuse the same keys: a
``[sweep]`` table plus one ``[[point]]`` table per grid point, whose flat
keys override either section.
"""
from __future__ import annotations

import os
import sys
from dataclasses import fields, replace
from importlib import resources
from typing import Any, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import codec
from .errors import InvalidArgument
from .linklab import TrialConfig
from .rscam import CameraConfig

CAMERA_KEYS = {f.name for f in fields(CameraConfig)}
LINK_KEYS = {"t_bit", "levels", "n_frames", "t0_jitter", "clock_hint", "payloads", "t0"}


def _read(path: str | os.PathLike) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise InvalidArgument(f"{os.fspath(path)}: {exc}") from None


def default_config() -> dict:
    text = resources.files("occlink").joinpath("default.toml").read_text()
    return tomllib.loads(text)


def load_config(path: Optional[str | os.PathLike] = None) -> dict:
    """Defaults overlaid with ``path`` (section by section)."""
    cfg = default_config()
    if path is None:
        return cfg
    user = _read(path)
    for section, values in user.items():
        if section not in ("camera", "link"):
            raise InvalidArgument(f"unknown config section [{section}]")
        allowed = CAMERA_KEYS if section == "camera" else LINK_KEYS
        unknown = set(values) - allowed
        if unknown:
            raise InvalidArgument(f"unknown keys in [{section}]: {', '.join(sorted(unknown))}")
        cfg[section].update(values)
    return cfg


def _coerce_camera(values: dict) -> dict:
    out = dict(values)
    if out.get("roi") is not None:
        out["roi"] = tuple(int(v) for v in out["roi"])
    return out


def camera_config(cfg: dict) -> CameraConfig:
    return CameraConfig(**_coerce_camera(cfg["camera"]))


def _payloads(value: Any) -> tuple[int, ...]:
    items = [value] if isinstance(value, (str, int)) else list(value)
    return tuple(codec.parse_hex(v) if isinstance(v, str) else int(v) for v in items)


def trial_config(cfg: dict, **overrides) -> TrialConfig:
    link = dict(cfg["link"])
    kw: dict[str, Any] = dict(
        t_bit=float(link["t_bit"]),
        levels=tuple(float(v) for v in link["levels"]),
        n_frames=int(link["n_frames"]),
        t0_jitter=bool(link["t0_jitter"]),
        clock_hint=bool(link["clock_hint"]),
        camera=camera_config(cfg),
    )
    if "payloads" in link:
        kw["payloads"] = _payloads(link["payloads"])
    if "t0" in link:
        kw["t0"] = float(link["t0"])
    kw.update(overrides)
    return TrialConfig(**kw)


def load_grid(path: str | os.PathLike, base: Optional[dict] = None) -> tuple[list[TrialConfig], dict]:
    """Parse a grid file into trial configs and its ``[sweep]`` settings."""
    doc = _read(path)
    base = base if base is not None else default_config()
    settings = dict(doc.get("sweep", {}))
    points = doc.get("point", [])
    if not points:
        raise InvalidArgument("grid file has no [[point]] tables")
    grid = []
    for k, point in enumerate(points):
        unknown = set(point) - CAMERA_KEYS - LINK_KEYS
        if unknown:
            raise InvalidArgument(f"point {k}: unknown keys {', '.join(sorted(unknown))}")
        merged = {
            "camera": {**base["camera"], **{a: b for a, b in point.items() if a in CAMERA_KEYS}},
            "link": {**base["link"], **{a: b for a, b in point.items() if a in LINK_KEYS}},
        }
        grid.append(trial_config(merged))
    return grid, settings


def with_noise(cfg: TrialConfig, sigma: float) -> TrialConfig:
    return replace(cfg, camera=replace(cfg.camera, noise_sigma=float(sigma)))
