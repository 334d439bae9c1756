"""Pipeline configuration, stored as a small INI file.

Every key has a default, so an empty file (or no file) is a valid
configuration; unknown sections or keys are rejected to catch typos.

    [roi]
    x_min = 0.3
    x_max = 12.0
    y_min = -2.5
    y_max = 2.5
    z_min = -2.6

    [clustering]
    min_pts = 5

    [features]
    slice_dz = 0.02
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass

from .clustering import DEFAULT_MIN_PTS
from .features import DEFAULT_SLICE_DZ
from .frames import DEFAULT_ROI, RoiConfig

_SCHEMA = {
    "roi": ("x_min", "x_max", "y_min", "y_max", "z_min"),
    "clustering": ("min_pts",),
    "features": ("slice_dz",),
}


@dataclass(frozen=True)
class PipelineConfig:
    roi: RoiConfig = DEFAULT_ROI
    min_pts: int = DEFAULT_MIN_PTS
    slice_dz: float = DEFAULT_SLICE_DZ

    def __post_init__(self):
        if self.min_pts < 2:
            raise ValueError(f"min_pts must be >= 2, got {self.min_pts}")
        if not self.slice_dz > 0:
            raise ValueError(f"slice_dz must be positive, got {self.slice_dz}")


DEFAULT_CONFIG = PipelineConfig()


def load_config(path: str) -> PipelineConfig:
    parser = configparser.ConfigParser()
    with open(path, "r", encoding="utf-8") as fh:
        parser.read_file(fh, source=path)
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ValueError(f"{path}: unknown section [{section}]")
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                raise ValueError(f"{path}: unknown key {key!r} in [{section}]")

    def num(section, key, default, conv):
        if parser.has_option(section, key):
            return conv(parser.get(section, key))
        return default

    roi = RoiConfig(
        x_min=num("roi", "x_min", DEFAULT_ROI.x_min, float),
        x_max=num("roi", "x_max", DEFAULT_ROI.x_max, float),
        y_min=num("roi", "y_min", DEFAULT_ROI.y_min, float),
        y_max=num("roi", "y_max", DEFAULT_ROI.y_max, float),
        z_min=num("roi", "z_min", DEFAULT_ROI.z_min, float),
    )
    return PipelineConfig(
        roi=roi,
        min_pts=num("clustering", "min_pts", DEFAULT_MIN_PTS, int),
        slice_dz=num("features", "slice_dz", DEFAULT_SLICE_DZ, float),
    )


def save_config(config: PipelineConfig, path: str) -> None:
    parser = configparser.ConfigParser()
    parser["roi"] = {
        "x_min": repr(config.roi.x_min),
        "x_max": repr(config.roi.x_max),
        "y_min": repr(config.roi.y_min),
        "y_max": repr(config.roi.y_max),
        "z_min": repr(config.roi.z_min),
    }
    parser["clustering"] = {"min_pts": str(config.min_pts)}
    parser["features"] = {"slice_dz": repr(config.slice_dz)}
    with open(path, "w", encoding="utf-8") as fh:
        parser.write(fh)
