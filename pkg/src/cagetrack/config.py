"""Flat dotted-key configuration shared by the CLI and the service.

Config files are plain text, one ``key = value`` per line, ``#`` comments.
Every key has a registered default and type; unknown keys and bad values
raise :class:`ConfigError` naming the key. The environment variable
``CAGETRACK_CONFIG`` names a default config file for the CLI.

The Kalman noise weights, the tracker lifecycle values, and the association
thresholds are lineage conventions with no measured source; treat them as
tunables.
"""

from __future__ import annotations

import os
from typing import Mapping

import numpy as np

from .errors import ConfigError
from .kalman import KalmanParams
from .simulator import SceneConfig
from .tracker import TrackerParams

ENV_CONFIG = "CAGETRACK_CONFIG"

#: key -> (default, type). ``matrix`` values hold 5x5 rows separated by ';',
#: entries by whitespace, or the shorthand ``identity`` / ``diag:<p>``.
DEFAULTS: dict[str, tuple[object, str]] = {
    "io.embedding_dim": (128, "int"),
    "io.fps": (30.0, "float"),
    "kalman.std_weight_position": (1.0 / 20.0, "float"),
    "kalman.std_weight_velocity": (1.0 / 160.0, "float"),
    "kalman.aspect_std": (1e-2, "float"),
    "kalman.aspect_vel_std": (1e-5, "float"),
    "assoc.lambda": (0.9, "float"),
    "assoc.ema_alpha": (0.9, "float"),
    "assoc.match_threshold": (0.7, "float"),
    "assoc.appearance_gate": (0.4, "float"),
    "tracker.n_init": (3, "int"),
    "tracker.max_age": (30, "int"),
    "mousemap.gap_max": (90, "int"),
    "mousemap.dist_max_ratio": (0.5, "float"),
    "mousemap.windowed": (0, "int"),
    "mousemap.window_minutes": (1.0, "float"),
    "mousemap.continuity_bonus": (0.1, "float"),
    "eval.iou_threshold": (0.5, "float"),
    "scene.n_mice": (3, "int"),
    "scene.fps": (30.0, "float"),
    "scene.duration_s": (60.0, "float"),
    "scene.cage_w": (640.0, "float"),
    "scene.cage_h": (480.0, "float"),
    "scene.box_w": (70.0, "float"),
    "scene.box_h": (50.0, "float"),
    "scene.speed_mean": (3.0, "float"),
    "scene.speed_std": (1.0, "float"),
    "scene.turn_std": (0.35, "float"),
    "scene.miss_rate": (0.0, "float"),
    "scene.box_jitter_std": (0.0, "float"),
    "scene.conf_mean": (1.0, "float"),
    "scene.conf_std": (0.0, "float"),
    "scene.occlusion_iou": (1.0, "float"),
    "scene.no_read_rate": (0.33, "float"),
    "scene.emb_dim": (128, "int"),
    "scene.emb_sep": (2.0, "float"),
    "scene.seed": (0, "int"),
    "scene.confusion": ("identity", "matrix"),
}


def _coerce(key: str, raw: object) -> object:
    kind = DEFAULTS[key][1]
    text = str(raw).strip()
    try:
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
    except ValueError as exc:
        raise ConfigError(f"cannot parse {text!r} as {kind}", key=key) from exc
    return text


class Config:
    """Immutable-by-convention mapping of dotted keys to typed values."""

    def __init__(self, values: Mapping[str, object] | None = None):
        self._values = {k: v for k, (v, _) in DEFAULTS.items()}
        if values:
            for key, raw in values.items():
                self.set(key, raw)

    def set(self, key: str, raw: object) -> None:
        if key not in DEFAULTS:
            raise ConfigError("unknown configuration key", key=key)
        self._values[key] = _coerce(key, raw)

    def get(self, key: str) -> object:
        if key not in DEFAULTS:
            raise ConfigError("unknown configuration key", key=key)
        return self._values[key]

    def __getitem__(self, key: str) -> object:
        return self.get(key)

    def as_dict(self) -> dict[str, object]:
        return dict(self._values)

    def copy(self) -> "Config":
        out = Config()
        out._values = dict(self._values)
        return out

    # -- construction helpers ---------------------------------------------

    @classmethod
    def load(cls, path: str | os.PathLike | None = None, overrides: Mapping[str, object] | None = None) -> "Config":
        """Defaults, then an optional file, then explicit overrides.

        With no path given, ``$CAGETRACK_CONFIG`` is consulted.
        """
        cfg = cls()
        if path is None:
            path = os.environ.get(ENV_CONFIG) or None
        if path is not None:
            cfg.update_from_file(path)
        if overrides:
            for key, raw in overrides.items():
                cfg.set(key, raw)
        return cfg

    def update_from_file(self, path: str | os.PathLike) -> None:
        try:
            with open(path, "r", encoding="utf-8") as f:
                text = f.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        for line_no, line in enumerate(text.splitlines(), start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError(f"line {line_no} is not 'key = value': {stripped!r}")
            key, _, value = stripped.partition("=")
            self.set(key.strip(), value.strip())

    # -- typed views -------------------------------------------------------

    def tracker_params(self) -> TrackerParams:
        return TrackerParams(
            n_init=self["tracker.n_init"],
            max_age=self["tracker.max_age"],
            fuse_lambda=self["assoc.lambda"],
            ema_alpha=self["assoc.ema_alpha"],
            match_threshold=self["assoc.match_threshold"],
            appearance_gate=self["assoc.appearance_gate"],
            kalman=KalmanParams(
                std_weight_position=self["kalman.std_weight_position"],
                std_weight_velocity=self["kalman.std_weight_velocity"],
                aspect_std=self["kalman.aspect_std"],
                aspect_vel_std=self["kalman.aspect_vel_std"],
            ),
        )

    def scene_config(self) -> SceneConfig:
        return SceneConfig(
            n_mice=self["scene.n_mice"],
            fps=self["scene.fps"],
            duration_s=self["scene.duration_s"],
            cage_w=self["scene.cage_w"],
            cage_h=self["scene.cage_h"],
            box_w=self["scene.box_w"],
            box_h=self["scene.box_h"],
            speed_mean=self["scene.speed_mean"],
            speed_std=self["scene.speed_std"],
            turn_std=self["scene.turn_std"],
            miss_rate=self["scene.miss_rate"],
            box_jitter_std=self["scene.box_jitter_std"],
            conf_mean=self["scene.conf_mean"],
            conf_std=self["scene.conf_std"],
            occlusion_iou=self["scene.occlusion_iou"],
            confusion=parse_confusion(str(self["scene.confusion"])),
            no_read_rate=self["scene.no_read_rate"],
            emb_dim=self["scene.emb_dim"],
            emb_sep=self["scene.emb_sep"],
            seed=self["scene.seed"],
        )


def parse_confusion(text: str) -> np.ndarray:
    """Parse the ``scene.confusion`` value into a 5x5 matrix."""
    text = text.strip()
    if text == "identity":
        return np.eye(5)
    if text.startswith("diag:"):
        try:
            diag = float(text.split(":", 1)[1])
        except ValueError as exc:
            raise ConfigError("diag:<p> needs a number", key="scene.confusion") from exc
        if not 0.0 < diag <= 1.0:
            raise ConfigError(f"diagonal {diag} outside (0, 1]", key="scene.confusion")
        off = (1.0 - diag) / 4.0
        m = np.full((5, 5), off)
        np.fill_diagonal(m, diag)
        return m
    rows = [r.strip() for r in text.split(";") if r.strip()]
    try:
        m = np.array([[float(v) for v in row.split()] for row in rows])
    except ValueError as exc:
        raise ConfigError("matrix entries must be numbers", key="scene.confusion") from exc
    if m.shape != (5, 5):
        raise ConfigError(f"matrix shape {m.shape}, expected 5x5", key="scene.confusion")
    return m


def format_confusion(m: np.ndarray) -> str:
    return " ; ".join(" ".join(repr(float(v)) for v in row) for row in m)
