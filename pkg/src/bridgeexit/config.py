"""Flat key = value run configurations.

One assignment per line, '#' starts a comment, keys are dotted identifiers,
values are scalars, comma-separated vectors, or semicolon-separated point
lists.  Every key is validated against the schema of the command being run
and unknown or malformed keys are reported with their line number before any
computation starts.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .exits import Boundary, Hyperplane, VerticalBarrier
from .geodesic import SolverOptions
from .model import (
    DiffusionModel,
    constant_model,
    grid_model_from_csv,
    hull_white_model,
)

__all__ = [
    "RawConfig",
    "ConfigView",
    "parse_config_text",
    "load_config",
    "model_from_view",
    "boundary_from_view",
    "solver_from_view",
    "endpoints_from_view",
    "t_list_from_view",
    "freeze_points_from_view",
]

_KEY_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z_][A-Za-z0-9_]*)*$")

_REQUIRED = object()


@dataclass(frozen=True)
class RawConfig:
    """Parsed assignments: key -> (raw value, 1-based line number)."""

    entries: dict


def parse_config_text(text: str) -> RawConfig:
    entries: dict[str, tuple[str, int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError("expected 'key = value'", lineno)
        key, _, val = body.partition("=")
        key = key.strip()
        val = val.strip()
        if not _KEY_RE.match(key):
            raise ConfigError(f"malformed key {key!r}", lineno)
        if key in entries:
            raise ConfigError(
                f"duplicate key {key!r} (first set on line {entries[key][1]})",
                lineno,
            )
        if val == "":
            raise ConfigError(f"empty value for {key!r}", lineno)
        entries[key] = (val, lineno)
    return RawConfig(entries)


def load_config(path: str) -> RawConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


class ConfigView:
    """Typed access to a RawConfig with consumed-key bookkeeping.

    finish() rejects any key the command never asked about, so typos fail
    loudly instead of silently falling back to defaults.
    """

    def __init__(self, raw: RawConfig):
        self._entries = dict(raw.entries)
        self._used: set[str] = set()

    def has(self, key: str) -> bool:
        return key in self._entries

    def lineno(self, key: str) -> int | None:
        ent = self._entries.get(key)
        return ent[1] if ent else None

    def _fetch(self, key: str, default):
        ent = self._entries.get(key)
        if ent is None:
            if default is _REQUIRED:
                raise ConfigError(f"missing required key {key!r}")
            return None
        self._used.add(key)
        return ent

    def get_str(self, key: str, default=_REQUIRED, choices=None) -> str | None:
        ent = self._fetch(key, default)
        if ent is None:
            return default if default is not _REQUIRED else None
        val, lineno = ent
        if choices is not None and val not in choices:
            raise ConfigError(
                f"{key} must be one of {', '.join(choices)}; got {val!r}", lineno
            )
        return val

    def get_float(self, key: str, default=_REQUIRED) -> float | None:
        ent = self._fetch(key, default)
        if ent is None:
            return default if default is not _REQUIRED else None
        val, lineno = ent
        try:
            out = float(val)
        except ValueError:
            raise ConfigError(f"{key} must be a number; got {val!r}", lineno)
        if math.isnan(out):
            raise ConfigError(f"{key} must not be NaN", lineno)
        return out

    def get_int(self, key: str, default=_REQUIRED) -> int | None:
        ent = self._fetch(key, default)
        if ent is None:
            return default if default is not _REQUIRED else None
        val, lineno = ent
        try:
            return int(val)
        except ValueError:
            raise ConfigError(f"{key} must be an integer; got {val!r}", lineno)

    def get_bool(self, key: str, default=_REQUIRED) -> bool | None:
        ent = self._fetch(key, default)
        if ent is None:
            return default if default is not _REQUIRED else None
        val, lineno = ent
        low = val.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ConfigError(f"{key} must be true or false; got {val!r}", lineno)

    def get_floats(self, key: str, default=_REQUIRED) -> np.ndarray | None:
        ent = self._fetch(key, default)
        if ent is None:
            return default if default is not _REQUIRED else None
        val, lineno = ent
        try:
            out = np.array([float(p) for p in val.split(",")], dtype=float)
        except ValueError:
            raise ConfigError(
                f"{key} must be a comma-separated list of numbers; got {val!r}",
                lineno,
            )
        if np.isnan(out).any():
            raise ConfigError(f"{key} must not contain NaN", lineno)
        return out

    def get_points(self, key: str, default=_REQUIRED) -> list | None:
        """Semicolon-separated list of comma-separated points."""
        ent = self._fetch(key, default)
        if ent is None:
            return default if default is not _REQUIRED else None
        val, lineno = ent
        pts = []
        for chunk in val.split(";"):
            chunk = chunk.strip()
            if not chunk:
                continue
            try:
                pts.append(np.array([float(p) for p in chunk.split(",")]))
            except ValueError:
                raise ConfigError(
                    f"{key}: could not parse point {chunk!r}", lineno
                )
        if not pts:
            raise ConfigError(f"{key} lists no points", lineno)
        dims = {p.shape[0] for p in pts}
        if len(dims) != 1:
            raise ConfigError(f"{key}: points have mixed dimensions", lineno)
        return pts

    def finish(self) -> None:
        leftover = set(self._entries) - self._used
        if leftover:
            key = min(leftover, key=lambda k: self._entries[k][1])
            raise ConfigError(f"unknown key {key!r}", self._entries[key][1])


# ---- Builders ---- #

MODEL_KINDS = ("constant", "hull_white_simple", "hull_white", "custom_grid")


def model_from_view(view: ConfigView) -> DiffusionModel:
    kind = view.get_str("model.kind", choices=MODEL_KINDS)
    if kind == "constant":
        flat = view.get_floats("model.sigma")
        d = int(round(math.sqrt(len(flat))))
        if d * d != len(flat):
            raise ConfigError(
                f"model.sigma must list a square matrix row-major; "
                f"got {len(flat)} entries",
                view.lineno("model.sigma"),
            )
        complete = view.get_bool("model.complete", default=True)
        try:
            return constant_model(flat.reshape(d, d), complete=complete)
        except Exception as exc:
            raise ConfigError(f"model.sigma: {exc}", view.lineno("model.sigma"))
    if kind == "hull_white_simple":
        return hull_white_model()
    if kind == "hull_white":
        sv = view.get_float("model.sigma_vol", default=1.0)
        rho = view.get_float("model.rho", default=0.0)
        b = view.get_float("model.b", default=0.0)
        mu = view.get_float("model.mu", default=0.0)
        try:
            return hull_white_model(b=b, mu=mu, sigma_vol=sv, rho=rho)
        except Exception as exc:
            raise ConfigError(str(exc), view.lineno("model.sigma_vol"))
    path = view.get_str("model.grid_csv")
    complete = view.get_bool("model.complete", default=True)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(
            f"model.grid_csv: cannot read {path!r} ({exc})",
            view.lineno("model.grid_csv"),
        )
    try:
        return grid_model_from_csv(text, complete=complete)
    except Exception as exc:
        raise ConfigError(
            f"model.grid_csv: {exc}", view.lineno("model.grid_csv")
        )


def boundary_from_view(view: ConfigView, dim: int,
                       required: bool = False) -> Boundary | None:
    kind = view.get_str("barrier.kind", default=None,
                        choices=("vertical", "hyperplane"))
    if kind is None:
        if required:
            raise ConfigError("this command needs a barrier.kind")
        return None
    if kind == "vertical":
        if dim != 2:
            raise ConfigError(
                "barrier.kind = vertical needs a two-dimensional model",
                view.lineno("barrier.kind"),
            )
        return VerticalBarrier(view.get_float("barrier.x0"))
    normal = view.get_floats("barrier.normal")
    if normal.shape[0] != dim:
        raise ConfigError(
            f"barrier.normal has dimension {normal.shape[0]}, model has {dim}",
            view.lineno("barrier.normal"),
        )
    offset = view.get_float("barrier.offset")
    try:
        return Hyperplane(normal, offset)
    except ValueError as exc:
        raise ConfigError(str(exc), view.lineno("barrier.normal"))


def solver_from_view(view: ConfigView) -> SolverOptions:
    n = view.get_int("solver.n", default=200)
    grad_tol = view.get_float("solver.grad_tol", default=None)
    max_iter = view.get_int("solver.max_iter", default=5000)
    multi_start = view.get_int("solver.multi_start", default=1)
    coarse_init = view.get_bool("solver.coarse_init", default=True)
    try:
        return SolverOptions(
            n=n,
            grad_tol=grad_tol,
            max_iter=max_iter,
            multi_start=multi_start,
            coarse_init=coarse_init,
        )
    except ValueError as exc:
        raise ConfigError(f"solver options: {exc}")


def endpoints_from_view(view: ConfigView, dim: int):
    x = view.get_floats("x")
    y = view.get_floats("y")
    for name, p in (("x", x), ("y", y)):
        if p.shape[0] != dim:
            raise ConfigError(
                f"{name} has dimension {p.shape[0]}, model has {dim}",
                view.lineno(name),
            )
    return x, y


def t_list_from_view(view: ConfigView, required: bool = False):
    if not view.has("t"):
        if required:
            raise ConfigError("this command needs a list of horizons t")
        return ()
    ts = view.get_floats("t")
    if (ts <= 0.0).any():
        raise ConfigError("every horizon t must be positive", view.lineno("t"))
    return tuple(float(t) for t in ts)


def freeze_points_from_view(view: ConfigView, dim: int):
    if not view.has("freeze"):
        return []
    pts = view.get_points("freeze")
    if pts[0].shape[0] != dim:
        raise ConfigError(
            f"freeze points have dimension {pts[0].shape[0]}, model has {dim}",
            view.lineno("freeze"),
        )
    return pts
