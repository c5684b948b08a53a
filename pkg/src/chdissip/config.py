"""Run configuration: one JSON document for every config-driven subcommand.

::

    {
      "initial": {"preset": "peakon_antipeakon", "D": 1.0, "t_star": 1.0},
      "atoms":   [[3.0, 0.5]],
      "solver":  {"dt": 1e-3, "t_end": 2.0, "eps_break": 1e-8,
                  "N": 4096, "xi_domain": [-20.0, 20.0]},
      "output":  {"times": [0.0, 0.5, 1.5], "formats": ["csv", "json"],
                  "directory": "out"}
    }

Presets: ``zero``; ``peakon`` (``c``, ``x0``); ``peakon_antipeakon``
(``D`` and ``t_star``, or ``p0`` and ``q0``); ``file`` (``path`` to an
Eulerian JSON document, relative paths resolved against the config file).
``xi_domain`` is the x-interval of the initial grid; the label axis is
its image under ``x -> x + nu((-inf, x))``.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .eulerian import EulerianState
from .evolution import SolverConfig
from .oracle import PeakonAntipeakonParams, exact_u, params_from_Dtstar, params_from_initial


class ConfigError(ValueError):
    pass


PRESETS = ("zero", "peakon", "peakon_antipeakon", "file")
FORMATS = ("csv", "json")

DEFAULTS: dict[str, Any] = {
    "initial": {"preset": "zero"},
    "atoms": [],
    "solver": {"dt": 1e-3, "t_end": 2.0, "eps_break": 1e-8, "N": 4096,
               "xi_domain": [-20.0, 20.0]},
    "output": {"times": None, "formats": ["csv", "json"], "directory": "out"},
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _num(d: dict, key: str, where: str) -> float:
    try:
        v = float(d[key])
    except KeyError:
        raise ConfigError(f"{where}: missing key {key!r}") from None
    except (TypeError, ValueError):
        raise ConfigError(f"{where}.{key} must be a number") from None
    if not np.isfinite(v):
        raise ConfigError(f"{where}.{key} must be finite")
    return v


def grid_with_nodes(a: float, b: float, n: int, kinks=()) -> np.ndarray:
    """``n`` nodes on ``[a, b]`` with every kink inside ``(a, b)`` a node.

    The interval is cut at the kinks and each piece gets a uniform grid
    with its share of the cells, so spacing stays nearly uniform.
    """
    cuts = np.unique([a, b, *[k for k in kinks if a < k < b]])
    cells = n - 1
    lengths = np.diff(cuts)
    share = np.maximum(1, np.round(lengths / (b - a) * cells).astype(int))
    share[np.argmax(lengths)] += cells - share.sum()
    pieces = [np.linspace(lo, hi, m + 1)[:-1] for lo, hi, m in zip(cuts[:-1], cuts[1:], share)]
    return np.concatenate(pieces + [[b]])


@dataclass(frozen=True)
class RunConfig:
    raw: dict
    base_dir: Path = field(default_factory=Path.cwd)

    # -- construction ----------------------------------------------------
    @classmethod
    def from_dict(cls, d: dict, base_dir: Path | None = None) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(d) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
        cfg = cls(_merge(DEFAULTS, d), Path(base_dir) if base_dir else Path.cwd())
        cfg.check()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"config file not found: {path}")
        try:
            d = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(d, path.resolve().parent)

    def check(self) -> None:
        ini = self.raw["initial"]
        if not isinstance(ini, dict) or ini.get("preset") not in PRESETS:
            raise ConfigError(f"initial.preset must be one of {PRESETS}")
        sol = self.raw["solver"]
        n = sol.get("N")
        if not isinstance(n, int) or n < 8:
            raise ConfigError("solver.N must be an integer >= 8")
        dom = sol.get("xi_domain")
        if not (isinstance(dom, list) and len(dom) == 2 and float(dom[0]) < float(dom[1])):
            raise ConfigError("solver.xi_domain must be [lo, hi] with lo < hi")
        fmts = self.raw["output"]["formats"]
        if isinstance(fmts, str):
            fmts = [fmts]
        if not fmts or any(f not in FORMATS for f in fmts):
            raise ConfigError(f"output.formats must be a subset of {FORMATS}")
        for a in self.raw["atoms"]:
            if not (isinstance(a, (list, tuple)) and len(a) == 2):
                raise ConfigError("atoms must be [position, mass] pairs")
        # builds and validates the solver settings (dt, t_end, times)
        self.solver_config()

    # -- views -----------------------------------------------------------
    def to_dict(self) -> dict:
        """The settings that determine the results; the output directory is left out."""
        d = copy.deepcopy(self.raw)
        d["output"].pop("directory", None)
        return d

    def sha256(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    @property
    def formats(self) -> tuple[str, ...]:
        f = self.raw["output"]["formats"]
        return (f,) if isinstance(f, str) else tuple(f)

    @property
    def directory(self) -> Path:
        d = Path(self.raw["output"]["directory"])
        return d if d.is_absolute() else self.base_dir / d

    def with_overrides(self, **out) -> "RunConfig":
        raw = copy.deepcopy(self.raw)
        raw["output"].update({k: v for k, v in out.items() if v is not None})
        return RunConfig.from_dict(raw, self.base_dir)

    def solver_config(self) -> SolverConfig:
        sol = self.raw["solver"]
        dt = _num(sol, "dt", "solver")
        if dt <= 0:
            raise ConfigError("dt must be positive")
        t_end = _num(sol, "t_end", "solver")
        times = self.raw["output"]["times"]
        if times is None:
            times = [0.0, t_end]
        try:
            return SolverConfig(dt=dt, t_end=t_end, eps_break=_num(sol, "eps_break", "solver"),
                                output_times=tuple(float(t) for t in times))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def pap_params(self) -> PeakonAntipeakonParams:
        ini = self.raw["initial"]
        try:
            if "p0" in ini:
                return params_from_initial(_num(ini, "p0", "initial"), _num(ini, "q0", "initial"))
            return params_from_Dtstar(float(ini.get("D", 1.0)), float(ini.get("t_star", 1.0)))
        except ValueError as exc:
            raise ConfigError(f"invalid peakon-antipeakon parameters: {exc}") from exc

    def initial_state(self) -> EulerianState:
        ini = self.raw["initial"]
        sol = self.raw["solver"]
        a, b = (float(v) for v in sol["xi_domain"])
        n = int(sol["N"])
        atoms = tuple((float(p), float(m)) for p, m in self.raw["atoms"])
        preset = ini["preset"]
        if preset == "zero":
            x = np.linspace(a, b, n)
            return EulerianState(x, np.zeros_like(x), atoms)
        if preset == "peakon":
            c = float(ini.get("c", 1.0))
            x0 = float(ini.get("x0", 0.0))
            x = grid_with_nodes(a, b, n, [x0])
            return EulerianState(x, c * np.exp(-np.abs(x - x0)), atoms)
        if preset == "peakon_antipeakon":
            pr = self.pap_params()
            x = grid_with_nodes(a, b, n, [pr.q0, -pr.q0])
            return EulerianState(x, exact_u(pr, 0.0, x), atoms)
        path = Path(ini.get("path", ""))
        if not path.is_absolute():
            path = self.base_dir / path
        if not path.is_file():
            raise FileNotFoundError(f"initial data file not found: {path}")
        state = EulerianState.from_dict(json.loads(path.read_text()))
        return state.with_atoms(tuple(state.atoms) + atoms) if atoms else state
