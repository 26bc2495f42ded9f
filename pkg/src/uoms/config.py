"""Run configuration and its INI file format.

Example::

    [run]
    datasets = data/wine.csv, data/glass.csv
    strategies = xb, em, mc-rho, hits, ens
    metrics = ap, roc, prec_at_k
    seed = 0
    jobs = 4
    out = runs/demo

    [strategy.ireos]
    clump_size = 10
    tol = 0.005

    [grid.knn]
    n_neighbors = 5, 10, 20
    method = largest, mean
"""

from __future__ import annotations

import ast
import configparser
from dataclasses import dataclass, field
from typing import Optional

from uoms.detectors.pool import GRIDS, canonical_family
from uoms.errors import ConfigError
from uoms.evaluation.metrics import METRICS
from uoms.strategies import REGISTRY, resolve

DEFAULT_STRATEGIES = tuple(REGISTRY)
DEFAULT_METRICS = ("ap", "roc", "prec_at_k")


@dataclass
class RunConfig:
    datasets: list = field(default_factory=list)
    families: Optional[list] = None  # None: every native family
    grids: Optional[dict] = None  # family -> grid override
    strategies: list = field(default_factory=lambda: list(DEFAULT_STRATEGIES))
    strategy_params: dict = field(default_factory=dict)
    metrics: list = field(default_factory=lambda: list(DEFAULT_METRICS))
    seed: int = 0
    out: str = "uoms-run"
    jobs: int = 1

    def __post_init__(self):
        self.strategies = resolve(self.strategies)
        for m in self.metrics:
            if m not in METRICS:
                raise ConfigError(f"unknown metric {m!r}; choose from {sorted(METRICS)}")
        unknown = set(self.strategy_params) - set(REGISTRY)
        if unknown:
            raise ConfigError(f"parameters given for unknown strategy {sorted(unknown)[0]!r}")
        if self.families is not None:
            self.families = [canonical_family(f) for f in self.families]
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")


def split_list(text) -> list:
    return [t.strip() for t in str(text).split(",") if t.strip()]


def _literal(text):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text.strip()


def _grid_override(family, section):
    base = GRIDS[family]
    names = [g[0] for g in base if g is not None]
    extra = set(section) - set(names)
    if extra:
        raise ConfigError(f"grid.{family.lower()}: unknown hyperparameter {sorted(extra)[0]!r}")
    out = []
    for g in base:
        if g is None:
            out.append(None)
            continue
        name, default = g
        values = tuple(_literal(v) for v in split_list(section[name])) if name in section else default
        if not values:
            raise ConfigError(f"grid.{family.lower()}.{name}: empty value list")
        out.append((name, values))
    return tuple(out)


def load_config(path, **overrides) -> RunConfig:
    """Read an INI run configuration; keyword overrides that are not None win."""
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    kw = {}
    if parser.has_section("run"):
        run = parser["run"]
        known = {"datasets", "families", "strategies", "metrics", "seed", "out", "jobs"}
        extra = set(run) - known
        if extra:
            raise ConfigError(f"[run]: unknown key {sorted(extra)[0]!r}")
        for key in ("datasets", "families", "strategies", "metrics"):
            if key in run:
                kw[key] = split_list(run[key])
        for key in ("seed", "jobs"):
            if key in run:
                try:
                    kw[key] = run.getint(key)
                except ValueError:
                    raise ConfigError(f"[run] {key} must be an integer") from None
        if "out" in run:
            kw["out"] = run["out"].strip()
    params, grids = {}, {}
    for sec in parser.sections():
        if sec.startswith("strategy."):
            params[sec.split(".", 1)[1].strip().lower()] = {k: _literal(v) for k, v in parser[sec].items()}
        elif sec.startswith("grid."):
            fam = canonical_family(sec.split(".", 1)[1])
            grids[fam] = _grid_override(fam, parser[sec])
        elif sec != "run":
            raise ConfigError(f"unknown config section [{sec}]")
    if params:
        kw["strategy_params"] = params
    if grids:
        kw["grids"] = {**GRIDS, **grids}
    kw.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**kw)
