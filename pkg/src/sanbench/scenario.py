"""Scenario configuration: INI files with [scenario], [workload], [algorithms] and [ratio] sections."""
from __future__ import annotations

import ast
import configparser
import os
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import demand
from .demand import DemandSequence, Generator
from .estimators import REGISTRY, make_algorithm

BUNDLED = ("tau-bst", "grid-vs-expander", "sat-entropy", "static-splay", "dynamic-splay",
           "learning-splay", "static-self")


class ConfigError(ValueError):
    """Invalid scenario configuration."""


def _value(text: str):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def _ints(text) -> list[int]:
    if isinstance(text, int):
        return [text]
    out = []
    for part in str(text).replace(",", " ").split():
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


@dataclass
class ScenarioConfig:
    scenario_id: str
    topology: str
    workload: dict
    algorithms: list[str] = field(default_factory=list)
    algorithm_params: dict = field(default_factory=dict)
    seeds: list[int] = field(default_factory=lambda: [0])
    ratio: dict = field(default_factory=dict)
    source: str = ""

    def algorithm(self, name: str):
        return make_algorithm(name, **self.algorithm_params.get(name, {}))

    def items(self):
        """Flat (key, value) view used for CSV metadata headers."""
        cp = configparser.ConfigParser(interpolation=None)
        cp.read_string(self.source)
        for section in cp.sections():
            for key, value in cp.items(section):
                yield f"{section}.{key}", value


def parse_config(text: str, base_dir: str = ".") -> ScenarioConfig:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    if not cp.has_section("scenario") or not cp.has_section("workload"):
        raise ConfigError("config needs [scenario] and [workload] sections")
    sc = cp["scenario"]
    scenario_id = sc.get("id")
    if not scenario_id:
        raise ConfigError("[scenario] id is required")
    topology = sc.get("topology", "bst")
    if topology not in ("bst", "network"):
        raise ConfigError(f"unknown topology class {topology!r}")
    workload = {k: _value(v) for k, v in cp["workload"].items()}
    if "kind" not in workload:
        raise ConfigError("[workload] kind is required")
    if workload["kind"] == "trace":
        path = workload.get("path")
        if not path:
            raise ConfigError("trace workloads need a path")
        path = os.path.join(base_dir, str(path))
        if not os.path.exists(path):
            raise ConfigError(f"trace file {path} does not exist")
        workload["path"] = path
    names = []
    if cp.has_section("algorithms"):
        names = [s.strip() for s in cp["algorithms"].get("names", "").split(",") if s.strip()]
    for name in names:
        if name not in REGISTRY:
            raise ConfigError(f"unknown algorithm {name!r}")
    params = {}
    for section in cp.sections():
        if section.startswith("algorithm."):
            params[section.split(".", 1)[1]] = {k: _value(v) for k, v in cp[section].items()}
    seeds = _ints(cp["run"].get("seeds", "0")) if cp.has_section("run") else [0]
    ratio = {k: _value(v) for k, v in cp["ratio"].items()} if cp.has_section("ratio") else {}
    cfg = ScenarioConfig(scenario_id, topology, workload, names, params, seeds, ratio, text)
    for name in names:
        try:
            alg = cfg.algorithm(name)
        except TypeError as exc:
            raise ConfigError(f"bad parameters for {name}: {exc}") from None
        if alg.topology != topology:
            raise ConfigError(f"{name} does not run on {topology} topologies")
    return cfg


def load_config(path) -> ScenarioConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, os.path.dirname(os.path.abspath(path)))


def bundled_text(name: str) -> str:
    if name not in BUNDLED:
        raise ConfigError(f"unknown scenario {name!r}; bundled: {', '.join(BUNDLED)}")
    return resources.files("sanbench").joinpath("scenarios", f"{name}.ini").read_text("utf-8")


def load_bundled(name: str) -> ScenarioConfig:
    return parse_config(bundled_text(name))


# -- workloads -----------------------------------------------------------------------

def _need(params: dict, *keys):
    missing = [k for k in keys if k not in params]
    if missing:
        raise ConfigError(f"workload {params.get('kind')!r} needs {', '.join(missing)}")
    return [params[k] for k in keys]


def make_generator(params: dict, seed: int) -> Generator:
    kind = params["kind"]
    if kind == "zipf-keys":
        n, exponent = _need(params, "n", "exponent")
        perm = np.random.default_rng(seed).permutation(n) if params.get("shuffle", True) else np.arange(n)
        return demand.key_generator(n, demand.zipf_probs(n, exponent)[perm], seed=seed)
    if kind == "zipf-pairs":
        n, exponent = _need(params, "n", "exponent")
        rng = np.random.default_rng(seed)
        p = demand.zipf_probs(n, exponent)
        return demand.product_generator(p[rng.permutation(n)], p[rng.permutation(n)], seed=seed)
    raise ConfigError(f"workload kind {kind!r} is not a generator")


def build_workload(params: dict, seed: int = 0) -> DemandSequence:
    kind = params.get("kind")
    try:
        if kind == "tau":
            k, r = _need(params, "k", "r")
            return demand.make_tau_workload(k, r)
        if kind == "grid":
            (side,) = _need(params, "side")
            return demand.grid_trace(side, params.get("passes", 1), params.get("width"))
        if kind == "trace":
            return demand.read_trace(params["path"])
        if kind in ("zipf-keys", "zipf-pairs"):
            (m,) = _need(params, "m")
            return demand.sample(make_generator(params, seed), m)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid workload parameters: {exc}") from None
    raise ConfigError(f"unknown workload kind {kind!r}")


def ratio_instances(cfg: ScenarioConfig, kind: str, seed: int):
    """Instances for a ratio run: DemandSequences, or Generators for ``learning``.

    Instance i draws its size and skew from ``[ratio]`` ranges using the
    i-th child of ``SeedSequence(seed)``.
    """
    r = cfg.ratio
    count = int(r.get("count", 10))
    n_min = int(r.get("n_min", cfg.workload.get("n", 16)))
    n_max = int(r.get("n_max", n_min))
    e_min = float(r.get("exponent_min", cfg.workload.get("exponent", 1.0)))
    e_max = float(r.get("exponent_max", e_min))
    m = int(r.get("m", cfg.workload.get("m", 1000)))
    wkind = "zipf-keys" if cfg.topology == "bst" else "zipf-pairs"
    out = []
    for child in np.random.SeedSequence(seed).spawn(count):
        rng = np.random.default_rng(child)
        params = {
            "kind": wkind,
            "n": int(rng.integers(n_min, n_max + 1)),
            "exponent": float(rng.uniform(e_min, e_max)),
            "m": m,
        }
        inst_seed = int(child.generate_state(1)[0])
        gen = make_generator(params, inst_seed)
        out.append(gen if kind == "learning" else demand.sample(gen, m))
    return out


def ratio_lengths(cfg: ScenarioConfig) -> tuple[int, ...]:
    lengths = cfg.ratio.get("lengths")
    if lengths is None:
        return (100, 1000, 10_000)
    return tuple(_ints(lengths if isinstance(lengths, (int, str)) else ",".join(map(str, lengths))))
