"""CSV and JSON formats used by the command-line tools.

Every CSV written here starts with the format-version comment ``# fdrlab-v1``
so downstream scripts can assert compatibility; readers verify the tag when
one is present. Floats are written at full round-trip precision, which keeps
reruns byte-identical.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace

from .gamma import parse_gamma
from .simulate import (
    ASYNC_KIND,
    DEFAULT_PI_GRID,
    AlgorithmSpec,
    GaussianModelConfig,
    MetricRow,
    default_spec,
)

FORMAT_TAG = "fdrlab-v1"


def _check_tag(line: str) -> None:
    tag = line[1:].strip()
    if tag and tag != FORMAT_TAG:
        raise ValueError(f"unsupported file format {tag!r} (expected {FORMAT_TAG!r})")


def read_pvalue_csv(fh):
    """Parse ``index,p_value[,finish_time]`` rows into plain tuples.

    Returns (rows, has_finish) where rows are (index, p, finish_time|None).
    Indices must be contiguous from 1. Raises ValueError naming the offending
    line on any malformed content.
    """
    reader = csv.reader(fh)
    header = None
    for row in reader:
        if not row or (row[0].startswith("#") and len(row) == 1):
            if row:
                _check_tag(row[0])
            continue
        header = [c.strip().lower() for c in row]
        break
    if header is None:
        raise ValueError("line 1: missing header 'index,p_value[,finish_time]'")
    if header[:2] != ["index", "p_value"] or (len(header) == 3 and header[2] != "finish_time") or len(header) > 3:
        raise ValueError(f"line {reader.line_num}: bad header {','.join(header)!r}")
    has_finish = len(header) == 3
    rows = []
    expected = 1
    for row in reader:
        line = reader.line_num
        if not row or (row[0].startswith("#") and len(row) == 1):
            continue
        if len(row) != len(header):
            raise ValueError(f"line {line}: expected {len(header)} fields, got {len(row)}")
        try:
            idx = int(row[0])
        except ValueError:
            raise ValueError(f"line {line}: bad index {row[0]!r}") from None
        if idx != expected:
            raise ValueError(f"line {line}: indices must be contiguous from 1; expected {expected}, got {idx}")
        try:
            p = float(row[1])
        except ValueError:
            raise ValueError(f"line {line}: bad p_value {row[1]!r}") from None
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"line {line}: p_value {p!r} outside [0, 1]")
        finish = None
        if has_finish:
            try:
                finish = int(row[2])
            except ValueError:
                raise ValueError(f"line {line}: bad finish_time {row[2]!r}") from None
            if finish < idx:
                raise ValueError(f"line {line}: finish_time {finish} precedes index {idx}")
        rows.append((idx, p, finish))
        expected += 1
    return rows, has_finish


def write_decisions_csv(fh, decisions) -> None:
    fh.write(f"# {FORMAT_TAG}\n")
    fh.write("index,alpha,selected,candidate,rejected\n")
    for d in decisions:
        fh.write(f"{d.index},{float(d.alpha_t)!r},{int(d.selected)},{int(d.candidate)},{int(d.rejected)}\n")


def write_results_csv(fh, rows: list[MetricRow]) -> None:
    """Long-format campaign results: algorithm,pi_A,mu_N,mu_A,metric,value,stderr.

    Power rows are omitted for runs where no trial drew a non-null (the
    power ratio is undefined there).
    """
    fh.write(f"# {FORMAT_TAG}\n")
    fh.write("algorithm,pi_A,mu_N,mu_A,metric,value,stderr\n")
    for r in rows:
        key = f"{r.algorithm},{float(r.model.pi_alt)!r},{float(r.model.mu_null)!r},{float(r.model.mu_alt)!r}"
        fh.write(f"{key},fdr,{float(r.fdr)!r},{float(r.fdr_se)!r}\n")
        if r.power is not None:
            se = 0.0 if r.power_se is None else float(r.power_se)
            fh.write(f"{key},power,{float(r.power)!r},{se!r}\n")


def write_heatmap_csv(fh, surface, power=None) -> None:
    """Tuning surface rows: theta,tau,g_of_F[,empirical_power]."""
    fh.write(f"# {FORMAT_TAG}\n")
    fh.write("theta,tau,g_of_F,empirical_power\n" if power is not None else "theta,tau,g_of_F\n")
    for i, theta in enumerate(surface.thetas):
        for j, tau in enumerate(surface.taus):
            base = f"{float(theta)!r},{float(tau)!r},{float(surface.values[i, j])!r}"
            if power is not None:
                fh.write(f"{base},{float(power[i, j])!r}\n")
            else:
                fh.write(f"{base}\n")


@dataclass(frozen=True)
class ExperimentPlan:
    """A simulate campaign: model grid x algorithm roster."""

    alpha: float
    m: int
    trials: int
    seed: int
    mu_null: tuple[float, ...]
    mu_alt: tuple[float, ...]
    pi_alt: tuple[float, ...]
    specs: tuple[AlgorithmSpec, ...]

    def models(self):
        for mu_n in self.mu_null:
            for mu_a in self.mu_alt:
                for pi in self.pi_alt:
                    yield GaussianModelConfig(m=self.m, pi_alt=pi, mu_null=mu_n, mu_alt=mu_a, seed=self.seed)


def _parse_algorithm_entry(entry, alpha: float) -> AlgorithmSpec:
    if isinstance(entry, str):
        return default_spec(entry, alpha)
    if not isinstance(entry, dict) or "name" not in entry:
        raise ValueError(f"algorithm entries must be names or objects with a 'name', got {entry!r}")
    kind = entry.get("kind", entry["name"])
    spec = default_spec(kind, alpha)
    cfg = spec.config
    if "lambda" in entry:
        cfg = replace(cfg, lam=float(entry["lambda"]))
    if "tau" in entry:
        cfg = replace(cfg, tau=float(entry["tau"]))
    if "w0" in entry:
        cfg = replace(cfg, w0=float(entry["w0"]))
    if "gamma" in entry:
        cfg = replace(cfg, gamma=parse_gamma(entry["gamma"]))
    return AlgorithmSpec(name=str(entry["name"]), kind=spec.kind, config=cfg)


def load_experiment_plan(source) -> ExperimentPlan:
    """Build a plan from a config-JSON file handle, path, or parsed dict."""
    if isinstance(source, dict):
        doc = source
    elif hasattr(source, "read"):
        doc = json.load(source)
    else:
        with open(source, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    known = {"alpha", "m", "trials", "seed", "mu_null", "mu_alt", "pi_alt", "algorithms"}
    extra = set(doc) - known
    if extra:
        raise ValueError(f"unknown config fields: {', '.join(sorted(extra))}")
    alpha = float(doc.get("alpha", 0.05))
    pi = doc.get("pi_alt", "default")
    pi_grid = DEFAULT_PI_GRID if pi == "default" else tuple(float(x) for x in pi)
    algos = doc.get("algorithms", ["addis", "saffron", "lordpp", "lond", "alpha_investing"])
    specs = tuple(_parse_algorithm_entry(a, alpha) for a in algos)
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ValueError("algorithm names must be unique within a campaign")
    return ExperimentPlan(
        alpha=alpha,
        m=int(doc.get("m", 1000)),
        trials=int(doc.get("trials", 200)),
        seed=int(doc.get("seed", 42)),
        mu_null=tuple(float(x) for x in doc.get("mu_null", [-1.0])),
        mu_alt=tuple(float(x) for x in doc.get("mu_alt", [3.0])),
        pi_alt=pi_grid,
        specs=specs,
    )
