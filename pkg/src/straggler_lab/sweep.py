"""Parameter sweeps over delay, redundancy level and Pareto tail index."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field, fields, replace
from typing import IO, Any, Iterable, Mapping, Optional, Sequence

import numpy as np

from . import analytic
from .dists import Pareto
from .errors import ConfigError, DomainError, UnsupportedCombination
from .model import Coded, Replicated, SystemConfig, config_from_dict
from .sim import estimate

AXES = ("delta", "c", "n", "alpha")
ENGINES = ("analytic", "simulate", "both")
CSV_COLUMNS = (
    "series",
    "axis_name",
    "axis_value",
    "engine",
    "latency",
    "latency_se",
    "cost_cancel",
    "cost_cancel_se",
    "cost_nocancel",
    "cost_nocancel_se",
    "flags",
)

PARETO_GAP_MESSAGE = analytic.PARETO_GAP_MESSAGE


@dataclass(frozen=True)
class SweepSpec:
    base: SystemConfig
    axis: str
    grid: tuple
    engine: str = "analytic"
    replications: int = 200_000
    seed: int = 0
    label: str = ""

    def __post_init__(self):
        if self.axis not in ("delta", "c", "n"):
            raise ConfigError(f"axis must be one of delta, c, n; got {self.axis!r}")
        if self.engine not in ENGINES:
            raise ConfigError(f"engine must be one of {ENGINES}, got {self.engine!r}")
        grid = tuple(self.grid)
        if not grid:
            raise ConfigError("sweep grid is empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError(f"sweep grid must be strictly increasing: {list(grid)}")
        object.__setattr__(self, "grid", grid)
        if self.engine != "analytic" and self.replications < 2:
            raise ConfigError("simulated sweeps need at least 2 replications")
        if self.axis == "c" and not isinstance(self.base.scheme, Replicated):
            raise ConfigError("axis 'c' needs a replicated base scheme")
        if self.axis == "n" and not isinstance(self.base.scheme, Coded):
            raise ConfigError("axis 'n' needs a coded base scheme")
        if self.engine != "simulate" and isinstance(self.base.dist, Pareto):
            delays = grid if self.axis == "delta" else (self.base.delta,)
            if any(d > 0 for d in delays):
                raise UnsupportedCombination(PARETO_GAP_MESSAGE)

    @property
    def name(self) -> str:
        return self.label or f"{self.axis}-sweep"

    def config_at(self, value) -> SystemConfig:
        if self.axis == "delta":
            return replace(self.base, delta=float(value))
        if self.axis == "c":
            return replace(self.base, scheme=Replicated(int(value)))
        return replace(self.base, scheme=Coded(int(value)))


@dataclass
class SweepRow:
    series: str
    axis_name: str
    axis_value: float
    engine: str
    latency: float
    latency_se: Optional[float]
    cost_cancel: float
    cost_cancel_se: Optional[float]
    cost_nocancel: float
    cost_nocancel_se: Optional[float]
    flags: str


@dataclass
class AlphaRow:
    series: str
    k: int
    alpha: float
    t_baseline: float
    baseline_cost: float
    rep_c_max: int
    rep_t_min: float
    rep_reduction: float
    coded_n_star: int
    coded_t_min: float
    coded_reduction: float
    coded_bound: float


@dataclass
class SweepResult:
    rows: list
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"metadata": self.metadata, "rows": [asdict(r) for r in self.rows]}


def _analytic_row(spec: SweepSpec, value, cfg: SystemConfig) -> SweepRow:
    m = analytic.analytic_metrics(cfg)
    return SweepRow(
        spec.name, spec.axis, value, "analytic",
        m.latency, None, m.cost_cancel, None, m.cost_nocancel, None, m.flags(),
    )


def _sim_row(spec: SweepSpec, value, cfg: SystemConfig, parallel: int) -> SweepRow:
    e = estimate(cfg, spec.replications, spec.seed, parallel=parallel)
    return SweepRow(
        spec.name, spec.axis, value, "simulate",
        e.mean_latency, e.se_latency,
        e.mean_cost_cancel, e.se_cost_cancel,
        e.mean_cost_nocancel, e.se_cost_nocancel,
        f"replications={e.replications};seed={e.seed}",
    )


def _metadata(spec: SweepSpec) -> dict:
    meta = {
        "series": spec.name,
        "axis": spec.axis,
        "grid": list(spec.grid),
        "engine": spec.engine,
        "config": spec.base.to_dict(),
    }
    if spec.engine != "analytic":
        meta["seed"] = spec.seed
        meta["replications"] = spec.replications
    return meta


def _run_grid(spec: SweepSpec, parallel: int) -> SweepResult:
    rows = []
    for value in spec.grid:
        cfg = spec.config_at(value)
        if spec.engine in ("analytic", "both"):
            rows.append(_analytic_row(spec, value, cfg))
        if spec.engine in ("simulate", "both"):
            rows.append(_sim_row(spec, value, cfg, parallel))
    return SweepResult(rows, {"sweeps": [_metadata(spec)]})


def delta_sweep(spec: SweepSpec, parallel: int = 1) -> SweepResult:
    """Metrics as the redundancy delay varies, one row per delay and engine."""
    if spec.axis != "delta":
        raise ConfigError(f"delta_sweep needs axis 'delta', got {spec.axis!r}")
    if any(d < 0 for d in spec.grid):
        raise DomainError("delays must be nonnegative")
    return _run_grid(spec, parallel)


def level_sweep(spec: SweepSpec, parallel: int = 1) -> SweepResult:
    """Zero-delay metrics as the replica count or code length varies."""
    if spec.axis not in ("c", "n"):
        raise ConfigError(f"level_sweep needs axis 'c' or 'n', got {spec.axis!r}")
    if spec.base.delta != 0:
        raise ConfigError("level sweeps are defined for zero delay only")
    if isinstance(spec.base.dist, Pareto) and spec.base.dist.alpha <= 1:
        raise DomainError(f"expected cost is infinite for Pareto alpha = {spec.base.dist.alpha} <= 1")
    return _run_grid(spec, parallel)


def alpha_reduction_curve(
    k: int,
    lam: float,
    alphas: Sequence[float],
    n_max: Optional[int] = None,
    label: str = "",
) -> SweepResult:
    """Best latency reduction at no more than baseline cost, per tail index."""
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise ConfigError("alpha grid is empty")
    if any(b <= a for a, b in zip(alphas, alphas[1:])):
        raise ConfigError("alpha grid must be strictly increasing")
    if any(a <= 1 for a in alphas):
        raise DomainError("every alpha must exceed 1 for a finite baseline cost")
    label = label or f"k={k}"
    rows = []
    for a in alphas:
        rep = analytic.pareto_min_latency_at_baseline_cost(k, lam, a, "rep")
        cod = analytic.pareto_min_latency_at_baseline_cost(k, lam, a, "coded", n_max=n_max)
        rows.append(
            AlphaRow(
                label, k, a, rep.t_baseline, rep.baseline_cost,
                rep.level, rep.t_min, rep.reduction,
                cod.level, cod.t_min, cod.reduction, cod.bound,
            )
        )
    meta = {"series": label, "axis": "alpha", "k": k, "lambda": lam, "grid": alphas,
            "n_max": n_max}
    return SweepResult(rows, {"sweeps": [meta]})


def pareto_frontier(rows: Sequence[Any], cost_field: str = "cost_cancel") -> list:
    """Rows not dominated in (latency, cost); input order kept, exact ties kept."""
    points = [(r.latency, getattr(r, cost_field)) for r in rows]
    keep = []
    for i, (li, ci) in enumerate(points):
        dominated = any(
            lj <= li and cj <= ci and (lj < li or cj < ci)
            for j, (lj, cj) in enumerate(points)
            if j != i
        )
        if not dominated:
            keep.append(rows[i])
    return keep


def run_sweep(spec: SweepSpec, parallel: int = 1) -> SweepResult:
    if spec.axis == "delta":
        return delta_sweep(spec, parallel)
    return level_sweep(spec, parallel)


def merge(results: Iterable[SweepResult]) -> SweepResult:
    rows, sweeps = [], []
    for res in results:
        rows.extend(res.rows)
        sweeps.extend(res.metadata.get("sweeps", []))
    return SweepResult(rows, {"sweeps": sweeps})


# --- spec files and presets -------------------------------------------------

def _grid_from(value) -> list:
    if isinstance(value, Mapping):
        try:
            start, stop, num = float(value["start"]), float(value["stop"]), int(value["num"])
        except KeyError as exc:
            raise ConfigError(f"grid range is missing {exc.args[0]!r}") from None
        return [float(v) for v in np.linspace(start, stop, num)]
    if isinstance(value, Sequence) and not isinstance(value, str):
        return list(value)
    raise ConfigError(f"grid must be a list or a start/stop/num range, got {value!r}")


def sweep_entry_from_dict(entry: Mapping[str, Any], defaults: Mapping[str, Any] = {}):
    """Parse one sweep entry; returns a SweepSpec or an alpha-curve dict."""
    merged = {**defaults, **entry}
    axis = merged.get("axis")
    if "grid" not in merged:
        raise ConfigError("sweep entry is missing field 'grid'")
    grid = _grid_from(merged["grid"])
    if axis == "alpha":
        if not grid:
            raise ConfigError("sweep grid is empty")
        return {
            "k": int(merged.get("k", 10)),
            "lambda": float(merged.get("lambda", 1.0)),
            "grid": [float(a) for a in grid],
            "n_max": merged.get("n_max"),
            "label": merged.get("label", ""),
        }
    if "config" not in merged:
        raise ConfigError("sweep entry is missing field 'config'")
    if axis in ("c", "n"):
        grid = [int(v) for v in grid]
    return SweepSpec(
        base=config_from_dict(merged["config"]),
        axis=axis,
        grid=tuple(grid),
        engine=merged.get("engine", "analytic"),
        replications=int(merged.get("replications", 200_000)),
        seed=int(merged.get("seed", 0)),
        label=merged.get("label", ""),
    )


def entries_from_file_dict(doc: Mapping[str, Any], overrides: Mapping[str, Any] = {}) -> list:
    if "preset" in doc:
        doc = preset(doc["preset"])
    entries = doc["sweeps"] if "sweeps" in doc else [doc]
    defaults = {k: v for k, v in doc.items() if k not in ("sweeps", "preset")} if "sweeps" in doc else {}
    defaults.update(overrides)
    return [sweep_entry_from_dict({**e, **overrides}, defaults) for e in entries]


def execute(entries: Sequence, parallel: int = 1) -> SweepResult:
    parts = []
    for entry in entries:
        if isinstance(entry, SweepSpec):
            parts.append(run_sweep(entry, parallel))
        else:
            parts.append(
                alpha_reduction_curve(entry["k"], entry["lambda"], entry["grid"], entry["n_max"], entry["label"])
            )
    kinds = {type(r) for p in parts for r in p.rows}
    if len(kinds) > 1:
        raise ConfigError("alpha-curve sweeps cannot be mixed with metric sweeps in one file")
    return merge(parts)


def _sexp(D: float = 1.0, mu: float = 1.0) -> dict:
    return {"type": "sexp", "D": D, "mu": mu}


def preset(name: str, replications: int = 20_000, seed: int = 0) -> dict:
    """Sweep documents reproducing the qualitative setups of the reference figures.

    The parameter values are presets chosen to exhibit the described regimes,
    not recovered originals.
    """
    k = 10
    if name == "fig2":
        grid = {"start": 0.0, "stop": 4.0, "num": 20}
        sweeps = [
            {"label": f"rep c={c}", "config": {"k": k, "scheme": {"type": "rep", "c": c}, "dist": _sexp()}}
            for c in (1, 2)
        ]
        sweeps += [
            {"label": f"coded n={n}", "config": {"k": k, "scheme": {"type": "coded", "n": n}, "dist": _sexp()}}
            for n in range(k + 1, 3 * k + 1)
        ]
        return {"axis": "delta", "grid": grid, "engine": "both",
                "replications": replications, "seed": seed, "sweeps": sweeps}
    if name == "fig3":
        dists = [("sexp", _sexp())] + [
            (f"pareto a={a}", {"type": "pareto", "lambda": 1.0, "alpha": a}) for a in (3.0, 2.0, 1.2)
        ]
        sweeps = []
        for tag, dist in dists:
            sweeps.append({"label": f"{tag} rep", "axis": "c", "grid": list(range(0, 6)),
                           "config": {"k": k, "scheme": {"type": "rep", "c": 0}, "dist": dist}})
            sweeps.append({"label": f"{tag} coded", "axis": "n", "grid": list(range(k, 3 * k + 1)),
                           "config": {"k": k, "scheme": {"type": "coded", "n": k}, "dist": dist}})
        return {"engine": "analytic", "sweeps": sweeps}
    if name == "fig4":
        grid = {"start": 1.05, "stop": 4.0, "num": 60}
        return {"axis": "alpha", "grid": grid, "lambda": 1.0,
                "sweeps": [{"k": 10, "label": "k=10"}, {"k": 50, "label": "k=50"}]}
    raise ConfigError(f"unknown preset {name!r}; expected fig2, fig3 or fig4")


# --- output -------------------------------------------------------------------

def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(result: SweepResult, fh: IO[str]) -> None:
    if result.rows and isinstance(result.rows[0], AlphaRow):
        columns = [f.name for f in fields(AlphaRow)]
    else:
        columns = list(CSV_COLUMNS)
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(columns)
    for row in result.rows:
        writer.writerow([_cell(getattr(row, c)) for c in columns])


def write_json(result: SweepResult, fh: IO[str]) -> None:
    json.dump(result.to_dict(), fh, indent=2, allow_nan=False)
    fh.write("\n")
