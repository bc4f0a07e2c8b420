"""Counter-based benchmarks and log-log growth fits."""

from __future__ import annotations

import csv
import math
import statistics
import time
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Optional

from . import ast as A
from .runtime import Runtime
from .scenarios import CelebParams, Scenario, gen_jql, gen_osq, gen_running_example

COLUMNS = ("ask_ops", "update_ops", "aux_space", "total_ops")


@dataclass
class Measurement:
    scenario: str
    mode: str
    size: int
    seed: int
    ask_ops: float
    update_ops: float
    aux_space: int
    total_ops: int
    seconds: float = 0.0


def measure(sc: Scenario, mode: str, size: int, seed: int, wallclock: bool = False,
            runtime_hook: Optional[Callable[[Runtime], None]] = None) -> Measurement:
    """Run setup, reset counters, run the workload; costs are averaged per trace op."""
    rt = Runtime(sc.script, mode, record=False)
    rt.run(sc.setup)
    rt.reset_counters()
    t0 = time.perf_counter()
    rt.run(sc.workload)
    secs = time.perf_counter() - t0 if wallclock else 0.0
    n_ask = sum(isinstance(op, (A.Ask, A.AssertResult)) for op in sc.workload)
    n_upd = sum(isinstance(op, (A.FieldAssign, A.SetAdd, A.SetDel)) for op in sc.workload)
    ask = rt.phase.get("ask")
    upd = rt.phase.get("update")
    if runtime_hook:
        runtime_hook(rt)
    return Measurement(
        sc.name, mode, size, seed,
        ask.total() / n_ask if ask and n_ask else 0.0,
        upd.total() / n_upd if upd and n_upd else 0.0,
        rt.aux_space(), rt.counters.total(), secs,
    )


def scenario_for(name: str, size: int, seed: int, **kw) -> Scenario:
    if name == "celeb":
        return gen_running_example(CelebParams(n_users=size, seed=seed, **kw))
    if name in ("jql1", "jql2", "jql3"):
        return gen_jql(int(name[-1]), n=size, seed=seed, **kw)
    if name == "demand-sweep":
        n = kw.pop("n_users", 1000)
        sc = gen_running_example(CelebParams(n_users=n, demand_size=size, updates_in_tag_set=True,
                                             seed=seed, **kw))
        sc.name = "demand-sweep"
        return sc
    if name == "osq":
        return gen_osq(size, seed=seed, **kw)
    raise ValueError(f"unknown scenario {name!r}")


DEFAULT_MODES = {
    "celeb": ("orig", "inc", "fil"),
    "jql1": ("orig", "inc", "fil"),
    "jql2": ("orig", "inc", "fil"),
    "jql3": ("orig", "inc", "fil"),
    "demand-sweep": ("inc", "fil"),
    "osq": ("fil", "fil-osq"),
}


def bench(name: str, sizes: Iterable[int], seeds: Iterable[int] = (1,), modes: Optional[Iterable[str]] = None,
          wallclock: bool = False, **kw) -> list[Measurement]:
    rows = []
    modes = tuple(modes or DEFAULT_MODES[name])
    for size in sizes:
        for seed in seeds:
            sc = scenario_for(name, size, seed, **dict(kw))
            for mode in modes:
                rows.append(measure(sc, mode, size, seed, wallclock))
    return rows


def fit_exponent(xs: Iterable[float], ys: Iterable[float]) -> float:
    """Slope of log y against log x by least squares (nan when y is ever zero)."""
    xs, ys = list(xs), list(ys)
    if len(xs) < 2 or any(y <= 0 for y in ys):
        return math.nan
    slope, _ = statistics.linear_regression([math.log(x) for x in xs], [math.log(y) for y in ys])
    return slope


def exponents(rows: list[Measurement], columns=COLUMNS) -> dict[tuple[str, str], float]:
    """Growth exponent per (mode, column), fitted on the per-size mean over seeds."""
    out = {}
    for mode in dict.fromkeys(r.mode for r in rows):
        sizes = sorted({r.size for r in rows if r.mode == mode})
        for col in columns:
            ys = [statistics.fmean(getattr(r, col) for r in rows if r.mode == mode and r.size == s)
                  for s in sizes]
            out[(mode, col)] = fit_exponent(sizes, ys)
    return out


def write_csv(rows: list[Measurement], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(Measurement.__dataclass_fields__)
        for r in rows:
            w.writerow(asdict(r).values())


def write_fits(fits: dict[tuple[str, str], float], scenario: str, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("scenario", "mode", "column", "exponent"))
        for (mode, col), e in fits.items():
            w.writerow((scenario, mode, col, f"{e:.4f}"))
