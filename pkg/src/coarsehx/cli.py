"""Command-line front end: ``coarsehx <command> --config PATH [flags]``."""
from __future__ import annotations

import argparse
import logging
import os
import platform
import sys
import time
import traceback
from fractions import Fraction
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .coarse import (ScenarioConfig, asdim_bounds, check_separation, oracle_compare,
                     pd_scenario)
from .config import (SCHEMA_VERSION, RunConfig, load_config, read_config_file,
                     validate_config)
from .cover import build_anti_cech
from .errors import CoarseError, ConfigError, ConstraintError, SpecError
from .limit import DirectSystem, limit_report
from .pipeline import build_homology_system
from .report import emit_barcode_plot, write_csv, write_json
from .space import SqrtRational, as_rational, value_str, write_space

log = logging.getLogger("coarsehx")
COMMANDS = ("generate", "covers", "homology", "limit", "separate", "asdim", "scenario",
            "oracle", "run", "validate")


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (Fraction, SqrtRational)):
        return value_str(x) if isinstance(x, Fraction) else repr(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


class Run:
    """One CLI invocation: shared state, the output directory and the manifest."""

    def __init__(self, cfg: RunConfig, command: str):
        self.cfg = cfg
        self.command = command
        self.out = Path(cfg.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.hash = cfg.config_hash()
        self.timings: dict = {}
        self.files: list = []
        self._space = self._system = self._hsys = None

    def timed(self, name, fn, *a, **kw):
        t = time.perf_counter()
        try:
            return fn(*a, **kw)
        finally:
            self.timings[name] = round(time.perf_counter() - t, 4)

    def json(self, name: str, payload: dict):
        self.files.append(name)
        write_json(self.out / name, _jsonable(payload), self.hash)

    def csv(self, name: str, header, rows):
        self.files.append(name)
        write_csv(self.out / name, header, rows)

    # lazily built pipeline pieces
    @property
    def space(self):
        if self._space is None:
            self._space = self.timed("space", self.cfg.build_space)
        return self._space

    @property
    def system(self):
        if self._system is None:
            s, _ = self.space
            self._system = self.timed(
                "covers", build_anti_cech, s, self.cfg.strategy, self.cfg.horizon,
                allow_window_cap_override=self.cfg.allow_window_cap_override)
        return self._system

    @property
    def hsys(self):
        if self._hsys is None:
            seed = self.cfg.seed if self.cfg.tie == "random" else None
            self._hsys = self.timed(
                "homology", build_homology_system, self.system, self.cfg.degrees,
                route=self.cfg.route, coeffs=self.cfg.coeffs, workers=self.cfg.workers,
                tie=self.cfg.tie, seed=seed)
        return self._hsys

    def subset(self):
        _, sub = self.space
        if sub is None:
            raise SpecError(f"'{self.command}' needs a subset selector in the config")
        return sub

    def manifest(self, status: str, error: str | None = None):
        body = {
            "tool": "coarsehx", "version": __version__, "schema_version": SCHEMA_VERSION,
            "command": self.command, "status": status, "config": self.cfg.to_dict(),
            "config_hash": self.hash, "files": sorted(set(self.files)),
            "timings_seconds": self.timings,
            "environment": {"python": platform.python_version(), "numpy": np.__version__,
                            "scipy": scipy.__version__},
        }
        if error:
            body["error"] = error
        from .report import dumps
        (self.out / "manifest.json").write_text(dumps(_jsonable(body)))


# --------------------------------------------------------------------------
# commands

def cmd_generate(run: Run):
    s, sub = run.space
    name = "space.edges" if s.backend == "graph" else "space.csv"
    write_space(s, run.out / name)
    run.files.append(name)
    run.json("space.json", {
        "points": s.n, "backend": s.backend, "norm": s.norm, "model_dim": s.model_dim,
        "frontier": sorted(s.frontier), "window_diameter": value_str(s.window_diameter),
        "balls_helly": s.balls_are_helly, "data_file": name,
        "subset": None if sub is None else sorted(sub.members),
    })


def cmd_covers(run: Run):
    system = run.system
    run.json("covers.json", system.manifest())
    for i, c in enumerate(system.stages, 1):
        name = f"cover_stage{i:02d}.csv"
        (run.out / name).write_text(c.to_csv())
        run.files.append(name)


def homology_payload(hsys) -> dict:
    stages = []
    for i, m in enumerate(hsys.models, 1):
        stages.append({"stage": i, "scale": value_str(m.cover.scale), **m.summary()})
    maps = {str(k): [[[value_str(Fraction(v)) for v in row] for row in f.matrix]
                     for f in hsys.maps[k]] for k in hsys.degrees}
    return {"degrees": list(hsys.degrees), "stages": stages,
            "ranks": {str(k): hsys.ranks(k) for k in hsys.degrees}, "maps": maps}


def cmd_homology(run: Run):
    hsys = run.hsys
    run.json("homology.json", homology_payload(hsys))
    rows = []
    for i, m in enumerate(hsys.models, 1):
        for k in hsys.degrees:
            t = m.torsion.get(k)
            rows.append([i, value_str(m.cover.scale), k, m.groups[k].rank,
                         "skipped" if t is None and k in m.torsion else " ".join(map(str, t or []))])
    run.csv("homology.csv", ["stage", "scale", "degree", "rank", "torsion"], rows)


def _systems_from_homology_json(path) -> dict:
    import json
    data = json.loads(Path(path).read_text())
    out = {}
    for k in data["degrees"]:
        ranks = data["ranks"][str(k)]
        mats = [[[as_rational(v) for v in row] for row in m] for m in data["maps"][str(k)]]
        mats = [[[int(v) if v.denominator == 1 else v for v in row] for row in m] for m in mats]
        out[k] = DirectSystem.from_matrices(ranks, mats, degree=k)
    return out


def cmd_limit(run: Run, source: str | None = None):
    if source:
        systems = _systems_from_homology_json(source)
    else:
        systems = {k: DirectSystem.from_homology_system(run.hsys, k) for k in run.hsys.degrees}
    reports = {k: limit_report(d, tail_window=run.cfg.window) for k, d in systems.items()}
    run.json("limit.json", {"window": run.cfg.window,
                            "degrees": {str(k): r.to_dict() for k, r in reports.items()}})
    rows = []
    for k, r in reports.items():
        for i, row in enumerate(r.table, 1):
            for j, v in enumerate(row, 1):
                if v is not None:
                    rows.append([k, i, j, v])
    run.csv("persistent_ranks.csv", ["degree", "i", "j", "rank"], rows)
    emit_barcode_plot(reports, run.out / "barcode.svg")
    run.files.append("barcode.svg")
    return reports


def cmd_separate(run: Run):
    s, _ = run.space
    rep = run.timed("separation", check_separation, s, run.subset(),
                    run.cfg.separation.r_values, run.cfg.separation.d_rule)
    run.json("separation.json", rep.to_dict())
    return rep


def cmd_asdim(run: Run):
    s, _ = run.space
    rep = run.timed("asdim", asdim_bounds, s, run.cfg.strategy, run.cfg.degrees,
                    run.cfg.horizon, run.cfg.window, route=run.cfg.route,
                    workers=run.cfg.workers,
                    allow_window_cap_override=run.cfg.allow_window_cap_override, hsys=run.hsys)
    run.json("asdim.json", rep.to_dict())
    return rep


def cmd_scenario(run: Run):
    s, _ = run.space
    sc = ScenarioConfig(r_values=tuple(run.cfg.separation.r_values),
                        d_rule=run.cfg.separation.d_rule, strategy=run.cfg.strategy,
                        horizon=run.cfg.horizon, window=run.cfg.window, route=run.cfg.route,
                        workers=run.cfg.workers,
                        allow_window_cap_override=run.cfg.allow_window_cap_override)
    rep = run.timed("scenario", pd_scenario, s, run.subset(), sc)
    run.json("scenario.json", rep.to_dict())
    return rep


def cmd_oracle(run: Run):
    s, _ = run.space
    o = run.cfg.oracle
    res = [run.timed(f"oracle_{value_str(as_rational(lam))}", oracle_compare, s, lam,
                     o.degrees, o.budget) for lam in o.lambdas]
    run.json("oracle.json", {"budget": o.budget, "comparisons": [r.to_dict() for r in res],
                             "all_equal": all(r.all_equal for r in res)})
    return res


def cmd_run(run: Run):
    cmd_generate(run)
    cmd_covers(run)
    cmd_homology(run)
    cmd_limit(run)
    cmd_asdim(run)
    _, sub = run.space
    if sub is not None:
        cmd_separate(run)
        if run.cfg.scenario and run.space[0].model_dim is not None:
            cmd_scenario(run)
    if run.cfg.oracle.enabled:
        cmd_oracle(run)


def run_pipeline(cfg: RunConfig, command: str = "run", source: str | None = None) -> Run:
    """Execute one command; the manifest is written even when it fails."""
    run = Run(cfg, command)
    handlers = {"generate": cmd_generate, "covers": cmd_covers, "homology": cmd_homology,
                "separate": cmd_separate, "asdim": cmd_asdim, "scenario": cmd_scenario,
                "oracle": cmd_oracle, "run": cmd_run}
    try:
        if command == "limit":
            cmd_limit(run, source)
        else:
            handlers[command](run)
    except BaseException as exc:
        run.manifest("failed", f"{type(exc).__name__}: {exc}")
        raise
    run.manifest("ok")
    return run


# --------------------------------------------------------------------------
# argument handling

def _parse_degrees(text: str) -> list[int]:
    try:
        return [int(x) for x in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad degree list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coarsehx", description=__doc__)
    p.add_argument("--version", action="version", version=f"coarsehx {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="YAML or JSON run configuration")
        if name == "validate":
            continue
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int)
        sp.add_argument("--degrees", type=_parse_degrees, help="e.g. 0,1,2")
        sp.add_argument("--horizon", type=int)
        sp.add_argument("--window", type=int, help="stabilization window")
        sp.add_argument("--oracle-budget", type=int)
        sp.add_argument("--allow-window-cap-override", action="store_true", default=None)
        if name == "limit":
            sp.add_argument("--from", dest="source", help="homology.json from a previous run")
    return p


def _overrides(args) -> dict:
    keys = ("out", "seed", "workers", "degrees", "horizon", "window", "allow_window_cap_override")
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("COARSE_KERNEL_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            raw = read_config_file(args.config)
            _, diags = validate_config(raw, base_dir=Path(args.config).parent)
            if diags:
                for d in diags:
                    print(d)
                return 2
            print("ok")
            return 0
        raw_over = _overrides(args)
        if args.oracle_budget is not None:
            raw = read_config_file(args.config)
            raw_over["oracle"] = {**(raw.get("oracle") or {}), "budget": args.oracle_budget}
        cfg = load_config(args.config, raw_over)
        run = run_pipeline(cfg, args.command, getattr(args, "source", None))
        print(f"{args.command}: ok -> {run.out}")
        return 0
    except ConfigError as exc:
        print(f"ConfigError: {exc}", file=sys.stderr)
        return 2
    except ConstraintError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except CoarseError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        log.debug("%s", traceback.format_exc())
        return 1
    except Exception as exc:  # internal error
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        log.debug("%s", traceback.format_exc())
        return 1


if __name__ == "__main__":
    sys.exit(main())
