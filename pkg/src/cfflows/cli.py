"""Command line entry point: realize | build | validate | spectra | induce | report.

Configuration is a JSON file mapped onto :class:`RunConfig`; flags override
individual fields.  Every output is written with sorted keys and no
timestamps, so one config and seed give byte-identical files.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import abelian, cftower, cocycle, induced, koopman
from .abelian import Character, GroupData, SearchBounds
from .exactnum import ExactReal, parse, set_generators, to_text

log = logging.getLogger("cfflows")

FORMAT_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    pass


@dataclass
class ProbeConfig:
    weak_limits: list = field(default_factory=list)  # [{"label": "N(1)", "chi": [1], "multiple": 1}]
    singularity_pairs: list = field(default_factory=list)  # [[[0], [1]]]
    eigen_grid: Optional[list] = None  # [lo, hi, step]
    eigen_depth: Optional[int] = None
    rigidity_m: list = field(default_factory=list)
    cyclicity_grid: list = field(default_factory=list)  # exact-real literals
    correlation_times: list = field(default_factory=list)
    family_levels: list = field(default_factory=lambda: [1, 2, 3])


@dataclass
class RunConfig:
    E: list = field(default_factory=lambda: [2])
    witness: Optional[dict] = None  # GroupData dict; skips the search when given
    bounds: dict = field(default_factory=dict)
    variant: str = "sec4"
    depth: int = 6
    xi1: Optional[str] = None
    xi2: Optional[str] = None
    radicands: list = field(default_factory=lambda: [2, 3])
    assignment: Optional[list] = None  # label strings from index 2; None = round robin
    strict: bool = False
    probes: ProbeConfig = field(default_factory=ProbeConfig)
    output_dir: str = "out"
    formats: list = field(default_factory=lambda: ["json", "csv"])
    seed: int = 0
    induce_instances: int = 100
    cross_section_instances: int = 20
    product_instances: int = 50

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        probes = d.pop("probes", {}) or {}
        pk = {f.name for f in fields(ProbeConfig)}
        if set(probes) - pk:
            raise ConfigError(f"unknown probe keys: {sorted(set(probes) - pk)}")
        return cls(probes=ProbeConfig(**probes), **d)

    def validate(self) -> None:
        if not self.E or any(not isinstance(e, int) or e < 1 for e in self.E):
            raise ConfigError("E must be a nonempty list of positive integers")
        if self.variant not in ("sec4", "sec5"):
            raise ConfigError(f"variant must be sec4 or sec5, not {self.variant!r}")
        if not isinstance(self.depth, int) or self.depth < 2:
            raise ConfigError("depth must be an integer >= 2")
        if len(self.radicands) != 2:
            raise ConfigError("radicands must have two entries")
        for lit in (self.xi1, self.xi2, *self.probes.cyclicity_grid, *self.probes.correlation_times):
            if lit is not None:
                try:
                    parse(str(lit))
                except ValueError as exc:
                    raise ConfigError(str(exc)) from exc
        if self.assignment is not None:
            try:
                [cftower.Label.parse(x) for x in self.assignment]
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc


def load_config(path: Optional[str]) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        with open(path) as fh:
            return RunConfig.from_dict(json.load(fh))
    except (OSError, json.JSONDecodeError, TypeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


# plumbing ------------------------------------------------------------------

def _dump(obj) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = [_plain(x) for x in obj]
        return sorted(items, key=repr) if isinstance(obj, (set, frozenset)) else items
    if isinstance(obj, ExactReal):
        return to_text(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _write(cfg: RunConfig, name: str, payload) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    p = out / name
    p.write_text(_dump({"format_version": FORMAT_VERSION, **payload}))
    return p


def _group_data(cfg: RunConfig) -> tuple[GroupData, dict]:
    if cfg.witness is not None:
        gd = GroupData.from_dict(cfg.witness)
        return gd, {"source": "config"}
    w = abelian.realize(cfg.E, SearchBounds(**cfg.bounds))
    return GroupData.from_witness(w), {"source": "search", "witness": w.to_dict()}


def _schedule(cfg: RunConfig, gd: GroupData, depth: Optional[int] = None) -> cftower.TowerSchedule:
    set_generators(*cfg.radicands)
    depth = depth or cfg.depth
    kw = {}
    if cfg.xi1 is not None:
        kw["xi1"] = parse(cfg.xi1)
    if cfg.xi2 is not None:
        kw["xi2"] = parse(cfg.xi2)
    if cfg.variant == "sec4":
        return cftower.build_schedule_sec4(gd, depth, cfg.assignment, **kw)
    return cftower.build_schedule_sec5(gd, depth, cfg.assignment, strict=cfg.strict, **kw)


def _character(gd: GroupData, y) -> Character:
    y = tuple(int(v) for v in y)
    if not gd.group.contains(y):
        raise ConfigError(f"character {list(y)} does not exist in {gd.group}")
    return Character(gd.group, gd.group.normalize(y))


# commands ------------------------------------------------------------------

def cmd_realize(cfg: RunConfig) -> int:
    w = abelian.realize(cfg.E, SearchBounds(**cfg.bounds))
    transcript = {
        "L_direct": sorted(abelian.multiplicity_set(w.group, w.subgroup, w.automorphism)),
        "L_cycle_oracle": sorted(abelian.multiplicity_set_by_cycles(w.group, w.subgroup, w.automorphism)),
        "target": sorted(cfg.E),
    }
    ok = transcript["L_direct"] == transcript["L_cycle_oracle"] == transcript["target"]
    _write(cfg, "witness.json", {"witness": w.to_dict(), "verification": transcript, "ok": ok})
    return EXIT_OK if ok else EXIT_FAIL


def cmd_build(cfg: RunConfig) -> int:
    gd, src = _group_data(cfg)
    sch = _schedule(cfg, gd)
    table = cocycle.build_table(sch, gd)
    _write(cfg, "schedule.json", {"group_data": gd.to_dict(), "group_source": src, "variant": sch.variant,
                                  "xi1": sch.xi1, "xi2": sch.xi2, "repairs": sch.repairs, "levels": sch.dump()})
    _write(cfg, "cocycle.json", {"levels": table.dump()})
    return EXIT_OK


def cmd_validate(cfg: RunConfig) -> int:
    gd, _ = _group_data(cfg)
    sch = _schedule(cfg, gd)
    table = cocycle.build_table(sch, gd)
    vr = cftower.validate_schedule(sch)
    cr = cocycle.check_conditions(table, sch, gd)
    ok = vr.ok and cr.ok
    _write(cfg, "validation.json", {"schedule": vr.to_dict(), "cocycle": cr.to_dict(), "ok": ok})
    return EXIT_OK if ok else EXIT_FAIL


def _probe(bundle: dict, name: str, fn) -> bool:
    try:
        bundle[name] = fn()
        return True
    except Exception as exc:  # one probe failing must not abort the others
        log.warning("probe %s failed: %s", name, exc)
        bundle[name] = {"error": type(exc).__name__, "message": str(exc)}
        return False


def cmd_spectra(cfg: RunConfig) -> int:
    gd, _ = _group_data(cfg)
    sch = _schedule(cfg, gd)
    table = cocycle.build_table(sch, gd)
    pc = cfg.probes
    family = koopman.default_family(sch, tuple(pc.family_levels))
    bundle: dict = {}
    ok = True

    for k, spec in enumerate(pc.weak_limits):
        def run(spec=spec):
            label = cftower.Label.parse(spec["label"])
            chi = _character(gd, spec.get("chi", [0] * gd.group.rank))
            j = int(spec.get("multiple", 1))
            if label.kind == "N":
                target = koopman.target_scalar(gd, chi)
            else:
                target = koopman.target_half(sch, gd, chi, j)
            rows = koopman.weak_limit_table(sch, table, gd, chi, lambda L: L == label, target, family, multiple=j)
            return {"label": str(label), "chi": str(chi), "multiple": j, "rows": [r.to_dict() for r in rows],
                    "non_increasing": all(b.residual <= a.residual for a, b in zip(rows, rows[1:]))}
        ok &= _probe(bundle, f"weak_limit_{k}", run)

    for k, (y1, y2) in enumerate(pc.singularity_pairs):
        def run(y1=y1, y2=y2):
            ev = koopman.singularity_probe(_character(gd, y1), _character(gd, y2), sch, table, gd, family=family)
            return ev.to_dict()
        ok &= _probe(bundle, f"singularity_{k}", run)

    if pc.eigen_grid is not None:
        def run():
            lo, hi, step = pc.eigen_grid
            n = int(round((hi - lo) / step))
            lam = np.round(lo + step * np.arange(n + 1), 10)
            lam = lam[lam != 0]
            depth = pc.eigen_depth or sch.depth
            pr = koopman.eigenvalue_absence_probe(lam, sch.truncate(depth), table, gd)
            return {**pr.to_dict(), "table": [[float(a), float(b)] for a, b in zip(pr.lambdas, pr.lower_bounds)]}
        ok &= _probe(bundle, "eigenvalue_absence", run)

    if pc.rigidity_m:
        def run():
            rows = []
            for m in pc.rigidity_m:
                r = koopman.rigidity_residual(int(m), sch, table, family=family)
                rows.append({"m": int(m), "residual": r.value, "error": r.error})
            return {"rows": rows}
        ok &= _probe(bundle, "rigidity", run)

    if pc.cyclicity_grid:
        def run():
            grid = [parse(t) for t in pc.cyclicity_grid]
            out = []
            for chi in gd.sector_characters():
                rr = koopman.cyclicity_probe(family[0], chi, grid, sch, table)
                out.append({"chi": str(chi), **rr.to_dict()})
            return {"label": "EVIDENCE", "sectors": out}
        ok &= _probe(bundle, "cyclicity", run)

    rows = []
    if pc.correlation_times:
        def run():
            times = [parse(t) for t in pc.correlation_times]
            rows.extend(koopman.correlation_rows(sch, table, family[0], gd.sector_characters(), times))
            return {"rows": len(rows)}
        ok &= _probe(bundle, "correlations", run)

    if "json" in cfg.formats:
        _write(cfg, "spectra.json", {"probes": bundle, "truncation_note":
               "values are window correlations; deficiency bounds cover the escape region and 1 - mu(X_D)"})
    if "csv" in cfg.formats and rows:
        buf = io.StringIO()
        wr = csv.DictWriter(buf, fieldnames=koopman.CSV_COLUMNS, lineterminator="\n")
        wr.writeheader()
        for r in rows:
            wr.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "correlations.csv").write_text(buf.getvalue())
    return EXIT_OK if ok else EXIT_FAIL


def cmd_induce(cfg: RunConfig) -> int:
    rng = np.random.default_rng(cfg.seed)
    prop = []
    for _ in range(cfg.induce_instances):
        inst = induced.random_induction_instance(rng)
        r = induced.check_prop11(inst.V, inst.group, inst.H)
        prop.append({"group": str(inst.group), "H": sorted(inst.H.elements), "ys": inst.ys, **r.to_dict()})
    cross = []
    for _ in range(cfg.cross_section_instances):
        inst = induced.random_induction_instance(rng)
        s = induced.random_cross_section(inst.group, inst.H, rng)
        a = induced.multiplicity_function(induced.induce(inst.group, inst.H, inst.V))[0]
        b = induced.multiplicity_function(induced.induce(inst.group, inst.H, inst.V, s))[0]
        cross.append({"group": str(inst.group), "section": s, "equal": a == b})
    z2, z3 = abelian.FiniteAbelianGroup((2,)), abelian.FiniteAbelianGroup((3,))
    named = []
    for name, a1, a2 in (
        ("Z3 x Z2", induced.translation_action(z3), induced.translation_action(z2)),
        ("Z3 x two 2-cycles", induced.translation_action(z3), induced.two_cycles_action()),
        ("two 2-cycles x Z3", induced.two_cycles_action(), induced.translation_action(z3)),
    ):
        try:
            named.append({"name": name, **induced.product_multiplicity_check(a1, a2).to_dict()})
        except (induced.NotErgodic, induced.NotSimpleSpectrum) as exc:
            named.append({"name": name, "hypothesis_violation": type(exc).__name__, "message": str(exc)})
    randoms = []
    for _ in range(cfg.product_instances):
        a1, a2 = induced.random_ergodic_simple(rng), induced.random_action(rng)
        randoms.append({"T1": str(a1.group), "T2": str(a2.group), "T2_size": a2.size,
                        **induced.product_multiplicity_check(a1, a2).to_dict()})
    ok = (all(r["ok"] for r in prop) and all(c["equal"] for c in cross)
          and all(r["ok"] for r in randoms) and all(r.get("ok", True) for r in named))
    _write(cfg, "induce.json", {"seed": cfg.seed, "induction": prop, "cross_section": cross,
                                "product_named": named, "product_random": randoms, "ok": ok})
    return EXIT_OK if ok else EXIT_FAIL


def cmd_report(cfg: RunConfig) -> int:
    codes = {}
    for name, fn in (("realize", cmd_realize), ("build", cmd_build), ("validate", cmd_validate),
                     ("spectra", cmd_spectra), ("induce", cmd_induce)):
        try:
            codes[name] = fn(cfg)
        except ConfigError:
            raise
        except Exception as exc:
            log.warning("%s failed: %s", name, exc)
            codes[name] = EXIT_FAIL
    _write(cfg, "report.json", {"config": asdict(cfg), "exit_codes": codes})
    return EXIT_OK if all(c == EXIT_OK for c in codes.values()) else EXIT_FAIL


COMMANDS = {"realize": cmd_realize, "build": cmd_build, "validate": cmd_validate,
            "spectra": cmd_spectra, "induce": cmd_induce, "report": cmd_report}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cfflows", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="JSON RunConfig file")
    p.add_argument("--E", help="target multiplicity set, e.g. 1,3")
    p.add_argument("--variant", choices=["sec4", "sec5"])
    p.add_argument("--depth", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", dest="output_dir")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--strict", action="store_true", default=None, help="no spacer repair (sec5)")
    mode.add_argument("--repair", dest="strict", action="store_false", help="apply the spacer repair (sec5)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config)
        if args.E is not None:
            try:
                cfg.E = [int(x) for x in args.E.split(",") if x.strip()]
            except ValueError as exc:
                raise ConfigError(f"bad --E: {args.E!r}") from exc
        for name in ("variant", "depth", "seed", "output_dir", "strict"):
            val = getattr(args, name)
            if val is not None:
                setattr(cfg, name, val)
        cfg.validate()
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except abelian.NotFound as exc:
        print(f"not found: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
