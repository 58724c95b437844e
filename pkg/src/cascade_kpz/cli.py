"""Command-line experiment runner.

Every run writes ``report.json``, the CSV tables of its command and
``provenance.json`` into ``--out``.  Exit status is 0 when the run's
checks pass, 2 when a tolerance check fails and 1 on any error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .cascade import CascadeMeasure, batch_log2_mass, second_moment_oracle
from .config import COMMANDS, ExperimentConfig, from_values, parse_s_grid, parse_text
from .dimension import CascadeFamily, DimensionConfig, LebesgueMeasure, estimate_dimension
from .dyadic import DyadicAddress
from .energy import energy_growth_profile
from .errors import CascadeError, ReplayError
from .hashing import HASH_VERSION, derive_seeds
from .kpz import kpz_experiment, phi_inverse, verify_mass_bound
from .parallel import THREADS_ENV
from .weights import validate

EXIT_PASS, EXIT_ERROR, EXIT_FAIL = 0, 1, 2
TOOL = "cascade-kpz"
JENSEN_S = (0.25, 0.5, 0.75)
#: Half-width of the band around the reference dimension where energy growth is not judged.
ENERGY_MARGIN = 0.1


class Artifacts:
    """Collects output files in memory so they are written only on success."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.files: dict[str, str] = {}

    def json(self, name: str, payload: dict):
        self.files[name] = json.dumps(payload, indent=2) + "\n"

    def csv(self, name: str, header, rows):
        buf = io.StringIO()
        for line in self.cfg.to_text(runtime=False).splitlines():
            buf.write(f"# {line}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
        self.files[name] = buf.getvalue()

    def write(self, out: Path):
        out.mkdir(parents=True, exist_ok=True)
        digests = {}
        for name, text in self.files.items():
            (out / name).write_text(text)
            digests[name] = hashlib.sha256(text.encode()).hexdigest()
        record = {
            "tool": TOOL,
            "version": __version__,
            "hash_version": HASH_VERSION,
            "command": self.cfg.command,
            "master_seed": self.cfg.master_seed,
            "config": self.cfg.to_dict(runtime=False),
            "artifacts": digests,
        }
        (out / "provenance.json").write_text(json.dumps(record, indent=2) + "\n")
        return record


def _report(cfg: ExperimentConfig, passed: bool, result: dict) -> dict:
    return {
        "command": cfg.command,
        "master_seed": cfg.master_seed,
        "config": cfg.to_dict(runtime=False),
        "passed": bool(passed),
        "result": result,
    }


def _dimension_config(cfg: ExperimentConfig) -> DimensionConfig:
    return DimensionConfig(n_min=cfg.n_min, n_max=cfg.n_max, s_grid=cfg.s_grid, seeds=cfg.seeds,
                           master_seed=cfg.master_seed, threads=cfg.threads)


def _measure(cfg: ExperimentConfig):
    if cfg.measure == "lebesgue":
        return LebesgueMeasure(cfg.d)
    return CascadeFamily(cfg.model(), cfg.refinement, cfg.tail_extra)


def _reference_dimension(cfg: ExperimentConfig):
    """The dimension a run should find, when the set's Lebesgue dimension is known."""
    zeta0 = cfg.target().analytic_zeta0
    if zeta0 is None:
        return None
    if cfg.measure == "lebesgue":
        return float(zeta0)
    return phi_inverse(cfg.model(), zeta0, cfg.refinement)


def _mean_se(values):
    values = np.asarray(values, dtype=np.float64)
    se = float(values.std(ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0
    return float(values.mean()), se


# -- commands -----------------------------------------------------------------

def cmd_validate(cfg, art):
    report = validate(cfg.model())
    art.json("report.json", _report(cfg, report.ok, report.to_dict()))
    status = "ok" if report.ok else "failed: " + ", ".join(report.failures())
    return report.ok, f"{cfg.model().spec()} d={cfg.d}: {status}"


def cmd_mass_stats(cfg, art):
    model = cfg.model()
    root = DyadicAddress.root(cfg.d)
    n = cfg.depth + cfg.tail_extra
    seeds = derive_seeds(cfg.master_seed, cfg.seeds)
    log2m = batch_log2_mass(model, seeds, root, n, cfg.refinement)
    mass = np.exp2(log2m)
    mean, se = _mean_se(mass)
    m2, se2 = _mean_se(mass**2)
    oracle = second_moment_oracle(model, n, cfg.refinement)
    checks = {
        "mean": abs(mean - 1.0) <= 3 * se,
        "second_moment": abs(m2 - oracle) <= 3 * se2,
    }
    jensen = []
    for s in JENSEN_S:
        ms, ses = _mean_se(mass**s)
        ok = ms <= 1.0 + 3 * ses
        checks[f"jensen_{s}"] = ok
        jensen.append({"s": s, "mean": ms, "stderr": ses, "passed": ok})
    passed = all(checks.values())
    result = {
        "depth": cfg.depth,
        "trunc_depth": n,
        "seeds": cfg.seeds,
        "mean": mean,
        "stderr": se,
        "second_moment": m2,
        "second_moment_stderr": se2,
        "second_moment_oracle": oracle,
        "second_moment_limit": second_moment_oracle(model, None, cfg.refinement),
        "jensen": jensen,
        "checks": checks,
    }
    art.json("report.json", _report(cfg, passed, result))
    art.csv("mass.csv", ("seed", "address", "depth", "log2_mass"),
            ((s, root.to_string(), n, float(v)) for s, v in zip(seeds, log2m)))
    return passed, f"mean={mean:.5f}±{se:.5f} E[l^2]={m2:.5f}±{se2:.5f} (oracle {oracle:.5f})"


def cmd_dimension(cfg, art):
    target = cfg.target()
    estimate = estimate_dimension(_measure(cfg), target, _dimension_config(cfg))
    reference = _reference_dimension(cfg)
    passed = reference is None or abs(estimate.zeta_hat - reference) <= cfg.tolerance
    result = dict(estimate.to_json(), reference=reference, tolerance=cfg.tolerance)
    art.json("report.json", _report(cfg, passed, result))
    art.csv("partition.csv", ("set", "measure", "seed", "n", "s", "log2_Z"),
            (row for t in estimate.tables for row in t.rows()))
    ref = "n/a" if reference is None else f"{reference:.5f}"
    return passed, f"zeta_hat={estimate.zeta_hat:.5f}±{estimate.stderr:.5f} reference={ref}"


def cmd_energy(cfg, art):
    target = cfg.target()
    measure = _measure(cfg)
    # The natural measure is a Frostman witness for Lebesgue only.
    reference = _reference_dimension(cfg) if cfg.measure == "lebesgue" else None
    depths = range(cfg.n_min, cfg.n_max + 1)
    profiles, rows, passed, lines = [], [], True, []
    for s in cfg.s_grid:
        est = energy_growth_profile(measure, target, s, depths, cfg.points, cfg.seeds,
                                    cfg.master_seed, threads=cfg.threads)
        expected = None
        if reference is not None:
            if s < reference - ENERGY_MARGIN:
                expected = "bounded"
            elif s > reference + ENERGY_MARGIN:
                expected = "diverging"
        ok = expected is None or est.growth == expected
        passed &= ok
        profiles.append({
            "s": s,
            "profile": [{"depth": m, "energy": v} for m, v in est.profile.items()],
            "ratios": list(est.ratios),
            "eventual_ratio": est.eventual_ratio,
            "growth": est.growth,
            "expected": expected,
            "passed": ok,
        })
        rows.extend(est.rows)
        lines.append(f"s={s:g} eventual_ratio={est.eventual_ratio:.4f} {est.growth}")
    result = {"set": target.spec(), "measure": measure.label(), "points": cfg.points,
              "reference": reference, "profiles": profiles}
    art.json("report.json", _report(cfg, passed, result))
    art.csv("energy.csv", ("set", "measure", "seed", "s", "depth", "energy"), rows)
    return passed, "\n".join(lines)


def cmd_kpz(cfg, art):
    report = kpz_experiment(cfg.model(), cfg.target(), _dimension_config(cfg), cfg.tolerance,
                            cfg.refinement, cfg.tail_extra)
    payload = report.to_json()
    payload["config"] = cfg.to_dict(runtime=False)
    art.json("report.json", payload)
    tables = list(report.estimate.tables)
    if report.lebesgue is not None:
        tables = list(report.lebesgue.tables) + tables
    art.csv("partition.csv", ("set", "measure", "seed", "n", "s", "log2_Z"),
            (row for t in tables for row in t.rows()))
    return report.passed, report.summary()


def cmd_bound_check(cfg, art):
    c = CascadeMeasure(cfg.master_seed, cfg.model(), cfg.refinement)
    checks = verify_mass_bound(c, cfg.depth, cfg.s_grid, cfg.seeds, tail_extra=cfg.tail_extra)
    passed = all(b.passed for b in checks)
    art.json("report.json", _report(cfg, passed, {"depth": cfg.depth, "checks": [b.to_json() for b in checks]}))
    lines = [f"s={b.s:g} mean={b.mean:.6g}±{b.stderr:.2g} bound={b.bound:.6g} "
             f"{'PASS' if b.passed else 'FAIL'}" for b in checks]
    return passed, "\n".join(lines)


HANDLERS = {
    "validate": cmd_validate,
    "mass-stats": cmd_mass_stats,
    "dimension": cmd_dimension,
    "energy": cmd_energy,
    "kpz": cmd_kpz,
    "bound-check": cmd_bound_check,
}


def run(cfg: ExperimentConfig) -> tuple[int, dict]:
    """Execute ``cfg`` and write its artifacts; returns (exit status, provenance)."""
    art = Artifacts(cfg)
    passed, summary = HANDLERS[cfg.command](cfg, art)
    record = art.write(Path(cfg.out))
    print(summary)
    return (EXIT_PASS if passed else EXIT_FAIL), record


def replay(provenance_path, out=None, threads=None, master_seed=None) -> tuple[int, dict]:
    """Re-run a recorded experiment; fails with exit 2 if any artifact differs."""
    record = json.loads(Path(provenance_path).read_text())
    if record.get("tool") != TOOL:
        raise ReplayError(f"{provenance_path} is not a {TOOL} provenance record")
    if record.get("version") != __version__:
        raise ReplayError(f"recorded with version {record.get('version')}, this build is {__version__}")
    if record.get("hash_version") != HASH_VERSION:
        raise ReplayError(f"recorded with hash {record.get('hash_version')}, this build provides {HASH_VERSION}")
    values = dict(record["config"])
    values["out"] = out or str(Path(provenance_path).parent / "replay")
    values["threads"] = threads
    changed = master_seed is not None and master_seed != values["master_seed"]
    if master_seed is not None:
        values["master_seed"] = master_seed
    status, new = run(from_values(values))
    if changed:
        print("master seed changed; artifacts not compared")
        return status, new
    differ = sorted(k for k in record["artifacts"] if new["artifacts"].get(k) != record["artifacts"][k])
    if differ:
        print(f"replay mismatch: {', '.join(differ)}")
        return EXIT_FAIL, new
    print(f"replay identical: {len(record['artifacts'])} artifacts")
    return status, new


# -- argument parsing ---------------------------------------------------------

def _add_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--d", type=int)
    p.add_argument("--weight", help='e.g. "lognormal(sigma2=0.5)" or "twopoint(a=0.5,b=1.5,p=0.5)"')
    p.add_argument("--set", help='e.g. "fullcube", "cantor(keep=[0,3])", "slice(axis=1,coord=0.5)"')
    p.add_argument("--measure", choices=("cascade", "lebesgue"))
    p.add_argument("--refinement", choices=("axis", "cube"))
    p.add_argument("--n-min", type=int)
    p.add_argument("--n-max", type=int)
    p.add_argument("--s-grid", type=parse_s_grid, help="comma list or start:stop:step")
    p.add_argument("--seeds", type=int)
    p.add_argument("--master-seed", type=int)
    p.add_argument("--tail", help="mean_one or extended(q)")
    p.add_argument("--threads", type=int, help=f"defaults to ${THREADS_ENV} or 1")
    p.add_argument("--out")
    p.add_argument("--tolerance", type=float)
    p.add_argument("--depth", type=int)
    p.add_argument("--points", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cascade-kpz", description="Cascade measures and the KPZ dimension relation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        _add_flags(sub.add_parser(name))
    rp = sub.add_parser("replay", help="re-run a provenance.json and compare artifacts")
    rp.add_argument("provenance")
    rp.add_argument("--out")
    rp.add_argument("--threads", type=int)
    rp.add_argument("--master-seed", type=int)
    return parser


def config_from_args(args) -> ExperimentConfig:
    values = parse_text(Path(args.config).read_text()) if args.config else {}
    for key, value in vars(args).items():
        if key != "config" and value is not None:
            values[key] = value
    return from_values(values)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "replay":
            status, _ = replay(args.provenance, args.out, args.threads, args.master_seed)
        else:
            status, _ = run(config_from_args(args))
    except (CascadeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return status
