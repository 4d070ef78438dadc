"""Command line pipeline driver.

Subcommands: generate, run, verify, export-poset, export-complex.  A plain
``key = value`` config file can seed any long option; explicit flags win.
``--threads`` (or FINITESHAPE_THREADS) caps worker parallelism and is recorded
in the run summary; the numeric kernels are vectorized and single-process.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass

from .construction import (
    build_adjusted_sequence,
    check_sequence_inequalities,
    load_sequence_text,
    write_sequence_csv,
    write_sequence_text,
)
from .homotopy import check_diagram_commutes, check_identity_convergence
from .hyperspace import (
    BondingDiameterError,
    ElementCapError,
    bonding_map,
    build_hyperlevel,
    composite_bonding,
    export_poset_csv,
    export_poset_dot,
    is_continuous,
    verify_adjusted_distance_bounds,
)
from .invariants import (
    export_complex_csv,
    export_complex_off,
    order_complex,
    rips_complex,
    shape_report,
    write_homology_csv,
)
from .metric import SpaceSpec, generate, load_ground, write_coords_csv


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    space: str | None = None
    n: int = 256
    radius: float = 1.0
    separation: float = 1.0
    length: float = 1.0
    cantor_depth: int = 4
    seed: int = 0
    input: str | None = None
    format: str = "coords_csv"
    epsilon1: float | None = None  # None: half the space diameter
    depth: int = 4
    safety: float = 0.9
    tie_tol: float = 1e-9
    maxdim: int = 1
    cap: int | None = None  # None: maxdim + 2
    window: int = 2
    outdir: str = "out"
    threads: int = 0  # 0: cpu count
    skip_bounds: bool = False
    skip_identity: bool = False
    skip_diagram: bool = False
    skip_homology: bool = False

    def validate(self) -> None:
        if self.space is None and self.input is None:
            raise ConfigError("either --space or --input is required")
        if self.depth < 1:
            raise ConfigError(f"depth must be >= 1, got {self.depth}")
        if not (0.0 < self.safety < 1.0):
            raise ConfigError(f"safety must lie strictly in (0, 1), got {self.safety}")
        if self.epsilon1 is not None and self.epsilon1 <= 0:
            raise ConfigError(f"epsilon1 must be positive, got {self.epsilon1}")
        if self.tie_tol < 0:
            raise ConfigError("tie tolerance must be nonnegative")
        if self.maxdim not in (1, 2):
            raise ConfigError(f"maxdim must be 1 or 2, got {self.maxdim}")
        if self.cap is not None and self.cap < self.maxdim + 2:
            raise ConfigError(f"cardinality cap {self.cap} too small for maxdim {self.maxdim}")
        if self.window < 2:
            raise ConfigError("stabilization window must be >= 2")
        if self.format not in ("coords_csv", "distmatrix_csv"):
            raise ConfigError(f"unknown input format {self.format}")

    def resolve_threads(self) -> int:
        if self.threads:
            return self.threads
        env = os.environ.get("FINITESHAPE_THREADS")
        if env:
            return int(env)
        return os.cpu_count() or 1


def _spec_from_config(cfg: RunConfig) -> SpaceSpec:
    kind = {"warsaw": "warsaw_circle"}.get(cfg.space, cfg.space)
    return SpaceSpec(
        kind=kind,
        n=cfg.n,
        radius=cfg.radius,
        separation=cfg.separation,
        length=cfg.length,
        cantor_depth=cfg.cantor_depth,
        seed=cfg.seed,
    )


def _load_ground(cfg: RunConfig):
    if cfg.input is not None:
        return load_ground(cfg.input, cfg.format)
    return generate(_spec_from_config(cfg))


def _add_space_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--space", choices=["two_points", "circle", "interval", "cantor", "warsaw", "warsaw_circle"])
    p.add_argument("--n", type=int, default=256, help="sample count")
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--separation", type=float, default=1.0)
    p.add_argument("--length", type=float, default=1.0)
    p.add_argument("--cantor-depth", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)


def _add_run_options(p: argparse.ArgumentParser) -> None:
    _add_space_options(p)
    p.add_argument("--input", help="load a ground sample instead of generating one")
    p.add_argument("--format", choices=["coords_csv", "distmatrix_csv"], default="coords_csv")
    p.add_argument("--epsilon1", type=float, help="first scale (default: half the space diameter)")
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--safety", type=float, default=0.9)
    p.add_argument("--tie-tol", type=float, default=1e-9)
    p.add_argument("--maxdim", type=int, default=1)
    p.add_argument("--cap", type=int, help="element cardinality cap (default maxdim + 2)")
    p.add_argument("--window", type=int, default=2)
    p.add_argument("--outdir", default="out")
    p.add_argument("--threads", type=int, default=0)
    p.add_argument("--config", help="key = value file; explicit flags override it")
    p.add_argument("--skip-bounds", action="store_true")
    p.add_argument("--skip-identity", action="store_true")
    p.add_argument("--skip-diagram", action="store_true")
    p.add_argument("--skip-homology", action="store_true")


_CONFIG_KEYS = {
    "space": str, "n": int, "radius": float, "separation": float, "length": float,
    "cantor_depth": int, "seed": int, "input": str, "format": str, "epsilon1": float,
    "depth": int, "safety": float, "tie_tol": float, "maxdim": int, "cap": int,
    "window": int, "outdir": str, "threads": int,
    "skip_bounds": bool, "skip_identity": bool, "skip_diagram": bool, "skip_homology": bool,
}


def _read_config_file(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in _CONFIG_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            typ = _CONFIG_KEYS[key]
            out[key] = value.lower() in ("1", "true", "yes") if typ is bool else typ(value)
    return out


def _config_from_args(args: argparse.Namespace, explicit: set[str]) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        for key, value in _read_config_file(args.config).items():
            setattr(cfg, key, value)
    for key in _CONFIG_KEYS:
        if key in explicit and hasattr(args, key):
            setattr(cfg, key, getattr(args, key))
        elif getattr(args, "config", None) is None and hasattr(args, key):
            setattr(cfg, key, getattr(args, key))
    cfg.validate()
    return cfg


def _explicit_flags(argv, parser_factory) -> set[str]:
    # parse once with SUPPRESS defaults: only user-passed options survive
    probe = parser_factory(argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS))
    known, _ = probe.parse_known_args(argv)
    return {k for k in vars(known)}


def cmd_generate(args, explicit) -> int:
    cfg = _config_from_args(args, explicit)
    if cfg.space is None:
        raise ConfigError("--space is required for generate")
    ground = generate(_spec_from_config(cfg))
    write_coords_csv(ground, args.out)
    print(f"wrote {ground.n} points to {args.out} (density {ground.density!r})")
    return 0


def _print_verdict(name: str, ok: bool, detail: str) -> bool:
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return ok


def _run_checks(cfg: RunConfig, seq, results: dict) -> bool:
    all_ok = True

    records = check_sequence_inequalities(seq)
    ok = all(r["ok"] for r in records)
    worst = min(records, key=lambda r: r["slack"])
    detail = f"min slack {worst['slack']!r} at {worst['name']}"
    if not ok:
        bad = [r["name"] for r in records if not r["ok"]]
        detail = "violated: " + "; ".join(bad)
    all_ok &= _print_verdict("sequence-inequalities", ok, detail)
    results["inequalities"] = records

    if not cfg.skip_bounds:
        rep = verify_adjusted_distance_bounds(seq, cfg.tie_tol)
        detail = ", ".join(f"{c.name} slack {c.min_slack:.3g}" for c in rep.clauses)
        if not rep.ok:
            detail = "; ".join(f"{c.name}: {len(c.violations)} violations" for c in rep.clauses if c.violations)
        all_ok &= _print_verdict("distance-bounds", rep.ok, detail)
        results["bounds"] = rep

    if not cfg.skip_identity:
        rep = check_identity_convergence(seq, tie_tol=cfg.tie_tol)
        pairs = [f"2eps_{n}->n0={bc.n0_consecutive}/{bc.n0_inclusion}" for n, bc in zip(rep.levels, rep.per_bound)]
        all_ok &= _print_verdict("identity-convergence", rep.ok, " ".join(pairs))
        results["identity"] = rep

    if not cfg.skip_diagram:
        ok = True
        worst_slack = None
        witnesses = []
        for n in range(1, seq.depth):
            w = check_diagram_commutes(seq, n, cfg.tie_tol)
            witnesses.append(w)
            ok &= w.verdict
            if worst_slack is None or w.slack < worst_slack:
                worst_slack = w.slack
        all_ok &= _print_verdict(
            "square-commutes", ok,
            f"{seq.depth - 1} level squares, min slack {worst_slack:.3g}" if worst_slack is not None else "no pairs",
        )
        results["witnesses"] = witnesses

    return all_ok


def cmd_run(args, explicit) -> int:
    cfg = _config_from_args(args, explicit)
    os.makedirs(cfg.outdir, exist_ok=True)
    if not os.access(cfg.outdir, os.W_OK):
        raise ConfigError(f"output directory {cfg.outdir} is not writable")
    t0 = time.time()
    ground = _load_ground(cfg)
    eps1 = cfg.epsilon1 if cfg.epsilon1 is not None else ground.diameter() / 2.0

    seq = build_adjusted_sequence(ground, eps1, cfg.depth, cfg.safety)
    write_sequence_text(seq, os.path.join(cfg.outdir, "sequence.txt"))
    write_sequence_csv(seq, os.path.join(cfg.outdir, "sequence.csv"))
    if ground.coords is not None:
        write_coords_csv(ground, os.path.join(cfg.outdir, "ground.csv"))

    print(f"ground: {ground.n} points, density {ground.density!r}, seed {cfg.seed}")
    print(f"tower: epsilon1 {eps1!r}, depth {seq.depth} of {cfg.depth} requested"
          + (f" (stopped early: {seq.stop_reason})" if seq.stopped_early else ""))
    for lv in seq.levels:
        print(f"  level {lv.index}: epsilon {lv.epsilon:.6g} gamma {lv.gamma:.6g} |net| {len(lv.net)}")

    results: dict = {}
    all_ok = _run_checks(cfg, seq, results)

    if "witnesses" in results:
        with open(os.path.join(cfg.outdir, "witnesses.txt"), "w") as fh:
            for w in results["witnesses"]:
                fh.write(
                    f"check={w.name} bound={w.bound!r} max_union_diameter={w.max_union_diameter!r} "
                    f"slack={w.slack!r} worst_item={w.worst_item} verdict={'pass' if w.verdict else 'fail'}\n"
                )

    if not cfg.skip_homology and seq.depth >= 2:
        rep = shape_report(seq, maxdim=cfg.maxdim, window=cfg.window, cap=cfg.cap, tie_tol=cfg.tie_tol)
        write_homology_csv(rep, os.path.join(cfg.outdir, "homology.csv"))
        with open(os.path.join(cfg.outdir, "homology.txt"), "w") as fh:
            for row in rep.levels:
                fh.write(
                    f"level n={row.index} epsilon={row.epsilon!r} net_size={row.net_size} "
                    f"elements={row.n_elements} betti_order={row.betti_order} betti_scale={row.betti_rips}\n"
                )
            for pr in rep.pairs:
                fh.write(f"pair fine={pr.fine_index} coarse={pr.coarse_index} ranks={pr.ranks}\n")
            fh.write(f"stabilized window={rep.window} ranks={rep.stabilized}\n")
        print("homology (order route = scale route, cross-checked):")
        for row in rep.levels:
            print(f"  level {row.index}: elements {row.n_elements} betti {row.betti_order}")
        for pr in rep.pairs:
            print(f"  induced {pr.fine_index}->{pr.coarse_index}: ranks {pr.ranks}")
        print(f"  stabilized ranks (window {rep.window}): {rep.stabilized}")

    with open(os.path.join(cfg.outdir, "summary.txt"), "w") as fh:
        fh.write(f"verdict = {'pass' if all_ok else 'fail'}\n")
        fh.write(f"threads = {cfg.resolve_threads()}\n")
        fh.write(f"seed = {cfg.seed}\n")
        fh.write(f"elapsed_seconds = {time.time() - t0:.3f}\n")

    print(f"{'all checks passed' if all_ok else 'CHECKS FAILED'} ({time.time() - t0:.2f}s)")
    return 0 if all_ok else 1


def cmd_verify(args, explicit) -> int:
    cfg = _config_from_args(args, explicit)
    ground = _load_ground(cfg)
    if getattr(args, "sequence", None):
        seq = load_sequence_text(ground, args.sequence)
    else:
        eps1 = cfg.epsilon1 if cfg.epsilon1 is not None else ground.diameter() / 2.0
        seq = build_adjusted_sequence(ground, eps1, cfg.depth, cfg.safety)
    results: dict = {}
    ok = _run_checks(cfg, seq, results)

    if seq.depth >= 2 and not cfg.skip_homology:
        try:
            hls = [build_hyperlevel(ground, lv, cap=cfg.cap or cfg.maxdim + 2) for lv in seq.levels]
            mono = True
            for k in range(len(hls) - 1):
                p = bonding_map(ground, hls[k + 1], seq.levels[k], cfg.tie_tol)
                good, ce = is_continuous(p, hls[k + 1])
                mono &= good
            for k in range(len(hls) - 2):
                comp = composite_bonding(ground, hls[k:], cfg.tie_tol)
                good, ce = is_continuous(comp, hls[-1])
                mono &= good
            ok &= _print_verdict("monotone-bondings", mono, f"{len(hls) - 1} steps plus composites")
        except (BondingDiameterError, ElementCapError) as exc:
            ok &= _print_verdict("monotone-bondings", False, str(exc))

    return 0 if ok else 1


def cmd_export_poset(args, explicit) -> int:
    cfg = _config_from_args(args, explicit)
    ground = _load_ground(cfg)
    eps1 = cfg.epsilon1 if cfg.epsilon1 is not None else ground.diameter() / 2.0
    seq = build_adjusted_sequence(ground, eps1, cfg.depth, cfg.safety)
    if not (1 <= args.level <= seq.depth):
        raise ConfigError(f"level {args.level} outside built depth {seq.depth}")
    hl = build_hyperlevel(ground, seq.level(args.level), cap=cfg.cap or cfg.maxdim + 2)
    export_poset_dot(hl, args.out + ".dot")
    export_poset_csv(hl, args.out + ".csv")
    print(f"wrote {hl.n_elements} elements to {args.out}.dot / .csv")
    return 0


def cmd_export_complex(args, explicit) -> int:
    cfg = _config_from_args(args, explicit)
    ground = _load_ground(cfg)
    eps1 = cfg.epsilon1 if cfg.epsilon1 is not None else ground.diameter() / 2.0
    seq = build_adjusted_sequence(ground, eps1, cfg.depth, cfg.safety)
    if not (1 <= args.level <= seq.depth):
        raise ConfigError(f"level {args.level} outside built depth {seq.depth}")
    if args.complex == "order":
        hl = build_hyperlevel(ground, seq.level(args.level), cap=cfg.cap or cfg.maxdim + 2)
        cx = order_complex(hl, cfg.maxdim)
    else:
        cx = rips_complex(ground, seq.level(args.level), cfg.maxdim)
    export_complex_off(cx, args.out + ".off")
    export_complex_csv(cx, args.out + ".csv")
    counts = " ".join(str(cx.count(k)) for k in range(len(cx.simplices)))
    print(f"wrote complex with simplex counts {counts} to {args.out}.off / .csv")
    return 0


def build_parser(parser: argparse.ArgumentParser | None = None) -> argparse.ArgumentParser:
    parser = parser or argparse.ArgumentParser(prog="finiteshape", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="generate a ground sample as coords_csv")
    _add_space_options(p_gen)
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--config", help=argparse.SUPPRESS)
    p_gen.set_defaults(func=cmd_generate, factory=_gen_factory)

    p_run = sub.add_parser("run", help="full pipeline with exports and verdicts")
    _add_run_options(p_run)
    p_run.set_defaults(func=cmd_run, factory=_run_factory)

    p_ver = sub.add_parser("verify", help="verification checks only, machine-readable verdicts")
    _add_run_options(p_ver)
    p_ver.add_argument("--sequence", help="verify a stored sequence export instead of rebuilding")
    p_ver.set_defaults(func=cmd_verify, factory=_run_factory)

    p_ep = sub.add_parser("export-poset", help="DOT and CSV export of one hyperspace level")
    _add_run_options(p_ep)
    p_ep.add_argument("--level", type=int, required=True)
    p_ep.add_argument("--out", required=True, help="output path base (suffixes added)")
    p_ep.set_defaults(func=cmd_export_poset, factory=_run_factory)

    p_ec = sub.add_parser("export-complex", help="facet-list and CSV export of a level complex")
    _add_run_options(p_ec)
    p_ec.add_argument("--level", type=int, required=True)
    p_ec.add_argument("--complex", choices=["order", "rips"], default="order")
    p_ec.add_argument("--out", required=True)
    p_ec.set_defaults(func=cmd_export_complex, factory=_run_factory)

    return parser


def _gen_factory(p):
    _add_space_options(p)
    p.add_argument("--out")
    return p


def _run_factory(p):
    _add_run_options(p)
    p.add_argument("--sequence")
    p.add_argument("--level", type=int)
    p.add_argument("--complex")
    p.add_argument("--out")
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        explicit = _explicit_flags(argv[1:], args.factory)
        return args.func(args, explicit)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
