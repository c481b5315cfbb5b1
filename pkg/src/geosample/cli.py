"""Batch front end: generate point sets, build structures, verify, bench.

Every subcommand is a pure function of its flags; all randomness flows from
the mandatory --seed through named substreams, so reruns with the same flags
produce byte-identical output files.  No wall-clock seeding, no interactive
mode; plotting is a downstream concern (we emit CSV).
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, fields
from fractions import Fraction
from typing import List, Optional

import numpy as np

from .constants import DEFAULTS, FrozenConstants
from .counting2d import (
    build_fast,
    build_linear,
    query_fast,
    query_linear,
    summary_csv,
)
from .datasets import (
    convex_points,
    grid_block_partition,
    grid_points,
    paraboloid_grid,
    row_block_partition,
    uniform_points2d,
)
from .geometry import GE, LE, Halfplane, PointSet, read_points, write_points
from .halving import (
    build_nu_alpha_sample,
    build_relative_approx,
    build_sensitive_improved,
    halving_threshold,
    improved_sensitive_report,
    read_chain,
    write_chain,
)
from .oracles import exact_count
from .rng import derive_seed, substream
from .sampling import (
    NOTIONS,
    RELATIVE_APPROX,
    SampleParams,
    draw_random,
    frac,
    halfplane_space,
    halfspace_space,
    random_sample_size,
    verify,
)
from .seq_approx import build_sequence, read_sequence, write_sequence
from .spanning import (
    crossing_stats,
    paraboloid_counterexample,
    relative_crossing_tree,
    tree_to_matching,
    write_edge_list,
)

__all__ = ["ExperimentConfig", "main"]

DISTRIBUTIONS = ("uniform", "grid", "convex", "paraboloid3d")
BUILD_KINDS = ("nualpha", "relative", "sensitive", "sequence",
               "tree", "matching", "fast", "linear")
BENCH_SCHEMA = "# geosample bench v1"


@dataclass(frozen=True)
class ExperimentConfig:
    """The knobs shared by all subcommands; flags mirror these fields."""

    seed: int
    n: Optional[int] = None
    distribution: str = "uniform"
    eps: Optional[Fraction] = None
    p: Optional[Fraction] = None
    kind: Optional[str] = None
    out: Optional[str] = None
    constants: FrozenConstants = DEFAULTS

    def __post_init__(self):
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(f"unknown distribution {self.distribution!r}")
        for name in ("eps", "p"):
            v = getattr(self, name)
            if v is not None and not 0 < v < 1:
                raise ValueError(f"{name} out of range: {v}")
        for f in fields(FrozenConstants):
            if f.name == "version":
                continue
            if getattr(self.constants, f.name) <= 0:
                raise ValueError(f"constant {f.name} must be positive")


def _parse_constants(text: Optional[str]) -> FrozenConstants:
    """Comma-separated name=value overrides of the frozen defaults."""
    if not text:
        return DEFAULTS
    names = {f.name for f in fields(FrozenConstants)} - {"version"}
    kw = {}
    for item in text.split(","):
        name, _, value = item.partition("=")
        name = name.strip()
        if name not in names:
            raise SystemExit(f"unknown constant {name!r} (have {sorted(names)})")
        kw[name] = float(value)
    return DEFAULTS.with_overrides(**kw)


def _config(args) -> ExperimentConfig:
    return ExperimentConfig(
        seed=args.seed,
        n=getattr(args, "n", None),
        distribution=getattr(args, "distribution", "uniform"),
        eps=frac(args.eps) if getattr(args, "eps", None) else None,
        p=frac(args.p) if getattr(args, "p", None) else None,
        kind=getattr(args, "kind", None) or getattr(args, "structure", None),
        out=getattr(args, "out", None),
        constants=_parse_constants(getattr(args, "constants", None)),
    )


def _generate(cfg: ExperimentConfig) -> PointSet:
    n = cfg.n
    if n is None or n < 1:
        raise SystemExit("--n must be a positive integer")
    if cfg.distribution == "uniform":
        return uniform_points2d(n, cfg.seed)
    if cfg.distribution == "convex":
        return convex_points(n, cfg.seed)
    # the grid families are m x m; n names the total point count
    m = math.isqrt(n)
    if m * m != n:
        raise SystemExit(f"{cfg.distribution} needs n to be a perfect square")
    return grid_points(m) if cfg.distribution == "grid" else paraboloid_grid(m)


def _load_points(args, cfg: ExperimentConfig) -> PointSet:
    if getattr(args, "points", None):
        return read_points(args.points)
    if cfg.n is None:
        raise SystemExit("need --points FILE or --n/--distribution")
    return _generate(cfg)


# ---------------------------------------------------------------------------
# subcommands


def cmd_generate(args) -> int:
    cfg = _config(args)
    ps = _generate(cfg)
    write_points(ps, args.out)
    print(f"wrote {len(ps)} points ({cfg.distribution}) to {args.out}")
    return 0


def cmd_build(args) -> int:
    cfg = _config(args)
    P = _load_points(args, cfg)
    kind = cfg.kind
    source = f"cli build kind={kind} n={len(P)} seed={cfg.seed}"

    def need(name):
        v = getattr(cfg, name, None) or getattr(args, name, None)
        if v is None:
            raise SystemExit(f"build kind {kind} requires --{name}")
        return frac(v)

    if kind == "nualpha":
        chain = build_nu_alpha_sample(P, need("nu"), need("alpha"), cfg.seed,
                                      cfg.constants)
        write_chain(args.out, chain, source=source)
        print(f"chain levels {[len(l) for l in chain.levels]} -> {args.out}")
    elif kind == "relative":
        chain = build_relative_approx(P, need("p"), need("eps"), cfg.seed,
                                      cfg.constants)
        write_chain(args.out, chain, source=source)
        print(f"chain levels {[len(l) for l in chain.levels]} -> {args.out}")
    elif kind == "sensitive":
        chain = build_sensitive_improved(P, need("eps"), cfg.seed, cfg.constants)
        write_chain(args.out, chain, source=source)
        print(f"chain levels {[len(l) for l in chain.levels]} -> {args.out}")
    elif kind == "sequence":
        S = build_sequence(P, need("p"), need("eps"), seed=cfg.seed,
                           constants=cfg.constants)
        write_sequence(args.out, S, source=source)
        print(f"sequence sizes {[len(i) for i in S.indices]} -> {args.out}")
    elif kind in ("tree", "matching"):
        T = relative_crossing_tree(P)
        obj = tree_to_matching(T, P) if kind == "matching" else T
        write_edge_list(args.out, obj, source=source, seed=cfg.seed)
        rows = obj.pairs if kind == "matching" else obj.edges
        print(f"{kind} with {len(rows)} edges -> {args.out}")
    elif kind in ("fast", "linear"):
        builder = build_fast if kind == "fast" else build_linear
        S = builder(P, need("eps"), cfg.seed, cfg.constants)
        with open(args.out, "w") as fh:
            fh.write(summary_csv(S))
        size = S.complexity if kind == "fast" else S.storage
        print(f"{kind} structure size {size} -> {args.out}")
    else:
        raise SystemExit(f"unknown build kind {kind!r} (have {BUILD_KINDS})")
    return 0


def _chain_params(meta_label: str) -> SampleParams:
    kw = {}
    for tok in meta_label.split(";"):
        name, _, value = tok.partition("=")
        kw["fail_prob" if name == "q" else name] = Fraction(value)
    return SampleParams(**kw)


def _verify_chain(path: str, P: PointSet, lines: List[str]) -> bool:
    try:
        chain = read_chain(path)
    except ValueError as exc:
        lines.append(f"FAIL chain-structure {exc}")
        return False
    lines.append(f"PASS chain-structure levels={[len(l) for l in chain.levels]}")
    params = _chain_params(chain.meta.get("label", ""))
    space = halfplane_space(P)
    idx = chain.final_indices
    if chain.kind == "sensitive_improved":
        report = improved_sensitive_report(idx, space, params.eps)
    else:
        report = verify(chain.kind, idx, space, params)
    if report.holds:
        lines.append(f"PASS {chain.kind} sample of {report.n_sample} over "
                     f"{report.n_ranges} ranges")
    else:
        lines.append(f"FAIL {chain.kind} worst violation "
                     f"{report.worst_violation} at {report.worst_range}")
    return report.holds


def _verify_sequence(path: str, P: PointSet, cfg, lines: List[str]) -> bool:
    S = read_sequence(path, P)
    space = halfspace_space(P) if P.dim == 3 else halfplane_space(P)
    ok = True
    for t, (pt, idx) in enumerate(zip(S.thresholds, S.indices)):
        if len(idx) == len(P):
            lines.append(f"PASS Z_{t} is the ground set (exact)")
            continue
        params = SampleParams(p=pt, eps=S.c_small * S.eps)
        report = verify(RELATIVE_APPROX, np.asarray(idx), space, params)
        tag = "PASS" if report.holds else "FAIL"
        ok = ok and report.holds
        detail = ("" if report.holds else
                  f" worst {report.worst_violation} at {report.worst_range}")
        lines.append(f"{tag} Z_{t} p_t={pt} size={len(idx)}{detail}")
    return ok


def _verify_module(module: str, P: PointSet, cfg: ExperimentConfig,
                   lines: List[str]) -> bool:
    n = len(P)
    cons = cfg.constants
    eps = cfg.eps if cfg.eps is not None else Fraction(1, 2)
    p = cfg.p if cfg.p is not None else Fraction(1, 8)
    ok = True

    def record(passed, name, detail):
        nonlocal ok
        ok = ok and passed
        lines.append(f"{'PASS' if passed else 'FAIL'} {name} {detail}")

    if module in ("spanning", "all"):
        T = relative_crossing_tree(P)
        w, x = crossing_stats(P, T.edges)
        wl = np.maximum(w, 1)
        ratio = x / (np.sqrt(wl) * np.log(2.0 * n / wl))
        worst = int(np.argmax(ratio))
        record(float(ratio[worst]) <= cons.c_relative, "relative-tree",
               f"max ratio {ratio[worst]:.3f} (w={w[worst]}, x={x[worst]}) "
               f"vs c_relative={cons.c_relative}")
        M = tree_to_matching(T, P)
        _, xm = crossing_stats(P, M.pairs)
        bad = int(np.sum(xm > 2 * x))
        worst_m = int(np.argmax(xm - 2 * x))
        record(bad == 0, "matching-doubling",
               f"{bad} lines exceed 2x tree crossings "
               f"(worst {xm[worst_m]} vs 2*{x[worst_m]})")
    if module in ("halving", "all"):
        chain = build_relative_approx(P, p, eps, cfg.seed, cons)
        sizes = [len(l) for l in chain.levels]
        record(all(2 * b == a for a, b in zip(sizes, sizes[1:])),
               "halving-balance", f"levels {sizes}")
        params = SampleParams(p=p, eps=eps)
        report = verify(RELATIVE_APPROX, chain.final_indices,
                        halfplane_space(P), params)
        record(report.holds, "halving-output",
               f"size {report.n_sample}, worst margin {report.worst_violation}")
    if module in ("sampling", "all"):
        params = SampleParams(p=p, eps=eps, nu=p, alpha=Fraction(1, 5))
        space = halfplane_space(P)
        for notion in NOTIONS:
            idx = draw_random(notion, space, params,
                              derive_seed(cfg.seed, "verify", notion))
            report = verify(notion, idx, space, params)
            record(report.holds, f"random-{notion}",
                   f"size {report.n_sample}, worst margin {report.worst_violation}")
    if module in ("counting", "all"):
        F = build_fast(P, eps, derive_seed(cfg.seed, "verify", "fast"), cons)
        L = build_linear(P, eps, derive_seed(cfg.seed, "verify", "linear"), cons)
        gamma_floor = min(
            (stack.bounds[stack.gamma_start][0]
             for stack in (L.below, L.above)
             if stack.gamma_start < len(stack.curves)),
            default=n + 1)
        rng = substream(cfg.seed, "verify", "counting")
        ranges = halfplane_space(P).ranges
        picks = rng.choice(len(ranges), size=min(200, len(ranges)), replace=False)
        worst = (0.0, None)
        contract_bad = exact_bad = 0
        for k in picks:
            h = ranges[int(k)]
            wtrue = exact_count(P, h)
            af, al = query_fast(F, h), query_linear(L, h)
            if abs(af - wtrue) > eps * wtrue or abs(al - wtrue) > eps * wtrue:
                contract_bad += 1
            if wtrue < gamma_floor and al != wtrue:
                exact_bad += 1
            err = max(abs(af - wtrue), abs(al - wtrue)) / max(wtrue, 1)
            if err > worst[0]:
                worst = (err, h)
        record(contract_bad == 0 and exact_bad == 0, "counting-contracts",
               f"{len(picks)} sampled canonical ranges, worst rel err "
               f"{worst[0]:.3f} at {worst[1]}")
    return ok


def cmd_verify(args) -> int:
    cfg = _config(args)
    lines: List[str] = []
    if args.chain:
        P = read_points(args.points) if args.points else None
        if P is None:
            raise SystemExit("--chain requires --points")
        ok = _verify_chain(args.chain, P, lines)
    elif args.sequence:
        if not args.points:
            raise SystemExit("--sequence requires --points")
        ok = _verify_sequence(args.sequence, read_points(args.points), cfg, lines)
    else:
        P = _load_points(args, cfg)
        ok = _verify_module(args.module, P, cfg, lines)
    for line in lines:
        print(line)
    print("OK" if ok else "FAILED")
    return 0 if ok else 1


def cmd_bench(args) -> int:
    cfg = _config(args)
    sizes = [int(s) for s in args.sizes.split(",") if s.strip()] if args.sizes else []
    eps = cfg.eps if cfg.eps is not None else Fraction(1, 4)
    p = cfg.p if cfg.p is not None else Fraction(1, 8)
    rows = [BENCH_SCHEMA, "n,seed,metric,value"]
    for n in sizes:
        cell_seed = derive_seed(cfg.seed, "bench", n)
        P = uniform_points2d(n, cell_seed)
        T = relative_crossing_tree(P)
        w, x = crossing_stats(P, T.edges)
        wl = np.maximum(w, 1)
        ratio = x / (np.sqrt(wl) * np.log(2.0 * n / wl))
        params = SampleParams(p=p, eps=eps)
        metrics = [
            ("rel_tree_max_crossings", int(x.max())),
            ("rel_tree_max_ratio", float(ratio.max())),
            ("relative_sample_size",
             random_sample_size(RELATIVE_APPROX, params, vc_dim=3)),
            ("halving_threshold",
             float(halving_threshold(p, eps / 4, cfg.constants))),
        ]
        for name, value in metrics:
            rows.append(f"{n},{cell_seed},{name},{value!r}"
                        if isinstance(value, float) else
                        f"{n},{cell_seed},{name},{value}")
    text = "\n".join(rows) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_counterexample(args) -> int:
    m, k = args.m, args.k
    if args.partition == "one":
        partition = [list(range(m * m))]
    elif args.partition == "rows":
        partition = row_block_partition(m, k)
    else:
        partition = grid_block_partition(m, k)
    report = paraboloid_counterexample(m, partition)
    rows = ["axis,offset,parts_crossed"]
    for (axis, c), cnt in zip(report.planes, report.crossed):
        rows.append(f"{axis},{c},{cnt}")
    text = "\n".join(rows) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    n = m * m
    k_eff = len(partition)
    print(f"max parts crossed: {report.max_crossings} "
          f"(floor(sqrt(n/k)) = {math.isqrt(n // k_eff)})")
    return 0


def _read_queries(path) -> List[Halfplane]:
    out = []
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            a, b, c, sense = line.split()
            if sense.lower() not in (LE, GE):
                raise SystemExit(f"bad sense {sense!r} (want le or ge)")
            out.append(Halfplane(int(a), int(b), int(c), sense.lower()))
    return out


def cmd_count2d(args) -> int:
    cfg = _config(args)
    P = read_points(args.points)
    queries = _read_queries(args.queries)
    if args.structure == "fast":
        S = build_fast(P, frac(args.eps), cfg.seed, cfg.constants)
        answers = [query_fast(S, h) for h in queries]
    else:
        S = build_linear(P, frac(args.eps), cfg.seed, cfg.constants)
        answers = [query_linear(S, h) for h in queries]
    text = "\n".join(str(a) for a in answers) + ("\n" if answers else "")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.summary:
        with open(args.summary, "w") as fh:
            fh.write(summary_csv(S))
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_common(sp, *, n=False, dist=False, eps=False, p=False, out_required=False):
    sp.add_argument("--seed", type=int, required=True,
                    help="root seed; all randomness derives from it")
    sp.add_argument("--constants", default=None, metavar="NAME=V,...",
                    help="override frozen constants")
    if n:
        sp.add_argument("--n", type=int, default=None)
    if dist:
        sp.add_argument("--distribution", choices=DISTRIBUTIONS, default="uniform")
    if eps:
        sp.add_argument("--eps", default=None, help="rational like 1/4")
    if p:
        sp.add_argument("--p", default=None, help="rational like 1/8")
    if out_required:
        sp.add_argument("--out", required=True)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="geosample",
        description="Geometric sampling toolkit: generators, builders, "
                    "verifiers, benchmarks.")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("generate", help="write a deterministic point set")
    _add_common(sp, n=True, dist=True, out_required=True)
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("build", help="build a structure and serialize it")
    _add_common(sp, n=True, dist=True, eps=True, p=True, out_required=True)
    sp.add_argument("--kind", choices=BUILD_KINDS, required=True)
    sp.add_argument("--points", default=None, help="point-set file")
    sp.add_argument("--nu", default=None, help="rational, for kind=nualpha")
    sp.add_argument("--alpha", default=None, help="rational, for kind=nualpha")
    sp.set_defaults(func=cmd_build)

    sp = sub.add_parser("verify", help="re-check invariants; exit 0 iff pass")
    _add_common(sp, n=True, dist=True, eps=True, p=True)
    sp.add_argument("--points", default=None)
    sp.add_argument("--chain", default=None, help="chain file to re-verify")
    sp.add_argument("--sequence", default=None, help="sequence file to re-verify")
    sp.add_argument("--module", default="all",
                    choices=("spanning", "halving", "sampling", "counting", "all"))
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("bench", help="emit benchmark CSV rows")
    _add_common(sp, eps=True, p=True)
    sp.add_argument("--sizes", default="", metavar="N1,N2,...",
                    help="comma-separated point counts (empty: header only)")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("counterexample",
                        help="plane-crossing counts on the lifted grid")
    sp.add_argument("--seed", type=int, default=0,
                    help="unused (deterministic command); kept for config symmetry")
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--partition", choices=("grid", "rows", "one"), default="grid")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_counterexample)

    sp = sub.add_parser("count2d", help="answer halfplane counting queries")
    _add_common(sp, eps=True)
    sp.add_argument("--structure", choices=("fast", "linear"), required=True)
    sp.add_argument("--points", required=True)
    sp.add_argument("--queries", required=True,
                    help="file of `a b c le|ge` rows")
    sp.add_argument("--out", default=None)
    sp.add_argument("--summary", default=None, help="write structure CSV here")
    sp.set_defaults(func=cmd_count2d)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
