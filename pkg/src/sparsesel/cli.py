"""Command-line front end: extract, pairs, select, eval, synth.

Every subcommand writes (or prints) its fully resolved configuration so a
run can be reproduced from its outputs alone.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, gabor, pairs, shk, solvers, synth
from .classifiers import (DISTANCES, SelectionModel, dataset_digest, fisher_fit,
                          mmc_classify, mmc_scores, nnc_classify)

ARCHIVE_NAME = "features.gfv"
INDEX_NAME = "index.csv"


def _ratio(text: str) -> tuple[int, int]:
    try:
        a, b = (int(x) for x in text.split(":"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"ratio must look like 1:7, got {text!r}") from exc
    return a, b


def _write_config(path: Path, command: str, args: argparse.Namespace) -> dict:
    cfg = {"command": command, "version": __version__}
    cfg.update({k: (str(v) if isinstance(v, Path) else v)
                for k, v in sorted(vars(args).items()) if k != "func"})
    path.write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return cfg


# --- feature archives --------------------------------------------------------

def write_archive(out_dir, records, paths, subjects) -> None:
    """One GFV1 record per image in ``features.gfv`` plus an ``index.csv``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    offset = 0
    blob = bytearray()
    rows = []
    for i, (fv, p, s) in enumerate(zip(records, paths, subjects)):
        data = gabor.encode_gfv(fv)
        rows.append([i, p, s, offset])
        blob += data
        offset += len(data)
    (out_dir / ARCHIVE_NAME).write_bytes(bytes(blob))
    with open(out_dir / INDEX_NAME, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["record", "path", "subject", "offset"])
        w.writerows(rows)


def read_archive(archive_dir):
    """Return ``(features, paths, subjects)`` from an extract output directory."""
    archive_dir = Path(archive_dir)
    data = (archive_dir / ARCHIVE_NAME).read_bytes()
    with open(archive_dir / INDEX_NAME, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    vectors = [gabor.decode_gfv(data, int(r["offset"]))[0].values for r in rows]
    if not vectors:
        raise ValueError(f"{archive_dir}: feature archive is empty")
    return np.array(vectors), [r["path"] for r in rows], [r["subject"] for r in rows]


# --- subcommands -------------------------------------------------------------

def manifest_from_dir(image_dir) -> pairs.DatasetManifest:
    """Every ``*.pgm`` in sorted order; the subject is the file stem up to the first ``_``."""
    files = sorted(Path(image_dir).glob("*.pgm"))
    return pairs.DatasetManifest(tuple(str(f) for f in files),
                                 tuple(f.stem.split("_", 1)[0] for f in files))


def cmd_extract(args) -> int:
    if args.manifest is not None:
        manifest = pairs.read_manifest(args.manifest)
    elif args.image_dir is not None:
        manifest = manifest_from_dir(args.image_dir)
    else:
        raise SystemExit("error: extract needs --manifest or --image-dir")
    if len(manifest) == 0:
        raise SystemExit(f"error: manifest {args.manifest} has no entries")
    bank = gabor.build_bank()
    records, paths, subjects = [], [], []
    failures = 0
    for p, s in zip(manifest.paths, manifest.subjects):
        try:
            fv = gabor.extract_features(gabor.read_pgm(p), bank, args.downsample)
        except (OSError, ValueError) as exc:
            if not args.continue_on_error:
                raise SystemExit(f"error: {p}: {exc}")
            print(f"skipping {p}: {exc}", file=sys.stderr)
            failures += 1
            continue
        records.append(fv)
        paths.append(p)
        subjects.append(s)
    write_archive(args.out, records, paths, subjects)
    _write_config(Path(args.out) / "config.json", "extract", args)
    print(f"records={len(records)} length={len(records[0]) if records else 0} skipped={failures}")
    return 0


def _pair_matrix(features, subjects, args):
    policy = pairs.SamplingPolicy(args.ratio[0], args.ratio[1], args.seed)
    ps = pairs.build_pairs(features, subjects, policy)
    Y, _, intra = pairs.assemble_matrix(ps, "uniform")
    return Y.values, intra


def cmd_pairs(args) -> int:
    features, _, subjects = read_archive(args.features)
    Y, intra = _pair_matrix(features, subjects, args)
    pairs.write_sppm(args.out, Y, intra)
    _write_config(Path(str(args.out) + ".config.json"), "pairs", args)
    print(f"n={Y.shape[0]} intra={int(intra.sum())} extra={int((~intra).sum())} columns={Y.shape[1]}")
    return 0


def _select_from_args(Y, intra, args):
    stop = None
    if args.solver in ("mp", "omp"):
        stop = solvers.StoppingRule(args.residual_threshold, args.max_atoms)
    l1 = solvers.L1Config(args.gamma, args.l1_max_iterations, args.l1_tol) if args.solver == "l1" else None
    shk_cfg = None
    if args.method == "shk":
        shk_cfg = shk.ShkConfig(eta1=args.eta1, epsilon=args.epsilon,
                                max_outer_iterations=args.max_outer,
                                initial_margin=args.initial_margin,
                                inner_solver=args.solver, stop=stop, l1=l1)
    norms = np.linalg.norm(Y, axis=0)
    dead = np.flatnonzero(norms <= 1e-12 * norms.max())
    return shk.select_features(Y, intra, args.method, args.solver, stop, l1, shk_cfg, dead)


def cmd_select(args) -> int:
    if args.pairs:
        Y, intra = pairs.read_sppm(args.pairs)
    elif args.features:
        features, _, subjects = read_archive(args.features)
        Y, intra = _pair_matrix(features, subjects, args)
    else:
        raise SystemExit("error: select needs --pairs or --features")
    if args.solver == "l1" and args.gamma is None:
        raise SystemExit("error: the l1 solver needs --gamma")
    if args.solver in ("mp", "omp") and args.max_atoms is None and args.residual_threshold == 0:
        raise SystemExit("error: greedy solvers need --max-atoms or --residual-threshold")
    t0 = time.perf_counter()
    try:
        solution, margin, trace = _select_from_args(Y, intra, args)
    except (ValueError, np.linalg.LinAlgError, shk.ShkError) as exc:
        raise SystemExit(f"error: {args.method}/{args.solver} selection failed: {exc}")
    digest = dataset_digest(pairs.encode_sppm(Y, intra))
    model = SelectionModel.from_solution(solution, args.method, args.solver, seed=args.seed,
                                         ratio=f"{args.ratio[0]}:{args.ratio[1]}", digest=digest)
    model.save(args.out)
    _write_config(Path(str(args.out) + ".config.json"), "select", args)
    if trace is not None and args.trace:
        with open(args.trace, "w", newline="", encoding="utf-8") as fh:
            trace.to_csv(fh)
    summary = (f"support={model.support.size} residual={solution.residual_norm!r} "
               f"iterations={solution.iterations}")
    if trace is not None:
        summary += f" outer={len(trace)} converged={trace.converged}"
    print(summary)
    print(f"elapsed={time.perf_counter() - t0:.2f}s", file=sys.stderr)
    return 0


def cmd_eval(args) -> int:
    model = SelectionModel.load(args.model)
    try:
        gallery, _, g_subjects = read_archive(args.gallery)
        probes, p_paths, p_subjects = read_archive(args.probe)
    except ValueError as exc:
        raise SystemExit(f"error: {exc}")
    if gallery.shape[1] != model.dim or probes.shape[1] != model.dim:
        raise SystemExit(f"error: model dimension {model.dim} does not match features "
                         f"({gallery.shape[1]} gallery, {probes.shape[1]} probe)")
    G, P = model.gather(gallery), model.gather(probes)
    rows = []
    below_zero = 0
    fisher = fisher_fit(G, g_subjects) if args.classifier == "fc" else None
    for path, truth, p in zip(p_paths, p_subjects, P):
        score, flag = "", ""
        if args.classifier == "nnc":
            pred = nnc_classify(G, g_subjects, p, args.distance)
        elif args.classifier == "mmc":
            pred = mmc_classify(model.weights, model.bias, G, g_subjects, p)
            best = float(max(mmc_scores(model.weights, model.bias, G, g_subjects, p)[1]))
            # no subject passed g > 0: keep the arg-max but flag it
            score, flag = repr(best), int(best <= 0)
            below_zero += flag
        else:
            pred = fisher.predict(p[None, :], args.distance)[0]
        rows.append([path, truth, pred, int(pred == truth), score, flag])
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "subject", "predicted", "correct", "score", "below_zero"])
        w.writerows(rows)
    _write_config(Path(str(args.out) + ".config.json"), "eval", args)
    correct = sum(r[3] for r in rows)
    print(f"accuracy={correct / len(rows)!r} n={len(rows)}")
    if below_zero:
        print(f"warning: {below_zero} probes had no subject with a positive discriminant",
              file=sys.stderr)
    return 0


def run_synth_checks(seed: int, instances: int, n: int, d: int, k: int,
                     l1_instances: int = 50, shk_instances: int = 10) -> dict:
    """Cross-check OMP and l1 against the exhaustive oracles on seeded instances."""
    agree = 0
    for i in range(instances):
        inst = synth.planted_instance(seed + i, n, d, k)
        bnorm = float(np.linalg.norm(inst.b))
        # k = 0: pure-noise b, a penalty above ||b||^2 and an OMP threshold at ||b||
        thr, tau = (1e-9 * max(bnorm, 1.0), 1e-3) if k > 0 else (bnorm, bnorm + 1.0)
        omp = solvers.solve_omp(inst.Y, inst.b, solvers.StoppingRule(thr, max(k, 1)))
        ora = solvers.oracle_l0(inst.Y, inst.b, tau=tau, max_support=max(k, 1))
        agree += tuple(omp.support) == tuple(ora.support) == inst.support
    gaps, zero_ok = [], 0
    for i in range(l1_instances):
        Y, b = synth.gaussian_instance(seed + 10_000 + i)
        sol = solvers.solve_l1(Y, b, solvers.L1Config(0.1, 200_000, 1e-13))
        ref = solvers.oracle_l1(Y, b, 0.1)
        gaps.append(solvers.l1_objective(Y, b, sol.dense(), 0.1) - ref.history[0])
        gmax = float(np.abs(Y.T @ b).max())
        zero_ok += len(solvers.solve_l1(Y, b, solvers.L1Config(gmax))) == 0
    separated, converged, outer = 0, 0, []
    for i in range(shk_instances):
        X, pos = synth.gaussian_blobs(seed + 20_000 + i)
        Y = np.hstack([np.ones((X.shape[0], 1)), X])
        Y[~pos] *= -1
        sol, _, tr = shk.run_shk(Y, shk.ShkConfig(inner_solver="omp", stop=solvers.StoppingRule(max_atoms=3)))
        separated += bool(np.all(Y @ sol.dense() > 0))
        converged += tr.converged
        outer.append(len(tr))
    report = {
        "omp_support_agreement": agree / instances if instances else 1.0,
        "l1_max_objective_gap": float(max(np.abs(gaps))) if gaps else 0.0,
        "l1_zero_threshold_rate": zero_ok / l1_instances if l1_instances else 1.0,
        "shk_separated_rate": separated / shk_instances if shk_instances else 1.0,
        "shk_mean_outer_iterations": float(np.mean(outer)) if outer else 0.0,
        "shk_converged_rate": converged / shk_instances if shk_instances else 1.0,
    }
    report["passed"] = (report["omp_support_agreement"] == 1.0 and report["l1_max_objective_gap"] <= 1e-6
                        and report["l1_zero_threshold_rate"] == 1.0 and report["shk_separated_rate"] == 1.0)
    return report


def cmd_synth(args) -> int:
    if args.faces_out:
        faces = synth.synthetic_faces(args.seed)
        out = Path(args.faces_out)
        out.mkdir(parents=True, exist_ok=True)
        paths = []
        for i, (img, s) in enumerate(zip(faces.images, faces.subjects)):
            p = out / f"{s}_{i % 6}.pgm"
            gabor.write_pgm(p, img)
            paths.append(p)
        train = [i % 6 < 4 for i in range(len(paths))]
        for name, keep in (("train", True), ("probe", False)):
            sel = [i for i, t in enumerate(train) if t == keep]
            pairs.write_manifest(out / f"{name}.csv",
                                 pairs.DatasetManifest(tuple(str(paths[i]) for i in sel),
                                                       tuple(faces.subjects[i] for i in sel)),
                                 relative_to=out)
        print(f"faces={len(paths)} dir={out}")
    if args.instances > 0:
        if args.d > solvers.MAX_ORACLE_COLUMNS or args.k > solvers.MAX_ORACLE_SUPPORT:
            raise SystemExit(f"error: oracle limited to d <= {solvers.MAX_ORACLE_COLUMNS}, "
                             f"k <= {solvers.MAX_ORACLE_SUPPORT}")
        report = run_synth_checks(args.seed, args.instances, args.n, args.d, args.k,
                                  args.l1_instances, args.shk_instances)
        report["config"] = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
        print(json.dumps(report, indent=2, sort_keys=True))
        return 0 if report["passed"] else 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="sparsesel", description=__doc__, formatter_class=fmt)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="Gabor features for every image in a manifest", formatter_class=fmt)
    p.add_argument("--manifest", type=Path, default=None, help="CSV with columns path,subject")
    p.add_argument("--image-dir", type=Path, default=None,
                   help="directory of <subject>_<n>.pgm files, used when no manifest is given")
    p.add_argument("--out", required=True, type=Path, help="output directory")
    p.add_argument("--downsample", type=int, default=gabor.DEFAULT_DOWNSAMPLE,
                   help="positions kept per image = pixels / downsample")
    p.add_argument("--continue-on-error", action="store_true",
                   help="skip unreadable or ill-sized images instead of stopping")
    p.set_defaults(func=cmd_extract)

    def pair_flags(p):
        p.add_argument("--ratio", type=_ratio, default=(1, 7), help="intra:extra sampling ratio")
        p.add_argument("--seed", type=int, default=42, help="pair sampling seed")

    p = sub.add_parser("pairs", help="sample pairs and write an SPPM matrix", formatter_class=fmt)
    p.add_argument("--features", required=True, type=Path, help="extract output directory")
    p.add_argument("--out", required=True, type=Path, help="SPPM output path")
    pair_flags(p)
    p.set_defaults(func=cmd_pairs)

    p = sub.add_parser("select", help="sparse feature selection", formatter_class=fmt)
    p.add_argument("--pairs", type=Path, help="SPPM pair matrix")
    p.add_argument("--features", type=Path, help="extract output directory (pairs sampled on the fly)")
    p.add_argument("--method", choices=("ssmes", "sfisher", "shk"), default="shk",
                   help="margin regime: fixed unit, fixed class-ratio, or adaptive")
    p.add_argument("--solver", choices=("mp", "omp", "l1"), default="omp", help="sparse solver")
    p.add_argument("--max-atoms", type=int, default=None, help="greedy stop: number of selected columns")
    p.add_argument("--residual-threshold", type=float, default=0.0,
                   help="greedy stop: residual norm threshold (0 disables)")
    p.add_argument("--gamma", type=float, default=None, help="l1 penalty weight (required for l1)")
    p.add_argument("--l1-max-iterations", type=int, default=10_000, help="proximal gradient iteration cap")
    p.add_argument("--l1-tol", type=float, default=1e-10, help="stop when the iterate moves less than this")
    p.add_argument("--eta1", type=float, default=0.5, help="initial margin learn rate, decays as eta1/t")
    p.add_argument("--epsilon", type=float, default=1e-4, help="stop when the margin moves less than this")
    p.add_argument("--max-outer", type=int, default=200, help="outer iteration cap for shk")
    p.add_argument("--initial-margin", type=float, default=1.0, help="uniform starting margin for shk")
    p.add_argument("--trace", type=Path, default=None, help="CSV path for the SHK trace")
    p.add_argument("--out", required=True, type=Path, help="selection model output path")
    pair_flags(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("eval", help="recognition accuracy on a probe set", formatter_class=fmt)
    p.add_argument("--model", required=True, type=Path, help="selection model file")
    p.add_argument("--gallery", required=True, type=Path, help="extract output for the gallery")
    p.add_argument("--probe", required=True, type=Path, help="extract output for the probes")
    p.add_argument("--classifier", choices=("nnc", "mmc", "fc"), default="nnc",
                   help="nearest neighbour, max-margin pair, or Fisher")
    p.add_argument("--distance", choices=DISTANCES, default="l1", help="distance for nnc and fc")
    p.add_argument("--out", required=True, type=Path, help="per-probe predictions CSV")
    p.add_argument("--seed", type=int, default=42, help="recorded for provenance")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="seeded oracle cross-checks and synthetic data", formatter_class=fmt)
    p.add_argument("--seed", type=int, default=42, help="first instance seed")
    p.add_argument("--instances", type=int, default=100, help="planted instances for OMP vs oracle")
    p.add_argument("--n", type=int, default=20, help="rows per planted instance")
    p.add_argument("--d", type=int, default=15, help="columns per planted instance")
    p.add_argument("--k", type=int, default=3, help="planted support size")
    p.add_argument("--l1-instances", type=int, default=50, help="instances for l1 vs oracle")
    p.add_argument("--shk-instances", type=int, default=10, help="separable toy sets for shk")
    p.add_argument("--faces-out", type=Path, default=None,
                   help="also write the synthetic face benchmark as PGM files and manifests")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
