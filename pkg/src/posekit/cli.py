"""Command-line entry points: ingest, train-ae, train-solver, solve, bench,
serve, demo-data.

Common flags: --seed, --config <key=value file>, --out <path>.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from posekit import bench as bench_mod
from posekit.autoencoder import PoseAutoencoder
from posekit.bvh import BvhError, parse_bvh
from posekit.dataset import PoseDataset, is_jittery, load_dataset, save_dataset
from posekit.skeleton import JointMapping, MappingError, retarget
from posekit.solver import LatentSolver, SolverSystem, TargetSpec


def _load_config(path: str | None) -> dict[str, str]:
    if path is None:
        return {}
    config: dict[str, str] = {}
    with open(path) as f:
        for line in f:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise SystemExit(f"config: expected 'key = value', got {line!r}")
            key, value = (p.strip() for p in line.split("=", 1))
            config[key] = value
    return config


def _config_override(args, config: dict[str, str], names: dict[str, type]) -> dict:
    out = {}
    for name, cast in names.items():
        if getattr(args, name, None) is not None:
            out[name] = getattr(args, name)
        elif name in config:
            out[name] = cast(config[name])
    return out


def cmd_ingest(args) -> int:
    if args.mapping:
        with open(args.mapping) as f:
            mapping = JointMapping.parse(f.read())
    else:
        mapping = JointMapping.identity()
    files = sorted(
        os.path.join(args.input_dir, name)
        for name in os.listdir(args.input_dir)
        if name.lower().endswith(".bvh")
    )
    if not files:
        print(f"error: no .bvh files in {args.input_dir}", file=sys.stderr)
        return 1
    clips, failures, dropped = [], [], 0
    for path in files:
        try:
            with open(path) as f:
                clip = parse_bvh(f.read())
            canonical = retarget(clip, mapping, source_id=os.path.basename(path))
        except (BvhError, MappingError, OSError) as exc:
            failures.append(f"{path}: {exc}")
            continue
        if is_jittery(canonical):
            dropped += 1
            continue
        clips.append(canonical)
    for line in failures:
        print(f"warning: {line}", file=sys.stderr)
    if not clips:
        print("error: no usable clips after parsing and filtering", file=sys.stderr)
        return 1
    dataset = PoseDataset.build(clips, seed=args.seed)
    save_dataset(dataset, args.out)
    print(
        f"wrote {args.out}: {dataset.n_poses} poses from {len(clips)} clips "
        f"({dropped} jittery clips dropped, {len(failures)} files failed)"
    )
    return 0


def cmd_train_ae(args) -> int:
    config = _load_config(args.config)
    dataset = load_dataset(args.dataset)
    overrides = _config_override(
        args, config, {"epochs": int, "batch_size": int, "learning_rate": float}
    )
    ae = PoseAutoencoder(seed=args.seed, **overrides)
    params = ae.get_params()
    print(
        f"training autoencoder: epochs={params['epochs']} "
        f"batch_size={params['batch_size']} learning_rate={params['learning_rate']} "
        f"latent_dim={params['latent_dim']} seed={args.seed}"
    )
    ae.fit(dataset)
    system = SolverSystem(ae, dataset.stats, [])
    system.save(args.out)
    _write_loss_log(os.path.join(args.out, "ae_loss.log"), ae.loss_history_)
    last = ae.loss_history_[-1]
    print(f"done: final train loss {last['train_loss']:.5f}")
    return 0


def cmd_train_solver(args) -> int:
    config = _load_config(args.config)
    dataset = load_dataset(args.dataset)
    system = SolverSystem.load(args.out)
    joints = tuple(int(j) for j in args.joints.split(","))
    overrides = _config_override(
        args, config, {"epochs": int, "batch_size": int, "learning_rate": float}
    )
    solver = LatentSolver(target_joints=joints, seed=args.seed, **overrides)
    params = solver.get_params()
    print(
        f"training solver for joints {joints}: epochs={params['epochs']} "
        f"k={params['k']} batch_size={params['batch_size']} "
        f"learning_rate={params['learning_rate']} seed={args.seed}"
    )
    solver.fit(dataset, system.autoencoder)
    name = "solver_" + "_".join(map(str, sorted(joints))) + ".npw"
    solver.save(os.path.join(args.out, name))
    _write_loss_log(
        os.path.join(args.out, name.replace(".npw", "_loss.log")),
        solver.loss_history_,
    )
    last = solver.loss_history_[-1]
    print(f"done: final train loss {last['train_loss']:.5f}")
    return 0


def _write_loss_log(path: str, history: list[dict]) -> None:
    with open(path, "w") as f:
        f.write("epoch\ttrain_loss\tval_loss\n")
        for h in history:
            val = f"{h['val_loss']:.6f}" if "val_loss" in h else "-"
            f.write(f"{h['epoch']}\t{h['train_loss']:.6f}\t{val}\n")


def cmd_solve(args) -> int:
    system = SolverSystem.load(args.models)
    with open(args.input) as f:
        request = json.load(f)
    pose = np.asarray(request["pose"], dtype=np.float64)
    specs = [
        TargetSpec(
            joint_indices=tuple(int(j) for j in s["joints"]),
            positions=np.asarray(s["positions"], dtype=np.float64),
        )
        for s in request.get("targets", [])
    ]
    solved = system.solve(pose, specs, post_process=request.get("post_process", False))
    with open(args.out, "w") as f:
        json.dump({"pose": [float(v) for v in solved]}, f)
    print(f"wrote {args.out}")
    return 0


def cmd_bench(args) -> int:
    system = SolverSystem.load(args.models)
    dataset = load_dataset(args.dataset)
    poses = dataset.validation_poses()
    if poses.shape[0] < 2:
        poses = dataset.train_poses()
    report = bench_mod.run_benchmark(
        system, poses, iterations=args.iterations, seed=args.seed
    )
    print(report.as_text())
    if args.out:
        with open(args.out, "w") as f:
            f.write(report.as_tsv() + "\n")
        print(f"wrote {args.out}")
    return 0


def cmd_serve(args) -> int:
    from posekit.service import serve

    system = SolverSystem.load(args.models)
    print(f"serving on ws://{args.bind}:{args.port}/ws")
    serve(system, bind=args.bind, port=args.port)
    return 0


def cmd_demo_data(args) -> int:
    from posekit.synth import generate_corpus

    paths = generate_corpus(
        args.out, n_clips=args.clips, n_frames=args.frames, seed=args.seed
    )
    print(f"wrote {len(paths)} synthetic clips to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="posekit", description="Data-driven character pose editing toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--config", help="plain-text key=value config file")

    p = sub.add_parser("ingest", help="build an NPK1 dataset from BVH files")
    p.add_argument("input_dir")
    p.add_argument("--mapping", help="joint mapping file (defaults to identity)")
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("train-ae", help="train the pose autoencoder")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True, help="model directory to create")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    common(p)
    p.set_defaults(fn=cmd_train_ae)

    p = sub.add_parser("train-solver", help="train a latent solver instance")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True, help="model directory holding the autoencoder")
    p.add_argument("--joints", required=True, help="comma-separated canonical indices")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    common(p)
    p.set_defaults(fn=cmd_train_solver)

    p = sub.add_parser("solve", help="one-shot solve: JSON request in, JSON pose out")
    p.add_argument("--models", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("bench", help="runtime/footprint comparison vs FABRIK")
    p.add_argument("--models", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--iterations", type=int, default=1000)
    p.add_argument("--out", help="write machine-readable TSV rows here")
    common(p)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("serve", help="run the interactive solve service")
    p.add_argument("--models", required=True)
    p.add_argument("--bind", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    common(p)
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("demo-data", help="generate synthetic BVH clips")
    p.add_argument("--out", required=True)
    p.add_argument("--clips", type=int, default=30)
    p.add_argument("--frames", type=int, default=400)
    common(p)
    p.set_defaults(fn=cmd_demo_data)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
