"""Benchmark harness comparing the neural solvers against FABRIK.

Times the full interactive solve path (normalize/encode/solve/decode/
denormalize, model load excluded) over random held-out targets on a
single worker thread, and reports weight footprints from actual
serialized sizes.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from posekit import nn
from posekit.fabrik import FabrikConfig, fabrik_solve_fullbody
from posekit.solver import SolverSystem, TargetSpec

HANDS = (8, 12)
ANKLES = (15, 19)
HEAD = (4,)
FIVE_EFFECTOR_SETS = (HANDS, ANKLES, HEAD)


@dataclass
class BenchRow:
    method: str
    effectors: int
    mean_ms: float
    std_ms: float
    footprint_kb: float | None
    post_process: bool

    def as_tsv(self) -> str:
        fp = f"{self.footprint_kb:.1f}" if self.footprint_kb is not None else "-"
        return "\t".join(
            [
                self.method,
                str(self.effectors),
                f"{self.mean_ms:.4f}",
                f"{self.std_ms:.4f}",
                fp,
                "post" if self.post_process else "raw",
            ]
        )


@dataclass
class BenchReport:
    iterations: int
    rows: list[BenchRow] = field(default_factory=list)

    def as_text(self) -> str:
        header = f"{'method':<10} {'eff':>3} {'mean ms':>9} {'std ms':>8} {'kB':>8} {'post':>5}"
        lines = [header, "-" * len(header)]
        for r in self.rows:
            fp = f"{r.footprint_kb:.1f}" if r.footprint_kb is not None else "-"
            lines.append(
                f"{r.method:<10} {r.effectors:>3} {r.mean_ms:>9.4f} "
                f"{r.std_ms:>8.4f} {fp:>8} {'yes' if r.post_process else 'no':>5}"
            )
        lines.append(f"({self.iterations} random iterations, single worker thread)")
        return "\n".join(lines)

    def as_tsv(self) -> str:
        return "\n".join(r.as_tsv() for r in self.rows)

    def row(self, method: str, effectors: int, post_process: bool) -> BenchRow:
        for r in self.rows:
            if (
                r.method == method
                and r.effectors == effectors
                and r.post_process == post_process
            ):
                return r
        raise KeyError((method, effectors, post_process))


def _specs_from_pose(target_pose: np.ndarray, joint_sets) -> list[TargetSpec]:
    pts = target_pose.reshape(21, 3)
    return [
        TargetSpec(joint_indices=js, positions=pts[list(js)]) for js in joint_sets
    ]


def _footprint_kb(system: SolverSystem, joint_sets) -> float:
    total = len(nn.save_weights(system.autoencoder.model_))
    for js in joint_sets:
        total += len(nn.save_weights(system.solver_for(js).model_))
    return total / 1000.0


def _time_cases(fn, cases) -> tuple[float, float]:
    samples = []
    for case in cases:
        t0 = time.perf_counter()
        fn(case)
        samples.append((time.perf_counter() - t0) * 1000.0)
    arr = np.array(samples)
    return float(arr.mean()), float(arr.std())


def run_benchmark(
    system: SolverSystem,
    eval_poses: np.ndarray,
    iterations: int = 1000,
    seed: int = 0,
    fabrik_config: FabrikConfig | None = None,
) -> BenchReport:
    """Table-style comparison: FABRIK vs neural at 2 and 5 end effectors,
    the neural rows with and without post-processing. Targets are joint
    positions of random held-out poses (reachable by construction)."""
    if eval_poses.shape[0] < 2:
        raise ValueError("need at least 2 evaluation poses")
    rng = np.random.default_rng(seed)
    fabrik_config = fabrik_config or FabrikConfig()
    idx = rng.integers(0, eval_poses.shape[0], size=(iterations, 2))
    cases = [
        (eval_poses[i].astype(np.float64), eval_poses[j].astype(np.float64))
        for i, j in idx
    ]

    report = BenchReport(iterations=iterations)
    for joint_sets, n_eff in (((HANDS,), 2), (FIVE_EFFECTOR_SETS, 5)):
        targets_of = lambda tp: {
            j: tp.reshape(21, 3)[j] for js in joint_sets for j in js
        }
        mean, std = _time_cases(
            lambda c: fabrik_solve_fullbody(
                c[0], system.topology, targets_of(c[1]), fabrik_config
            ),
            cases,
        )
        report.rows.append(
            BenchRow("fabrik", n_eff, mean, std, None, post_process=False)
        )
        for post in (False, True):
            mean, std = _time_cases(
                lambda c: system.solve(
                    c[0], _specs_from_pose(c[1], joint_sets), post_process=post
                ),
                cases,
            )
            report.rows.append(
                BenchRow(
                    "neural",
                    n_eff,
                    mean,
                    std,
                    _footprint_kb(system, joint_sets),
                    post_process=post,
                )
            )
    return report
