"""Acceptance gate: one test per headline criterion, each emitting a single
PASS/FAIL line with the measured value next to the required bound."""

import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from posekit import nn
from posekit.bench import run_benchmark
from posekit.fabrik import (
    FabrikConfig,
    KinematicChain,
    bone_length_postprocess,
    fabrik_solve_chain,
    fabrik_solve_fullbody,
)
from posekit.service import PoseService, create_app
from posekit.skeleton import (
    POSE_DIM,
    bone_lengths,
    canonical_topology,
    reference_pose,
)
from posekit.solver import TargetSpec, solver_loss

from conftest import ANKLES, HANDS, HEAD, make_clips


def report(name: str, ok: bool, detail: str) -> None:
    print(f"{'PASS' if ok else 'FAIL'}: {name} — {detail}")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def topo():
    return canonical_topology()


@pytest.fixture(scope="module")
def eval_poses():
    clips = make_clips(4, 200, seed=77)
    return np.concatenate([c.poses for c in clips]).astype(np.float64)


class TestGradientCorrectness:
    def test_gradients_match_finite_differences(self, rng):
        start = time.perf_counter()
        failures = 0
        checks = 0
        # every layer kind: relu, linear, and a tied (transposed-weight) layer
        archetypes = {
            "relu": lambda: nn.make_mlp([6, 5], ["relu"], rng, dtype=np.float64),
            "linear": lambda: nn.make_mlp([6, 5], ["linear"], rng, dtype=np.float64),
            "tied": lambda: nn.MlpModel(
                layers=[
                    nn.DenseLayer(
                        weights=rng.normal(size=(4, 6)),
                        bias=np.zeros(4),
                        activation="relu",
                    ),
                    nn.DenseLayer(
                        weights=None, bias=np.zeros(6), activation="linear", tie=0
                    ),
                ]
            ),
        }
        eps = 1e-5
        for kind, build in archetypes.items():
            for _ in range(100):
                model = build()
                x = rng.normal(size=(2, 6))
                out_dim = model.layers[-1].bias.shape[0]
                t = rng.normal(size=(2, out_dim))
                out, cache = nn.forward(model, x)
                _, grad = nn.mse(out, t)
                analytic, _ = nn.backward(model, cache, grad)
                for b, block in enumerate(model.parameters()):
                    flat = block.reshape(-1)
                    for i in rng.choice(flat.size, size=min(4, flat.size), replace=False):
                        old = flat[i]
                        flat[i] = old + eps
                        hi = float(np.mean((nn.forward(model, x)[0] - t) ** 2))
                        flat[i] = old - eps
                        lo = float(np.mean((nn.forward(model, x)[0] - t) ** 2))
                        flat[i] = old
                        fd = (hi - lo) / (2 * eps)
                        a = analytic[b].reshape(-1)[i]
                        scale = max(abs(fd), abs(a), 1e-6)
                        checks += 1
                        if abs(a - fd) > 1e-4 * scale:
                            failures += 1
        # both losses: plain reconstruction MSE and the target-weighted loss
        for _ in range(100):
            p, t = rng.normal(size=63), rng.normal(size=63)
            _, g = nn.mse(p, t)
            _, g2 = solver_loss(p, t, HANDS)
            for i in rng.integers(0, 63, size=4):
                d = np.zeros(63)
                d[i] = eps
                for grad_vec, fn in (
                    (g, lambda v: nn.mse(v, t)[0]),
                    (g2, lambda v: solver_loss(v, t, HANDS)[0]),
                ):
                    fd = (fn(p + d) - fn(p - d)) / (2 * eps)
                    scale = max(abs(fd), abs(grad_vec[i]), 1e-6)
                    checks += 1
                    if abs(grad_vec[i] - fd) > 1e-4 * scale:
                        failures += 1
        elapsed = time.perf_counter() - start
        report(
            "gradient correctness",
            failures == 0 and elapsed < 60,
            f"{checks} finite-difference checks, {failures} outside 1e-4 rel, "
            f"{elapsed:.1f}s (< 60s)",
        )


class TestFabrikInvariants:
    def test_chain_and_fullbody_invariants(self, rng, eval_poses, topo):
        start = time.perf_counter()
        config = FabrikConfig()
        hits, max_drift = 0, 0.0
        trials = 1000
        for _ in range(trials):
            n = int(rng.integers(3, 6))
            pts = np.cumsum(rng.uniform(-1, 1, size=(n, 3)), axis=0)
            chain = KinematicChain(positions=pts)
            directions = rng.normal(size=(n - 1, 3))
            directions /= np.linalg.norm(directions, axis=1, keepdims=True)
            target = pts[0] + (directions * chain.lengths[:, None]).sum(axis=0)
            solved, _ = fabrik_solve_chain(chain, target, config)
            seg = np.linalg.norm(np.diff(solved.positions, axis=0), axis=1)
            max_drift = max(max_drift, float(np.abs(seg - chain.lengths).max()))
            hits += np.linalg.norm(solved.positions[-1] - target) < config.tolerance
        body_ok = True
        for _ in range(500):
            pose = eval_poses[rng.integers(0, eval_poses.shape[0])]
            tp = eval_poses[rng.integers(0, eval_poses.shape[0])].reshape(21, 3)
            out = fabrik_solve_fullbody(
                pose, topo, {8: tp[8], 12: tp[12], 15: tp[15], 19: tp[19], 4: tp[4]}
            )
            if np.abs(bone_lengths(out, topo) - bone_lengths(pose, topo)).max() > 1e-6:
                body_ok = False
        elapsed = time.perf_counter() - start
        report(
            "FABRIK invariants",
            hits / trials >= 0.99 and max_drift < 1e-6 and body_ok and elapsed < 60,
            f"chain hit rate {hits / trials:.3f} (>= 0.99), max drift "
            f"{max_drift:.2e} (< 1e-6), full-body lengths {'ok' if body_ok else 'BAD'}, "
            f"{elapsed:.1f}s (< 60s)",
        )


class TestPostProcessContract:
    def test_lengths_restored_and_idempotent(self, rng, topo):
        worst_len, worst_idem = 0.0, 0.0
        for _ in range(200):
            noisy = (reference_pose() + rng.normal(scale=0.1, size=(21, 3))).reshape(
                POSE_DIM
            )
            once = bone_length_postprocess(noisy, topo.reference_bone_lengths, topo)
            twice = bone_length_postprocess(once, topo.reference_bone_lengths, topo)
            worst_len = max(
                worst_len,
                float(
                    np.abs(bone_lengths(once, topo) - topo.reference_bone_lengths).max()
                ),
            )
            worst_idem = max(worst_idem, float(np.abs(twice - once).max()))
        report(
            "post-process contract",
            worst_len < 1e-6 and worst_idem < 1e-6,
            f"max length error {worst_len:.2e} (< 1e-6), "
            f"max idempotence drift {worst_idem:.2e} (< 1e-6)",
        )


class TestDeskScaleTraining:
    def test_autoencoder_convergence(self, desk_dataset, desk_autoencoder):
        first = desk_autoencoder.loss_history_[0]["train_loss"]
        last = desk_autoencoder.loss_history_[-1]
        ok = (
            desk_dataset.n_poses >= 10_000
            and last["train_loss"] < 0.2 * first
            and last["val_loss"] < 2.0 * last["train_loss"]
        )
        report(
            "desk-scale training",
            ok,
            f"{desk_dataset.n_poses} poses (>= 10000), final train "
            f"{last['train_loss']:.4f} vs 0.2x first {0.2 * first:.4f}, "
            f"val {last['val_loss']:.4f} vs 2x train {2 * last['train_loss']:.4f}",
        )


class TestSolverEfficacy:
    def test_improvement_rate_on_held_out_pairs(self, desk_system, desk_dataset, rng):
        val_clips = [
            c
            for c, m in zip(desk_dataset.clips, desk_dataset.train_mask)
            if not m and c.poses.shape[0] >= 2
        ]
        improved, total = 0, 500
        for _ in range(total):
            clip = val_clips[rng.integers(0, len(val_clips))]
            i, j = rng.choice(clip.poses.shape[0], size=2, replace=False)
            pose, target_pose = clip.poses[i], clip.poses[j]
            tp = target_pose.reshape(21, 3)
            spec = TargetSpec(joint_indices=HANDS, positions=tp[list(HANDS)])
            out = desk_system.solve(pose, [spec])
            pre = np.linalg.norm(
                pose.reshape(21, 3)[list(HANDS)] - spec.positions, axis=1
            ).mean()
            post = np.linalg.norm(
                out.reshape(21, 3)[list(HANDS)] - spec.positions, axis=1
            ).mean()
            improved += post < pre
        report(
            "solver efficacy",
            improved / total >= 0.90,
            f"target residual improved in {improved}/{total} held-out cases (>= 90%)",
        )


class TestMemoryFootprint:
    def test_serialized_sizes_near_reported(self, desk_system):
        ae_bytes = len(nn.save_weights(desk_system.autoencoder.model_))
        solver_bytes = {
            js: len(nn.save_weights(desk_system.solver_for(js).model_))
            for js in (HANDS, ANKLES, HEAD)
        }
        two = (ae_bytes + solver_bytes[HANDS]) / 1000
        five = (ae_bytes + sum(solver_bytes.values())) / 1000

        def analytic(dims, tied):
            mats = sum(a * b for a, b in zip(dims[:-1], dims[1:]))
            biases = sum(dims[1:])
            if tied:  # decoder reuses the encoder matrices, adds its biases
                biases += sum(dims[:-1])
            return 4 * (mats + biases)

        ae_analytic = analytic([63, 200, 200, 64], tied=True)
        hands_analytic = analytic([70, 126, 126, 126, 64], tied=False)
        two_analytic = (ae_analytic + hands_analytic) / 1000
        ok = (
            abs(two - 442) / 442 < 0.15
            and abs(five - 826) / 826 < 0.15
            and abs(two - two_analytic) < 1.0  # headers only
        )
        report(
            "memory footprint",
            ok,
            f"2-target {two:.1f} kB vs 442 +/- 15%, 5-effector {five:.1f} kB vs "
            f"826 +/- 15%, analytic 2-target {two_analytic:.1f} kB",
        )


@pytest.fixture(scope="module")
def bench_report(desk_system, desk_dataset):
    return run_benchmark(
        desk_system, desk_dataset.validation_poses(), iterations=1000, seed=9
    )


class TestRuntime:
    def test_runtime_orderings(self, bench_report):
        r = bench_report.row
        neural2 = r("neural", 2, False).mean_ms
        neural5 = r("neural", 5, False).mean_ms
        neural2_post = r("neural", 2, True).mean_ms
        fabrik2 = r("fabrik", 2, False).mean_ms
        fabrik5 = r("fabrik", 5, False).mean_ms
        ok = (
            neural2 < fabrik2
            and neural5 < fabrik5
            and neural2_post > neural2
            and neural5 > neural2
        )
        report(
            "runtime orderings",
            ok,
            f"neural(2) {neural2:.2f} < fabrik(2) {fabrik2:.2f} ms; "
            f"neural(5) {neural5:.2f} < fabrik(5) {fabrik5:.2f} ms; "
            f"neural(2)+post {neural2_post:.2f} > neural(2); "
            f"neural(5) > neural(2); 1000 iterations, single worker thread",
        )

    def test_input_independent_runtime(self, desk_system, desk_dataset, rng):
        # per-target cost averaged over repeats so timer noise does not
        # masquerade as input dependence
        poses = desk_dataset.validation_poses()
        cases = [
            (
                poses[rng.integers(0, poses.shape[0])],
                poses[rng.integers(0, poses.shape[0])].reshape(21, 3),
            )
            for _ in range(200)
        ]
        spec_of = lambda tp: TargetSpec(joint_indices=HANDS, positions=tp[list(HANDS)])
        for pose, tp in cases[:10]:  # warmup
            desk_system.solve(pose, [spec_of(tp)])
        per_target = []
        for pose, tp in cases:
            spec = spec_of(tp)
            t0 = time.perf_counter()
            for _ in range(5):
                desk_system.solve(pose, [spec])
            per_target.append((time.perf_counter() - t0) / 5)
        arr = np.array(per_target)
        ratio = float(arr.std() / arr.mean())
        report(
            "input-independent runtime",
            ratio < 0.20,
            f"runtime std/mean {ratio:.3f} across 200 random targets (< 0.20)",
        )


class TestServiceProtocol:
    def test_full_exchange_with_client_side_residuals(
        self, desk_system, desk_dataset
    ):
        app = create_app(PoseService(desk_system))
        client = TestClient(app)
        target = desk_dataset.validation_poses()[17]
        tp = target.reshape(21, 3)
        with client.websocket_connect("/ws") as ws:
            ws.send_json({"type": "hello", "correlation_id": 1})
            hello = ws.receive_json()
            ws.send_json({"type": "create_session", "correlation_id": 2})
            created = ws.receive_json()
            sid = created["session_id"]
            ws.send_json(
                {
                    "type": "solve",
                    "session_id": sid,
                    "specs": [
                        {"joints": list(HANDS), "positions": tp[list(HANDS)].tolist()}
                    ],
                    "correlation_id": 3,
                }
            )
            solved = ws.receive_json()
            ws.send_json(
                {
                    "type": "commit",
                    "session_id": sid,
                    "pose": solved["poses"]["neural"],
                    "correlation_id": 4,
                }
            )
            committed = ws.receive_json()
            ws.send_json({"type": "undo", "session_id": sid, "correlation_id": 5})
            undone = ws.receive_json()
        types_ok = (
            hello["type"] == "hello"
            and created["type"] == "session"
            and solved["type"] == "solved"
            and committed["type"] == "committed"
            and undone["type"] == "pose"
            and [m["correlation_id"] for m in (hello, created, solved, committed, undone)]
            == [1, 2, 3, 4, 5]
        )
        pts = np.array(solved["poses"]["neural"]).reshape(21, 3)
        worst = 0.0
        for slot, joint in enumerate(HANDS):
            mine = float(np.linalg.norm(pts[joint] - tp[joint]))
            theirs = solved["residuals"]["neural"][slot]["distance"]
            worst = max(worst, abs(mine - theirs))
        undo_ok = np.allclose(undone["pose"], created["pose"])
        report(
            "service protocol",
            types_ok and worst < 1e-4 and undo_ok,
            f"hello/create/solve/commit/undo exchanged, client-side residual "
            f"recomputation off by {worst:.2e} (< 1e-4), undo restored the "
            f"initial pose",
        )
