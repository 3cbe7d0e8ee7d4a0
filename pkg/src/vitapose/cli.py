"""Command line front end.

Subcommands: gen (synthesize scenes and trajectories), check (feasibility of
one scene), track (run a method over a trajectory, write CSV), ablate (run
every refinement ablation over one trajectory), bench (timing table).

Exit codes: 0 success / feasible, 1 infeasible estimate, 2 bad usage or input.
Set VITA_LOG_LEVEL to DEBUG, INFO, WARNING or ERROR to control logging.
"""

import argparse
import csv
import hashlib
import json
import logging
import os
import statistics
import sys
import time
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, kernels
from .errors import (
    GenerationError,
    InvalidArgumentError,
    MeshFormatError,
    NumericFailure,
    SceneFormatError,
)
from .feasibility import Thresholds, check_all, check_contact, check_kinematic, check_penetration
from .icp import IcpConfig
from .metrics import CSV_COLUMNS, MetricSample
from .refiner import RefinementConfig, refine
from .scene import build_scene, contact_patch, load_scene, save_scene_document
from .synthbench import (
    SCENARIOS,
    GraspSpec,
    NoiseModel,
    build_trajectory_scenes,
    generate_scene,
    load_trajectory,
    save_trajectory,
    simulate_trajectory,
)
from .tracking import ABLATIONS, METHODS, TrackerConfig, ablation_tracker, run_tracking, track_frame

log = logging.getLogger("vitapose")

_USAGE_ERRORS = (InvalidArgumentError, SceneFormatError, MeshFormatError, GenerationError)


def _setup_logging() -> None:
    level = os.environ.get("VITA_LOG_LEVEL", "WARNING").upper()
    if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
        level = "WARNING"
    logging.basicConfig(level=getattr(logging, level),
                        format="%(levelname)s %(name)s: %(message)s")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _noise_from_args(args) -> Optional[NoiseModel]:
    if not (args.noise_translation or args.noise_rotation or args.noise_dropout):
        return None
    return NoiseModel(args.noise_translation, args.noise_rotation,
                      args.noise_dropout, args.noise_outlier)


def _add_noise_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--noise-translation", type=float, default=0.0, metavar="SIGMA",
                        help="visual translation noise, meters")
    parser.add_argument("--noise-rotation", type=float, default=0.0, metavar="SIGMA",
                        help="visual rotation noise, radians")
    parser.add_argument("--noise-dropout", type=float, default=0.0, metavar="P",
                        help="probability of a gross outlier estimate per frame")
    parser.add_argument("--noise-outlier", type=float, default=0.3, metavar="D",
                        help="outlier jump distance, meters")


def _load_config(path: Optional[str]):
    """Optional JSON file overriding refinement, thresholds, icp and tracker knobs."""
    refinement, thresholds, icp = RefinementConfig(), Thresholds(), IcpConfig()
    tracker_extra = {}
    if path:
        data = json.loads(Path(path).read_text())
        unknown = set(data) - {"refinement", "thresholds", "icp", "tracker"}
        if unknown:
            raise InvalidArgumentError(f"unknown config sections: {sorted(unknown)}")
        if "refinement" in data:
            refinement = RefinementConfig.from_dict(data["refinement"])
        if "thresholds" in data:
            thresholds = Thresholds.from_dict(data["thresholds"])
        if "icp" in data:
            icp = IcpConfig(**data["icp"])
        tracker_extra = data.get("tracker", {})
    return refinement, thresholds, icp, tracker_extra


def _write_manifest(path: str, command: str, inputs: dict, settings: dict) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "backend": kernels.backend_name(),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
        "inputs": inputs,
        "settings": settings,
    }
    Path(path).write_text(json.dumps(manifest, indent=1, sort_keys=True))


def _write_csv(path, samples) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_COLUMNS)
        for sample in samples:
            writer.writerow(sample.csv_row())


def _shape_from_args(args) -> Optional[dict]:
    if args.shape == "random":
        return None
    if args.shape == "sphere":
        return {"kind": "sphere", "radius": args.shape_size}
    if args.shape == "box":
        return {"kind": "box", "extents": [args.shape_size] * 3}
    return {"kind": "cylinder", "radius": args.shape_size / 2.0, "height": args.shape_size}


def cmd_gen(args) -> int:
    shape = _shape_from_args(args)
    grasp = GraspSpec(fingers=args.fingers)
    noise = _noise_from_args(args)
    if args.scenario == "scene":
        doc = generate_scene(args.seed, shape, grasp, args.sample_count,
                             args.voxel_size, args.samples_per_link, noise)
        save_scene_document(doc, args.out)
        log.info("wrote scene %s to %s", doc.scene_id, args.out)
    else:
        doc = simulate_trajectory(args.scenario, args.seed, args.frames, shape, grasp,
                                  args.sample_count, args.voxel_size,
                                  args.samples_per_link, noise)
        save_trajectory(doc, args.out)
        log.info("wrote %d-frame %s trajectory to %s", len(doc), args.scenario, args.out)
    print(args.out)
    return 0


def cmd_check(args) -> int:
    refinement, thresholds, _, _ = _load_config(args.config)
    scene = load_scene(args.scene)
    report = check_all(scene, scene.visual_pose, thresholds)
    output = {"scene_id": scene.scene_id, "feasible": report.overall_pass,
              "report": report.to_dict()}

    if args.refine and not report.overall_pass:
        result = refine(scene, scene.visual_pose, refinement)
        after = check_all(scene, result.refined_pose, thresholds)
        output["refined_pose"] = result.refined_pose.to_dict()
        output["energy"] = {"initial": result.initial_energy.to_dict(),
                            "final": result.final_energy.to_dict()}
        output["feasible_after"] = after.overall_pass
        report = after

    print(json.dumps(output, indent=1, sort_keys=True))
    return 0 if report.overall_pass else 1


def cmd_track(args) -> int:
    refinement, thresholds, icp, tracker_extra = _load_config(args.config)
    config = TrackerConfig(method=args.method, thresholds=thresholds,
                           refinement=refinement, icp=icp,
                           always_refine=args.always_refine or tracker_extra.get("always_refine", False),
                           use_motion_init=not args.no_init and tracker_extra.get("use_motion_init", True))
    trajectory_path = Path(args.trajectory)
    doc = load_trajectory(trajectory_path)
    scenes = build_trajectory_scenes(doc)
    noise = _noise_from_args(args)
    records = run_tracking(scenes, config, relative_noise=noise, seed=args.seed)
    _write_csv(args.out, [r.metric_sample() for r in records])
    if args.manifest:
        _write_manifest(args.manifest, "track",
                        {"trajectory": str(trajectory_path), "sha256": _sha256(trajectory_path)},
                        {"method": args.method, "seed": args.seed,
                         "thresholds": thresholds.to_dict(),
                         "refinement": refinement.to_dict(),
                         "relative_noise": noise.to_dict() if noise else None,
                         "always_refine": config.always_refine,
                         "use_motion_init": config.use_motion_init})
    infeasible = sum(not r.report_after.overall_pass for r in records)
    log.info("tracked %d frames, %d end infeasible", len(records), infeasible)
    print(args.out)
    return 0


def cmd_ablate(args) -> int:
    refinement, thresholds, icp, _ = _load_config(args.config)
    base = TrackerConfig(method="vita", thresholds=thresholds, refinement=refinement,
                         icp=icp, always_refine=True)
    trajectory_path = Path(args.trajectory)
    doc = load_trajectory(trajectory_path)
    scenes = build_trajectory_scenes(doc)
    noise = _noise_from_args(args)
    samples = []
    for name in ABLATIONS:
        config = ablation_tracker(name, base)
        records = run_tracking(scenes, config, relative_noise=noise, seed=args.seed)
        for record in records:
            sample = record.metric_sample()
            samples.append(MetricSample(sample.scene_id, sample.frame, name,
                                        sample.add, sample.adds, sample.pe,
                                        sample.feasible_before, sample.feasible_after,
                                        sample.refine_ms))
    _write_csv(args.out, samples)
    if args.manifest:
        _write_manifest(args.manifest, "ablate",
                        {"trajectory": str(trajectory_path), "sha256": _sha256(trajectory_path)},
                        {"seed": args.seed, "ablations": list(ABLATIONS),
                         "refinement": refinement.to_dict(),
                         "relative_noise": noise.to_dict() if noise else None})
    print(args.out)
    return 0


def _bench_scene(object_points: int, robot_points: int, taxels: int):
    """Deterministic synthetic load of the requested size."""
    from dataclasses import replace

    from .geometry import PointCloud

    per_link = max(8, robot_points // 3)
    doc = generate_scene(seed=4242, shape={"kind": "sphere", "radius": 0.04},
                         sample_count=object_points, samples_per_link=per_link)
    scene = build_scene(doc)
    if taxels > len(scene.tactile_cloud):
        # densify tactile input by jittering the real taxel origins
        rng = np.random.default_rng(0)
        base = scene.tactile_cloud.points
        extra = base[rng.integers(len(base), size=taxels - len(base))]
        extra = extra + rng.normal(0.0, 0.002, extra.shape)
        scene = replace(scene, tactile_cloud=PointCloud(np.vstack([base, extra])))
    return scene


def _time_callable(fn, repeats: int) -> dict:
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append((time.perf_counter() - start) * 1000.0)
    return {"median_ms": statistics.median(times),
            "p90_ms": sorted(times)[int(0.9 * (len(times) - 1))]}


def cmd_bench(args) -> int:
    scene = _bench_scene(args.object_points, args.robot_points, args.taxels)
    thresholds = Thresholds()
    config = RefinementConfig()
    pose = scene.visual_pose
    default_backend = kernels.backend_name()
    backends = kernels.available_backends() if args.compare_backends else [default_backend]

    prev_patch = contact_patch(scene.object_cloud, pose, scene.tactile_cloud,
                               thresholds.contact_max_distance)

    def kinematic_path():
        patch = contact_patch(scene.object_cloud, pose, scene.tactile_cloud,
                              thresholds.contact_max_distance)
        return check_kinematic(patch, prev_patch, scene.object_cloud,
                               thresholds.kinematic_max_shift)

    rows = []
    for backend in backends:
        kernels.use_backend(backend)
        tasks = {
            "contact": lambda: check_contact(pose, scene.object_cloud, scene.tactile_cloud,
                                             thresholds.contact_max_distance),
            "penetration": lambda: check_penetration(pose, scene.object_voxels,
                                                     scene.robot_cloud,
                                                     thresholds.penetration_max_overlap),
            "kinematic": kinematic_path,
            "feasibility": lambda: check_all(scene, pose, thresholds),
            "refinement": lambda: refine(scene, pose, config),
        }
        for name, fn in tasks.items():
            fn()  # warm up
            stats = _time_callable(fn, args.repeats)
            rows.append({"component": name, "backend": backend,
                         "object_points": args.object_points,
                         "robot_points": args.robot_points,
                         "taxels": len(scene.tactile_cloud), "repeats": args.repeats,
                         **{k: f"{v:.3f}" for k, v in stats.items()}})
    kernels.use_backend(default_backend)

    columns = ["component", "backend", "object_points", "robot_points", "taxels",
               "repeats", "median_ms", "p90_ms"]
    lines = [",".join(columns)] + [",".join(str(r[c]) for c in columns) for r in rows]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vitapose",
        description="Validate and refine visual object-pose estimates with touch.")
    parser.add_argument("--version", action="version", version=f"vitapose {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="synthesize a scene or trajectory")
    gen.add_argument("--scenario", choices=("scene",) + SCENARIOS, default="scene")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--frames", type=int, default=None)
    gen.add_argument("--out", required=True)
    gen.add_argument("--shape", choices=("random", "sphere", "box", "cylinder"),
                     default="random")
    gen.add_argument("--shape-size", type=float, default=0.06,
                     help="characteristic size in meters for non-random shapes")
    gen.add_argument("--fingers", type=int, default=3, choices=(2, 3, 4))
    gen.add_argument("--sample-count", type=int, default=2048)
    gen.add_argument("--samples-per-link", type=int, default=128)
    gen.add_argument("--voxel-size", type=float, default=0.005)
    _add_noise_flags(gen)
    gen.set_defaults(func=cmd_gen)

    chk = sub.add_parser("check", help="feasibility-check one scene's visual pose")
    chk.add_argument("--scene", required=True)
    chk.add_argument("--refine", action="store_true",
                     help="refine the pose when the checks fail")
    chk.add_argument("--config", default=None)
    chk.set_defaults(func=cmd_check)

    trk = sub.add_parser("track", help="run one method over a trajectory")
    trk.add_argument("--trajectory", required=True)
    trk.add_argument("--method", choices=METHODS, default="vita")
    trk.add_argument("--seed", type=int, default=0)
    trk.add_argument("--out", required=True)
    trk.add_argument("--manifest", default=None)
    trk.add_argument("--config", default=None)
    trk.add_argument("--always-refine", action="store_true")
    trk.add_argument("--no-init", action="store_true",
                     help="disable motion-based initialization")
    _add_noise_flags(trk)
    trk.set_defaults(func=cmd_track)

    abl = sub.add_parser("ablate", help="run every ablation over a trajectory")
    abl.add_argument("--trajectory", required=True)
    abl.add_argument("--seed", type=int, default=0)
    abl.add_argument("--out", required=True)
    abl.add_argument("--manifest", default=None)
    abl.add_argument("--config", default=None)
    _add_noise_flags(abl)
    abl.set_defaults(func=cmd_ablate)

    ben = sub.add_parser("bench", help="time the feasibility and refinement paths")
    ben.add_argument("--object-points", type=int, default=2048)
    ben.add_argument("--robot-points", type=int, default=1024)
    ben.add_argument("--taxels", type=int, default=30)
    ben.add_argument("--repeats", type=int, default=30)
    ben.add_argument("--compare-backends", action="store_true")
    ben.add_argument("--out", default=None)
    ben.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericFailure as exc:
        print(f"error: refinement diverged: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
