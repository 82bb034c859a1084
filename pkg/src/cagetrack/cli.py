"""Command-line surface binding the pipeline stages.

Subcommands compose into the full pipeline:

    cagetrack simulate --out-prefix run --seed 7
    cagetrack track --in run.detections.jsonl --out run.tracklets.jsonl
    cagetrack identify --in run.tracklets.jsonl --out run.identified.jsonl
    cagetrack eval --gt run.gt.jsonl --hyp run.identified.jsonl

Any config key can be overridden on the command line with a flag of the same
dotted name (``--assoc.lambda 0.8``). ``--server URL`` turns a subcommand
into a thin client of a running ``cagetrack serve`` instance; without it the
same pipeline code runs in process.

Exit codes: 0 success, 2 parse error, 3 config error, 4 contract violation.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
from pathlib import Path

from . import jsonl, pipeline
from .config import Config
from .errors import (
    CagetrackError,
    ConfigError,
    FrameRangeMismatch,
    InvalidConfig,
    NonMonotonicFrame,
    ParseError,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_CONFIG = 3
EXIT_CONTRACT = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cagetrack", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic scene")
    p.add_argument("--scene", help="scene config file (dotted scene.* keys)")
    p.add_argument("--out-prefix", required=True, help="output path prefix")
    p.add_argument("--seed", type=int, help="override scene.seed")
    p.add_argument("--config", help="base config file")
    p.add_argument("--server", help="run against a cagetrack service URL")

    p = sub.add_parser("track", help="link detections into tracklets")
    p.add_argument("--in", dest="inputs", nargs="+", required=True, help="detection JSONL file(s)")
    p.add_argument("--out", required=True, help="tracklets file, or directory with multiple inputs")
    p.add_argument("--config", help="config file")
    p.add_argument("--jobs", type=int, default=1, help="concurrent workers for multiple inputs")
    p.add_argument("--server", help="run against a cagetrack service URL")

    p = sub.add_parser("identify", help="assign identities to tracklets")
    p.add_argument("--in", dest="inputs", required=True, help="tracklets JSONL file")
    p.add_argument("--out", required=True)
    p.add_argument(
        "--window-minutes",
        type=float,
        help="solve consecutive windows of this many minutes (0 = whole recording)",
    )
    p.add_argument("--config", help="config file")
    p.add_argument("--server", help="run against a cagetrack service URL")

    p = sub.add_parser("eval", help="score tracklets against ground truth")
    p.add_argument("--gt", required=True, help="ground-truth JSONL file")
    p.add_argument("--hyp", required=True, help="tracklets JSONL file")
    p.add_argument("--iou-threshold", type=float, help="CLEAR matching threshold")
    p.add_argument("--out", help="also write the report as JSON")
    p.add_argument("--config", help="config file")
    p.add_argument("--server", help="run against a cagetrack service URL")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def _collect_overrides(extra: list[str]) -> dict[str, str]:
    """Interpret leftover ``--dotted.key value`` pairs as config overrides."""
    overrides: dict[str, str] = {}
    i = 0
    while i < len(extra):
        token = extra[i]
        if not token.startswith("--") or "." not in token:
            raise ConfigError(f"unrecognized argument {token!r}")
        key = token[2:]
        if "=" in key:
            key, _, value = key.partition("=")
        else:
            if i + 1 >= len(extra):
                raise ConfigError("missing value", key=key)
            value = extra[i + 1]
            i += 1
        overrides[key] = value
        i += 1
    return overrides


def _load_config(args: argparse.Namespace, overrides: dict[str, str]) -> Config:
    return Config.load(getattr(args, "config", None), overrides)


# -- local execution ---------------------------------------------------------


def _cmd_simulate(args: argparse.Namespace, overrides: dict[str, str]) -> int:
    cfg = Config.load(getattr(args, "config", None))
    if args.scene:
        cfg.update_from_file(args.scene)
    for key, value in overrides.items():
        cfg.set(key, value)
    if args.seed is not None:
        cfg.set("scene.seed", args.seed)
    if args.server:
        return _remote_simulate(args, cfg)
    det_path, gt_path, seed = pipeline.run_simulate(cfg, args.out_prefix)
    print(f"wrote {det_path} and {gt_path} (seed={seed})")
    return EXIT_OK


def _track_one(in_path: str, out_path: str, cfg: Config) -> tuple[str, int]:
    n = pipeline.run_track(in_path, out_path, cfg)
    return out_path, n


def _cmd_track(args: argparse.Namespace, overrides: dict[str, str]) -> int:
    cfg = _load_config(args, overrides)
    inputs = list(args.inputs)
    if len(inputs) > 1:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        jobs = [(p, str(out_dir / (Path(p).stem + ".tracklets.jsonl"))) for p in inputs]
    else:
        jobs = [(inputs[0], args.out)]
    if args.server:
        for in_path, out_path in jobs:
            _remote_track(args.server, in_path, out_path, cfg)
            print(f"wrote {out_path}")
        return EXIT_OK
    if args.jobs > 1 and len(jobs) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [pool.submit(_track_one, i, o, cfg) for i, o in jobs]
            for f in futures:
                out_path, n = f.result()
                print(f"wrote {out_path} ({n} tracklets)")
    else:
        for in_path, out_path in jobs:
            out_path, n = _track_one(in_path, out_path, cfg)
            print(f"wrote {out_path} ({n} tracklets)")
    return EXIT_OK


def _cmd_identify(args: argparse.Namespace, overrides: dict[str, str]) -> int:
    cfg = _load_config(args, overrides)
    if args.server:
        return _remote_identify(args, cfg)
    assignment = pipeline.run_identify(args.inputs, args.out, cfg, args.window_minutes)
    print(f"objective = {assignment.objective}", file=sys.stderr)
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_eval(args: argparse.Namespace, overrides: dict[str, str]) -> int:
    cfg = _load_config(args, overrides)
    if args.server:
        return _remote_eval(args, cfg)
    report = pipeline.run_eval(args.gt, args.hyp, cfg, args.iou_threshold)
    sys.stdout.write(report.render_text())
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            json.dump(report.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")
    return EXIT_OK


def _cmd_serve(args: argparse.Namespace, overrides: dict[str, str]) -> int:
    if overrides:
        raise ConfigError("serve takes no config overrides")
    import uvicorn

    from .api import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


# -- thin-client mode ---------------------------------------------------------


def _post(server: str, route: str, payload: dict) -> dict:
    import httpx

    response = httpx.post(server.rstrip("/") + route, json=payload, timeout=600.0)
    if response.status_code != 200:
        try:
            body = response.json()
        except ValueError:
            body = {"error": "HTTPError", "detail": response.text}
        raise CagetrackError(f"server error {response.status_code}: {body.get('error')}: {body.get('detail')}")
    return response.json()


def _remote_simulate(args: argparse.Namespace, cfg: Config) -> int:
    scene = {k: v for k, v in cfg.as_dict().items() if k.startswith("scene.")}
    result = _post(args.server, "/v1/simulate", {"scene": scene, "seed": None})
    det_path = f"{args.out_prefix}.detections.jsonl"
    gt_path = f"{args.out_prefix}.gt.jsonl"
    header = f"cagetrack simulate seed={result['seed']} (remote)"
    with open(det_path, "w", encoding="utf-8") as f:
        f.write(f"# {header}\n")
        for d in result["detections"]:
            f.write(json.dumps(d, separators=(",", ":")) + "\n")
    with open(gt_path, "w", encoding="utf-8") as f:
        f.write(f"# {header}\n")
        for e in result["ground_truth"]:
            f.write(json.dumps(e, separators=(",", ":")) + "\n")
    print(f"wrote {det_path} and {gt_path} (seed={result['seed']})")
    return EXIT_OK


def _remote_track(server: str, in_path: str, out_path: str, cfg: Config) -> None:
    detections = [
        jsonl.detection_to_record(d)
        for d in jsonl.iter_detections(in_path, embedding_dim=int(cfg["io.embedding_dim"]))
    ]
    result = _post(server, "/v1/track", {"detections": detections, "config": cfg.as_dict()})
    _write_tracklet_records(out_path, result["tracklets"], f"cagetrack track source={in_path} (remote)")


def _remote_identify(args: argparse.Namespace, cfg: Config) -> int:
    tracklets, _ = jsonl.read_tracklets(args.inputs)
    payload = {
        "tracklets": [jsonl.tracklet_to_record(t, None) for t in tracklets],
        "config": cfg.as_dict(),
        "window_minutes": args.window_minutes,
    }
    result = _post(args.server, "/v1/identify", payload)
    _write_tracklet_records(
        args.out, result["tracklets"], f"cagetrack identify source={args.inputs} (remote)"
    )
    print(f"objective = {result['objective']}", file=sys.stderr)
    print(f"wrote {args.out}")
    return EXIT_OK


def _remote_eval(args: argparse.Namespace, cfg: Config) -> int:
    gt = jsonl.read_ground_truth(args.gt)
    tracklets, identity_map = jsonl.read_tracklets(args.hyp)
    ground_truth = [
        {
            "frame": frame,
            "gt_id": e.gt_id,
            "box": e.box.as_list(),
            "identity": e.identity.value if e.identity is not None else None,
        }
        for frame in sorted(gt.frames)
        for e in gt.frames[frame]
    ]
    payload = {
        "ground_truth": ground_truth,
        "tracklets": [jsonl.tracklet_to_record(t, identity_map.get(t.id)) for t in tracklets],
        "iou_threshold": args.iou_threshold,
        "config": cfg.as_dict(),
    }
    result = _post(args.server, "/v1/evaluate", payload)
    for key, value in result.items():
        sys.stdout.write(f"{key} = {value}\n")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            json.dump(result, f, indent=2, sort_keys=True)
            f.write("\n")
    return EXIT_OK


def _write_tracklet_records(out_path: str, records: list[dict], header: str) -> None:
    with open(out_path, "w", encoding="utf-8") as f:
        f.write(f"# {header}\n")
        for record in records:
            f.write(json.dumps(record, separators=(",", ":")) + "\n")


_COMMANDS = {
    "simulate": _cmd_simulate,
    "track": _cmd_track,
    "identify": _cmd_identify,
    "eval": _cmd_eval,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        overrides = _collect_overrides(extra)
        return _COMMANDS[args.command](args, overrides)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ConfigError, InvalidConfig) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FrameRangeMismatch, NonMonotonicFrame) as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except CagetrackError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
