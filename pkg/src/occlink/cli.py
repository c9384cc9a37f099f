"""``occ`` command line.

Machine-readable results go to stdout (JSON, CSV, or a bare bit string
for ``encode``); progress and previews go to stderr. Exit status is 0 on
success, 1 on an operational failure (stderr then ends with one line
``error <kind>: <detail>``) and 2 on a usage error.
"""
from __future__ import annotations

import argparse
import json
import os
import re
import shlex
import subprocess
import sys
from typing import Optional, Sequence

import numpy as np

from . import codec, config
from .errors import InvalidArgument, NoMessage, OccError
from .linklab import simulate, sweep
from .registry import load_registry, resolve
from .rscam import capture_sequence, load_frame, save_capture
from .rxpipe import decode_frame, merge_frames, row_profile
from .txmodel import Controller, waveform

_RAMP = " .:-=+*#%@"


class Failure(Exception):
    def __init__(self, kind: str, detail: str):
        super().__init__(detail)
        self.kind = kind


def _kind(exc: BaseException) -> str:
    return re.sub(r"(?<!^)(?=[A-Z])", "-", type(exc).__name__).lower()


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def _note(text: str) -> None:
    print(text, file=sys.stderr)


def _hex_arg(token: str) -> int:
    try:
        return codec.parse_hex(token)
    except InvalidArgument as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def stripe_preview(pixels: np.ndarray, lines: int = 80, width: int = 32) -> str:
    """Coarse ASCII rendering of a frame's row profile, top row first."""
    prof = row_profile(pixels)
    lo, hi = float(prof.min()), float(prof.max())
    scale = (prof - lo) / (hi - lo) if hi > lo else np.zeros_like(prof)
    step = max(1, -(-prof.size // lines))
    out = []
    for r in range(0, prof.size, step):
        level = float(scale[r : r + step].mean())
        out.append(_RAMP[min(len(_RAMP) - 1, int(level * len(_RAMP)))] * width)
    return "\n".join(out)


def _load_cfg(args) -> dict:
    cfg = config.load_config(args.config)
    if getattr(args, "noise", None) is not None:
        cfg["camera"]["noise_sigma"] = float(args.noise)
    if getattr(args, "frames", None) is not None:
        cfg["link"]["n_frames"] = int(args.frames)
    return cfg


def _ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


# subcommands -------------------------------------------------------------


def cmd_encode(args) -> int:
    if args.symbols is not None:
        stream = codec.message_to_stream(args.symbols)
    else:
        stream = codec.frame_payloads(args.payloads)
    print(codec.bits_to_str(stream))
    return 0


def _run_commands(path: str) -> tuple[Controller, list[str]]:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    ctl = Controller()
    return ctl, ctl.run_script(lines)


def cmd_tx_sim(args) -> int:
    ctl, replies = _run_commands(args.commands)
    _emit({"responses": replies, "state": ctl.state.to_dict()})
    failed = [r for r in replies if r != "OK"]
    if failed:
        raise Failure("command-error", f"{len(failed)} command(s) rejected, first: {failed[0]}")
    return 0


def cmd_capture(args) -> int:
    cfg = _load_cfg(args)
    cam = config.camera_config(cfg)
    if args.commands:
        ctl, replies = _run_commands(args.commands)
        bad = [r for r in replies if r != "OK"]
        if bad:
            raise Failure("command-error", bad[0])
        state = ctl.state
    else:
        trial = config.trial_config(cfg, payloads=tuple(args.payload or (0xB6,)))
        ctl = Controller()
        for line in trial.commands():
            ctl.send(line)
        state = ctl.state
    wave = waveform(state)
    out = _ensure_dir(args.out or ".")
    written = []
    for k, (frame, truth) in enumerate(capture_sequence(wave, cam, int(cfg["link"]["n_frames"]), args.t0, args.seed)):
        path = save_capture(out, k, frame, truth)
        written.append({"pgm": path, "truth": truth.to_dict()})
    _note(f"wrote {len(written)} frame(s) to {out}")
    _emit({"frames": written})
    return 0


def cmd_decode(args) -> int:
    frames = []
    decoded = []
    for path in args.frames:
        dec = decode_frame(load_frame(path), args.rows_per_bit, args.roi, args.method)
        decoded.append(dec)
        frames.append({"file": path, **dec.to_dict()})
        _note(f"{path}: {len(dec.packets)} packet(s)" + (f" ({dec.error})" if dec.error else ""))
    try:
        message = merge_frames(decoded).to_dict()
    except NoMessage:
        message = None
    _emit({"frames": frames, "message": message})
    return 0


def cmd_e2e(args) -> int:
    reg = load_registry(args.registry)
    cfg = _load_cfg(args)
    trial = config.trial_config(cfg, payloads=tuple(args.payload), seed=args.seed)
    run = simulate(trial)
    if args.out:
        _ensure_dir(args.out)
        for k, (frame, truth) in enumerate(run.captures):
            save_capture(args.out, k, frame, truth)
    try:
        report = merge_frames(run.decoded)
    except NoMessage:
        raise Failure("no-message", f"no packet decoded in {len(run.decoded)} frame(s)") from None
    shown = next((d for d in run.decoded if d.packets), run.decoded[0])
    _note("stripe preview (frame %d):" % run.decoded.index(shown))
    _note(stripe_preview(run.captures[run.decoded.index(shown)][0].pixels))
    _note(f"decoded bits: {codec.bits_to_str(shown.bits)}")
    url = resolve(reg, report.message)
    _note(f"payload {codec.to_hex(report.message)} -> {url}")
    result = {
        "payload": codec.to_hex(report.message),
        "url": url,
        "bits": codec.bits_to_str(shown.bits),
        "report": report.to_dict(),
    }
    if args.open_cmd:
        argv = [part.replace("{url}", url) for part in shlex.split(args.open_cmd)]
        proc = subprocess.run(argv, check=False)
        result["open_status"] = proc.returncode
        if proc.returncode != 0:
            _emit(result)
            raise Failure("open-failed", f"{argv[0]} exited with {proc.returncode}")
    _emit(result)
    return 0


def cmd_sweep(args) -> int:
    base = config.load_config(args.config)
    grid, settings = config.load_grid(args.grid, base)
    trials = args.trials if args.trials is not None else int(settings.get("trials_per_point", 10))
    seed = args.seed if args.seed is not None else int(settings.get("base_seed", 0))
    report = sweep(grid, trials, seed, workers=args.workers)
    if args.out:
        _ensure_dir(args.out)
        csv_path = os.path.join(args.out, "sweep.csv")
        summary = report.write(csv_path)
        _note(f"wrote {csv_path} and {summary}")
        sys.stdout.write(report.summary_json())
    else:
        sys.stdout.write(report.to_csv())
    return 0


def cmd_resolve(args) -> int:
    reg = load_registry(args.registry)
    _emit({"payload": codec.to_hex(args.payload), "url": resolve(reg, args.payload)})
    return 0


# parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="64-bit seed")
    common.add_argument("--config", help="TOML file overriding the default profile")
    common.add_argument("--out", help="output directory")

    parser = argparse.ArgumentParser(prog="occ", description="Rolling-shutter optical link toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("encode", parents=[common], help="symbols or payloads to a bit string")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--symbols", type=int, nargs="+", metavar="V", help="7-bit symbols 0..127")
    g.add_argument("--payloads", type=_hex_arg, nargs="+", metavar="HEX", help="payload bytes")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("tx-sim", parents=[common], help="run a controller command file")
    p.add_argument("commands", help="file of controller command lines")
    p.set_defaults(func=cmd_tx_sim)

    p = sub.add_parser("capture", parents=[common], help="render frames to PGM with truth sidecars")
    p.add_argument("--commands", help="controller command file (default: transmit --payload)")
    p.add_argument("--payload", type=_hex_arg, nargs="+", metavar="HEX")
    p.add_argument("--frames", type=int)
    p.add_argument("--noise", type=float, help="noise sigma in grey levels")
    p.add_argument("--t0", type=float, default=0.0, help="start time of the first frame (s)")
    p.set_defaults(func=cmd_capture)

    p = sub.add_parser("decode", parents=[common], help="decode PGM frames to a JSON report")
    p.add_argument("frames", nargs="+", help="PGM files")
    p.add_argument("--rows-per-bit", type=float, help="known bit width in rows")
    p.add_argument("--roi", type=int, nargs=4, metavar=("C0", "C1", "R0", "R1"), help="half-open region")
    p.add_argument("--method", choices=("runs", "dft"), default="runs")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("e2e", parents=[common], help="transmit, capture, decode and resolve")
    p.add_argument("--payload", type=_hex_arg, nargs="+", required=True, metavar="HEX")
    p.add_argument("--registry", required=True, help="TSV file of HEX<TAB>URL")
    p.add_argument("--frames", type=int)
    p.add_argument("--noise", type=float)
    p.add_argument("--open-cmd", help="command template run with {url} substituted")
    p.set_defaults(func=cmd_e2e)

    p = sub.add_parser("sweep", parents=[common], help="Monte-Carlo sweep from a grid file")
    p.add_argument("grid", help="TOML grid file")
    p.add_argument("--trials", type=int, help="trials per point")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("resolve", parents=[common], help="look up a payload's URL")
    p.add_argument("payload", type=_hex_arg)
    p.add_argument("--registry", required=True)
    p.set_defaults(func=cmd_resolve)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is None and args.command != "sweep":
        args.seed = 0
    try:
        return args.func(args)
    except Failure as exc:
        kind, detail = exc.kind, str(exc)
    except OccError as exc:
        kind, detail = _kind(exc), str(exc)
    except ValueError as exc:
        kind, detail = "invalid-input", str(exc)
    except OSError as exc:
        kind, detail = "io", f"{exc.strerror or exc}: {exc.filename or ''}".rstrip(": ")
    detail = " ".join(detail.split())
    print(f"error {kind}: {detail}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
