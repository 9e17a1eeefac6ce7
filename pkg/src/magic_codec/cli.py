"""Batch command line: ``magic-codec {acquire,encode,decode,stats,ctcutoff}``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import analysis
from .acquisition import AcquisitionParams, acquire, load_package, save_package
from .codec import HEADER_BYTES, EncodeParams, Roi, decode, encode
from .imageio import load_image, save_image

log = logging.getLogger("magic_codec")

IMAGE_EXTS = {".png", ".ppm"}


def _expand(paths, exts) -> list[Path]:
    out = []
    for p in map(Path, paths):
        if p.is_dir():
            out += sorted(q for q in p.iterdir() if q.suffix.lower() in exts)
        else:
            out.append(p)
    return out


def _outputs(inputs: list[Path], out: str, suffix: str) -> list[Path]:
    """One output path per input; ``out`` is a file for one input, else a directory."""
    target = Path(out)
    if len(inputs) == 1 and not target.is_dir():
        target.parent.mkdir(parents=True, exist_ok=True)
        return [target]
    target.mkdir(parents=True, exist_ok=True)
    return [target / (p.stem + suffix) for p in inputs]


def _roi(text: str) -> Roi:
    try:
        vals = [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad ROI {text!r}") from None
    if len(vals) != 5:
        raise argparse.ArgumentTypeError("ROI must be r0,c0,r1,c1,droi")
    return Roi(*vals)


def cmd_acquire(args) -> int:
    files = _expand(args.inputs, IMAGE_EXTS)
    if not files:
        raise FileNotFoundError("no sample images found")
    params = AcquisitionParams(bdim=args.bdim, iter_limit=args.iters, pw=args.pw, th=args.th,
                               cb=args.cb, grid_divisor=args.grid_divisor,
                               dict_size=args.dict_size, epochs=args.epochs, lr=args.lr,
                               pattern_seed=args.pattern_seed, kmeans_seed=args.kmeans_seed,
                               train_seed=args.train_seed)
    kp = acquire([str(f) for f in files], params)
    save_package(kp, args.out)
    log.info("wrote %s from %d images", args.out, len(files))
    return 0


def cmd_encode(args) -> int:
    kp = load_package(args.pkg)
    files = _expand(args.inputs, IMAGE_EXTS)
    if not files:
        raise FileNotFoundError("no input images found")
    ep = EncodeParams(d=args.d, grid=args.grid, roi=args.roi or ())
    records = []
    for src, dst in zip(files, _outputs(files, args.out, ".magic")):
        enc = encode(load_image(src), kp, ep)
        data = enc.to_bytes()
        dst.write_bytes(data)
        records.append((str(src), len(data), enc.bpp))
        log.info("%s -> %s: %d bytes, %.5f bpp", src, dst, len(data), enc.bpp)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            analysis.write_sizes_csv(records, fh)
    return 0


def cmd_decode(args) -> int:
    kp = load_package(args.pkg)
    files = _expand(args.inputs, {".magic"})
    if not files:
        raise FileNotFoundError("no encoded images found")
    for src, dst in zip(files, _outputs(files, args.out, ".png")):
        img = decode(src.read_bytes(), kp, smooth_depth=args.smooth)
        save_image(img, dst)
        log.info("%s -> %s", src, dst)
    return 0


def _file_bpp(path: Path) -> float:
    data = path.read_bytes()
    if len(data) < HEADER_BYTES:
        raise ValueError(f"{path}: not an encoded image")
    rows = int.from_bytes(data[0:2], "big")
    cols = int.from_bytes(data[2:4], "big")
    return analysis.bpp(8 * len(data), rows, cols)


def cmd_stats(args) -> int:
    values = []
    if args.csv:
        with open(args.csv, newline="") as fh:
            values += [b for _, _, b in analysis.read_sizes_csv(fh)]
    values += [_file_bpp(p) for p in _expand(args.inputs, {".magic"})]
    print(analysis.dataset_stats(values).to_json())
    return 0


def cmd_ctcutoff(args) -> int:
    print(f"{analysis.ct_cutoff(args.e1, args.e2, args.i1, args.i2, args.f):.10g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="magic-codec", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    a = sub.add_parser("acquire", help="build a knowledge package from sample images")
    a.add_argument("--in", dest="inputs", nargs="+", required=True,
                   help="sample images or directories")
    a.add_argument("--out", required=True)
    a.add_argument("--bdim", type=int, default=64)
    a.add_argument("--pw", type=int, default=8)
    a.add_argument("--cb", type=int, default=8)
    a.add_argument("--th", type=float, default=5.0)
    a.add_argument("--iters", type=int, default=10)
    a.add_argument("--grid-divisor", type=int, default=20)
    a.add_argument("--dict-size", type=int, default=4096)
    a.add_argument("--epochs", type=int, default=100)
    a.add_argument("--lr", type=float, default=0.01)
    defaults = AcquisitionParams()
    a.add_argument("--pattern-seed", type=int, default=defaults.pattern_seed)
    a.add_argument("--kmeans-seed", type=int, default=defaults.kmeans_seed)
    a.add_argument("--train-seed", type=int, default=defaults.train_seed)
    a.set_defaults(func=cmd_acquire)

    e = sub.add_parser("encode", help="compress images")
    e.add_argument("inputs", nargs="+")
    e.add_argument("--pkg", required=True)
    e.add_argument("--out", required=True, help="output file, or directory for several inputs")
    e.add_argument("--d", type=int, default=1)
    e.add_argument("--grid", type=int)
    e.add_argument("--roi", type=_roi, action="append", metavar="r0,c0,r1,c1,droi")
    e.add_argument("--csv", help="write file,bytes,bpp per image")
    e.set_defaults(func=cmd_encode)

    d = sub.add_parser("decode", help="reconstruct images")
    d.add_argument("inputs", nargs="+")
    d.add_argument("--pkg", required=True)
    d.add_argument("--out", required=True, help="output file, or directory for several inputs")
    d.add_argument("--smooth", type=int, default=0, metavar="DEPTH")
    d.set_defaults(func=cmd_decode)

    s = sub.add_parser("stats", help="BPP summary as JSON")
    s.add_argument("inputs", nargs="*", help=".magic files or directories")
    s.add_argument("--csv", help="CSV with file,bytes,bpp columns")
    s.set_defaults(func=cmd_stats)

    c = sub.add_parser("ctcutoff", help="computation/transmission energy cutoff")
    c.add_argument("--e1", type=float, required=True, help="mean encode seconds, this codec")
    c.add_argument("--e2", type=float, required=True, help="mean encode seconds, competitor")
    c.add_argument("--i1", type=float, required=True, help="mean encoded bytes, this codec")
    c.add_argument("--i2", type=float, required=True, help="mean encoded bytes, competitor")
    c.add_argument("--f", type=float, default=3.7e9, help="CPU clock in Hz")
    c.set_defaults(func=cmd_ctcutoff)
    return ap


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
