"""Command-line interface.

Subcommands
-----------
simulate     build a phantom, project it, add noise, FBP it, write rasters
reconstruct  run a reconstruction method on an existing sinogram raster
evaluate     print re,psnr,ssim CSV for an image against a reference
stability    run a noise or reconstructor perturbation sweep, write CSV
render       export a raster as an 8-bit PNG; optionally extract RE curves

Exit codes: 0 success, 2 configuration error, 3 missing dependency,
4 numerical divergence.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from ._validation import ConfigurationError, DependencyError, DivergenceError
from .fbp import FbpFilter, fbp
from .geometry import FanBeamGeometry
from .metrics import metrics_record
from .noise import NoiseSpec, add_noise
from .operators import FanBeamOperator
from .phantoms import coule_phantom, load_image, synthetic_phantom
from .pipelines import (
    METHOD_KINDS,
    ReconMethod,
    noise_stability_sweep,
    reconstructor_stability_sweep,
    solve_method,
    unit_square_pixel_size,
    write_history_csv,
)
from .raster import geometry_from_header, read_raster, write_raster
from .solver import SolverConfig


def _build_phantom(name: str, size: int, seed: int) -> np.ndarray:
    if name == "synthetic":
        return synthetic_phantom(size)
    if name == "coule":
        return coule_phantom(size, seed=seed)
    path = Path(name)
    if not path.exists():
        raise DependencyError(f"phantom image not found: {path}")
    return load_image(path, size)


def _read_image_raster(path) -> np.ndarray:
    data, header = read_raster(path)
    if header["kind"] != "image":
        raise ConfigurationError(
            f"expected an image raster at {path}, got kind {header['kind']!r}")
    return data.astype(np.float64)


def _add_solver_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--lam", type=float, default=1.0,
                     help="regularization strength")
    sub.add_argument("--max-iters", type=int, default=500)
    sub.add_argument("--stop-tol", type=float, default=1e-7)
    sub.add_argument("--record-every", type=int, default=10)


def _solver_config(args) -> SolverConfig:
    return SolverConfig(
        lam=args.lam,
        max_iters=args.max_iters,
        stop_tol=args.stop_tol,
        record_every=args.record_every,
        norm_seed=args.seed,
    )


def cmd_simulate(args) -> int:
    gt = _build_phantom(args.phantom, args.size, args.seed)
    pixel_size = args.pixel_size
    if pixel_size is None:
        pixel_size = unit_square_pixel_size(gt.shape)
    args.pixel_size = pixel_size
    geom = FanBeamGeometry.standard(args.size, args.views,
                                    pixel_size=pixel_size,
                                    num_detectors=args.detectors)
    op = FanBeamOperator(gt.shape, geom, pixel_size=pixel_size)
    y = op.project(gt)
    y_noisy = add_noise(y, NoiseSpec(nu=args.nu, seed=args.seed))
    recon = fbp(y_noisy, geom, gt.shape, pixel_size=args.pixel_size)

    outdir = Path(args.outdir)
    hint = {"image_side": int(args.size)}
    write_raster(outdir / "gt.f32", gt, "image", pixel_size=args.pixel_size)
    write_raster(outdir / "sino_clean.f32", y, "sinogram", geometry=geom,
                 pixel_size=args.pixel_size, extra=hint)
    write_raster(outdir / "sino_noisy.f32", y_noisy, "sinogram", geometry=geom,
                 pixel_size=args.pixel_size, extra=hint)
    write_raster(outdir / "fbp.f32", recon, "image", pixel_size=args.pixel_size)

    norm_y = float(np.linalg.norm(y))
    ratio = float(np.linalg.norm(y_noisy - y)) / norm_y if norm_y > 0 else 0.0
    print(f"noise_ratio {ratio:.6g}")
    return 0


def cmd_reconstruct(args) -> int:
    y_flat, header = read_raster(args.sinogram)
    if header["kind"] != "sinogram":
        raise ConfigurationError(
            f"expected a sinogram raster, got kind {header['kind']!r}")
    geom = geometry_from_header(header)
    if geom is None:
        raise ConfigurationError(
            f"sinogram sidecar for {args.sinogram} carries no geometry")
    side = args.side if args.side is not None else header.get("image_side")
    if side is None:
        raise ConfigurationError(
            "image side unknown: pass --side or use a sidecar with image_side")
    side = int(side)
    pixel_size = float(header.get("pixel_size", 1.0))
    y = y_flat.astype(np.float64)

    gt = _read_image_raster(args.gt) if args.gt else None
    if args.method == "gt-wl1" and gt is None:
        raise ConfigurationError("method gt-wl1 requires --gt")

    method = ReconMethod(
        kind=args.method,
        lam=args.lam,
        eta=args.eta,
        p=args.p,
        k_early=args.k_early,
        reweight_every=args.reweight_every,
        intermediate_lam=args.intermediate_lam,
        intermediate_path=args.intermediate,
        fbp_filter=FbpFilter(kind=args.filter, cutoff=args.cutoff),
    )
    cfg = _solver_config(args)
    op = FanBeamOperator((side, side), geom, pixel_size=pixel_size)
    result, x_tilde, weights = solve_method(method, op, y, cfg,
                                            gt=gt, reference=gt)

    outdir = Path(args.outdir)
    write_raster(outdir / "final.f32", result.image, "image",
                 pixel_size=pixel_size)
    weight_data = weights.data if weights is not None else result.final_weights
    if weight_data is not None:
        write_raster(outdir / "weights.f32", weight_data, "weights",
                     pixel_size=pixel_size)
    if x_tilde is not None:
        write_raster(outdir / "x_tilde.f32", x_tilde, "image",
                     pixel_size=pixel_size)
    write_history_csv(outdir / "history.csv", result)
    print(f"iterations {result.iters_run} stop {result.stop_reason}")
    return 0


def cmd_evaluate(args) -> int:
    x = _read_image_raster(args.image)
    ref = _read_image_raster(args.reference)
    if x.shape != ref.shape:
        raise ConfigurationError(
            f"shape mismatch: {x.shape} vs {ref.shape}")
    rec = metrics_record(x, ref)
    lines = ["re,psnr,ssim",
             f"{rec.re:.10g},{rec.psnr:.10g},{rec.ssim:.10g}"]
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.output:
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        Path(args.output).write_text(text)
    return 0


def cmd_stability(args) -> int:
    gt = _build_phantom(args.phantom, args.size, args.seed)
    pixel_size = args.pixel_size
    if pixel_size is None:
        pixel_size = unit_square_pixel_size(gt.shape)
    args.pixel_size = pixel_size
    geom = FanBeamGeometry.standard(args.size, args.views,
                                    pixel_size=pixel_size)
    cfg = _solver_config(args)
    levels = [float(tok) for tok in args.levels.split(",") if tok.strip()]
    if not levels:
        raise ConfigurationError("empty --levels list")
    if args.kind == "noise":
        rows = noise_stability_sweep(gt, geom, levels, cfg,
                                     eta=args.eta, p=args.p, seed=args.seed,
                                     pixel_size=args.pixel_size)
    else:
        rows = reconstructor_stability_sweep(
            gt, geom, NoiseSpec(nu=args.nu, seed=args.seed), levels, cfg,
            eta=args.eta, p=args.p, variant=args.variant, seed=args.seed,
            pixel_size=args.pixel_size)

    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["level", "distance"])
        for level, distance in rows:
            writer.writerow([f"{level:.10g}", f"{distance:.17g}"])
    print(f"wrote {out} ({len(rows)} rows)")
    return 0


def cmd_render(args) -> int:
    from PIL import Image

    data, _ = read_raster(args.input)
    arr = data.astype(np.float64)
    lo = float(arr.min())
    hi = float(arr.max())
    if hi > lo:
        scaled = (arr - lo) / (hi - lo) * 255.0
        pixels = np.clip(np.rint(scaled), 0, 255).astype(np.uint8)
    else:
        pixels = np.full(arr.shape, 128, dtype=np.uint8)
    out = Path(args.output) if args.output else Path(args.input).with_suffix(".png")
    out.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(pixels, mode="L").save(out)
    print(f"wrote {out}")

    if args.history:
        hist_path = Path(args.history)
        if not hist_path.exists():
            raise DependencyError(f"history file not found: {hist_path}")
        re_out = (Path(args.history_output) if args.history_output
                  else hist_path.with_name("re_vs_iteration.csv"))
        with hist_path.open(newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or "iteration" not in reader.fieldnames:
                raise ConfigurationError(
                    f"history file {hist_path} lacks an iteration column")
            rows = [(row["iteration"], row.get("re", ""))
                    for row in reader if row.get("re")]
        with re_out.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "re"])
            writer.writerows(rows)
        print(f"wrote {re_out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wtvtomo",
        description="Few-view fan-beam CT reconstruction with adaptive "
                    "weighted-TV regularization.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate a noisy scan and FBP it")
    sim.add_argument("--phantom", default="synthetic",
                     help="'synthetic', 'coule', or an image file path")
    sim.add_argument("--size", type=int, default=256)
    sim.add_argument("--views", type=int, default=45)
    sim.add_argument("--detectors", type=int, default=None)
    sim.add_argument("--pixel-size", type=float, default=None,
                 help="physical pixel size (default: 1/size, unit-square object)")
    sim.add_argument("--nu", type=float, default=0.0,
                     help="noise level as a fraction of the sinogram norm")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--outdir", required=True)
    sim.set_defaults(func=cmd_simulate)

    rec = sub.add_parser("reconstruct", help="reconstruct from a sinogram raster")
    rec.add_argument("--sinogram", required=True)
    rec.add_argument("--method", required=True, choices=METHOD_KINDS)
    rec.add_argument("--outdir", required=True)
    rec.add_argument("--gt", default=None,
                     help="ground-truth image raster (required for gt-wl1)")
    rec.add_argument("--intermediate", default=None,
                     help="externally produced image raster for *-net methods")
    rec.add_argument("--intermediate-lam", type=float, default=None)
    rec.add_argument("--side", type=int, default=None,
                     help="image side length (overrides sidecar hint)")
    rec.add_argument("--eta", type=float, default=2e-5)
    rec.add_argument("--p", type=float, default=0.3)
    rec.add_argument("--k-early", type=int, default=50)
    rec.add_argument("--reweight-every", type=int, default=10)
    rec.add_argument("--filter", default="ram-lak", choices=("ram-lak", "hann"))
    rec.add_argument("--cutoff", type=float, default=1.0)
    rec.add_argument("--seed", type=int, default=0)
    _add_solver_flags(rec)
    rec.set_defaults(func=cmd_reconstruct)

    ev = sub.add_parser("evaluate", help="compare an image raster to a reference")
    ev.add_argument("image")
    ev.add_argument("reference")
    ev.add_argument("--output", default=None, help="also write the CSV here")
    ev.set_defaults(func=cmd_evaluate)

    st = sub.add_parser("stability", help="perturbation sweeps, CSV output")
    st.add_argument("--kind", required=True, choices=("noise", "reconstructor"))
    st.add_argument("--levels", required=True,
                    help="comma-separated perturbation levels")
    st.add_argument("--phantom", default="synthetic")
    st.add_argument("--size", type=int, default=128)
    st.add_argument("--views", type=int, default=45)
    st.add_argument("--pixel-size", type=float, default=None)
    st.add_argument("--nu", type=float, default=0.01,
                    help="fixed noise level for the reconstructor sweep")
    st.add_argument("--eta", type=float, default=2e-5)
    st.add_argument("--p", type=float, default=0.3)
    st.add_argument("--variant", default="image", choices=("image", "gradient"))
    st.add_argument("--seed", type=int, default=0)
    st.add_argument("--output", required=True)
    _add_solver_flags(st)
    st.set_defaults(func=cmd_stability)

    ren = sub.add_parser("render", help="raster to 8-bit grayscale PNG")
    ren.add_argument("input")
    ren.add_argument("--output", default=None)
    ren.add_argument("--history", default=None,
                     help="history CSV to distill into an RE-vs-iteration CSV")
    ren.add_argument("--history-output", default=None)
    ren.set_defaults(func=cmd_render)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except DependencyError as exc:
        print(f"dependency error: {exc}", file=sys.stderr)
        return 3
    except DivergenceError as exc:
        print(f"divergence error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
