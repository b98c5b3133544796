"""Command-line driver: plan, synthesize, blend, simulate and evaluate.

Every command writes its outputs plus a ``manifest.json`` into ``--out`` and
prints one line per check in the form ``<check>: PASS`` or ``<check>: FAIL``.

Exit codes: 0 success, 1 usage, 2 data error, 3 numerical or band-limit error.
"""
from __future__ import annotations

import argparse
import csv
import io as _io
import math
import sys
from pathlib import Path

import numpy as np
from scipy import fft as sfft

from . import io
from .blend import SceneInput, compose_panel, render_planes
from .metrics import (DEFAULT_APERTURE, DEFAULT_EDGE_ANGLE, DEFAULT_FREQUENCY, ContrastCurve,
                      EdgeError, central_roi, contrast_vs_accommodation, contrast_vs_spacing,
                      sharpness, slanted_edge_mtf)
from .optics import (DepthPlan, OpticalConfig, mode_for_depths, plan_modes, subpanel_layout,
                     tile_grid)
from .phase import sub_panel_targets, superposition_phase, wrap_quantize
from .propagate import BandLimitError, CameraModel, camera_capture, simulate_depth_stack
from .scenes import edge_panel, layered_scene, letter_panel
from .wgs import WgsParams, merit, overlaps, uniformity, wgs_optimize

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _verdict(name: str, ok: bool) -> bool:
    print(f"{name}: {'PASS' if ok else 'FAIL'}")
    return bool(ok)


def _warn(msg: str):
    print(f"warning: {msg}", file=sys.stderr)


def _csv_text(header, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _write_text(path: Path, text: str) -> Path:
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def _load_config(args, full_default: bool = False) -> OpticalConfig:
    if args.config and args.full:
        raise UsageError("--config and --full are mutually exclusive")
    if args.config:
        try:
            return OpticalConfig.from_json(Path(args.config))
        except FileNotFoundError:
            raise io.DataError(f"no such config file: {args.config}") from None
        except (TypeError, ValueError) as exc:
            raise io.DataError(f"bad config {args.config}: {exc}") from None
    return OpticalConfig.full() if (args.full or full_default) else OpticalConfig.desk()


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _finish(args, out: Path, manifest: io.RunManifest, files) -> int:
    manifest.add_outputs(out, files)
    manifest.save(out)
    if args.verify:
        bad = io.RunManifest.load(out).verify(out)
        if not _verdict("manifest hashes verified", not bad):
            for rel in bad:
                print(f"  mismatch: {rel}", file=sys.stderr)
            return EXIT_DATA
    return EXIT_OK


def _maybe_plot(path, curve: ContrastCurve, ylabel: str):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(4, 3))
    ax.plot(curve.abscissa, curve.relative(), "o-")
    ax.set_xlabel(curve.label.replace("_", " "))
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


# plan ------------------------------------------------------------------------------------

def cmd_plan(args) -> int:
    cfg = _load_config(args, full_default=True)
    out = _out_dir(args)
    manifest = io.RunManifest("plan", args.config, dict(depth_range=args.depth_range, planes=args.planes,
                                                       resolution=args.resolution))
    d_min, d_max = args.depth_range
    W, H = cfg.panel_pixels
    P = cfg.panel_size
    rows = []
    for n in args.planes:
        if args.resolution:
            side = args.resolution
        else:
            found = plan_modes(cfg, (d_min, d_max), [n])
            side = found[0].lateral_resolution[0] if found else 0
        grid_r, grid_c = tile_grid(n) if n >= 1 else (0, 0)
        used = side * side * n
        ok = n >= 1 and side >= 1 and used <= P and grid_c * side <= W and grid_r * side <= H
        spacing = (d_max - d_min) / (n - 1) if n > 1 else 0.0
        status = "ok" if ok else "violates L*M*N <= P, excluded"
        print(f"{side}x{side}, {n} planes, {spacing:g} D, {used}/{P} px: {status}")
        rows.append((f"{side}x{side}", n, spacing, used, P, "yes" if ok else "no"))
    files = [_write_text(out / "modes.csv", _csv_text(
        ["resolution", "planes", "spacing_diopter", "pixels_used", "panel_pixels", "fits"], rows))]
    return _finish(args, out, manifest, files)


# synthesize ------------------------------------------------------------------------------

def _wgs_params(args) -> WgsParams:
    return WgsParams(max_iters=args.wgs_iters, seed=args.seed, init=args.init)


def cmd_synthesize(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    params = _wgs_params(args)
    manifest = io.RunManifest("synthesize", args.config,
                              dict(depths=args.depths, wgs_iters=args.wgs_iters, seed=args.seed,
                                   init=args.init, full=args.full))
    manifest.start("total")
    plan = DepthPlan.from_depths(sorted(args.depths), cfg)
    mode = mode_for_depths(cfg, plan.depths)
    layout = subpanel_layout(cfg, mode)
    targets = sub_panel_targets(layout, plan, cfg)
    est, trace = wgs_optimize(targets, params)
    q = wrap_quantize(est, cfg)
    T_q = merit(q.to_phase(), targets)
    manifest.stop("total")

    baseline = merit(superposition_phase(targets), targets)
    if max(trace.merits) <= baseline:
        _warn("WGS did not improve on the superposition baseline; the pattern is still valid")
    amps = np.abs(overlaps(q.to_phase(), targets))
    print(f"planes {', '.join(f'{d:g}' for d in plan.depths)} D on {mode.lateral_resolution[0]}x"
          f"{mode.lateral_resolution[1]} sub-panels")
    print(f"merit T: baseline {baseline:.6f}, best {max(trace.merits):.6f} at iteration {trace.best_iteration + 1}, "
          f"quantized {T_q:.6f}, uniformity {uniformity(amps):.3e}")

    phase_path = out / "phase.pgm"
    io.write_phase(phase_path, q, cfg.wavelength, depths=list(plan.depths), config=cfg.to_dict())
    files = [phase_path, io.sidecar_path(phase_path), out / "trace.csv"]
    trace.to_csv(out / "trace.csv")
    if args.pfm:
        io.write_phase_pfm(out / "phase.pfm", est)
        files.append(out / "phase.pfm")
    manifest.results = dict(baseline_merit=baseline, best_merit=max(trace.merits), quantized_merit=T_q,
                            amplitudes=[float(a) for a in amps])
    return _finish(args, out, manifest, files)


# blend -----------------------------------------------------------------------------------

def cmd_blend(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    manifest = io.RunManifest("blend", args.config,
                              dict(image=args.image, depthmap=args.depthmap, depths=args.depths,
                                   seed=args.seed))
    if args.image and args.depthmap:
        image = io.read_intensity(args.image)
        depth = io.read_depth_map(args.depthmap)
        if image.shape != depth.shape:
            raise io.DataError(f"image {image.shape} and depth map {depth.shape} differ in size")
    elif args.image or args.depthmap:
        raise UsageError("--image and --depthmap go together")
    else:
        image, depth = layered_scene(seed=args.seed, depth_range=(min(args.depths), max(args.depths)))
    scene = SceneInput(image, depth)
    stack = render_planes(scene, sorted(args.depths))
    if stack.clamped:
        _warn(f"{stack.clamped} pixels outside the plane range were clamped")
    err = float(np.max(np.abs(stack.total() - scene.image)))
    ok = _verdict("plane sums reconstruct the input", err <= 1e-6)
    print(f"max per-pixel reconstruction error {err:.3e}")

    layout = subpanel_layout(cfg, mode_for_depths(cfg, stack.depths))
    panel = compose_panel(stack, layout)
    files = []
    for k, (d, plane) in enumerate(stack):
        p = out / f"plane_{k:03d}.pgm"
        io.write_intensity(p, plane, 16, peak=1.0)
        files.append(p)
    io.write_intensity(out / "panel.pgm", panel, 16, peak=1.0)
    files.append(out / "panel.pgm")
    manifest.results = dict(depths=list(stack.depths), clamped=stack.clamped,
                            max_reconstruction_error=err, reconstruction_ok=ok,
                            planes=[f"plane_{k:03d}.pgm" for k in range(len(stack))])
    return _finish(args, out, manifest, files)


# simulate --------------------------------------------------------------------------------

def _load_phase(args, cfg):
    q, meta = io.read_phase(args.phase)
    if q.shape != (cfg.slm_pixels[1], cfg.slm_pixels[0]):
        raise io.DataError(f"phase map {q.shape} does not match the SLM {cfg.slm_pixels}")
    if not math.isclose(q.pitch, cfg.slm_pitch, rel_tol=1e-9):
        raise io.DataError(f"phase pitch {q.pitch} differs from the configured SLM pitch {cfg.slm_pitch}")
    return q, meta


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    manifest = io.RunManifest("simulate", args.config, {k: v for k, v in vars(args).items()
                                                         if k != "func"})
    slm, meta = _load_phase(args, cfg)
    depths = meta.get("depths")
    files = []

    boxes = None
    if args.stimulus:
        if not depths:
            raise io.DataError("the phase sidecar lists no plane depths; cannot build a stimulus")
        layout = subpanel_layout(cfg, mode_for_depths(cfg, depths))
        if args.stimulus == "letters":
            text = (args.text or "OMNICUOM")[:len(depths)]
            panel, boxes = letter_panel(layout, text)
        else:
            panel = edge_panel(layout, DEFAULT_EDGE_ANGLE, 1.0 / len(depths))
        io.write_intensity(out / "panel.pgm", panel, 16)
        files.append(out / "panel.pgm")
    elif args.panel:
        panel = io.read_intensity(args.panel)
        if panel.shape != (cfg.panel_pixels[1], cfg.panel_pixels[0]):
            raise io.DataError(f"panel {panel.shape} does not match the configured {cfg.panel_pixels}")
    else:
        raise UsageError("give --panel or --stimulus")

    manifest.start("simulate")
    if args.probe_depths is not None:
        images = simulate_depth_stack(panel, slm, cfg, args.probe_depths, args.coherence, args.aperture)
        axis = list(args.probe_depths)
        files += io.write_stack(out, images, axis, "probe", pfm=args.pfm)
        regions = boxes if boxes is not None else [(0, panel.shape[0], 0, panel.shape[1])]
        table = np.array([[sharpness(img, b) for b in regions] for img in images])
        header = ["probe_diopter"] + [f"region{k + 1}" for k in range(len(regions))]
        files.append(_write_text(out / "sharpness.csv", _csv_text(
            header, [[d] + list(row) for d, row in zip(axis, table)])))
        if boxes is not None and depths:
            best = [axis[int(i)] for i in np.argmax(table, axis=0)]
            ok = all(abs(b - d) < 1e-9 for b, d in zip(best, depths))
            _verdict("each letter sharpest at its designated depth", ok)
            manifest.results = dict(sharpest_depth=best, designated=list(depths), letters_ok=ok)
    else:
        foci = sorted(args.camera_focus)
        images = [camera_capture(panel, slm, cfg, CameraModel(z, args.aperture or DEFAULT_APERTURE),
                                 args.coherence) for z in foci]
        files += io.write_stack(out, images, foci, "focus", pfm=args.pfm)
        tile = subpanel_layout(cfg, mode_for_depths(cfg, depths)).occupied[0].rect if depths else None
        roi = min(tile[2:]) // 2 if tile else min(panel.shape) // 4
        pitch_mm = cfg.panel_pitch * 1e3
        try:
            contrast = [slanted_edge_mtf(central_roi(img, roi), pitch_mm).at(args.frequency)
                        for img in images]
        except EdgeError as exc:
            raise io.DataError(f"no usable slanted edge at the image center: {exc}") from None
        curve = ContrastCurve(np.array(foci), np.array(contrast), "focus_diopter")
        files.append(_write_text(out / "contrast.csv", curve.to_csv()))
        print(f"contrast at {args.frequency:g} lp/mm peaks at {curve.argmax:g} D")
        if depths and len(depths) == 2:
            mid = 0.5 * (depths[0] + depths[1])
            _verdict(f"argmax at {mid:g} D", abs(curve.argmax - mid) <= 0.1 + 1e-9)
        _verdict("contrast unimodal over focus", curve.is_unimodal())
        manifest.results = dict(argmax=curve.argmax, contrast=[float(c) for c in contrast])
    manifest.stop("simulate")
    return _finish(args, out, manifest, files)


# evaluate --------------------------------------------------------------------------------

def cmd_evaluate(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    manifest = io.RunManifest("evaluate", args.config, {k: v for k, v in vars(args).items()
                                                         if k != "func"})
    files = []
    manifest.start("total")
    if args.experiment == "mtf":
        if not args.region:
            raise UsageError("evaluate mtf needs --region")
        region = io.read_intensity(args.region)
        try:
            curve = slanted_edge_mtf(region, args.pitch_mm or cfg.panel_pitch * 1e3)
        except EdgeError as exc:
            raise io.DataError(str(exc)) from None
        files.append(_write_text(out / "mtf.csv", _csv_text(
            ["frequency_lp_mm", "modulation"], zip(curve.frequencies, curve.modulation))))
        value = curve.at(args.frequency)
        print(f"edge tilt {curve.angle:.2f} deg, modulation at {args.frequency:g} lp/mm: {value:.4f}")
        manifest.results = dict(angle=curve.angle, contrast=value)
    else:
        kw = dict(aperture=args.aperture or DEFAULT_APERTURE, params=_wgs_params(args),
                  coherence=args.coherence)
        if args.experiment == "accommodation":
            lo, hi = sorted(args.planes)
            foci = args.foci or list(np.linspace(lo, hi, 9))
            curve = contrast_vs_accommodation(cfg, foci, (lo, hi), args.frequency, **kw)
            mid = 0.5 * (lo + hi)
            print(f"contrast at {args.frequency:g} lp/mm peaks at {curve.argmax:g} D")
            ok = _verdict(f"argmax at {mid:g} D", abs(curve.argmax - mid) <= 0.1 + 1e-9)
            ok &= _verdict("contrast unimodal over focus", curve.is_unimodal())
        else:
            curve = contrast_vs_spacing(cfg, args.spacings, args.focus, args.frequency, **kw)
            ok = _verdict("contrast non-increasing with plane spacing (2% slack)",
                          curve.is_nonincreasing(0.02))
            ok &= _verdict("widest spacing below narrowest",
                           curve.contrast[-1] < curve.contrast[0])
        for a, c, r in zip(curve.abscissa, curve.contrast, curve.relative()):
            print(f"  {a:6.3f} D  contrast {c:.4f}  relative {r:.4f}")
        files.append(_write_text(out / f"{args.experiment}.csv", curve.to_csv()))
        if args.plot:
            _maybe_plot(out / f"{args.experiment}.png", curve, "relative contrast")
            files.append(out / f"{args.experiment}.png")
        manifest.results = dict(argmax=curve.argmax, contrast=[float(c) for c in curve.contrast],
                                checks_ok=bool(ok))
    manifest.stop("total")
    return _finish(args, out, manifest, files)


# parser ----------------------------------------------------------------------------------

def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _common(p, out_default):
    p.add_argument("--config", help="optical configuration JSON")
    p.add_argument("--full", action="store_true", help="full-scale 2000x2000 configuration")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=out_default, help="output directory")
    p.add_argument("--verify", action="store_true", help="re-hash outputs against the manifest")
    p.add_argument("--threads", type=_positive_int, default=1,
                   help="FFT worker threads (results do not depend on it)")


def _wgs_flags(p):
    p.add_argument("--wgs-iters", type=int, default=30)
    p.add_argument("--init", choices=("uniform_superposition", "random"), default="uniform_superposition")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="omnidisplay", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("plan", help="tabulate display modes (defaults to the full-scale panel)")
    _common(p, "out/plan")
    p.add_argument("--depth-range", type=float, nargs=2, default=(0.0, 3.0), metavar=("DMIN", "DMAX"))
    p.add_argument("--planes", type=int, nargs="+", default=[4, 16])
    p.add_argument("--resolution", type=int, help="required sub-panel side L; modes that cannot hold it are flagged")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("synthesize", help="WGS phase pattern for a set of depth planes")
    _common(p, "out/synthesize")
    p.add_argument("--depths", type=float, nargs="+", default=[0.0, 1.0, 2.0, 3.0])
    _wgs_flags(p)
    p.add_argument("--pfm", action="store_true", help="also write the continuous phase as PFM")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("blend", help="split an image and depth map into per-plane images")
    _common(p, "out/blend")
    p.add_argument("--image", help="PGM or PNG intensity image (a synthetic scene if omitted)")
    p.add_argument("--depthmap", help="16-bit PGM depth map with a depth_range JSON sidecar")
    p.add_argument("--depths", type=float, nargs="+", default=[0.0, 1.0, 2.0, 3.0])
    p.set_defaults(func=cmd_blend)

    p = sub.add_parser("simulate", help="image a panel through a phase pattern")
    _common(p, "out/simulate")
    p.add_argument("--phase", required=True, help="phase PGM written by synthesize")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--panel", help="panel intensity image")
    src.add_argument("--stimulus", choices=("letters", "edges"), help="build a test panel for the phase's planes")
    p.add_argument("--text", help="letters for --stimulus letters")
    how = p.add_mutually_exclusive_group(required=True)
    how.add_argument("--probe-depths", type=float, nargs="+")
    how.add_argument("--camera-focus", type=float, nargs="+")
    p.add_argument("--aperture", type=float, help="camera aperture diameter in meters")
    p.add_argument("--frequency", type=float, default=DEFAULT_FREQUENCY, help="lp/mm")
    p.add_argument("--coherence", choices=("incoherent", "coherent"), default="incoherent")
    p.add_argument("--pfm", action="store_true", help="also write raw float frames")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", help="contrast experiments and slanted-edge MTF")
    _common(p, "out/evaluate")
    p.add_argument("experiment", choices=("accommodation", "spacing", "mtf"))
    p.add_argument("--planes", type=float, nargs=2, default=(1.0, 2.0))
    p.add_argument("--foci", type=float, nargs="+")
    p.add_argument("--spacings", type=float, nargs="+", default=[0.2, 0.4, 0.6, 0.8, 1.0, 1.2])
    p.add_argument("--focus", type=float, default=1.5)
    p.add_argument("--frequency", type=float, default=DEFAULT_FREQUENCY, help="lp/mm")
    p.add_argument("--aperture", type=float, help="camera aperture diameter in meters")
    p.add_argument("--coherence", choices=("incoherent", "coherent"), default="incoherent")
    p.add_argument("--region", help="edge image for the mtf experiment")
    p.add_argument("--pitch-mm", type=float, help="pixel pitch of --region in mm")
    p.add_argument("--plot", action="store_true", help="also render the curve as PNG")
    _wgs_flags(p)
    p.set_defaults(func=cmd_evaluate)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with sfft.set_workers(args.threads):
            return args.func(args)
    except UsageError as exc:
        print(f"omnidisplay: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BandLimitError as exc:
        print(f"omnidisplay: band-limit error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (io.DataError, ValueError, OSError) as exc:
        print(f"omnidisplay: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FloatingPointError as exc:
        print(f"omnidisplay: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
