"""File formats: PGM/PNG/PFM images, phase maps with JSON sidecars, depth maps and run manifests.

Images on disk are either integer PGM (P5, 8 or 16 bit) holding linear
intensity, PNG (input only, sRGB encoded) or 32-bit float PFM. Every
quantity with physical units travels in a JSON sidecar next to the image,
named like the image with a ``.json`` suffix.
"""
from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from .phase import PhaseMap, QuantizedPhaseMap

MANIFEST_NAME = "manifest.json"


class DataError(ValueError):
    """Input file is missing, malformed or inconsistent."""


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise DataError(f"missing sidecar {path}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed JSON in {path}: {exc}") from None


# integer images --------------------------------------------------------------------------

def write_pgm(path, levels: np.ndarray):
    """Binary PGM; uint8 arrays give 8-bit files, uint16 arrays 16-bit files."""
    levels = np.asarray(levels)
    if levels.ndim != 2:
        raise ValueError("PGM images are 2-D")
    if levels.dtype not in (np.uint8, np.uint16):
        raise TypeError(f"PGM needs uint8 or uint16 levels, got {levels.dtype}")
    Image.fromarray(levels).save(Path(path), format="PPM")


def read_pgm(path) -> tuple[np.ndarray, int]:
    """Levels as an integer array plus the maximum level (255 or 65535)."""
    try:
        with Image.open(Path(path)) as im:
            if im.format != "PPM" or im.mode not in ("L", "I", "I;16", "I;16B"):
                raise DataError(f"{path} is not a grayscale PGM")
            a = np.array(im)
    except FileNotFoundError:
        raise DataError(f"no such file: {path}") from None
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    maxval = 255 if a.dtype == np.uint8 else 65535
    return a, maxval


def quantize_intensity(img: np.ndarray, bits: int = 16, peak: float | None = None) -> np.ndarray:
    """Scale by ``peak`` (default the image max) and round to ``bits``-bit levels."""
    if bits not in (8, 16):
        raise ValueError("bits must be 8 or 16")
    img = np.asarray(img, dtype=np.float64)
    top = (1 << bits) - 1
    peak = float(img.max()) if peak is None else float(peak)
    if peak <= 0:
        return np.zeros(img.shape, dtype=np.uint8 if bits == 8 else np.uint16)
    q = np.clip(np.rint(img / peak * top), 0, top)
    return q.astype(np.uint8 if bits == 8 else np.uint16)


def write_intensity(path, img: np.ndarray, bits: int = 16, peak: float | None = None):
    write_pgm(path, quantize_intensity(img, bits, peak))


def srgb_to_linear(v: np.ndarray) -> np.ndarray:
    """Inverse sRGB transfer curve on values in [0, 1]."""
    v = np.asarray(v, dtype=np.float64)
    return np.where(v <= 0.04045, v / 12.92, ((v + 0.055) / 1.055) ** 2.4)


def read_intensity(path) -> np.ndarray:
    """Linear intensity in [0, 1].

    PGM levels are taken as linear. PNG values are sRGB decoded; color PNGs
    are reduced to linear luminance.
    """
    path = Path(path)
    if path.suffix.lower() == ".pfm":
        return read_pfm(path).astype(np.float64)
    if path.suffix.lower() != ".png":
        a, maxval = read_pgm(path)
        return a.astype(np.float64) / maxval
    try:
        with Image.open(path) as im:
            if im.mode in ("I", "I;16", "I;16B"):
                v = np.array(im).astype(np.float64) / 65535
            else:
                v = np.array(im.convert("RGB" if im.mode not in ("L", "LA") else "L"),
                             dtype=np.float64) / 255
    except FileNotFoundError:
        raise DataError(f"no such file: {path}") from None
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    lin = srgb_to_linear(np.clip(v, 0, 1))
    if lin.ndim == 3:
        lin = lin @ np.array([0.2126, 0.7152, 0.0722])
    return lin


# float images ----------------------------------------------------------------------------

def write_pfm(path, img: np.ndarray):
    """Grayscale PFM, little-endian, rows stored bottom-up as the format requires."""
    a = np.asarray(img, dtype="<f4")
    if a.ndim != 2:
        raise ValueError("PFM images are 2-D")
    rows, cols = a.shape
    with open(path, "wb") as fh:
        fh.write(f"Pf\n{cols} {rows}\n-1.0\n".encode("ascii"))
        fh.write(np.ascontiguousarray(a[::-1]).tobytes())


def read_pfm(path) -> np.ndarray:
    try:
        data = Path(path).read_bytes()
    except FileNotFoundError:
        raise DataError(f"no such file: {path}") from None
    parts = data.split(b"\n", 3)
    if len(parts) < 4 or parts[0].strip() != b"Pf":
        raise DataError(f"{path} is not a grayscale PFM")
    try:
        cols, rows = (int(v) for v in parts[1].split())
        scale = float(parts[2])
    except ValueError:
        raise DataError(f"bad PFM header in {path}") from None
    dtype = "<f4" if scale < 0 else ">f4"
    body = parts[3]
    if len(body) != rows * cols * 4:
        raise DataError(f"{path}: expected {rows * cols * 4} data bytes, found {len(body)}")
    return np.frombuffer(body, dtype=dtype).reshape(rows, cols)[::-1].astype(np.float32)


# phase maps ------------------------------------------------------------------------------

def write_phase(path, phase: QuantizedPhaseMap, wavelength: float, **extra):
    """8-bit PGM of the SLM levels plus a sidecar with pitch, wavelength and level count."""
    if phase.levels_count > 256:
        raise ValueError("PGM phase export supports at most 256 levels")
    write_pgm(path, phase.levels.astype(np.uint8))
    meta = dict(pitch=phase.pitch, wavelength=wavelength, levels_count=phase.levels_count)
    meta.update(extra)
    _write_json(sidecar_path(path), meta)


def read_phase(path) -> tuple[QuantizedPhaseMap, dict]:
    levels, _ = read_pgm(path)
    meta = _read_json(sidecar_path(path))
    for key in ("pitch", "levels_count"):
        if key not in meta:
            raise DataError(f"phase sidecar of {path} lacks {key!r}")
    try:
        q = QuantizedPhaseMap(levels, float(meta["pitch"]), int(meta["levels_count"]))
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    return q, meta


def write_phase_pfm(path, phase: PhaseMap):
    write_pfm(path, phase.values)


# depth maps ------------------------------------------------------------------------------

def write_depth_map(path, depth: np.ndarray, depth_range: tuple[float, float]):
    """16-bit PGM, level 0 at ``depth_range[0]`` and 65535 at ``depth_range[1]``."""
    d_min, d_max = map(float, depth_range)
    if not d_max > d_min:
        raise ValueError("depth range must be increasing")
    q = np.clip(np.rint((np.asarray(depth) - d_min) / (d_max - d_min) * 65535), 0, 65535)
    write_pgm(path, q.astype(np.uint16))
    _write_json(sidecar_path(path), {"depth_range": [d_min, d_max]})


def read_depth_map(path) -> np.ndarray:
    levels, maxval = read_pgm(path)
    meta = _read_json(sidecar_path(path))
    try:
        d_min, d_max = (float(v) for v in meta["depth_range"])
    except (KeyError, TypeError, ValueError):
        raise DataError(f"depth sidecar of {path} needs depth_range: [D_min, D_max]") from None
    return d_min + levels.astype(np.float64) / maxval * (d_max - d_min)


# image stacks ----------------------------------------------------------------------------

def write_stack(directory, images: Sequence[np.ndarray], depths: Sequence[float], prefix: str,
                bits: int = 16, pfm: bool = False) -> list[Path]:
    """Numbered PGMs normalized to the stack-wide maximum, plus a JSON index.

    The index ``<prefix>.json`` lists the file and depth of every frame and
    the peak intensity that maps to the top level.
    """
    directory = Path(directory)
    peak = max(float(np.max(im)) for im in images) if images else 0.0
    written, frames = [], []
    for k, (img, d) in enumerate(zip(images, depths)):
        name = f"{prefix}_{k:03d}.pgm"
        write_intensity(directory / name, img, bits, peak)
        written.append(directory / name)
        frame = {"file": name, "depth": float(d)}
        if pfm:
            fname = f"{prefix}_{k:03d}.pfm"
            write_pfm(directory / fname, img)
            written.append(directory / fname)
            frame["raw"] = fname
        frames.append(frame)
    index = directory / f"{prefix}.json"
    _write_json(index, {"peak": peak, "bits": bits, "frames": frames})
    written.append(index)
    return written


# run manifest ----------------------------------------------------------------------------

def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    """Record of one command run: inputs, parameters, outputs with hashes and timings."""

    command: str
    config: str | None = None
    parameters: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)        # relative path -> sha256
    timings: dict = field(default_factory=dict)        # stage -> seconds
    results: dict = field(default_factory=dict)
    _clock: dict = field(default_factory=dict, repr=False)

    def start(self, stage: str):
        self._clock[stage] = time.perf_counter()

    def stop(self, stage: str):
        self.timings[stage] = round(time.perf_counter() - self._clock.pop(stage), 6)

    def add_outputs(self, root, paths):
        root = Path(root).resolve()
        for p in paths:
            p = Path(p).resolve()
            self.outputs[p.relative_to(root).as_posix()] = sha256_file(p)

    def to_dict(self) -> dict:
        return dict(command=self.command, config=self.config, parameters=self.parameters,
                    outputs=self.outputs, timings=self.timings, results=self.results)

    def save(self, directory) -> Path:
        path = Path(directory) / MANIFEST_NAME
        _write_json(path, self.to_dict())
        return path

    @classmethod
    def load(cls, path) -> "RunManifest":
        path = Path(path)
        if path.is_dir():
            path = path / MANIFEST_NAME
        d = _read_json(path)
        return cls(d["command"], d.get("config"), d.get("parameters", {}), d.get("outputs", {}),
                   d.get("timings", {}), d.get("results", {}))

    def verify(self, directory) -> list[str]:
        """Outputs that are missing or whose hash no longer matches."""
        bad = []
        for rel, digest in sorted(self.outputs.items()):
            p = Path(directory) / rel
            if not p.is_file() or sha256_file(p) != digest:
                bad.append(rel)
        return bad
