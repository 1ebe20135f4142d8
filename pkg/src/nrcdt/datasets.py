"""Synthetic affine classes, image ingestion and dataset file formats.

File formats
------------
Atom files (``.nrcdt``)
    ``b"NRCDT1\\0"``, a little-endian u64 atom count, then ``count`` records of
    three little-endian f64 ``(x, y, w)``. Lossless.
Raster files
    PGM (binary P5 or ASCII P2) and CSV grids of comma-separated intensities.
Manifest (``.json``)
    ``{"class_count": int, "items": [{"path": str, "label": int}, ...]}``;
    paths are relative to the manifest. Items may carry a ``provenance``
    string and the document may list ``templates`` in the same form.
"""

from __future__ import annotations

import json
import math
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    CollinearSupport,
    InvalidConfig,
    MissingFile,
    ParseError,
    UnsupportedFormat,
    ZeroMass,
)
from .measures import DiscreteMeasure2D, MASS_TOL, is_non_collinear, measure_from_image
from .radon import AffineMap, apply_affine

ATOM_MAGIC = b"NRCDT1\0"
TEMPLATE_KINDS = ("cross", "shield", "disk_ring")


def _interval(v, name):
    lo, hi = (float(x) for x in v)
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
        raise InvalidConfig(f"{name}: invalid interval [{lo}, {hi}]")
    return lo, hi


@dataclass(frozen=True)
class AffineSamplerConfig:
    """Uniform ranges for random affine maps.

    ``rotation_step`` restricts rotations to integer multiples of the step;
    ``isotropic`` draws one scale for both axes (from ``scale_range[0]``).
    Together with zero shear these keep an angle grid invariant, see
    :meth:`grid_preserving`.
    """

    rotation_range: tuple = (0.0, 2 * math.pi)
    scale_range: tuple = ((0.75, 1.25), (0.75, 1.25))
    shear_range: tuple = (-0.25, 0.25)
    translation_range: tuple = ((-0.2, 0.2), (-0.2, 0.2))
    allow_reflection: bool = False
    seed: int = 0
    rotation_step: float | None = None
    isotropic: bool = False

    def __post_init__(self):
        _interval(self.rotation_range, "rotation_range")
        _interval(self.shear_range, "shear_range")
        if len(self.scale_range) != 2 or len(self.translation_range) != 2:
            raise InvalidConfig("scale_range and translation_range need one interval per axis")
        for r in self.scale_range:
            lo, _ = _interval(r, "scale_range")
            if lo <= 0:
                raise InvalidConfig("scale_range lower bounds must be positive")
        for r in self.translation_range:
            _interval(r, "translation_range")
        if not (0 <= int(self.seed) < 2**64):
            raise InvalidConfig("seed must be an unsigned 64-bit integer")
        if self.rotation_step is not None and not self.rotation_step > 0:
            raise InvalidConfig("rotation_step must be positive")

    @classmethod
    def identity(cls, seed=0):
        return cls((0.0, 0.0), ((1.0, 1.0), (1.0, 1.0)), (0.0, 0.0), ((0.0, 0.0), (0.0, 0.0)), False, seed)

    @classmethod
    def grid_preserving(cls, angle_count, seed=0, scale=(0.75, 1.25), translation=(-0.2, 0.2), reflection=True):
        """Translations, isotropic scalings, grid rotations and grid reflections."""
        return cls(
            rotation_range=(0.0, 2 * math.pi),
            scale_range=(tuple(scale), tuple(scale)),
            shear_range=(0.0, 0.0),
            translation_range=(tuple(translation), tuple(translation)),
            allow_reflection=reflection,
            seed=seed,
            rotation_step=math.pi / angle_count,
            isotropic=True,
        )

    def to_dict(self):
        return {
            "rotation_range": list(self.rotation_range),
            "scale_range": [list(r) for r in self.scale_range],
            "shear_range": list(self.shear_range),
            "translation_range": [list(r) for r in self.translation_range],
            "allow_reflection": self.allow_reflection,
            "seed": int(self.seed),
            "rotation_step": self.rotation_step,
            "isotropic": self.isotropic,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        try:
            for k in ("rotation_range", "shear_range"):
                if k in d:
                    d[k] = tuple(d[k])
            for k in ("scale_range", "translation_range"):
                if k in d:
                    d[k] = tuple(tuple(r) for r in d[k])
            return cls(**d)
        except TypeError as e:
            raise InvalidConfig(str(e)) from None


def _uniform(rng, interval):
    lo, hi = interval
    return float(rng.uniform(lo, hi)) if hi > lo else float(lo)


def _rotation_angle(rng, cfg):
    lo, hi = cfg.rotation_range
    if cfg.rotation_step is None:
        return _uniform(rng, (lo, hi))
    step = cfg.rotation_step
    kmin = math.ceil(lo / step - 1e-9)
    kmax = math.floor(hi / step - 1e-9) if hi > lo else kmin
    if kmax < kmin:
        raise InvalidConfig("rotation_range contains no multiple of rotation_step")
    return int(rng.integers(kmin, kmax + 1)) * step


def sample_affine_params(cfg: AffineSamplerConfig, n: int, stream: int = 0) -> list[dict]:
    """Parameters of ``n`` random maps; item ``i`` uses its own generator.

    The generator of item ``i`` is seeded with ``(seed, stream, i)``, so each
    item is reproducible on its own, independent of generation order.
    """
    if int(n) != n or n < 1:
        raise InvalidConfig(f"need n >= 1 maps, got {n!r}")
    out = []
    for i in range(n):
        rng = np.random.default_rng([int(cfg.seed), int(stream), i])
        rot = _rotation_angle(rng, cfg)
        sx = _uniform(rng, cfg.scale_range[0])
        sy = sx if cfg.isotropic else _uniform(rng, cfg.scale_range[1])
        shear = _uniform(rng, cfg.shear_range)
        tx = _uniform(rng, cfg.translation_range[0])
        ty = _uniform(rng, cfg.translation_range[1])
        flip = bool(cfg.allow_reflection and rng.random() < 0.5)
        out.append(dict(rotation=rot, scale=(sx, sy), shear=shear, translation=(tx, ty), reflect=flip))
    return out


def affine_from_params(p: dict) -> AffineMap:
    """translation o rotation o shear o scaling (o reflection across the x-axis)."""
    t = AffineMap.scaling(*p["scale"])
    if p["reflect"]:
        t = t.compose(AffineMap.scaling(1.0, -1.0))
    t = AffineMap.vertical_shear(p["shear"]).compose(t)
    t = AffineMap.rotation(p["rotation"]).compose(t)
    return AffineMap.translation(*p["translation"]).compose(t)


def sample_affine(cfg: AffineSamplerConfig, n: int, stream: int = 0) -> list[AffineMap]:
    return [affine_from_params(p) for p in sample_affine_params(cfg, n, stream)]


def template_image(kind: str, resolution: int = 64) -> np.ndarray:
    """Binary raster of a procedural template symbol."""
    if int(resolution) != resolution or resolution < 16:
        raise InvalidConfig("template resolution must be an integer >= 16")
    c = (np.arange(resolution) + 0.5) / resolution - 0.5
    u, v = np.meshgrid(c, -c)  # row 0 at the top
    r = np.hypot(u, v)
    if kind == "cross":
        arm, half = 0.09, 0.36
        mask = ((np.abs(u) <= arm) & (np.abs(v) <= half)) | ((np.abs(v) <= arm) & (np.abs(u) <= half))
    elif kind == "shield":
        top = (np.abs(u) <= 0.3) & (v >= -0.05) & (v <= 0.32)
        ry = (v + 0.05) / 0.37
        bottom = (v < -0.05) & (np.abs(u) <= 0.3 * np.sqrt(np.clip(1 - ry**2, 0, None)))
        bend = np.abs(u + v - 0.05) <= 0.05  # diagonal band breaks the mirror symmetry
        mask = (top | bottom) & ~bend
    elif kind == "disk_ring":
        mask = (r <= 0.12) | ((r >= 0.25) & (r <= 0.34))
    else:
        raise InvalidConfig(f"unknown template kind {kind!r}; expected one of {TEMPLATE_KINDS}")
    return mask.astype(np.float64)


def make_template(kind: str, resolution: int = 64) -> DiscreteMeasure2D:
    return measure_from_image(template_image(kind, resolution), name=kind)


@dataclass(frozen=True)
class LabeledItem:
    measure: DiscreteMeasure2D
    label: int
    provenance: str = ""
    raster: np.ndarray | None = field(default=None, compare=False)


@dataclass
class LabeledDataset:
    items: list
    class_count: int
    templates: list = field(default_factory=list)

    def __post_init__(self):
        self.items = list(self.items)
        self.templates = list(self.templates)
        if self.class_count < 1:
            raise InvalidConfig("class_count must be positive")
        seen = set()
        for it in self.items:
            if not (0 <= it.label < self.class_count):
                raise InvalidConfig(f"label {it.label} outside [0, {self.class_count})")
            seen.add(it.label)
        if len(seen) != self.class_count:
            raise InvalidConfig(f"classes {sorted(set(range(self.class_count)) - seen)} have no items")

    def __len__(self):
        return len(self.items)

    @property
    def labels(self) -> np.ndarray:
        return np.array([it.label for it in self.items], dtype=np.int64)

    @property
    def measures(self) -> list:
        return [it.measure for it in self.items]

    def class_sizes(self) -> list[int]:
        return np.bincount(self.labels, minlength=self.class_count).tolist()


def generate_academic(
    templates: Sequence[DiscreteMeasure2D], per_class: int, cfg: AffineSamplerConfig
) -> LabeledDataset:
    """``per_class`` random affine pushforwards of every template.

    Class ``c`` draws its maps from stream ``c`` of the configured seed; the
    provenance of each item is a JSON record of the sampled parameters.
    """
    if int(per_class) != per_class or per_class < 1:
        raise InvalidConfig("per_class must be >= 1")
    for c, t in enumerate(templates):
        if not is_non_collinear(t):
            raise CollinearSupport(f"template {c} is supported on a line")
    items = []
    for c, t in enumerate(templates):
        for i, p in enumerate(sample_affine_params(cfg, per_class, stream=c)):
            a = affine_from_params(p)
            prov = json.dumps(
                {"class": c, "index": i, "seed": int(cfg.seed), "params": p, "affine": a.as_dict()}
            )
            items.append(LabeledItem(apply_affine(t, a), c, prov))
    tpl = [LabeledItem(t, c, json.dumps({"template": c})) for c, t in enumerate(templates)]
    return LabeledDataset(items, len(templates), tpl)


def provenance_affine(item: LabeledItem) -> AffineMap:
    """The map relating a generated item to its template."""
    return AffineMap(**json.loads(item.provenance)["affine"])


# -- file formats ----------------------------------------------------------


def atomic_write(path, data: bytes | str):
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode()
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def encode_atoms(m: DiscreteMeasure2D) -> bytes:
    rec = np.empty((len(m), 3), dtype="<f8")
    rec[:, :2] = m.points
    rec[:, 2] = m.weights
    return ATOM_MAGIC + struct.pack("<Q", len(m)) + rec.tobytes()


def decode_atoms(data: bytes, location="<bytes>") -> DiscreteMeasure2D:
    head = len(ATOM_MAGIC) + 8
    if len(data) < head or not data.startswith(ATOM_MAGIC):
        raise ParseError(location, "not an atom file (bad magic)")
    (count,) = struct.unpack_from("<Q", data, len(ATOM_MAGIC))
    if len(data) != head + 24 * count:
        raise ParseError(location, f"expected {count} atoms, file size is {len(data)} bytes")
    rec = np.frombuffer(data, dtype="<f8", offset=head).reshape(count, 3)
    w = rec[:, 2].astype(np.float64)
    if count == 0 or not (w > 0).any():
        raise ZeroMass(f"{location}: no positive weight")
    if abs(w.sum() - 1.0) > MASS_TOL:
        raise ParseError(location, f"weights sum to {w.sum()!r}")
    try:
        return DiscreteMeasure2D(rec[:, :2].astype(np.float64), w)
    except ValueError as e:
        raise ParseError(location, str(e)) from None


def write_atoms(path, m: DiscreteMeasure2D):
    atomic_write(path, encode_atoms(m))


def read_atoms(path) -> DiscreteMeasure2D:
    return decode_atoms(_read_bytes(path), path)


def _read_bytes(path):
    try:
        return Path(path).read_bytes()
    except FileNotFoundError:
        raise MissingFile(str(path)) from None


def _pgm_tokens(data, location):
    # header: magic, width, height, maxval, separated by whitespace/comments
    tokens, pos = [], 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise ParseError(location, "truncated PGM header")
        tokens.append(data[start:pos])
    return tokens, pos + 1


def decode_pgm(data: bytes, location="<bytes>") -> np.ndarray:
    """Decode a binary (P5) or ASCII (P2) PGM into a float array in [0, 1]."""
    if data[:2] not in (b"P5", b"P2"):
        raise UnsupportedFormat(f"{location}: not a grayscale PGM (magic {data[:2]!r})")
    tokens, body = _pgm_tokens(data, location)
    try:
        w, h, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise ParseError(location, "non-integer PGM header field") from None
    if w < 1 or h < 1 or not (0 < maxval < 65536):
        raise ParseError(location, f"invalid PGM geometry {w}x{h}, maxval {maxval}")
    if tokens[0] == b"P5":
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = w * h * dtype.itemsize
        raw = data[body : body + need]
        if len(raw) < need:
            raise ParseError(location, f"expected {need} bytes of pixel data, found {len(raw)}")
        img = np.frombuffer(raw, dtype=dtype).reshape(h, w)
    else:
        try:
            vals = [int(t) for t in data[body - 1 :].split()]
        except ValueError:
            raise ParseError(location, "non-integer pixel value") from None
        if len(vals) != w * h:
            raise ParseError(location, f"expected {w * h} pixel values, found {len(vals)}")
        img = np.array(vals).reshape(h, w)
    return img.astype(np.float64) / maxval


def encode_pgm(img) -> bytes:
    """8-bit binary PGM of an array scaled to its maximum."""
    a = np.asarray(img, dtype=np.float64)
    peak = a.max() if a.size else 0.0
    q = np.rint(a / peak * 255 if peak > 0 else a).clip(0, 255).astype(np.uint8)
    h, w = q.shape
    return f"P5\n{w} {h}\n255\n".encode() + q.tobytes()


def decode_csv_grid(text: str, location="<text>") -> np.ndarray:
    rows = [ln for ln in text.splitlines() if ln.strip()]
    if not rows:
        raise ParseError(location, "empty CSV grid")
    out = []
    for i, ln in enumerate(rows, 1):
        try:
            out.append([float(v) for v in ln.split(",")])
        except ValueError:
            raise ParseError(f"{location}:{i}", "non-numeric value") from None
        if len(out[-1]) != len(out[0]):
            raise ParseError(f"{location}:{i}", f"expected {len(out[0])} columns, got {len(out[-1])}")
    return np.array(out)


def read_image(path) -> np.ndarray:
    suffix = Path(path).suffix.lower()
    if suffix in (".pgm", ".pnm"):
        return decode_pgm(_read_bytes(path), path)
    if suffix == ".csv":
        return decode_csv_grid(_read_bytes(path).decode("utf-8", "replace"), path)
    raise UnsupportedFormat(f"{path}: unsupported image format {suffix!r}")


def _load_entry(base, entry, where):
    if not isinstance(entry, dict) or "path" not in entry or "label" not in entry:
        raise ParseError(where, "entries need 'path' and 'label'")
    path = base / entry["path"]
    if not path.exists():
        raise MissingFile(str(path))
    if path.suffix.lower() == ".nrcdt":
        return LabeledItem(read_atoms(path), int(entry["label"]), entry.get("provenance", ""))
    img = read_image(path)
    try:
        m = measure_from_image(img, name=str(path))
    except ZeroMass:
        raise ZeroMass(f"{entry['path']}: image has zero total intensity") from None
    return LabeledItem(m, int(entry["label"]), entry.get("provenance", ""), raster=img)


def load_manifest(manifest_path) -> LabeledDataset:
    """Load a dataset of atom files and/or grayscale images.

    Raises
    ------
    MissingFile
        If the manifest or a referenced file does not exist.
    ParseError
        On malformed JSON or malformed files.
    ZeroMass
        If an image is entirely black.
    UnsupportedFormat
        For unknown file extensions.
    """
    manifest_path = Path(manifest_path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / "manifest.json"
    try:
        doc = json.loads(_read_bytes(manifest_path))
    except json.JSONDecodeError as e:
        raise ParseError(f"{manifest_path}:{e.lineno}", e.msg) from None
    if not isinstance(doc, dict) or "items" not in doc or "class_count" not in doc:
        raise ParseError(manifest_path, "manifest needs 'class_count' and 'items'")
    base = manifest_path.parent
    items = [_load_entry(base, e, f"{manifest_path}: items[{i}]") for i, e in enumerate(doc["items"])]
    templates = [
        _load_entry(base, e, f"{manifest_path}: templates[{i}]") for i, e in enumerate(doc.get("templates", []))
    ]
    try:
        return LabeledDataset(items, int(doc["class_count"]), templates)
    except InvalidConfig as e:
        raise ParseError(manifest_path, str(e)) from None


load_images = load_manifest


def save_dataset(ds: LabeledDataset, out_dir, raster: tuple[int, int] | None = None, extent: float = 1.0):
    """Write ``ds`` under ``out_dir`` and return the manifest path.

    Items are stored as atom files, or as 8-bit PGMs of the given raster
    shape when ``raster`` is set (lossy).
    """
    from .measures import rasterize

    out = Path(out_dir)

    def emit(kind, i, it):
        if raster is None:
            name = f"{kind}/{kind}_{i:05d}.nrcdt"
            atomic_write(out / name, encode_atoms(it.measure))
        else:
            name = f"{kind}/{kind}_{i:05d}.pgm"
            atomic_write(out / name, encode_pgm(rasterize(it.measure, raster, extent)))
        e = {"path": name, "label": int(it.label)}
        if it.provenance:
            e["provenance"] = it.provenance
        return e

    doc = {
        "class_count": ds.class_count,
        "items": [emit("items", i, it) for i, it in enumerate(ds.items)],
    }
    if ds.templates:
        doc["templates"] = [emit("templates", i, it) for i, it in enumerate(ds.templates)]
    manifest = out / "manifest.json"
    atomic_write(manifest, json.dumps(doc, indent=1) + "\n")
    return manifest
