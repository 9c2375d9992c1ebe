"""Download cache for the UCI datasets and their preprocessing recipes.

Raw files live under ``$IMB_DATA_DIR/raw/<name>/`` next to a ``checksums.json``
recording the SHA-256 of every file at download time. A manifest entry with a
pinned ``sha256`` is enforced; an unpinned one is recorded on first fetch and
enforced afterwards.
"""

from __future__ import annotations

import gzip
import hashlib
import json
import logging
import shutil
import tempfile
import urllib.request
from importlib import resources
from pathlib import Path

import numpy as np

from .dataset import Dataset, DatasetError, data_dir, pca_reduce
from .numerics import RandomStream

log = logging.getLogger(__name__)

RECIPES = ("abalone", "covertype", "gisette")
NEGATIVE_COUNTS = {"abalone": 2000, "covertype": 5000, "gisette": 3500}
# abalone rings <= 9 is negative: the literal "age < 9" split has too few rows for 2000 negatives
ABALONE_MAX_NEG_RINGS = 9
COVER_SPRUCE_FIR, COVER_LODGEPOLE_PINE = 1, 2
GISETTE_DIMS = 100


class FetchError(RuntimeError):
    pass


class ChecksumError(FetchError):
    pass


def load_manifest(path=None) -> dict:
    if path is None:
        text = resources.files("wsos").joinpath("manifest.json").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return json.loads(text)


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def raw_dir(name: str, root=None) -> Path:
    return Path(root or data_dir()) / "raw" / name


def _recorded(folder: Path) -> dict:
    p = folder / "checksums.json"
    return json.loads(p.read_text(encoding="utf-8")) if p.exists() else {}


def _download(url: str, dest: Path) -> None:
    fd, tmp = tempfile.mkstemp(dir=dest.parent, prefix=f".{dest.name}.", suffix=".part")
    try:
        with urllib.request.urlopen(url, timeout=60) as resp, open(fd, "wb") as out:
            shutil.copyfileobj(resp, out)
        Path(tmp).replace(dest)
    except Exception as exc:
        Path(tmp).unlink(missing_ok=True)
        raise FetchError(f"download of {url} failed: {exc}") from exc


def fetch(name: str, root=None, manifest=None, force: bool = False) -> list[Path]:
    """Populate the raw cache for ``name``; cached files with matching checksums are not re-downloaded."""
    man = manifest if isinstance(manifest, dict) else load_manifest(manifest)
    if name not in man["datasets"]:
        raise FetchError(f"unknown dataset {name!r}; manifest has {', '.join(sorted(man['datasets']))}")
    folder = raw_dir(name, root)
    folder.mkdir(parents=True, exist_ok=True)
    recorded = _recorded(folder)
    paths = []
    for entry in man["datasets"][name]["files"]:
        dest = folder / entry["name"]
        expected = entry.get("sha256") or recorded.get(entry["name"])
        if dest.exists() and not force:
            actual = sha256(dest)
            if expected and actual != expected:
                raise ChecksumError(f"{dest}: checksum mismatch (expected {expected[:12]}..., got {actual[:12]}...); "
                                    f"delete the file or re-run fetch with --force")
            log.info("cache hit: %s", dest)
        else:
            log.info("downloading %s", entry["url"])
            _download(entry["url"], dest)
            actual = sha256(dest)
            if entry.get("sha256") and actual != entry["sha256"]:
                dest.unlink()
                raise ChecksumError(f"{entry['url']}: downloaded file does not match pinned checksum")
        recorded[entry["name"]] = actual
        paths.append(dest)
    (folder / "checksums.json").write_text(json.dumps(recorded, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return paths


def verify_cache(name: str, root=None, manifest=None) -> list[Path]:
    """Checked paths of cached raw files; raises if missing or corrupted."""
    man = manifest if isinstance(manifest, dict) else load_manifest(manifest)
    folder = raw_dir(name, root)
    recorded = _recorded(folder)
    paths = []
    for entry in man["datasets"][name]["files"]:
        p = folder / entry["name"]
        if not p.exists():
            raise FetchError(f"{p} missing; run `wsos fetch {name}` first")
        expected = entry.get("sha256") or recorded.get(entry["name"])
        if expected and sha256(p) != expected:
            raise ChecksumError(f"{p}: checksum mismatch; re-fetch with `wsos fetch {name} --force`")
        paths.append(p)
    return paths


def read_abalone(path) -> tuple[np.ndarray, np.ndarray, tuple[str, ...]]:
    """Features (sex one-hot + 7 measurements) and ring counts."""
    rows = [ln.strip().split(",") for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    sexes = ("M", "F", "I")
    X = np.array([[float(r[0] == s) for s in sexes] + [float(v) for v in r[1:8]] for r in rows])
    rings = np.array([int(r[8]) for r in rows])
    names = ("sex_M", "sex_F", "sex_I", "length", "diameter", "height", "whole_weight",
             "shucked_weight", "viscera_weight", "shell_weight")
    return X, rings, names


def read_covertype(path) -> tuple[np.ndarray, np.ndarray]:
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "rt") as fh:
        A = np.loadtxt(fh, delimiter=",", dtype=np.int64)
    return A[:, :-1].astype(float), A[:, -1]


def read_gisette(folder: Path) -> tuple[np.ndarray, np.ndarray]:
    Xs, ys = [], []
    for part in ("train", "valid"):
        Xs.append(np.loadtxt(folder / f"gisette_{part}.data", dtype=float, ndmin=2))
        ys.append(np.loadtxt(folder / f"gisette_{part}.labels", dtype=np.int64, ndmin=1))
    return np.vstack(Xs), np.concatenate(ys)


def _pick(neg_pool: np.ndarray, pos_pool: np.ndarray, n_neg: int, ir: float, stream: RandomStream):
    n_pos = int(round(n_neg / ir))
    if n_neg > neg_pool.size:
        raise DatasetError(f"recipe needs {n_neg} negatives, only {neg_pool.size} available")
    if n_pos < 2:
        raise DatasetError(f"IR {ir} leaves {n_pos} positives; need at least 2")
    if n_pos > pos_pool.size:
        raise DatasetError(f"IR {ir} needs {n_pos} positives, only {pos_pool.size} available")
    neg = np.sort(neg_pool[stream.choice(neg_pool.size, n_neg, replace=False)])
    pos = np.sort(pos_pool[stream.choice(pos_pool.size, n_pos, replace=False)])
    return neg, pos


def prep(name: str, ir: float, seed: int = 0, root=None, manifest=None,
         n_negative: int | None = None) -> Dataset:
    """Apply a named recipe to the cached raw files; returns the imbalanced dataset."""
    if name not in RECIPES:
        raise DatasetError(f"unknown recipe {name!r}; choose from {', '.join(RECIPES)}")
    if not ir >= 1:
        raise DatasetError("ir must be >= 1")
    paths = verify_cache(name, root, manifest)
    n_neg = n_negative or NEGATIVE_COUNTS[name]
    stream = RandomStream(seed)
    label = f"{name}_ir{ir:g}"
    if name == "abalone":
        X, rings, names = read_abalone(paths[0])
        neg, pos = _pick(np.flatnonzero(rings <= ABALONE_MAX_NEG_RINGS),
                         np.flatnonzero(rings > ABALONE_MAX_NEG_RINGS), n_neg, ir, stream)
    elif name == "covertype":
        X, cover = read_covertype(paths[0])
        names = tuple(f"c{j + 1}" for j in range(X.shape[1]))
        neg, pos = _pick(np.flatnonzero(cover == COVER_SPRUCE_FIR),
                         np.flatnonzero(cover == COVER_LODGEPOLE_PINE), n_neg, ir, stream)
    else:
        X, y = read_gisette(paths[0].parent)
        neg, pos = _pick(np.flatnonzero(y == -1), np.flatnonzero(y == 1), n_neg, ir, stream)
        ds = Dataset(X[np.r_[neg, pos]], np.r_[np.zeros(neg.size), np.ones(pos.size)], label)
        reduced, _ = pca_reduce(ds, min(GISETTE_DIMS, ds.dim))
        return reduced
    return Dataset(X[np.r_[neg, pos]], np.r_[np.zeros(neg.size), np.ones(pos.size)], label, names)
