"""Dataset representation, ingestion, and stratified splitting.

A dataset on disk is a manifest text file with ``key=value`` lines
(``features=``, ``labels=``, ``classes=``, ``thumbnails=``). Features live in
a little-endian binary file (magic ``SALPFTR1``, u64 count, u64 dims, float32
row-major); labels are one integer per line with ``-1`` meaning unlabeled.

Splitting is seeded with PCG64 (numpy's default 64-bit generator) and
documented per-class allocation rules, so a (samples, fractions, seed) triple
always reproduces the same partition.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataFormatError
from .validation import check_features

FEATURE_MAGIC = b"SALPFTR1"


@dataclass(frozen=True)
class Sample:
    """One dataset element: stable id, optional ground truth, optional image."""

    id: int
    true_label: int | None = None
    thumbnail_ref: str | None = None


@dataclass(frozen=True)
class Split:
    """Disjoint partition of dataset ids into supervised / unsupervised / test."""

    s_ids: tuple[int, ...]
    u_ids: tuple[int, ...]
    t_ids: tuple[int, ...]
    seed: int
    fractions: tuple[float, float, float]

    def __post_init__(self):
        all_ids = set(self.s_ids) | set(self.u_ids) | set(self.t_ids)
        if len(all_ids) != len(self.s_ids) + len(self.u_ids) + len(self.t_ids):
            raise ValueError("split id sets overlap")

    @property
    def n_total(self) -> int:
        return len(self.s_ids) + len(self.u_ids) + len(self.t_ids)


@dataclass
class Dataset:
    """In-memory dataset: samples, feature matrix, declared class count."""

    samples: list[Sample]
    features: np.ndarray
    n_classes: int
    manifest_path: Path | None = None
    thumbnail_dir: Path | None = None
    name: str = "dataset"
    _labels: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_samples(self) -> int:
        return len(self.samples)

    @property
    def has_labels(self) -> bool:
        return all(s.true_label is not None for s in self.samples)

    def labels(self) -> np.ndarray:
        """Ground-truth labels for all samples; fails loudly when any is absent."""
        if self._labels is None:
            if not self.has_labels:
                missing = next(s.id for s in self.samples if s.true_label is None)
                raise DataFormatError(
                    f"operation needs ground-truth labels but sample {missing} has none"
                )
            self._labels = np.array([s.true_label for s in self.samples], dtype=np.int64)
        return self._labels


# ---------------------------------------------------------------------------
# Binary feature file and label file
# ---------------------------------------------------------------------------

def write_features(path: str | Path, X: np.ndarray) -> None:
    X = check_features(X, name="features")
    n, d = X.shape
    with open(path, "wb") as fh:
        fh.write(FEATURE_MAGIC)
        fh.write(struct.pack("<QQ", n, d))
        fh.write(X.astype("<f4").tobytes(order="C"))


def read_features(path: str | Path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"features file not found: {path}")
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != FEATURE_MAGIC:
            raise DataFormatError(f"{path}: bad magic {magic!r}, expected {FEATURE_MAGIC!r}")
        header = fh.read(16)
        if len(header) != 16:
            raise DataFormatError(f"{path}: truncated header")
        n, d = struct.unpack("<QQ", header)
        if n < 1 or d < 1:
            raise DataFormatError(f"{path}: empty feature matrix ({n} x {d})")
        payload = fh.read()
    expected = n * d * 4
    if len(payload) != expected:
        raise DataFormatError(
            f"{path}: payload is {len(payload)} bytes, expected {expected} for {n}x{d}"
        )
    X = np.frombuffer(payload, dtype="<f4").reshape(n, d).astype(np.float64)
    finite_rows = np.isfinite(X).all(axis=1)
    if not finite_rows.all():
        row = int(np.flatnonzero(~finite_rows)[0])
        raise DataFormatError(f"{path}: non-finite feature value at row {row}")
    return X


def write_labels(path: str | Path, labels) -> None:
    with open(path, "w") as fh:
        for v in labels:
            fh.write(f"{-1 if v is None else int(v)}\n")


def read_labels(path: str | Path) -> list[int]:
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"labels file not found: {path}")
    out = []
    with open(path) as fh:
        for i, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(int(line))
            except ValueError:
                raise DataFormatError(f"{path}: line {i} is not an integer: {line!r}") from None
    return out


# ---------------------------------------------------------------------------
# Manifest
# ---------------------------------------------------------------------------

def write_manifest(path: str | Path, *, features: str, labels: str | None,
                   classes: int, thumbnails: str | None = None) -> None:
    with open(path, "w") as fh:
        fh.write(f"features={features}\n")
        fh.write(f"labels={labels if labels else 'none'}\n")
        fh.write(f"classes={classes}\n")
        fh.write(f"thumbnails={thumbnails if thumbnails else 'none'}\n")


def _parse_manifest(path: Path) -> dict[str, str]:
    entries: dict[str, str] = {}
    with open(path) as fh:
        for i, line in enumerate(fh):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise DataFormatError(f"{path}: line {i} is not key=value: {line!r}")
            key, value = line.split("=", 1)
            entries[key.strip()] = value.strip()
    for required in ("features", "labels", "classes"):
        if required not in entries:
            raise DataFormatError(f"{path}: missing manifest key {required!r}")
    return entries


def _find_thumbnail(thumb_dir: Path, sample_id: int) -> str | None:
    for ext in ("png", "jpg", "jpeg"):
        cand = thumb_dir / f"{sample_id}.{ext}"
        if cand.exists():
            return str(cand)
    return None


def load_dataset(manifest_path: str | Path) -> tuple[list[Sample], np.ndarray]:
    """Load (samples, features) from a manifest; ids run 0..N-1 in file order."""
    ds = load_dataset_full(manifest_path)
    return ds.samples, ds.features


def load_dataset_full(manifest_path: str | Path) -> Dataset:
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise DataFormatError(f"manifest not found: {manifest_path}")
    entries = _parse_manifest(manifest_path)
    base = manifest_path.parent

    def resolve(p: str) -> Path:
        q = Path(p)
        return q if q.is_absolute() else base / q

    try:
        n_classes = int(entries["classes"])
    except ValueError:
        raise DataFormatError(f"{manifest_path}: classes is not an integer") from None
    if n_classes < 1:
        raise DataFormatError(f"{manifest_path}: classes must be >= 1")

    X = read_features(resolve(entries["features"]))
    n = X.shape[0]

    labels: list[int] | None = None
    if entries["labels"].lower() != "none":
        labels = read_labels(resolve(entries["labels"]))
        if len(labels) != n:
            raise DataFormatError(
                f"row-count mismatch: features have {n} rows, labels have "
                f"{len(labels)} (first missing/extra at index {min(n, len(labels))})"
            )
        for i, lab in enumerate(labels):
            if lab != -1 and not (0 <= lab < n_classes):
                raise DataFormatError(
                    f"label {lab} at row {i} is outside the declared {n_classes} classes"
                )

    thumb_dir: Path | None = None
    if entries.get("thumbnails", "none").lower() != "none":
        thumb_dir = resolve(entries["thumbnails"])
        if not thumb_dir.is_dir():
            raise DataFormatError(f"thumbnail directory not found: {thumb_dir}")

    samples = []
    for i in range(n):
        true_label = None
        if labels is not None and labels[i] != -1:
            true_label = labels[i]
        thumb = _find_thumbnail(thumb_dir, i) if thumb_dir is not None else None
        samples.append(Sample(id=i, true_label=true_label, thumbnail_ref=thumb))
    return Dataset(
        samples=samples,
        features=X,
        n_classes=n_classes,
        manifest_path=manifest_path.resolve(),
        thumbnail_dir=thumb_dir,
        name=manifest_path.parent.name,
    )


# ---------------------------------------------------------------------------
# Stratified split
# ---------------------------------------------------------------------------

def stratified_split(samples: list[Sample], fractions: tuple[float, float, float],
                     seed: int) -> Split:
    """Partition sample ids into (S, U, T) proportionally per class.

    Per class (ascending class id) the ids are shuffled with PCG64(seed) and
    floor(fraction * class_count) go to each subset. Leftovers first top up an
    empty S (so every class keeps at least one supervised sample), then go to
    the subset with the largest global deficit against fraction * |D| (ties
    resolved S, U, T).
    """
    f_s, f_u, f_t = fractions
    if min(f_s, f_u, f_t) <= 0:
        raise ValueError("fractions must all be positive")
    if abs(f_s + f_u + f_t - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {f_s + f_u + f_t!r}")

    by_class: dict[int, list[int]] = {}
    for s in samples:
        if s.true_label is None:
            raise DataFormatError(f"sample {s.id} has no label; cannot stratify")
        by_class.setdefault(s.true_label, []).append(s.id)
    for cls, ids in by_class.items():
        if len(ids) < 3:
            raise ValueError(f"class {cls} has {len(ids)} members; need >= 3")

    rng = np.random.Generator(np.random.PCG64(seed))
    n_total = len(samples)
    targets = (f_s * n_total, f_u * n_total, f_t * n_total)

    parts: tuple[list[int], list[int], list[int]] = ([], [], [])
    leftovers: list[list[int]] = []  # per class, in ascending class order
    for cls in sorted(by_class):
        ids = sorted(by_class[cls])
        order = rng.permutation(len(ids))
        shuffled = [ids[k] for k in order]
        m = len(shuffled)
        quota = [int(np.floor(f_s * m)), int(np.floor(f_u * m)), int(np.floor(f_t * m))]
        pos = 0
        tail: list[int] = []
        for part_idx in range(3):
            parts[part_idx].extend(shuffled[pos:pos + quota[part_idx]])
            pos += quota[part_idx]
        tail = shuffled[pos:]
        if quota[0] == 0:
            # stratification guarantee: S must see every class
            parts[0].append(tail.pop(0))
        leftovers.append(tail)

    for tail in leftovers:
        for sample_id in tail:
            deficits = [targets[k] - len(parts[k]) for k in range(3)]
            best = max(range(3), key=lambda k: (deficits[k], -k))
            parts[best].append(sample_id)

    return Split(
        s_ids=tuple(sorted(parts[0])),
        u_ids=tuple(sorted(parts[1])),
        t_ids=tuple(sorted(parts[2])),
        seed=seed,
        fractions=(f_s, f_u, f_t),
    )


def validate_split_covers(split: Split, n_samples: int) -> None:
    """Check the split is an exact partition of ids 0..n_samples-1."""
    ids = set(split.s_ids) | set(split.u_ids) | set(split.t_ids)
    if split.n_total != n_samples or ids != set(range(n_samples)):
        raise DataFormatError(
            f"split covers {split.n_total} ids, dataset has {n_samples}"
        )


# ---------------------------------------------------------------------------
# Split file
# ---------------------------------------------------------------------------

def write_split(path: str | Path, split: Split) -> None:
    """Exactly three lines: S:/U:/T: followed by comma-separated ids."""
    with open(path, "w") as fh:
        for tag, ids in (("S", split.s_ids), ("U", split.u_ids), ("T", split.t_ids)):
            fh.write(f"{tag}: {','.join(str(i) for i in ids)}\n")


def read_split(path: str | Path) -> Split:
    """Read the three-line split format; seed/fractions are not persisted."""
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"split file not found: {path}")
    sets: dict[str, tuple[int, ...]] = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if ":" not in line:
                raise DataFormatError(f"{path}: malformed split line: {line!r}")
            tag, rest = line.split(":", 1)
            tag = tag.strip()
            if tag not in ("S", "U", "T"):
                raise DataFormatError(f"{path}: unknown split tag {tag!r}")
            rest = rest.strip()
            sets[tag] = tuple(int(v) for v in rest.split(",")) if rest else ()
    for tag in ("S", "U", "T"):
        if tag not in sets:
            raise DataFormatError(f"{path}: missing {tag}: line")
    return Split(s_ids=sets["S"], u_ids=sets["U"], t_ids=sets["T"],
                 seed=0, fractions=(0.0, 0.0, 0.0))
