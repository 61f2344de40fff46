"""Live annotation session: threshold split, manual labels, undo, persistence.

The session keeps an underlying map of every user assignment plus an undo
stack of batches. The interactive set L_i exposed to consumers is that map
restricted to the current residue (U minus the auto-accepted set), which keeps
the auto/manual sets disjoint under any threshold move: when lowering the
threshold absorbs a manually labeled sample, the auto label wins and the
manual one is shadowed (reported as evicted), not destroyed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import Dataset, Split, read_split, write_split
from .errors import DataFormatError, SessionError
from .opf import PropagationResult, read_propagation, write_propagation
from .tsne import Projection2D, TsneParams, read_projection, write_projection

PROTOCOLS = ("nlp", "alp2d", "alpnd", "ilp", "salp")
PROTOCOL_TITLES = {"nlp": "NLP", "alp2d": "ALP-2D", "alpnd": "ALP-nD",
                   "ilp": "ILP", "salp": "SALP"}


def threshold_split(propagation: PropagationResult, tau: float) -> tuple[set[int], set[int]]:
    """Partition unsupervised ids into (auto-accepted, residue) at confidence >= tau."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    accepted = propagation.confidence >= tau
    auto = {int(i) for i in propagation.ids[accepted]}
    residue = {int(i) for i in propagation.ids[~accepted]}
    return auto, residue


@dataclass
class SessionState:
    """Mutable annotation session over one split + projection + propagation."""

    split: Split
    projection_ids: list[int]
    projection_y: np.ndarray
    propagation: PropagationResult | None
    tau: float = 0.5
    auto_accept: bool = True      # ILP turns this off: residue = U
    protocol: str = "salp"
    seed: int = 0
    user_labels: dict[int, int] = field(default_factory=dict)
    history: list[list[tuple[int, int | None, int]]] = field(default_factory=list)
    status: str = "open"

    def __post_init__(self):
        if self.propagation is not None:
            u = set(self.split.u_ids)
            prop_ids = {int(i) for i in self.propagation.ids}
            if prop_ids != u:
                raise DataFormatError(
                    "propagation ids do not match the split's unsupervised set")

    # -- derived sets -------------------------------------------------------

    @property
    def auto_ids(self) -> set[int]:
        """L_c: unsupervised ids whose propagated confidence clears tau."""
        if not self.auto_accept or self.propagation is None:
            return set()
        auto, _ = threshold_split(self.propagation, self.tau)
        return auto

    @property
    def residue_ids(self) -> set[int]:
        return set(self.split.u_ids) - self.auto_ids

    @property
    def manual_labels(self) -> dict[int, int]:
        """L_i: user assignments currently visible (not shadowed by L_c)."""
        residue = self.residue_ids
        return {i: lab for i, lab in self.user_labels.items() if i in residue}

    @property
    def is_open(self) -> bool:
        return self.status == "open"


def apply_manual_labels(session: SessionState, batch: list[tuple[int, int]],
                        n_classes: int) -> SessionState:
    """Atomically record a user batch; every id must be in the current residue."""
    if not session.is_open:
        raise SessionError("session is finalized")
    residue = session.residue_ids
    auto = session.auto_ids
    s_t = set(session.split.s_ids) | set(session.split.t_ids)
    for sample_id, label in batch:
        if sample_id in auto:
            raise SessionError(f"sample {sample_id} is auto-labeled (confidence above tau)")
        if sample_id in s_t:
            raise SessionError(f"sample {sample_id} is not in the unsupervised set")
        if sample_id not in residue:
            raise SessionError(f"unknown sample id {sample_id}")
        if not 0 <= label < n_classes:
            raise SessionError(f"label {label} is outside the declared {n_classes} classes")
    entry = []
    for sample_id, label in batch:
        entry.append((sample_id, session.user_labels.get(sample_id), label))
        session.user_labels[sample_id] = label
    session.history.append(entry)
    return session


def undo(session: SessionState) -> SessionState:
    """Revert the most recent batch exactly (restores prior values or absence)."""
    if not session.is_open:
        raise SessionError("session is finalized")
    if not session.history:
        raise SessionError("nothing to undo")
    for sample_id, old, _new in reversed(session.history.pop()):
        if old is None:
            session.user_labels.pop(sample_id, None)
        else:
            session.user_labels[sample_id] = old
    return session


def set_threshold(session: SessionState, tau: float) -> list[int]:
    """Move tau; returns manually labeled ids newly absorbed by the auto set."""
    if not session.is_open:
        raise SessionError("session is finalized")
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    before = set(session.manual_labels)
    session.tau = tau
    after = set(session.manual_labels)
    return sorted(before - after)


# -- simulated annotator ----------------------------------------------------

def parse_user_policy(text: str) -> tuple[str, float]:
    """Parse 'oracle_all' | 'abstain' | 'oracle_fraction:<f>'."""
    if text in ("oracle_all", "abstain"):
        return text, 0.0
    if text.startswith("oracle_fraction:"):
        frac = float(text.split(":", 1)[1])
        if not 0.0 <= frac <= 1.0:
            raise ValueError(f"oracle fraction must lie in [0, 1], got {frac}")
        return "oracle_fraction", frac
    raise ValueError(f"unknown user policy {text!r}")


def simulate_user(session: SessionState, dataset: Dataset, policy: str = "oracle_all",
                  fraction: float = 1.0, seed: int = 0) -> list[tuple[int, int]]:
    """Stand-in for the human: label residue samples with their true labels.

    ``oracle_all`` labels every residue sample, ``oracle_fraction`` a seeded
    random subset of size round(f * residue), ``abstain`` none.
    """
    if policy == "abstain":
        return []
    truth = dataset.labels()
    residue = sorted(session.residue_ids)
    if policy == "oracle_all":
        chosen = residue
    elif policy == "oracle_fraction":
        count = int(round(fraction * len(residue)))
        rng = np.random.Generator(np.random.PCG64(seed))
        idx = rng.choice(len(residue), size=count, replace=False)
        chosen = sorted(residue[int(k)] for k in idx)
    else:
        raise ValueError(f"unknown user policy {policy!r}")
    return [(i, int(truth[i])) for i in chosen]


# ---------------------------------------------------------------------------
# Session archive (directory of plain-text stage files)
# ---------------------------------------------------------------------------

SPLIT_FILE = "split.txt"
PROJECTION_FILE = "projection.txt"
PROPAGATION_FILE = "propagation.txt"
TAU_FILE = "tau.txt"
MANUAL_FILE = "labels_manual.txt"
META_FILE = "session.txt"


@dataclass
class SessionBundle:
    """A session plus the dataset it annotates."""

    dataset: Dataset
    session: SessionState


def save_archive(directory: str | Path, bundle: SessionBundle) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    session = bundle.session
    if session.propagation is None:
        raise SessionError("session has no propagation stage; nothing to archive")
    write_split(directory / SPLIT_FILE, session.split)
    params = TsneParams()
    proj = Projection2D(y=session.projection_y, kl_history=(), kl_history_iters=(),
                        seed=session.seed, params=params)
    write_projection(directory / PROJECTION_FILE, session.projection_ids, proj)
    write_propagation(directory / PROPAGATION_FILE, session.propagation)
    (directory / TAU_FILE).write_text(f"{session.tau!r}\n")
    with open(directory / MANUAL_FILE, "w") as fh:
        for sample_id in sorted(session.user_labels):
            fh.write(f"{sample_id} {session.user_labels[sample_id]}\n")
    manifest = bundle.dataset.manifest_path
    with open(directory / META_FILE, "w") as fh:
        fh.write(f"manifest={manifest}\n")
        fh.write(f"protocol={session.protocol}\n")
        fh.write(f"auto_accept={int(session.auto_accept)}\n")
        fh.write(f"status={session.status}\n")
        fh.write(f"seed={session.seed}\n")
        fh.write(f"split_seed={session.split.seed}\n")
        fh.write(f"fractions={session.split.fractions[0]!r},"
                 f"{session.split.fractions[1]!r},{session.split.fractions[2]!r}\n")


def load_archive(directory: str | Path) -> SessionBundle:
    from .data import load_dataset_full  # local import to avoid cycle at module load

    directory = Path(directory)
    if not directory.is_dir():
        raise DataFormatError(f"session archive not found: {directory}")
    meta_path = directory / META_FILE
    if not meta_path.exists():
        raise DataFormatError(f"corrupt archive: missing {META_FILE}")
    meta: dict[str, str] = {}
    for line in meta_path.read_text().splitlines():
        if "=" in line:
            key, _, value = line.partition("=")
            meta[key] = value
    if "manifest" not in meta:
        raise DataFormatError(f"corrupt archive: {META_FILE} lacks manifest=")
    dataset = load_dataset_full(meta["manifest"])

    for name in (SPLIT_FILE, PROJECTION_FILE, PROPAGATION_FILE, TAU_FILE, MANUAL_FILE):
        if not (directory / name).exists():
            raise DataFormatError(f"corrupt archive: missing {name}")
    split = read_split(directory / SPLIT_FILE)
    if "split_seed" in meta or "fractions" in meta:
        from dataclasses import replace as _replace
        fractions = tuple(float(v) for v in meta.get("fractions", "0,0,0").split(","))
        split = _replace(split, seed=int(meta.get("split_seed", "0")),
                         fractions=fractions)  # type: ignore[arg-type]
    proj_ids, proj_y, _ = read_projection(directory / PROJECTION_FILE)
    propagation = read_propagation(directory / PROPAGATION_FILE)
    try:
        tau = float((directory / TAU_FILE).read_text().strip())
    except ValueError:
        raise DataFormatError(f"corrupt archive: {TAU_FILE} is not a number") from None
    user_labels: dict[int, int] = {}
    for lineno, line in enumerate((directory / MANUAL_FILE).read_text().splitlines()):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise DataFormatError(f"corrupt archive: {MANUAL_FILE} line {lineno}")
        user_labels[int(parts[0])] = int(parts[1])

    session = SessionState(
        split=split,
        projection_ids=proj_ids,
        projection_y=proj_y,
        propagation=propagation,
        tau=tau,
        auto_accept=bool(int(meta.get("auto_accept", "1"))),
        protocol=meta.get("protocol", "salp"),
        seed=int(meta.get("seed", "0")),
        user_labels=user_labels,
        status=meta.get("status", "open"),
    )
    return SessionBundle(dataset=dataset, session=session)
