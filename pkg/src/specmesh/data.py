"""Synthetic two-region bump classification data on a mesh, group-disjoint
splitting, and the CSV signal format used by the CLI."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UserError
from .mesh import TriMesh, ring_distances

BUMP_HEIGHT = 1.0
NOISE_CLIP_SIGMAS = 8.0


@dataclass
class LabeledSignals:
    """Per-vertex signal rows with class labels and subject-analog group ids."""

    signals: np.ndarray
    labels: np.ndarray
    group_ids: np.ndarray

    def __post_init__(self):
        self.signals = np.asarray(self.signals, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.group_ids = np.asarray(self.group_ids, dtype=np.int64)
        if not (len(self.signals) == len(self.labels) == len(self.group_ids)):
            raise UserError("signals, labels, and group_ids must align")

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, idx) -> "LabeledSignals":
        return LabeledSignals(self.signals[idx], self.labels[idx], self.group_ids[idx])


def generate_bump_dataset(
    mesh: TriMesh,
    n_per_class: int,
    noise_sigma: float,
    bump_width: float,
    seed: int,
    max_samples_per_subject: int = 3,
) -> LabeledSignals:
    """Two classes of Gaussian bumps (hop-distance based) at well-separated
    mesh regions. Each synthetic subject contributes 1..max samples sharing a
    group id and a per-subject center jitter; noise is clipped at 8 sigma.
    """
    if n_per_class < 1 or bump_width <= 0 or noise_sigma < 0:
        raise UserError("dataset parameters must be positive")
    rng = np.random.default_rng(seed)

    center0 = 0
    d0 = ring_distances(mesh, center0)
    center1 = int(np.argmax(d0))
    if d0[center1] <= bump_width:
        raise UserError("bump regions overlap entirely; width too large for mesh")

    # jitter candidates: the center and its 1-ring
    adj = mesh.adjacency()
    candidates = []
    for c in (center0, center1):
        nbrs = adj.indices[adj.indptr[c]:adj.indptr[c + 1]]
        candidates.append(np.concatenate([[c], np.sort(nbrs)]))

    signals, labels, groups = [], [], []
    group_id = 0
    for cls in (0, 1):
        made = 0
        while made < n_per_class:
            n_samples = min(
                int(rng.integers(1, max_samples_per_subject + 1)),
                n_per_class - made,
            )
            cand = candidates[cls]
            center = int(cand[rng.integers(len(cand))])
            dist = ring_distances(mesh, center).astype(np.float64)
            bump = BUMP_HEIGHT * np.exp(-(dist**2) / (2.0 * bump_width**2))
            for _ in range(n_samples):
                noise = rng.standard_normal(mesh.n_vertices) * noise_sigma
                clip = NOISE_CLIP_SIGMAS * noise_sigma
                signals.append(bump + np.clip(noise, -clip, clip))
                labels.append(cls)
                groups.append(group_id)
            made += n_samples
            group_id += 1

    return LabeledSignals(np.array(signals), np.array(labels), np.array(groups))


def _split_counts(n_groups: int, fractions) -> list:
    counts = [int(np.floor(f * n_groups)) for f in fractions]
    remainders = [f * n_groups - c for f, c in zip(fractions, counts)]
    while sum(counts) < n_groups:
        k = int(np.argmax(remainders))
        counts[k] += 1
        remainders[k] = -1.0
    return counts


def split_grouped(data: LabeledSignals, fractions, seed: int):
    """Class-stratified split at the group level; no group id crosses splits."""
    fractions = tuple(fractions)
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise UserError("split fractions must sum to 1")
    rng = np.random.default_rng(seed)

    assignment = {}  # group id -> split index
    for cls in np.unique(data.labels):
        cls_groups = np.unique(data.group_ids[data.labels == cls])
        if len(cls_groups) < len(fractions):
            raise UserError(
                f"class {cls} has {len(cls_groups)} groups, fewer than splits"
            )
        cls_groups = rng.permutation(cls_groups)
        counts = _split_counts(len(cls_groups), fractions)
        start = 0
        for split_idx, c in enumerate(counts):
            for g in cls_groups[start:start + c]:
                assignment[int(g)] = split_idx
            start += c

    split_of = np.array([assignment[int(g)] for g in data.group_ids])
    return tuple(
        data.subset(np.nonzero(split_of == s)[0]) for s in range(len(fractions))
    )


def save_signals_csv(data: LabeledSignals, fh) -> None:
    """Rows: group_id, label, then one value per vertex (17 significant digits)."""
    for g, lab, row in zip(data.group_ids, data.labels, data.signals):
        values = ",".join(f"{v:.17g}" for v in row)
        fh.write(f"{g},{lab},{values}\n")


def load_signals_csv(fh, mesh: TriMesh) -> LabeledSignals:
    """Parse the CSV signal format, checking column counts against the mesh."""
    n = mesh.n_vertices
    signals, labels, groups = [], [], []
    for lineno, raw in enumerate(fh, start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != n + 2:
            raise UserError(
                f"row {lineno}: expected {n + 2} columns, got {len(parts)}"
            )
        try:
            groups.append(int(parts[0]))
            labels.append(int(parts[1]))
            values = np.array([float(p) for p in parts[2:]])
        except ValueError:
            raise UserError(f"row {lineno}: unparseable value") from None
        if np.any(np.isnan(values)):
            raise UserError(f"row {lineno}: NaN signal value")
        signals.append(values)
    if not signals:
        raise UserError("no data rows in signals CSV")
    return LabeledSignals(np.array(signals), np.array(labels), np.array(groups))
