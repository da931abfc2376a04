"""Episodic few-shot classification on an ACAM support array.

Support embeddings are written into an ``(n*k) x d`` array, one window per
element, centred on the element's (quantized) voltage.  The query goes on the
search lines and takes the label of the row with the highest generalized
Hamming score.  A cosine-similarity search on the raw embeddings is the
software baseline.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .core import AcamArray, NoiseSpec, perturb_windows
from .device import DEFAULT_RANGE
from .errors import ParseError
from .search import analog_hamming, cosine_search

EMBED_DIM = 64


@dataclass(frozen=True, eq=False)
class EmbeddingTable:
    labels: np.ndarray
    features: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels)
        features = np.asarray(self.features, dtype=float)
        if features.ndim != 2:
            features = features.reshape(len(labels), -1)
        if len(labels) != features.shape[0]:
            raise ValueError("one label per embedding row required")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "features", features)

    def __len__(self):
        return len(self.labels)

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def classes(self) -> list:
        return sorted(set(self.labels.tolist()), key=str)


def _coerce_labels(raw):
    try:
        return np.array([int(v) for v in raw], dtype=np.int64)
    except ValueError:
        return np.array(raw, dtype=object)


def parse_embeddings(text: str, path=None) -> EmbeddingTable:
    """Parse ``label,e0,...,e{d-1}`` CSV text.  The header fixes ``d``."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None:
        raise ParseError("missing header", path=path, line=1)
    header = [h.strip() for h in header]
    d = len(header) - 1
    if d < 1 or header[0] != "label" or header[1:] != [f"e{j}" for j in range(d)]:
        raise ParseError("header must be label,e0,...,e{d-1}", path=path, line=1)
    labels, rows = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row or not "".join(row).strip():
            continue
        if len(row) != d + 1:
            raise ParseError(f"expected {d} features, found {len(row) - 1}", path=path, line=lineno)
        try:
            rows.append([float(v) for v in row[1:]])
        except ValueError:
            raise ParseError("non-numeric feature", path=path, line=lineno) from None
        labels.append(row[0].strip())
    features = np.array(rows, dtype=float).reshape(len(rows), d)
    return EmbeddingTable(_coerce_labels(labels), features)


def load_embeddings(path) -> EmbeddingTable:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read embeddings: {exc}", path=path) from exc
    return parse_embeddings(text, path=path)


def dump_embeddings(table: EmbeddingTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label"] + [f"e{j}" for j in range(table.d)])
    for label, row in zip(table.labels.tolist(), table.features.tolist()):
        w.writerow([label] + [repr(v) for v in row])
    return buf.getvalue()


def save_embeddings(table: EmbeddingTable, path) -> None:
    Path(path).write_text(dump_embeddings(table))


def synth_embeddings(n_classes: int, per_class: int, d: int = EMBED_DIM,
                     cluster_std: float = 0.05, seed: int = 0,
                     embed_range=DEFAULT_RANGE) -> EmbeddingTable:
    """Gaussian clusters around centroids drawn uniformly in ``embed_range``.

    Stands in for a trained backbone.  Rows are grouped by class.
    """
    if min(n_classes, per_class, d) < 1:
        raise ValueError("class count, samples per class and d must all be >= 1")
    if cluster_std < 0:
        raise ValueError("cluster_std must be nonnegative")
    rng = np.random.default_rng(seed)
    lo, hi = embed_range
    centroids = rng.uniform(lo, hi, size=(n_classes, d))
    noise = rng.normal(0.0, cluster_std, size=(n_classes, per_class, d))
    features = (centroids[:, None, :] + noise).reshape(-1, d)
    labels = np.repeat(np.arange(n_classes), per_class)
    return EmbeddingTable(labels, features)


def to_voltages(table: EmbeddingTable, embed_range=DEFAULT_RANGE) -> EmbeddingTable:
    """Affine map of the table's global min/max onto ``embed_range``."""
    lo, hi = embed_range
    fmin, fmax = table.features.min(), table.features.max()
    if fmax == fmin:
        scaled = np.full_like(table.features, 0.5 * (lo + hi))
    else:
        frac = (table.features - fmin) / (fmax - fmin)
        # convex form keeps both endpoints exact
        scaled = lo * (1.0 - frac) + hi * frac
    return EmbeddingTable(table.labels, np.clip(scaled, lo, hi))


@dataclass(frozen=True, eq=False)
class Episode:
    n_way: int
    k_shot: int
    support: np.ndarray
    support_labels: np.ndarray
    query: np.ndarray
    query_label: object

    def __post_init__(self):
        support = np.atleast_2d(np.asarray(self.support, dtype=float))
        labels = np.asarray(self.support_labels)
        if support.shape[0] != self.n_way * self.k_shot or len(labels) != support.shape[0]:
            raise ValueError(f"support must have n*k = {self.n_way * self.k_shot} labelled rows")
        values, counts = np.unique(labels, return_counts=True)
        if len(values) != self.n_way or np.any(counts != self.k_shot):
            raise ValueError("each of the n classes must appear exactly k times")
        query = np.asarray(self.query, dtype=float).reshape(-1)
        if query.shape[0] != support.shape[1]:
            raise ValueError("query and support dimensions differ")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "support_labels", labels)
        object.__setattr__(self, "query", query)

    @property
    def d(self) -> int:
        return self.support.shape[1]


@dataclass(frozen=True)
class FewshotConfig:
    window_size: float = 0.4
    quant_bits: int | None = 4
    noise: NoiseSpec | None = None
    embed_range: tuple = DEFAULT_RANGE
    centroid: bool = False  # store one row per class mean instead of one per sample

    def __post_init__(self):
        if self.window_size < 0:
            raise ValueError("window_size must be nonnegative")


def _eligible_classes(table: EmbeddingTable, k_shot: int):
    values, counts = np.unique(table.labels, return_counts=True)
    return values[counts >= k_shot + 1]


def sample_episode(table: EmbeddingTable, n_way: int, k_shot: int, rng) -> Episode:
    """Draw an episode; the query sample is never part of the support set."""
    eligible = _eligible_classes(table, k_shot)
    if len(eligible) < n_way:
        raise ValueError(
            f"need {n_way} classes with at least {k_shot + 1} samples, found {len(eligible)}")
    classes = rng.choice(eligible, size=n_way, replace=False)
    query_class = rng.integers(n_way)
    support_idx, query_idx = [], None
    for c_i, label in enumerate(classes):
        members = np.flatnonzero(table.labels == label)
        take = k_shot + 1 if c_i == query_class else k_shot
        chosen = rng.choice(members, size=take, replace=False)
        support_idx.extend(chosen[:k_shot].tolist())
        if c_i == query_class:
            query_idx = int(chosen[k_shot])
    return Episode(n_way, k_shot, table.features[support_idx], table.labels[support_idx],
                   table.features[query_idx], table.labels[query_idx])


def support_rows(episode: Episode, cfg: FewshotConfig):
    """Rows to program and their labels (per sample, or class centroids)."""
    if not cfg.centroid:
        return episode.support, episode.support_labels
    labels = list(dict.fromkeys(episode.support_labels.tolist()))
    rows = np.stack([episode.support[episode.support_labels == c].mean(axis=0) for c in labels])
    return rows, np.array(labels, dtype=episode.support_labels.dtype)


def build_support_array(episode: Episode, cfg: FewshotConfig) -> AcamArray:
    rows, _ = support_rows(episode, cfg)
    lo, hi = cfg.embed_range
    array = AcamArray.from_centers(np.clip(rows, lo, hi), cfg.window_size,
                                   quant_bits=cfg.quant_bits, v_range=cfg.embed_range)
    if cfg.noise is not None and (cfg.noise.std > 0 or cfg.noise.mean != 0):
        array = perturb_windows(array, cfg.noise)
    return array


def classify(episode: Episode, cfg: FewshotConfig):
    """Label of the support row with the largest generalized Hamming score."""
    _, labels = support_rows(episode, cfg)
    array = build_support_array(episode, cfg)
    lo, hi = cfg.embed_range
    result = analog_hamming(array, np.clip(episode.query, lo, hi))
    return labels[result.best_row]


def classify_cosine(episode: Episode, centroid: bool = False):
    rows, labels = support_rows(episode, FewshotConfig(centroid=centroid))
    return labels[cosine_search(rows, episode.query).best_row]


@dataclass(frozen=True)
class AccuracyCell:
    window_size: float
    noise_std: float
    accuracy: float
    n_episodes: int


def episode_seed(seed: int, index: int, stream: int = 0) -> int:
    """Sub-seed for one episode; independent of evaluation order."""
    return int(np.random.SeedSequence([seed, index, stream]).generate_state(1)[0])


def _episodes(table, n_way, k_shot, episodes, seed):
    return [sample_episode(table, n_way, k_shot, np.random.default_rng(episode_seed(seed, e)))
            for e in range(episodes)]


def sweep_accuracy(table: EmbeddingTable, n_way: int, k_shot: int, episodes: int,
                   window_sizes, noise_stds, seed: int, quant_bits: int | None = 4,
                   centroid: bool = False, embed_range=DEFAULT_RANGE,
                   threads: int = 1) -> list[AccuracyCell]:
    """Mean accuracy for every (window size, noise std) pair.

    Every cell sees the same episodes, and the window noise of a given episode
    is one standard-normal draw scaled by the cell's std.
    """
    if len(_eligible_classes(table, k_shot)) < n_way:
        raise ValueError(f"table lacks {n_way} classes with {k_shot + 1}+ samples")
    volts = to_voltages(table, embed_range)
    eps = _episodes(volts, n_way, k_shot, episodes, seed)
    base = FewshotConfig(quant_bits=quant_bits, embed_range=embed_range, centroid=centroid)

    def run_episode(e):
        ep = eps[e]
        noise_seed = episode_seed(seed, e, stream=1)
        hits = []
        for w in window_sizes:
            for s in noise_stds:
                cfg = replace(base, window_size=float(w), noise=NoiseSpec(float(s), seed=noise_seed))
                hits.append(classify(ep, cfg) == ep.query_label)
        return hits

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            table_hits = list(pool.map(run_episode, range(episodes)))
    else:
        table_hits = [run_episode(e) for e in range(episodes)]
    acc = np.mean(np.array(table_hits, dtype=float), axis=0) if episodes else None
    cells, i = [], 0
    for w in window_sizes:
        for s in noise_stds:
            cells.append(AccuracyCell(float(w), float(s),
                                      float(acc[i]) if acc is not None else float("nan"), episodes))
            i += 1
    return cells


def cosine_accuracy(table: EmbeddingTable, n_way: int, k_shot: int, episodes: int,
                    seed: int, centroid: bool = False) -> float:
    """Software baseline over the same episodes ``sweep_accuracy`` draws.

    Sampling depends only on labels and row indices, so drawing from the raw
    table selects the same rows as drawing from its voltage image.
    """
    eps = _episodes(table, n_way, k_shot, episodes, seed)
    return float(np.mean([classify_cosine(ep, centroid) == ep.query_label for ep in eps]))


def dump_accuracy_csv(cells) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["window_size", "noise_std", "accuracy", "n_episodes"])
    for c in cells:
        w.writerow([repr(c.window_size), repr(c.noise_std), repr(c.accuracy), c.n_episodes])
    return buf.getvalue()
