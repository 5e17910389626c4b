"""RNA sequences, a surrogate folder, dot-bracket parsing and level-5 shapes."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .errors import IngestInconsistent, LengthMismatch, MalformedStructure

ALPHABET = "AUCG"
OPEN_CHAIN = "_"
PAIRS = frozenset({"AU", "UA", "GC", "CG", "GU", "UG"})
DATASET_HEADER = ("sequence", "structure", "shape")

_ONEHOT = {base: np.eye(4, dtype=np.int8)[i] for i, base in enumerate(ALPHABET)}


def normalize_sequence(seq: str) -> str:
    """Upper-case ``seq``, map T to U and reject anything outside AUCG."""
    s = seq.strip().upper().replace("T", "U")
    if not s:
        raise ValueError("sequence must be non-empty")
    bad = set(s) - set(ALPHABET)
    if bad:
        raise ValueError(f"invalid nucleotides {sorted(bad)} in {seq!r}")
    return s


def encode_onehot(seq: str) -> np.ndarray:
    """Concatenated 4-bit codes, A=1000 U=0100 C=0010 G=0001."""
    s = normalize_sequence(seq)
    return np.concatenate([_ONEHOT[b] for b in s])


def encode_many(seqs: Sequence[str]) -> np.ndarray:
    """Stack :func:`encode_onehot` rows into an ``(n, 4L)`` float array."""
    if len(seqs) == 0:
        return np.zeros((0, 0))
    return np.vstack([encode_onehot(s) for s in seqs]).astype(float)


def hamming(a: str, b: str) -> float:
    """Letter-level Hamming distance, computed as half the bit distance."""
    va, vb = encode_onehot(a), encode_onehot(b)
    if va.shape != vb.shape:
        raise LengthMismatch(f"sequence lengths differ: {len(va) // 4} vs {len(vb) // 4}")
    return 0.5 * float(np.count_nonzero(va != vb))


# -- surrogate folding ---------------------------------------------------------


def _pair_table(seq: str, min_loop: int) -> List[List[bool]]:
    n = len(seq)
    return [[j - i - 1 >= min_loop and seq[i] + seq[j] in PAIRS for j in range(n)] for i in range(n)]


def _fill(seq: str, min_loop: int, can: List[List[bool]]) -> List[List[int]]:
    # plain lists: per-cell numpy overhead dominates at these sizes
    n = len(seq)
    N = [[0] * (n + 1) for _ in range(n + 2)]
    for span in range(min_loop + 2, n + 1):
        for i in range(n - span + 1):
            j = i + span - 1
            inner = N[i + 1]
            row = can[i]
            best = inner[j]
            for k in range(i + min_loop + 1, j + 1):
                if row[k]:
                    # k == j reads N[j + 1][j], an empty interval
                    v = inner[k - 1] + N[k + 1][j] + 1
                    if v > best:
                        best = v
            N[i][j] = best
    return N


def nussinov_table(seq: str, min_loop: int = 3) -> np.ndarray:
    """Maximum base-pair counts ``N[i, j]`` for every subsequence ``i..j``."""
    s = normalize_sequence(seq)
    N = _fill(s, min_loop, _pair_table(s, min_loop))
    return np.array(N, dtype=np.int64)[: len(s), : len(s)]


def fold_surrogate(seq: str, min_loop: int = 3) -> str:
    """Nussinov maximum-pairing fold of ``seq`` as dot-bracket.

    Traceback ties prefer pairing ``i`` with ``j``, then leaving ``i``
    unpaired, then the split with the smallest partner ``k`` of ``i``.
    """
    s = normalize_sequence(seq)
    n = len(s)
    out = ["."] * n
    if n <= min_loop + 1:
        return "".join(out)
    can = _pair_table(s, min_loop)
    N = _fill(s, min_loop, can)
    stack = [(0, n - 1)]
    while stack:
        i, j = stack.pop()
        target = N[i][j] if j - i > min_loop else 0
        if target == 0:
            continue
        if can[i][j] and 1 + N[i + 1][j - 1] == target:
            out[i], out[j] = "(", ")"
            stack.append((i + 1, j - 1))
            continue
        if N[i + 1][j] == target:
            stack.append((i + 1, j))
            continue
        for k in range(i + min_loop + 1, j):
            if can[i][k] and 1 + N[i + 1][k - 1] + N[k + 1][j] == target:
                out[i], out[k] = "(", ")"
                stack.append((k + 1, j))
                stack.append((i + 1, k - 1))
                break
        else:  # pragma: no cover - the table guarantees a witness
            raise AssertionError(f"no traceback witness at ({i}, {j})")
    return "".join(out)


def pair_count(structure: str) -> int:
    return structure.count("(")


# -- dot-bracket parsing ---------------------------------------------------------


@dataclass
class PairNode:
    open: int
    close: int
    children: List["PairNode"] = field(default_factory=list)


def parse_dotbracket(structure: str) -> List[PairNode]:
    """Parse dot-bracket into a forest of pair nodes ordered by open index."""
    roots: List[PairNode] = []
    stack: List[PairNode] = []
    for pos, ch in enumerate(structure):
        if ch == "(":
            stack.append(PairNode(pos, -1))
        elif ch == ")":
            if not stack:
                raise MalformedStructure(f"unmatched ')' at position {pos}")
            node = stack.pop()
            node.close = pos
            (stack[-1].children if stack else roots).append(node)
        elif ch != ".":
            raise MalformedStructure(f"invalid symbol {ch!r} at position {pos}")
    if stack:
        raise MalformedStructure(f"unmatched '(' at position {stack[-1].open}")
    return roots


def render_forest(forest: Sequence[PairNode], length: int) -> str:
    """Inverse of :func:`parse_dotbracket`."""
    out = ["."] * length
    todo = list(forest)
    while todo:
        node = todo.pop()
        out[node.open], out[node.close] = "(", ")"
        todo.extend(node.children)
    return "".join(out)


def validate_structure(structure: str, min_loop: int = 0) -> List[Tuple[int, int]]:
    """Return the pair list, raising if unbalanced or a hairpin is too short."""
    pairs = sorted((node.open, node.close) for node in _walk(parse_dotbracket(structure)))
    for i, j in pairs:
        if j - i - 1 < min_loop:
            raise MalformedStructure(f"pair ({i}, {j}) encloses fewer than {min_loop} bases")
    return pairs


def _walk(forest: Sequence[PairNode]) -> Iterator[PairNode]:
    todo = list(reversed(forest))
    while todo:
        node = todo.pop()
        yield node
        todo.extend(reversed(node.children))


# -- abstract shapes -------------------------------------------------------------


def _render_shape(node: PairNode) -> str:
    while len(node.children) == 1:
        node = node.children[0]
    return "[" + "".join(_render_shape(c) for c in node.children) + "]"


def abstract_shape(forest: Sequence[PairNode]) -> str:
    """Level-5 abstract shape: stems collapse, unpaired bases vanish.

    An empty forest is the open chain ``"_"``.
    """
    if not forest:
        return OPEN_CHAIN
    return "".join(_render_shape(root) for root in forest)


def shape_of(structure: str) -> str:
    return abstract_shape(parse_dotbracket(structure))


def is_shape(shape: str) -> bool:
    if shape == OPEN_CHAIN:
        return True
    if not shape or shape.strip("[]"):
        return False
    depth = 0
    for ch in shape:
        depth += 1 if ch == "[" else -1
        if depth < 0:
            return False
    return depth == 0


# -- dataset files ---------------------------------------------------------------


@dataclass(frozen=True)
class Record:
    sequence: str
    shape: str
    structure: Optional[str] = None


def write_dataset(path, records: Sequence[Record]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DATASET_HEADER)
        for r in records:
            w.writerow([r.sequence, r.structure or "", r.shape])


def ingest_dataset(path) -> List[Record]:
    """Read a ``sequence,structure,shape`` file.

    When a structure is given its shape is recomputed and must agree with
    the shape column.
    """
    path = Path(path)
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != DATASET_HEADER:
            raise MalformedStructure(f"{path}:1: expected header {','.join(DATASET_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise MalformedStructure(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            raw_seq, structure, shape = (x.strip() for x in row)
            try:
                seq = normalize_sequence(raw_seq)
            except ValueError as exc:
                raise MalformedStructure(f"{path}:{lineno}: {exc}") from None
            if not is_shape(shape):
                raise MalformedStructure(f"{path}:{lineno}: invalid shape {shape!r}")
            if structure:
                if len(structure) != len(seq):
                    raise MalformedStructure(
                        f"{path}:{lineno}: structure length {len(structure)} != sequence length {len(seq)}"
                    )
                try:
                    derived = shape_of(structure)
                except MalformedStructure as exc:
                    raise MalformedStructure(f"{path}:{lineno}: {exc}") from None
                if derived != shape:
                    raise IngestInconsistent(
                        f"{path}:{lineno}: structure gives shape {derived!r}, file says {shape!r}"
                    )
            records.append(Record(seq, shape, structure or None))
    return records
