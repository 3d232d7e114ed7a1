from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from edmkit.errors import EmptyFile, InvalidParam, ParseError, RaggedLengths, TooFewPerClass
from edmkit.utils.logger import logger
from edmkit.utils.rng import make_rng

CONSTANT_STD = 1e-8


@dataclass(frozen=True, eq=False)
class TimeSeriesDataset:
    """
    Labeled matrix of equal-length univariate series.

    ``values`` has shape (n, L); ``labels`` holds class indices; ``label_map`` maps the
    original label tokens to class indices in lexicographic token order.
    """

    name: str
    values: np.ndarray
    labels: np.ndarray
    label_map: Dict[str, int]

    @property
    def n_series(self) -> int:
        return self.values.shape[0]

    @property
    def length(self) -> int:
        return self.values.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.label_map)


def _split_line(line: str, delimiter: Optional[str]) -> List[str]:
    if delimiter is None:
        return line.split()
    return [token.strip() for token in line.split(delimiter)]


def load_ucr_tsv(path: Union[str, Path], label_map: Optional[Dict[str, int]] = None) -> TimeSeriesDataset:
    """
    Load a dataset in the UCR archive text format.

    Each line is ``label<TAB>v1<TAB>...<TAB>vL``. Files without a TAB on the first
    line are read as comma separated.

    Args:
        path (Union[str, Path]): File to read.
        label_map (Optional[Dict[str, int]]): Mapping to reuse (e.g. the training map when
            loading a test split). Built from the sorted distinct tokens when omitted.

    Returns:
        TimeSeriesDataset: Rows in file order.

    Raises:
        EmptyFile: If the file holds no data line.
        ParseError: On bytes that are not UTF-8, a line with fewer than two values, a
            non-numeric value or an unknown label token.
        RaggedLengths: If lines disagree on the series length.
    """
    path = Path(path)
    raw = path.read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise ParseError(raw[: e.start].count(b"\n") + 1, f"{path} is not UTF-8 text")
    lines = [(number, line) for number, line in enumerate(text.splitlines(), start=1) if line.strip()]
    if not lines:
        raise EmptyFile(f"No data in {path}")

    first = lines[0][1]
    delimiter = "\t" if "\t" in first else ("," if "," in first else None)

    tokens, rows = [], []
    length = None
    for number, line in lines:
        fields = _split_line(line.strip(), delimiter)
        if len(fields) < 3:
            raise ParseError(number, "expected a label followed by at least two values")
        try:
            row = [float(value) for value in fields[1:]]
        except ValueError as e:
            raise ParseError(number, f"non-numeric value ({e})")
        if length is None:
            length = len(row)
        elif len(row) != length:
            raise RaggedLengths(f"{path}: line {number} has {len(row)} values, expected {length}")
        tokens.append(fields[0])
        rows.append(row)

    if label_map is None:
        label_map = {token: index for index, token in enumerate(sorted(set(tokens)))}
    labels = []
    for (number, _), token in zip(lines, tokens):
        if token not in label_map:
            raise ParseError(number, f"unknown label '{token}'")
        labels.append(label_map[token])

    logger.info(f"Loaded {len(rows)} series of length {length} from {path}")
    return TimeSeriesDataset(
        name=path.stem,
        values=np.asarray(rows, dtype=float),
        labels=np.asarray(labels, dtype=int),
        label_map=dict(label_map),
    )


def write_ucr_tsv(ds: TimeSeriesDataset, path: Union[str, Path]) -> Path:
    """Write ``ds`` in the UCR TSV format. Values use the shortest exact float repr."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tokens = {index: token for token, index in ds.label_map.items()}
    with open(path, "w") as f:
        for label, row in zip(ds.labels, ds.values):
            f.write("\t".join([tokens[int(label)]] + [repr(float(v)) for v in row]) + "\n")
    return path


def z_normalize_rows(values: np.ndarray) -> np.ndarray:
    """Row-wise zero mean and unit population std; rows with std below 1e-8 become zeros."""
    values = np.asarray(values, dtype=float)
    mean = values.mean(axis=1, keepdims=True)
    std = values.std(axis=1, keepdims=True)
    safe_std = np.where(std < CONSTANT_STD, 1.0, std)
    return np.where(std < CONSTANT_STD, 0.0, (values - mean) / safe_std)


def z_normalize(ds: TimeSeriesDataset) -> TimeSeriesDataset:
    """
    Normalize each series to zero mean and unit population standard deviation.

    Series whose standard deviation is below 1e-8 become all zeros.
    """
    constant = ds.values.std(axis=1) < CONSTANT_STD
    if constant.any():
        logger.warning(f"{int(constant.sum())} constant series in {ds.name} set to zero")
    return replace(ds, values=z_normalize_rows(ds.values))


def make_synthetic(
    n_per_class: int,
    L: int,
    t_star: int,
    gap: float,
    noise_sd: float,
    seed: int,
    name: str = "synthetic",
) -> TimeSeriesDataset:
    """
    Two-class dataset whose classes diverge at time ``t_star``.

    Both classes are Gaussian noise N(0, noise_sd^2); from time ``t_star`` on (1-based)
    class 1 is shifted by ``gap``. Rows are class 0 first, then class 1.

    Raises:
        InvalidParam: On out-of-range parameters.
    """
    if n_per_class < 1:
        raise InvalidParam(f"n_per_class must be >= 1, got {n_per_class}")
    if L < 2:
        raise InvalidParam(f"series length must be >= 2, got {L}")
    if not 1 <= t_star <= L:
        raise InvalidParam(f"t_star must lie in [1, {L}], got {t_star}")
    if not noise_sd > 0:
        raise InvalidParam(f"noise_sd must be > 0, got {noise_sd}")

    rng = make_rng(seed)
    values = rng.normal(0.0, noise_sd, size=(2 * n_per_class, L))
    values[n_per_class:, t_star - 1:] += gap
    labels = np.repeat(np.arange(2), n_per_class)
    return TimeSeriesDataset(name=name, values=values, labels=labels, label_map={"0": 0, "1": 1})


def stratified_kfold(labels: Sequence[int], k: int, seed: int) -> List[np.ndarray]:
    """
    Split indices into ``k`` disjoint, class-stratified folds.

    Members of each class are shuffled and dealt round-robin, the starting fold
    rotating from class to class so fold sizes stay balanced.

    Raises:
        InvalidParam: If ``k < 2``.
        TooFewPerClass: If a class has fewer than ``k`` members.
    """
    if k < 2:
        raise InvalidParam(f"fold count must be >= 2, got {k}")
    labels = np.asarray(labels, dtype=int)
    classes, counts = np.unique(labels, return_counts=True)
    too_small = [int(c) for c, n in zip(classes, counts) if n < k]
    if too_small:
        raise TooFewPerClass(f"classes {too_small} have fewer than {k} members")

    rng = make_rng(seed)
    assignment = np.empty(len(labels), dtype=int)
    offset = 0
    for c in classes:
        members = rng.permutation(np.flatnonzero(labels == c))
        assignment[members] = (offset + np.arange(len(members))) % k
        offset += len(members)
    return [np.flatnonzero(assignment == fold) for fold in range(k)]


def default_timestamps(L: int, count: int = 20) -> List[int]:
    """
    Equally spaced prefix lengths ``ceil(i * L / m)`` for ``i = 1..m``, ``m = min(count, L)``.

    Raises:
        InvalidParam: If ``count < 1``.
    """
    if count < 1:
        raise InvalidParam(f"timestamp count must be >= 1, got {count}")
    m = min(count, L)
    return sorted({-(-i * L // m) for i in range(1, m + 1)})
