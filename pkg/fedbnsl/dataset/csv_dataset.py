"""
Reading and writing numeric CSV data, participant shards and graph files
"""

# generic imports
from pathlib import Path
import logging
import re
import numpy as np
import pandas as pd

# fedbnsl imports
from fedbnsl.dataset.data_utils import Stream, make_rng
from fedbnsl.dataset.participant import ParticipantData
from fedbnsl.model.graph import BinaryDag
from fedbnsl.utils.exceptions import CsvFormatError

log = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'


def _parse_numeric(frame, path, first_row):
    """Convert a frame of strings to floats, reporting the first bad cell by its 1-based file position."""
    missing = frame.isna().to_numpy()
    if missing.any():
        row = int(np.argwhere(missing)[0][0])
        fields = int((~missing[row]).sum())
        raise CsvFormatError(path, f"row has {fields} fields, expected {frame.shape[1]}", row=row + first_row)
    values = frame.apply(pd.to_numeric, errors='coerce').to_numpy(dtype=np.float64)
    bad = ~np.isfinite(values)
    if bad.any():
        row, column = (int(i) for i in np.argwhere(bad)[0])
        raise CsvFormatError(path, f"cannot parse {frame.iat[row, column]!r} as a finite number",
                             row=row + first_row, column=column + 1)
    return values


def _read_frame(path, has_header, sep=','):
    try:
        return pd.read_csv(path, sep=sep, header=0 if has_header else None, dtype=str, keep_default_na=False,
                           skip_blank_lines=True, encoding='utf-8')
    except pd.errors.EmptyDataError as e:
        raise CsvFormatError(path, "file is empty") from e
    except pd.errors.ParserError as e:
        match = re.search(r"line (\d+), saw (\d+)", str(e))
        if match is None:
            raise CsvFormatError(path, str(e).strip()) from e
        raise CsvFormatError(path, f"ragged row with {match.group(2)} fields", row=int(match.group(1))) from e
    except UnicodeDecodeError as e:
        raise CsvFormatError(path, "file is not valid UTF-8") from e


def read_samples(path, has_header=False):
    """
    Read a numeric CSV file into an n x d array.

    Parameters
    ----------
    path : str or Path
        Comma separated file with one record per row.
    has_header : bool
        Whether the first row holds column names.

    Returns
    -------
    np.ndarray

    Raises
    ------
    CsvFormatError
        If the file is empty, a row is ragged or a cell is not a finite number.
    """
    frame = _read_frame(path, has_header)
    if frame.shape[0] == 0:
        raise CsvFormatError(path, "file holds no data rows")
    return _parse_numeric(frame, path, first_row=2 if has_header else 1)


def split_shards(samples, P):
    """Split rows contiguously into P near-equal shards, the first shards taking the remainder."""
    if P < 1:
        raise ValueError(f"need at least one participant, got {P}")
    if samples.shape[0] < P:
        raise ValueError(f"cannot split {samples.shape[0]} rows between {P} participants")
    return [ParticipantData(shard) for shard in np.array_split(samples, P)]


def load_csv(path, has_header, P, shuffle=False, seed=None):
    """
    Load a CSV dataset and partition it between P participants.

    Parameters
    ----------
    path : str or Path
        Numeric CSV file, one record per row.
    has_header : bool
        Whether the first row holds column names.
    P : int
        Number of participants.
    shuffle : bool
        Apply a seeded row permutation before splitting.
    seed : int, optional
        Seed of the permutation, required when shuffling.

    Returns
    -------
    list of ParticipantData
    """
    samples = read_samples(path, has_header)
    if shuffle:
        if seed is None:
            raise ValueError("shuffling rows needs a seed")
        samples = samples[make_rng(seed, Stream.SHUFFLE).permutation(samples.shape[0])]
    participants = split_shards(samples, P)
    log.info(f"Read {samples.shape[0]} rows of {samples.shape[1]} variables from {path}, "
             f"shard sizes {[p.n for p in participants]}")
    return participants


def load_csv_federation(path, has_header, P, shuffle=False, seed=None, truth_path=None):
    """
    Hydra target for real data: the participants of `load_csv` and an optional ground truth graph file.

    Returns
    -------
    truth : BinaryDag or None
    participants : list of ParticipantData
    """
    participants = load_csv(path, has_header, P, shuffle=shuffle, seed=seed)
    truth = None
    if truth_path is not None:
        truth = BinaryDag.from_adjacency(read_graph(truth_path, d=participants[0].d))
    return truth, participants


def write_shards(directory, participants):
    """Write one CSV per participant with a header row x0..x{d-1}. Returns the written paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for p, data in enumerate(participants):
        path = directory / f"participant_{p}.csv"
        columns = [f"x{j}" for j in range(data.d)]
        pd.DataFrame(data.samples, columns=columns).to_csv(path, index=False, float_format=FLOAT_FORMAT)
        paths.append(path)
    return paths


def read_edge_list(path, d=None):
    """
    Read a weighted edge list, one whitespace separated `i j weight` triple per line with 0-indexed nodes.

    Parameters
    ----------
    path : str or Path
    d : int, optional
        Number of nodes. Inferred from the largest index when omitted, which an empty file does not allow.

    Returns
    -------
    np.ndarray
        d x d weighted adjacency matrix.
    """
    try:
        frame = _read_frame(path, has_header=False, sep=r'\s+')
    except CsvFormatError as e:
        if str(e).endswith("file is empty"):
            if d is None:
                raise CsvFormatError(path, "empty edge list and unknown number of nodes") from e
            return np.zeros((d, d))
        raise
    if frame.shape[1] != 3:
        raise CsvFormatError(path, f"edge list rows need 3 fields 'i j weight', got {frame.shape[1]}", row=1)
    values = _parse_numeric(frame, path, first_row=1)
    nodes = values[:, :2]
    if np.any(nodes != np.round(nodes)) or np.any(nodes < 0):
        row = int(np.argwhere(np.any((nodes != np.round(nodes)) | (nodes < 0), axis=1))[0][0])
        raise CsvFormatError(path, "node indices must be non-negative integers", row=row + 1)
    nodes = nodes.astype(np.int64)
    size = int(nodes.max()) + 1 if d is None else d
    if nodes.max() >= size:
        row = int(np.argwhere(np.any(nodes >= size, axis=1))[0][0])
        raise CsvFormatError(path, f"node index out of range for {size} nodes", row=row + 1)
    W = np.zeros((size, size))
    W[nodes[:, 0], nodes[:, 1]] = values[:, 2]
    return W


def write_edge_list(path, W):
    """Write the nonzero entries of a weighted matrix as an `i j weight` edge list, in row-major order."""
    W = np.asarray(W, dtype=np.float64)
    rows, cols = np.nonzero(W)
    frame = pd.DataFrame({'i': rows, 'j': cols, 'weight': W[rows, cols]})
    frame.to_csv(path, sep=' ', header=False, index=False, float_format=FLOAT_FORMAT)


def read_matrix(path):
    """Read a square weighted adjacency matrix stored as a headerless CSV."""
    values = read_samples(path, has_header=False)
    if values.shape[0] != values.shape[1]:
        raise CsvFormatError(path, f"matrix file must be square, got {values.shape[0]}x{values.shape[1]}")
    return values


def write_matrix(path, W):
    pd.DataFrame(np.asarray(W, dtype=np.float64)).to_csv(path, header=False, index=False,
                                                         float_format=FLOAT_FORMAT)


def read_graph(path, d=None):
    """
    Read a graph stored either as a comma separated d x d matrix or as a whitespace separated edge list.

    Parameters
    ----------
    path : str or Path
    d : int, optional
        Number of nodes, needed for an empty edge list.

    Returns
    -------
    np.ndarray
        Weighted adjacency matrix.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except UnicodeDecodeError as e:
        raise CsvFormatError(path, "file is not valid UTF-8") from e
    first_line = next((line for line in text.splitlines() if line.strip()), "")
    W = read_matrix(path) if ',' in first_line else read_edge_list(path, d)
    if d is not None and W.shape[0] != d:
        raise CsvFormatError(path, f"graph has {W.shape[0]} nodes, expected {d}")
    return W
