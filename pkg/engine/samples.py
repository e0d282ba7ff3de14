import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Tuple, Union

import numpy as np  # type: ignore
import pandas as pd  # type: ignore

from .errors import InputError, InsufficientSampleError, ParseError

logger = logging.getLogger(__name__)

# loaded sample tables need two rows; generated columns may hold a single draw
MIN_FILE_ROWS = 2


@dataclass(frozen=True, eq=False)
class SampleMatrix:
    """n observations (rows) of d labelled variables (columns)."""
    data: np.ndarray
    labels: Tuple[str, ...]

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64)
        if data.ndim == 1:
            data = data.reshape(-1, 1)
        if data.ndim != 2:
            raise InputError(f"Samples must be a 2-D table, got shape {data.shape}")
        labels = tuple(self.labels)
        if len(labels) != data.shape[1]:
            raise InputError(f"{len(labels)} labels for {data.shape[1]} columns")
        if len(set(labels)) != len(labels):
            raise InputError(f"Duplicate column labels: {labels}")
        if data.shape[0] < 1:
            raise InsufficientSampleError("A sample table needs at least one observation")
        if not np.all(np.isfinite(data)):
            raise InputError("Samples contain missing or non-finite entries.")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "labels", labels)

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    @property
    def n_cols(self) -> int:
        return self.data.shape[1]

    def column(self, label: str) -> np.ndarray:
        if label not in self.labels:
            raise InputError(f"Unknown column '{label}' (have {self.labels})")
        return self.data[:, self.labels.index(label)]

    def select(self, labels: Sequence[str]) -> "SampleMatrix":
        return SampleMatrix(np.column_stack([self.column(name) for name in labels]), tuple(labels))

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "SampleMatrix":
        """Header row of labels, one observation per row, decimal literals."""
        try:
            frame = pd.read_csv(path)
        except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
            raise ParseError(f"Unreadable CSV: {e}", source=str(path)) from e
        if frame.isna().any().any():
            row, col = np.argwhere(frame.isna().to_numpy())[0]
            # +2: header line and 1-based numbering
            raise ParseError("Missing entry", line=int(row) + 2, column=int(col) + 1, source=str(path))
        try:
            data = frame.to_numpy(dtype=np.float64)
        except ValueError as e:
            raise ParseError(f"Non-numeric entry: {e}", source=str(path)) from e
        if data.shape[0] < MIN_FILE_ROWS:
            raise InsufficientSampleError(f"{path}: need at least {MIN_FILE_ROWS} observations, got {data.shape[0]}")
        logger.info(f"Loaded {data.shape[0]}x{data.shape[1]} samples from {path}")
        return cls(data, tuple(str(c) for c in frame.columns))
