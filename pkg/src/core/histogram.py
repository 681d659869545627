"""Trial histograms: per-state counts of sampled readouts."""
import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from .errors import ValidationError

UNSHARP_LABEL = 'unsharp'
CSV_HEADER = ('state', 'count', 'mu')


def format_state(index: int) -> str:
    return f"0x{index:x}"


def parse_state(label: str) -> int:
    try:
        return int(label, 16)
    except ValueError:
        raise ValidationError(f"bad state label '{label}'") from None


@dataclass
class TrialHistogram:
    """Counts of readout indices over N trials.

    Trials whose register was not sharp at readout are counted under
    ``unsharp`` and take part in the total but in no state's probability.
    """

    n: int
    counts: Dict[int, int] = field(default_factory=dict)
    unsharp: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("histogram needs at least one qubit")
        for index, count in self.counts.items():
            if not 0 <= index < 1 << self.n:
                raise ValidationError(f"state {format_state(index)} out of range for {self.n} qubits")
            if count < 0:
                raise ValidationError(f"negative count for state {format_state(index)}")
        if self.unsharp < 0:
            raise ValidationError("negative unsharp count")

    @property
    def total(self) -> int:
        return sum(self.counts.values()) + self.unsharp

    def add(self, index: int, count: int = 1) -> None:
        if not 0 <= index < 1 << self.n:
            raise ValidationError(f"state {format_state(index)} out of range for {self.n} qubits")
        self.counts[index] = self.counts.get(index, 0) + count

    def add_unsharp(self, count: int = 1) -> None:
        self.unsharp += count

    def merge(self, other: 'TrialHistogram') -> 'TrialHistogram':
        """New histogram holding both sets of counts."""
        if other.n != self.n:
            raise ValidationError(f"cannot merge histograms over {self.n} and {other.n} qubits")
        merged = TrialHistogram(self.n, dict(self.counts), self.unsharp + other.unsharp)
        for index, count in other.counts.items():
            merged.add(index, count)
        return merged

    def widen(self, n: int) -> 'TrialHistogram':
        """Same counts over a register of ``n`` >= self.n qubits."""
        if n < self.n:
            raise ValidationError(f"cannot narrow a {self.n}-qubit histogram to {n} qubits")
        return TrialHistogram(n, dict(self.counts), self.unsharp)

    def states(self) -> List[int]:
        """Observed states in index order."""
        return sorted(index for index, count in self.counts.items() if count > 0)

    def mu(self, index: int) -> float:
        total = self.total
        return self.counts.get(index, 0) / total if total else 0.0

    def probabilities(self) -> np.ndarray:
        """Empirical probability of every basis state, length 2^n."""
        mu = np.zeros(1 << self.n, dtype=np.float64)
        total = self.total
        if total:
            for index, count in self.counts.items():
                mu[index] = count / total
        return mu

    def rows(self) -> List[Tuple[str, int, float]]:
        rows = [(format_state(index), self.counts[index], self.mu(index)) for index in self.states()]
        if self.unsharp:
            rows.append((UNSHARP_LABEL, self.unsharp, self.unsharp / self.total))
        return rows

    # serialization

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(CSV_HEADER)
        for label, count, mu in self.rows():
            writer.writerow([label, count, f"{mu:.8f}"])
        return buffer.getvalue()

    def to_dict(self) -> Dict:
        return {
            'n': self.n,
            'total': self.total,
            'rows': [{'state': label, 'count': count, 'mu': mu} for label, count, mu in self.rows()],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def write(self, path: Union[str, Path], fmt: str = 'csv') -> Path:
        """
        Write the histogram as CSV or JSON.

        Args:
            path: Output file
            fmt: 'csv' or 'json'

        Returns:
            The path written
        """
        path = Path(path)
        if fmt not in ('csv', 'json'):
            raise ValidationError(f"unknown histogram format '{fmt}'")
        text = self.to_csv() if fmt == 'csv' else self.to_json()
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(text)
        return path

    @classmethod
    def from_rows(cls, rows: List[Tuple[str, int]], n: Optional[int] = None) -> 'TrialHistogram':
        counts: Dict[int, int] = {}
        unsharp = 0
        for label, count in rows:
            if label == UNSHARP_LABEL:
                unsharp += count
            else:
                index = parse_state(label)
                counts[index] = counts.get(index, 0) + count
        if n is None:
            n = max([1] + [index.bit_length() for index in counts])
        return cls(n, counts, unsharp)

    @classmethod
    def from_csv(cls, text: str, n: Optional[int] = None) -> 'TrialHistogram':
        """
        Load a histogram written by :meth:`to_csv`.

        Probabilities are recomputed from the counts. Without ``n`` the
        qubit count is the smallest one covering every listed state.
        """
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header is None or tuple(cell.strip() for cell in header) != CSV_HEADER:
            raise ValidationError(f"histogram CSV must start with '{','.join(CSV_HEADER)}'")
        rows = []
        for line_number, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != 3:
                raise ValidationError(f"histogram CSV line {line_number}: expected 3 fields")
            try:
                rows.append((record[0].strip(), int(record[1])))
            except ValueError:
                raise ValidationError(f"histogram CSV line {line_number}: bad count '{record[1]}'") from None
        return cls.from_rows(rows, n)

    @classmethod
    def from_json(cls, text: str) -> 'TrialHistogram':
        try:
            data = json.loads(text)
            rows = [(row['state'], int(row['count'])) for row in data['rows']]
            n = int(data['n'])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"malformed histogram JSON: {e}") from e
        return cls.from_rows(rows, n)

    @classmethod
    def load(cls, path: Union[str, Path]) -> 'TrialHistogram':
        """Read a CSV or JSON histogram, chosen by file suffix."""
        path = Path(path)
        text = path.read_text(encoding='utf-8')
        if path.suffix.lower() == '.json':
            return cls.from_json(text)
        return cls.from_csv(text)
