"""Circuit text format, the simple test circuit and random verification circuits.

Format (UTF-8, one statement per line)::

    qubits <n>
    <keyword> <target> [<control>] [<probability>]

Two-input gates list the target first and the control second, matching
GateSpec (i, j). Error gates (ex, ey, ez) take a probability instead of a
second qubit. Keywords are case-insensitive, blank lines are ignored and
``#`` starts a comment. ``# name: <text>`` and ``# seed: <int>`` comments
carry document metadata.
"""
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from .engine import Circuit, GateSpec
from .errors import CircuitParseError, ValidationError
from .gatelib import GateKind
from .qstate import N_MAX

KEYWORDS = {kind.keyword: kind for kind in GateKind}

# S appears twice: once as itself and once as sqrt(Z)
RANDOM_GATE_POOL: Tuple[GateKind, ...] = (
    GateKind.X, GateKind.Y, GateKind.Z,
    GateKind.S, GateKind.SDG,
    GateKind.T, GateKind.TDG,
    GateKind.V, GateKind.SY, GateKind.S,
)

_METADATA = re.compile(r'#\s*(name|seed)\s*:\s*(.*?)\s*$', re.IGNORECASE)
_TOKEN = re.compile(r'\S+')


@dataclass(frozen=True)
class CircuitDocument:
    n: int
    gates: Tuple[GateSpec, ...] = ()
    name: Optional[str] = None
    seed: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, 'gates', tuple(self.gates))
        if self.n < 1:
            raise ValidationError("a circuit needs at least one qubit")
        for spec in self.gates:
            spec.check_qubits(self.n)

    @property
    def circuit(self) -> Circuit:
        return Circuit(self.gates)

    def count(self, kind: GateKind) -> int:
        return sum(1 for spec in self.gates if spec.kind is kind)


def _tokens(line: str) -> List[Tuple[str, int]]:
    return [(m.group(0), m.start() + 1) for m in _TOKEN.finditer(line)]


def _parse_qubit(token: str, column: int, line_number: int, n: int) -> int:
    try:
        qubit = int(token)
    except ValueError:
        raise CircuitParseError(f"bad qubit index '{token}'", line_number, column) from None
    if not 0 <= qubit < n:
        raise CircuitParseError(f"qubit {qubit} out of range for {n} qubits", line_number, column)
    return qubit


def _parse_gate(tokens: List[Tuple[str, int]], line_number: int, n: int) -> GateSpec:
    keyword, column = tokens[0]
    kind = KEYWORDS.get(keyword.lower())
    if kind is None:
        raise CircuitParseError(f"unknown gate '{keyword}'", line_number, column)

    args = tokens[1:]
    expected = 2 if kind.arity == 2 or kind.is_error else 1
    if len(args) < expected:
        what = "probability" if kind.is_error and len(args) == 1 else "qubit"
        raise CircuitParseError(f"{kind.keyword}: missing {what}", line_number, column)
    if len(args) > expected:
        token, col = args[expected]
        raise CircuitParseError(f"{kind.keyword}: unexpected argument '{token}'", line_number, col)

    i = _parse_qubit(*args[0], line_number, n)
    j = p_err = None
    if kind.arity == 2:
        j = _parse_qubit(*args[1], line_number, n)
        if j == i:
            raise CircuitParseError(f"{kind.keyword}: duplicate qubit {i}", line_number, args[1][1])
    elif kind.is_error:
        token, col = args[1]
        try:
            p_err = float(token)
        except ValueError:
            raise CircuitParseError(f"bad probability '{token}'", line_number, col) from None
        if not 0 <= p_err <= 1:
            raise CircuitParseError(f"probability {token} outside [0, 1]", line_number, col)
    return GateSpec(kind, i, j, p_err)


def parse(text: str, n_max: int = N_MAX) -> CircuitDocument:
    """
    Parse circuit text into a validated document.

    Raises:
        CircuitParseError: with the line and column of the offending token
    """
    n = None
    name = seed = None
    gates: List[GateSpec] = []

    for line_number, raw_line in enumerate(text.splitlines(), start=1):
        body, _, comment = raw_line.partition('#')
        if comment:
            meta = _METADATA.match('#' + comment)
            if meta and not body.strip():
                key, value = meta.group(1).lower(), meta.group(2)
                if key == 'name':
                    name = value
                else:
                    try:
                        seed = int(value)
                    except ValueError:
                        raise CircuitParseError(f"bad seed '{value}'", line_number, raw_line.index('#') + 1) from None
        tokens = _tokens(body)
        if not tokens:
            continue

        if n is None:
            keyword, column = tokens[0]
            if keyword.lower() != 'qubits':
                raise CircuitParseError("circuit must start with 'qubits <n>'", line_number, column)
            if len(tokens) != 2:
                raise CircuitParseError("expected 'qubits <n>'", line_number, column)
            try:
                n = int(tokens[1][0])
            except ValueError:
                raise CircuitParseError(f"bad qubit count '{tokens[1][0]}'", line_number, tokens[1][1]) from None
            if not 1 <= n <= n_max:
                raise CircuitParseError(f"qubit count {n} outside 1..{n_max}", line_number, tokens[1][1])
            continue

        if tokens[0][0].lower() == 'qubits':
            raise CircuitParseError("qubit count declared twice", line_number, tokens[0][1])
        gates.append(_parse_gate(tokens, line_number, n))

    if n is None:
        raise CircuitParseError("missing 'qubits <n>' declaration")
    return CircuitDocument(n, tuple(gates), name, seed)


def serialize(doc: CircuitDocument) -> str:
    """Canonical text: lowercase keywords, single spaces, one gate per line."""
    lines = [f"qubits {doc.n}"]
    if doc.name is not None:
        lines.append(f"# name: {doc.name}")
    if doc.seed is not None:
        lines.append(f"# seed: {doc.seed}")
    lines.extend(str(spec) for spec in doc.gates)
    return "\n".join(lines) + "\n"


def read_circuit(path: Union[str, Path], n_max: int = N_MAX) -> CircuitDocument:
    return parse(Path(path).read_text(encoding='utf-8'), n_max)


def write_circuit(path: Union[str, Path], doc: CircuitDocument) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(serialize(doc))
    return path


def simple_test_circuit(n: int) -> CircuitDocument:
    """H on every qubit, measure qubit 0, CNOT(target 1, control 0), measure the rest."""
    if n < 2:
        raise ValidationError("the simple test circuit needs at least two qubits")
    gates = [GateSpec(GateKind.H, q) for q in range(n)]
    gates.append(GateSpec(GateKind.M, 0))
    gates.append(GateSpec(GateKind.CNOT, 1, 0))
    gates.extend(GateSpec(GateKind.M, q) for q in range(1, n))
    return CircuitDocument(n, tuple(gates), name=f"simple-{n}")


def random_circuit(n: int, iterations: int = 3, seed: int = 0) -> CircuitDocument:
    """Random verification circuit, a pure function of (n, iterations, seed).

    An H layer, then per iteration a nearest-neighbour CNOT chain
    (target q+1, control q) followed by one gate per qubit drawn uniformly
    from RANDOM_GATE_POOL, then a terminal measurement of every qubit.
    """
    if n < 2:
        raise ValidationError("random circuits need at least two qubits")
    if iterations < 1:
        raise ValidationError("random circuits need at least one iteration")
    if seed < 0:
        raise ValidationError(f"seed {seed} must be non-negative")

    generator = np.random.Generator(np.random.PCG64(seed))
    gates = [GateSpec(GateKind.H, q) for q in range(n)]
    for _ in range(iterations):
        gates.extend(GateSpec(GateKind.CNOT, q + 1, q) for q in range(n - 1))
        draws = generator.integers(0, len(RANDOM_GATE_POOL), size=n)
        gates.extend(GateSpec(RANDOM_GATE_POOL[int(d)], q) for q, d in enumerate(draws))
    gates.extend(GateSpec(GateKind.M, q) for q in range(n))
    return CircuitDocument(n, tuple(gates), name=f"random-n{n}-it{iterations}", seed=seed)


def strip_measurements(doc: CircuitDocument) -> CircuitDocument:
    return replace(doc, gates=tuple(spec for spec in doc.gates if not spec.kind.is_measurement))
