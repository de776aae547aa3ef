"""Quantum circuit model and OpenQASM 2.0 subset parser.

Parses OpenQASM 2.0 text into an immutable Circuit over globally indexed
qubits. Supports: qreg/creg declarations, the gates x, y, z, h, s, sdg, t,
tdg, rx, ry, rz, cx, cz, swap, ccx, cswap, barrier (ignored) and terminal
measurement (discarded; measurement is done by the simulator).
Input/output qubit roles are declared outside the QASM text.

Bit ordering: the first qubit of input_qubits (output_qubits) is the least
significant bit of the input (output) index and the LAST character of the
bitstring.
"""

import logging
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Sequence

from src.errors import CircuitError

logger = logging.getLogger(__name__)


DEFAULT_MAX_QUBITS = 20

SUPPORTED_STATEMENTS = (
    "OPENQASM 2.0; include \"qelib1.inc\"; qreg/creg declarations; "
    "gates x y z h s sdg t tdg rx ry rz cx cz swap ccx cswap; barrier; "
    "terminal measure"
)


class GateKind(Enum):
    """Supported gate kinds, valued by their QASM spelling."""

    X = "x"
    Y = "y"
    Z = "z"
    H = "h"
    S = "s"
    SDG = "sdg"
    T = "t"
    TDG = "tdg"
    RX = "rx"
    RY = "ry"
    RZ = "rz"
    CX = "cx"
    CZ = "cz"
    SWAP = "swap"
    CCX = "ccx"
    CSWAP = "cswap"

    @property
    def arity(self) -> int:
        return GATE_ARITY[self]

    @property
    def is_rotation(self) -> bool:
        return self in ROTATION_KINDS


GATE_ARITY = {
    GateKind.X: 1, GateKind.Y: 1, GateKind.Z: 1, GateKind.H: 1,
    GateKind.S: 1, GateKind.SDG: 1, GateKind.T: 1, GateKind.TDG: 1,
    GateKind.RX: 1, GateKind.RY: 1, GateKind.RZ: 1,
    GateKind.CX: 2, GateKind.CZ: 2, GateKind.SWAP: 2,
    GateKind.CCX: 3, GateKind.CSWAP: 3,
}

ROTATION_KINDS = frozenset({GateKind.RX, GateKind.RY, GateKind.RZ})

GATES_BY_NAME = {kind.value: kind for kind in GateKind}

# Statements recognised as OpenQASM but outside the supported subset
UNSUPPORTED_STATEMENTS = frozenset({"reset", "if", "gate", "opaque", "U", "CX"})


@dataclass(frozen=True)
class GateApplication:
    """One gate applied to global qubit indices."""

    kind: GateKind
    operands: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self) -> None:
        if len(self.operands) != self.kind.arity:
            raise CircuitError(
                f"gate {self.kind.value} takes {self.kind.arity} qubit(s), got {len(self.operands)}"
            )
        if len(set(self.operands)) != len(self.operands):
            raise CircuitError(
                f"gate {self.kind.value} has repeated operands {list(self.operands)}",
                hint="Multi-qubit gate operands must be pairwise distinct",
            )
        if self.kind.is_rotation:
            if self.angle is None or not math.isfinite(self.angle):
                raise CircuitError(f"gate {self.kind.value} needs a finite angle, got {self.angle}")
        elif self.angle is not None:
            raise CircuitError(f"gate {self.kind.value} takes no angle")

    def __str__(self) -> str:
        args = ",".join(str(q) for q in self.operands)
        if self.angle is not None:
            return f"{self.kind.name}[{self.angle!r}]({args})"
        return f"{self.kind.name}({args})"


@dataclass(frozen=True)
class QubitRoles:
    """Declared input and output qubits (global indices after flattening).

    Entries may also be register references such as "i1[0]"; they are
    resolved by parse_circuit.
    """

    input_qubits: tuple[int | str, ...]
    output_qubits: tuple[int | str, ...]

    @classmethod
    def of(cls, input_qubits: Sequence[int | str], output_qubits: Sequence[int | str]) -> "QubitRoles":
        return cls(tuple(input_qubits), tuple(output_qubits))


@dataclass(frozen=True)
class Circuit:
    """Immutable quantum program: gates plus declared input/output qubits."""

    num_qubits: int
    gates: tuple[GateApplication, ...]
    input_qubits: tuple[int, ...]
    output_qubits: tuple[int, ...]
    name: str = "circuit"
    registers: tuple[tuple[str, int], ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        if self.num_qubits < 1:
            raise CircuitError("circuit declares no qubits", hint="Add a qreg declaration")
        for gate in self.gates:
            for q in gate.operands:
                if not 0 <= q < self.num_qubits:
                    raise CircuitError(
                        f"gate {gate.kind.value} uses qubit {q} outside [0, {self.num_qubits})"
                    )
        for role, qubits in (("input", self.input_qubits), ("output", self.output_qubits)):
            if not qubits:
                raise CircuitError(f"{role} qubits must not be empty", hint=f"Declare {role}_qubits")
            if len(set(qubits)) != len(qubits):
                raise CircuitError(f"{role} qubits contain duplicates: {list(qubits)}")
            for q in qubits:
                if not 0 <= q < self.num_qubits:
                    raise CircuitError(
                        f"{role} qubit {q} is outside [0, {self.num_qubits})",
                        hint="Role declarations use global indices in register declaration order",
                    )

    @property
    def input_width(self) -> int:
        return len(self.input_qubits)

    @property
    def output_width(self) -> int:
        return len(self.output_qubits)

    def __str__(self) -> str:
        gates = ", ".join(str(g) for g in self.gates)
        return (
            f"Circuit({self.name}, qubits={self.num_qubits}, gates=[{gates}], "
            f"input={list(self.input_qubits)}, output={list(self.output_qubits)})"
        )


def input_domain_size(c: Circuit) -> int:
    """Size of the full input domain, 2^|input_qubits|."""
    return 1 << len(c.input_qubits)


def index_to_bitstring(index: int, width: int) -> str:
    """Render an index as a bitstring whose last character is bit 0."""
    return format(index, f"0{width}b")


def bitstring_to_index(bits: str) -> int:
    """Inverse of index_to_bitstring."""
    return int(bits, 2)


@dataclass(frozen=True)
class Token:
    """Lexical token with its 1-based source position."""

    type: str
    value: Any
    line: int
    column: int


# Token patterns (order matters - more specific patterns first)
TOKEN_PATTERNS = [
    (r'//[^\n]*', 'COMMENT'),
    (r'/\*.*?\*/', 'COMMENT'),
    (r'\s+', 'WHITESPACE'),
    (r'OPENQASM\b', 'OPENQASM'),
    (r'"([^"\n]*)"', 'STRING'),
    (r'->', 'ARROW'),
    (r'==', 'EQUALS'),
    (r'(?:\d+\.\d*|\.\d+)(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+', 'REAL'),
    (r'\d+', 'INT'),
    (r'[a-zA-Z][a-zA-Z0-9_]*', 'IDENT'),
    (r'[\[\](){},;+\-*/^]', 'PUNCT'),
]


class QasmParser:
    """Parser for the supported OpenQASM 2.0 subset using regex tokenization."""

    def __init__(self, max_qubits: int = DEFAULT_MAX_QUBITS):
        self.max_qubits = max_qubits
        self._patterns = [
            (re.compile(pattern, re.DOTALL), token_type)
            for pattern, token_type in TOKEN_PATTERNS
        ]

    def parse(self, source: str, roles: QubitRoles, name: str = "circuit") -> Circuit:
        """Parse QASM source into a Circuit with the given roles."""
        logger.debug("Parsing circuit %r (%d chars)", name, len(source))
        tokens = self._tokenize(source)
        logger.debug("Tokenized into %d tokens", len(tokens))
        return _StatementParser(tokens, self.max_qubits).parse(roles, name)

    def _tokenize(self, source: str) -> list[Token]:
        """Tokenize source text, tracking line and column."""
        tokens: list[Token] = []
        pos = 0
        line = 1
        line_start = 0

        while pos < len(source):
            for pattern, token_type in self._patterns:
                match = pattern.match(source, pos)
                if not match:
                    continue

                text = match.group(0)
                column = pos - line_start + 1
                if token_type == 'STRING':
                    tokens.append(Token(token_type, match.group(1), line, column))
                elif token_type == 'REAL':
                    tokens.append(Token(token_type, float(text), line, column))
                elif token_type == 'INT':
                    tokens.append(Token(token_type, int(text), line, column))
                elif token_type not in ('COMMENT', 'WHITESPACE'):
                    tokens.append(Token(token_type, text, line, column))

                newlines = text.count("\n")
                if newlines:
                    line += newlines
                    line_start = pos + text.rindex("\n") + 1
                pos = match.end()
                break
            else:
                raise CircuitError(
                    f"unexpected character {source[pos]!r}",
                    line=line,
                    column=pos - line_start + 1,
                    hint="Check for unsupported characters or syntax",
                )

        tokens.append(Token('EOF', None, line, pos - line_start + 1))
        return tokens


class _StatementParser:
    """Recursive-descent parser over a token list."""

    def __init__(self, tokens: list[Token], max_qubits: int):
        self.tokens = tokens
        self.pos = 0
        self.max_qubits = max_qubits
        self.qregs: dict[str, tuple[int, int]] = {}  # name -> (offset, size)
        self.cregs: dict[str, int] = {}
        self.num_qubits = 0
        self.gates: list[GateApplication] = []
        self.measured: list[tuple[int, Token]] = []

    # Token helpers

    def _peek(self) -> Token:
        return self.tokens[self.pos]

    def _next(self) -> Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def _error(self, message: str, token: Token, hint: str | None = None) -> CircuitError:
        return CircuitError(message, line=token.line, column=token.column, hint=hint)

    def _expect(self, token_type: str, value: str | None = None) -> Token:
        token = self._next()
        if token.type != token_type or (value is not None and token.value != value):
            expected = value if value is not None else token_type.lower()
            found = "end of input" if token.type == 'EOF' else repr(token.value)
            raise self._error(f"expected {expected!r}, found {found}", token)
        return token

    def _accept(self, token_type: str, value: str | None = None) -> Token | None:
        token = self._peek()
        if token.type == token_type and (value is None or token.value == value):
            self.pos += 1
            return token
        return None

    # Statements

    def parse(self, roles: QubitRoles, name: str) -> Circuit:
        self._parse_header()
        statements = 0
        while self._peek().type != 'EOF':
            self._parse_statement()
            statements += 1
        logger.debug("Parsed %d statements, %d gates", statements, len(self.gates))

        if not self.qregs:
            raise CircuitError("no qreg declared", hint="Declare at least one quantum register")

        input_qubits = tuple(self._resolve_role(q, "input") for q in roles.input_qubits)
        output_qubits = tuple(self._resolve_role(q, "output") for q in roles.output_qubits)

        outputs = set(output_qubits)
        for qubit, token in self.measured:
            if qubit not in outputs:
                logger.warning(
                    "line %d: measurement of non-output qubit %d is ignored", token.line, qubit
                )

        registers = tuple((reg, size) for reg, (_, size) in self.qregs.items())
        return Circuit(
            num_qubits=self.num_qubits,
            gates=tuple(self.gates),
            input_qubits=input_qubits,
            output_qubits=output_qubits,
            name=name,
            registers=registers,
        )

    def _parse_header(self) -> None:
        token = self._peek()
        if token.type != 'OPENQASM':
            raise self._error("missing 'OPENQASM 2.0;' header", token)
        self._next()
        version = self._next()
        if version.type != 'REAL' or version.value != 2.0:
            raise self._error(
                f"unsupported OpenQASM version {version.value!r}", version,
                hint="Only OpenQASM 2.0 is supported",
            )
        self._expect('PUNCT', ';')

    def _parse_statement(self) -> None:
        token = self._next()
        if token.type != 'IDENT':
            raise self._error(f"unexpected {token.value!r} at start of statement", token)

        keyword = token.value
        if keyword == "include":
            self._expect('STRING')
            self._expect('PUNCT', ';')
        elif keyword in ("qreg", "creg"):
            self._parse_register(keyword, token)
        elif keyword == "measure":
            self._parse_measure(token)
        elif keyword == "barrier":
            self._parse_operands(token)
            self._expect('PUNCT', ';')
        elif keyword in UNSUPPORTED_STATEMENTS:
            raise self._error(
                f"unsupported statement '{keyword}'", token,
                hint=f"Supported: {SUPPORTED_STATEMENTS}",
            )
        elif keyword in GATES_BY_NAME:
            self._parse_gate(GATES_BY_NAME[keyword], token)
        else:
            raise self._error(
                f"unsupported gate '{keyword}'", token,
                hint=f"Supported: {SUPPORTED_STATEMENTS}",
            )

    def _parse_register(self, keyword: str, token: Token) -> None:
        name = self._expect('IDENT')
        self._expect('PUNCT', '[')
        size = self._expect('INT')
        self._expect('PUNCT', ']')
        self._expect('PUNCT', ';')

        if name.value in self.qregs or name.value in self.cregs:
            raise self._error(f"duplicate register name '{name.value}'", name)
        if size.value < 1:
            raise self._error(f"register '{name.value}' must have positive size", size)

        if keyword == "creg":
            self.cregs[name.value] = size.value
            return

        if self.num_qubits + size.value > self.max_qubits:
            raise self._error(
                f"circuit needs {self.num_qubits + size.value} qubits, cap is {self.max_qubits}",
                size,
                hint="Raise max_qubits in the run configuration",
            )
        self.qregs[name.value] = (self.num_qubits, size.value)
        self.num_qubits += size.value

    def _parse_gate(self, kind: GateKind, token: Token) -> None:
        if self.measured:
            raise self._error(
                f"gate '{kind.value}' after measurement (mid-circuit measurement is unsupported)",
                token,
            )

        angle = None
        if self._accept('PUNCT', '('):
            angle = self._parse_expression()
            self._expect('PUNCT', ')')
            if not kind.is_rotation:
                raise self._error(f"gate '{kind.value}' takes no parameter", token)
            if not math.isfinite(angle):
                raise self._error(f"gate '{kind.value}' angle is not finite", token)
        elif kind.is_rotation:
            raise self._error(f"gate '{kind.value}' needs an angle parameter", token)

        operand_groups = self._parse_operands(token)
        self._expect('PUNCT', ';')

        if len(operand_groups) != kind.arity:
            raise self._error(
                f"gate '{kind.value}' takes {kind.arity} operand(s), got {len(operand_groups)}",
                token,
            )

        for operands in self._broadcast(operand_groups, token):
            if len(set(operands)) != len(operands):
                raise self._error(
                    f"gate '{kind.value}' has repeated operands {list(operands)}", token
                )
            self.gates.append(GateApplication(kind, operands, angle))

    def _parse_measure(self, token: Token) -> None:
        qubits = self._parse_qubit_operand()
        self._expect('ARROW')
        creg = self._expect('IDENT')
        if creg.value not in self.cregs:
            raise self._error(f"unknown classical register '{creg.value}'", creg)
        if self._accept('PUNCT', '['):
            index = self._expect('INT')
            self._expect('PUNCT', ']')
            if index.value >= self.cregs[creg.value]:
                raise self._error(
                    f"index {index.value} out of range for creg '{creg.value}'", index
                )
        self._expect('PUNCT', ';')
        for qubit in qubits:
            self.measured.append((qubit, token))

    def _parse_operands(self, token: Token) -> list[list[int]]:
        groups = [self._parse_qubit_operand()]
        while self._accept('PUNCT', ','):
            groups.append(self._parse_qubit_operand())
        return groups

    def _parse_qubit_operand(self) -> list[int]:
        """Parse 'reg[k]' (one qubit) or 'reg' (the whole register)."""
        name = self._expect('IDENT')
        if name.value not in self.qregs:
            raise self._error(f"unknown quantum register '{name.value}'", name)
        offset, size = self.qregs[name.value]
        if self._accept('PUNCT', '['):
            index = self._expect('INT')
            self._expect('PUNCT', ']')
            if index.value >= size:
                raise self._error(
                    f"qubit index {index.value} out of range for qreg '{name.value}' of size {size}",
                    index,
                )
            return [offset + index.value]
        return list(range(offset, offset + size))

    def _broadcast(self, groups: list[list[int]], token: Token) -> list[tuple[int, ...]]:
        """Expand whole-register operands as in OpenQASM 2.0."""
        sizes = {len(g) for g in groups if len(g) > 1}
        if not sizes:
            return [tuple(g[0] for g in groups)]
        if len(sizes) > 1:
            raise self._error("register operands have different sizes", token)
        width = sizes.pop()
        return [tuple(g[i] if len(g) > 1 else g[0] for g in groups) for i in range(width)]

    # Parameter expressions

    def _parse_expression(self) -> float:
        value = self._parse_term()
        while True:
            if self._accept('PUNCT', '+'):
                value += self._parse_term()
            elif self._accept('PUNCT', '-'):
                value -= self._parse_term()
            else:
                return value

    def _parse_term(self) -> float:
        value = self._parse_factor()
        while True:
            if self._accept('PUNCT', '*'):
                value *= self._parse_factor()
            elif self._peek().type == 'PUNCT' and self._peek().value == '/':
                token = self._next()
                divisor = self._parse_factor()
                if divisor == 0:
                    raise self._error("division by zero in parameter", token)
                value /= divisor
            else:
                return value

    def _parse_factor(self) -> float:
        token = self._next()
        if token.type == 'PUNCT' and token.value == '-':
            return -self._parse_factor()
        if token.type == 'PUNCT' and token.value == '+':
            return self._parse_factor()
        if token.type in ('REAL', 'INT'):
            return float(token.value)
        if token.type == 'IDENT' and token.value == 'pi':
            return math.pi
        if token.type == 'PUNCT' and token.value == '(':
            value = self._parse_expression()
            self._expect('PUNCT', ')')
            return value
        raise self._error(f"unexpected {token.value!r} in parameter expression", token)

    # Roles

    def _resolve_role(self, qubit: int | str, role: str) -> int:
        """Resolve a role entry (global index or 'reg[k]') to a global index."""
        if isinstance(qubit, bool):
            raise CircuitError(f"{role} qubit entry {qubit!r} is not a qubit reference")
        if isinstance(qubit, int):
            if not 0 <= qubit < self.num_qubits:
                raise CircuitError(
                    f"{role} qubit {qubit} does not exist (circuit has {self.num_qubits} qubits)",
                    hint="Role declarations use global indices in register declaration order",
                )
            return qubit

        match = re.fullmatch(r"\s*([a-zA-Z][a-zA-Z0-9_]*)\s*\[\s*(\d+)\s*\]\s*", str(qubit))
        if not match or match.group(1) not in self.qregs:
            raise CircuitError(
                f"{role} qubit {qubit!r} references an unknown register",
                hint=f"Known registers: {', '.join(self.qregs) or 'none'}",
            )
        offset, size = self.qregs[match.group(1)]
        index = int(match.group(2))
        if index >= size:
            raise CircuitError(f"{role} qubit {qubit!r} is out of range for a register of size {size}")
        return offset + index


def parse_circuit(
    source: str,
    roles: QubitRoles,
    name: str = "circuit",
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> Circuit:
    """Parse QASM text into a Circuit with the declared input/output roles."""
    return QasmParser(max_qubits).parse(source, roles, name)


def parse_circuit_file(
    path: Path,
    roles: QubitRoles,
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> Circuit:
    """Read and parse a .qasm file; the circuit is named after the file stem."""
    try:
        source = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise CircuitError(f"circuit file not found: {path}", hint="Check the circuit path") from None
    except (OSError, UnicodeDecodeError) as e:
        raise CircuitError(f"cannot read circuit file {path}: {e}") from e

    try:
        return parse_circuit(source, roles, name=path.stem, max_qubits=max_qubits)
    except CircuitError as e:
        raise CircuitError(f"{path}: {e.message}", hint=e.hint) from e


def to_qasm(c: Circuit) -> str:
    """Emit the circuit as OpenQASM 2.0 over a single register 'q'."""
    lines = [
        "OPENQASM 2.0;",
        'include "qelib1.inc";',
        f"qreg q[{c.num_qubits}];",
        f"creg c[{c.output_width}];",
    ]
    for gate in c.gates:
        args = ",".join(f"q[{q}]" for q in gate.operands)
        if gate.angle is not None:
            lines.append(f"{gate.kind.value}({gate.angle!r}) {args};")
        else:
            lines.append(f"{gate.kind.value} {args};")
    for j, q in enumerate(c.output_qubits):
        lines.append(f"measure q[{q}] -> c[{j}];")
    return "\n".join(lines) + "\n"
