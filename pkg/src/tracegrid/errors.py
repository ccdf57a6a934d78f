"""Domain error hierarchy. `code` is the stable machine-readable identifier
carried on API error bodies and CLI machine output."""
from __future__ import annotations


class TracegridError(Exception):
    code = "Error"


class NotFound(TracegridError):
    code = "NotFound"


class DuplicateName(TracegridError):
    code = "DuplicateName"


class CycleError(TracegridError):
    code = "CycleError"

    def __init__(self, cycle: list[str]):
        self.cycle = list(cycle)
        super().__init__(f"cycle: {' -> '.join(self.cycle + self.cycle[:1])}")


class DanglingEdge(TracegridError):
    code = "DanglingEdge"

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"edge references unknown activity {name!r}")


class DuplicateTask(TracegridError):
    code = "DuplicateTask"

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"duplicate task {name!r}")


class UnknownDependency(TracegridError):
    code = "UnknownDependency"

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"dependsOn references undeclared task {name!r}")


class ParseError(TracegridError):
    """Document is not syntactically valid (with line/column locus)."""

    code = "SyntaxError"


class SchemaError(TracegridError):
    """Document parsed but violates the pipeline schema; message names the field."""

    code = "SchemaError"


class InstanceClosed(TracegridError):
    code = "InstanceClosed"


class InstanceStillOpen(TracegridError):
    code = "InstanceStillOpen"


class IllegalTransition(TracegridError):
    code = "IllegalTransition"

    def __init__(self, from_state: str, to_state: str, detail: str = ""):
        self.from_state = from_state
        self.to_state = to_state
        msg = f"illegal transition {from_state} -> {to_state}"
        super().__init__(msg + (f" ({detail})" if detail else ""))


class SequenceGap(TracegridError):
    code = "SequenceGap"

    def __init__(self, expected: int, got: int):
        self.expected = expected
        self.got = got
        super().__init__(f"expected seq {expected}, got {got}")


class UnknownActivity(TracegridError):
    code = "UnknownActivity"


class OutcomeError(TracegridError):
    """Outcome payload/digest/kind discipline violated."""

    code = "OutcomeError"


class CorruptJournal(TracegridError):
    code = "CorruptJournal"

    def __init__(self, journal: str, line: int, reason: str):
        self.journal = journal
        self.line = line
        self.reason = reason
        super().__init__(f"{journal} journal corrupt at line {line}: {reason}")


class ConfigError(TracegridError):
    code = "ConfigError"


class EmptyWorkerPool(ConfigError):
    code = "EmptyWorkerPool"
