"""Two-party rendezvous for trusted-dealer functionalities.

A dealer operation takes one input from each party and returns a per-party
output. Both parties call `paired_call` concurrently (from their own
threads); the first arrival parks, the second triggers the computation, and
each caller gets only its own output. Calls pair up by operation name and
per-name arrival index, which is unambiguous because the protocols above are
strictly phased: the i-th "aes-eqm" call of one party always corresponds to
the i-th of the other.

Every completed call is appended to an audit log holding the exact submitted
inputs and returned outputs, which is what the no-secret-leaves-the-party
tests and the dealer-call-count budgets inspect.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable

PROVER = "prover"
VERIFIER = "verifier"
ROLES = (PROVER, VERIFIER)


class DealerError(Exception):
    pass


class DealerClosed(DealerError):
    pass


class DealerAbort(DealerError):
    """The dealer rejected the call (inconsistent inputs, failed check)."""


@dataclass
class DealerCall:
    op: str
    index: int
    inputs: dict[str, object]
    outputs: dict[str, object] = field(default_factory=dict)
    error: str | None = None


class _PendingCall:
    def __init__(self) -> None:
        self.inputs: dict[str, object] = {}
        self.outputs: dict[str, object] | None = None
        self.failure: BaseException | None = None
        self.done = threading.Event()


class RendezvousDealer:
    """Base class for dealer functionalities; subclasses wrap paired_call."""

    def __init__(self, timeout: float = 60.0):
        self._lock = threading.Lock()
        self._pending: dict[tuple[str, int], _PendingCall] = {}
        self._arrivals: dict[tuple[str, str], int] = {}
        self._closed = False
        self._timeout = timeout
        self.audit_log: list[DealerCall] = []

    def close(self) -> None:
        with self._lock:
            self._closed = True
            pending = list(self._pending.values())
        for call in pending:
            if call.failure is None and call.outputs is None:
                call.failure = DealerClosed("dealer shut down")
            call.done.set()

    def call_count(self, op: str | None = None) -> int:
        if op is None:
            return len(self.audit_log)
        return sum(1 for c in self.audit_log if c.op == op)

    def paired_call(
        self,
        op: str,
        role: str,
        payload: object,
        compute: Callable[[dict[str, object]], dict[str, object]],
    ) -> object:
        """Submit this role's input for `op`; blocks until both sides are in.

        `compute` maps {role: input} to {role: output}; only the second
        arrival runs it. A DealerAbort raised inside `compute` propagates to
        both callers.
        """
        if role not in ROLES:
            raise DealerError(f"unknown role {role!r}")
        with self._lock:
            if self._closed:
                raise DealerClosed("dealer shut down")
            idx_key = (op, role)
            index = self._arrivals.get(idx_key, 0)
            self._arrivals[idx_key] = index + 1
            call_key = (op, index)
            pending = self._pending.get(call_key)
            if pending is None:
                pending = _PendingCall()
                self._pending[call_key] = pending
            if role in pending.inputs:
                raise DealerError(f"duplicate {op!r} submission from {role}")
            pending.inputs[role] = payload
            ready = len(pending.inputs) == len(ROLES)
        if ready:
            record = DealerCall(op=op, index=index, inputs=dict(pending.inputs))
            try:
                pending.outputs = compute(dict(pending.inputs))
                record.outputs = dict(pending.outputs)
            except BaseException as exc:  # noqa: BLE001 - delivered to both parties
                pending.failure = exc
                record.error = repr(exc)
            finally:
                with self._lock:
                    self.audit_log.append(record)
                    self._pending.pop(call_key, None)
                pending.done.set()
        else:
            if not pending.done.wait(timeout=self._timeout):
                raise DealerError(f"timed out waiting for counterpart in {op!r}")
        if pending.failure is not None:
            raise pending.failure
        assert pending.outputs is not None
        return pending.outputs.get(role)
