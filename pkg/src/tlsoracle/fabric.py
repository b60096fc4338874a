"""In-process network fabric: ordered reliable channels between named parties.

Every send acquires a global lock, gets the next sequence index, runs the
installed interceptors (the tamper harness), and lands in the destination
FIFO. The protocols on top are strictly turn-based, so thread scheduling
cannot reorder anything observable: transcripts come out identical run to
run, which is what makes the round-robin test mode and the free-running mode
the same code path.

Parties are plain functions executed in threads by `run_parties`; a party
talks through the `PartyEndpoint` facade (send/recv by peer name). When any
party aborts, the fabric is poisoned so that every blocked recv raises
ChannelClosed immediately instead of timing out.
"""

from __future__ import annotations

import queue
import threading
from dataclasses import dataclass, field
from typing import Callable

DEFAULT_TIMEOUT = 60.0

_CLOSED = object()


class FabricError(Exception):
    pass


class ChannelTimeout(FabricError):
    pass


class ChannelClosed(FabricError):
    """The fabric was shut down (normally because a peer aborted)."""


class PartyFailed(FabricError):
    """Raised by run_parties when any party thread raised; carries the name."""

    def __init__(self, party: str, cause: BaseException):
        super().__init__(f"party {party!r} failed: {cause!r}")
        self.party = party
        self.cause = cause


@dataclass(frozen=True)
class TranscriptEntry:
    index: int
    sender: str
    receiver: str
    payload: bytes


# An interceptor sees each entry before delivery and returns the list of
# entries to actually deliver: [] drops, [entry] passes, and multiple entries
# inject (e.g. releasing a held message for a reorder).
Interceptor = Callable[[TranscriptEntry], list[TranscriptEntry]]


@dataclass
class Fabric:
    timeout: float = DEFAULT_TIMEOUT
    transcript: list[TranscriptEntry] = field(default_factory=list)
    _lock: threading.Lock = field(default_factory=threading.Lock)
    _queues: dict[tuple[str, str], queue.Queue] = field(default_factory=dict)
    _interceptors: list[Interceptor] = field(default_factory=list)
    _closeables: list = field(default_factory=list)
    _counter: int = 0
    _closed: bool = False

    def _queue(self, sender: str, receiver: str) -> queue.Queue:
        with self._lock:
            key = (sender, receiver)
            if key not in self._queues:
                q: queue.Queue = queue.Queue()
                if self._closed:
                    q.put(_CLOSED)
                self._queues[key] = q
            return self._queues[key]

    def add_interceptor(self, fn: Interceptor) -> None:
        self._interceptors.append(fn)

    def register_closeable(self, obj) -> None:
        """Objects with a close() method (dealers) shut down with the fabric,
        so a party abort also wakes anyone parked inside a dealer call."""
        self._closeables.append(obj)

    def close(self) -> None:
        """Poison every channel so blocked receivers fail fast."""
        with self._lock:
            self._closed = True
            for q in self._queues.values():
                q.put(_CLOSED)
            closeables = list(self._closeables)
        for obj in closeables:
            obj.close()

    def send(self, sender: str, receiver: str, payload: bytes) -> None:
        self._queue(sender, receiver)  # ensure it exists outside the lock below
        with self._lock:
            if self._closed:
                raise ChannelClosed(f"{sender!r} sending to {receiver!r} after shutdown")
            entry = TranscriptEntry(self._counter, sender, receiver, payload)
            self._counter += 1
            deliveries = [entry]
            for fn in self._interceptors:
                next_round: list[TranscriptEntry] = []
                for item in deliveries:
                    next_round.extend(fn(item))
                deliveries = next_round
            for item in deliveries:
                self.transcript.append(item)
                key = (item.sender, item.receiver)
                if key not in self._queues:
                    self._queues[key] = queue.Queue()
                self._queues[key].put(item.payload)

    def recv(self, receiver: str, sender: str) -> bytes:
        q = self._queue(sender, receiver)
        try:
            payload = q.get(timeout=self.timeout)
        except queue.Empty:
            raise ChannelTimeout(f"{receiver!r} timed out waiting for {sender!r}") from None
        if payload is _CLOSED:
            q.put(_CLOSED)  # keep the poison for any other reader
            raise ChannelClosed(f"{receiver!r}: channel from {sender!r} closed")
        return payload

    def endpoint(self, name: str) -> "PartyEndpoint":
        return PartyEndpoint(self, name)

    def entries_seen_by(self, party: str) -> list[TranscriptEntry]:
        """The messages in this party's view: everything it sent or received."""
        return [e for e in self.transcript if party in (e.sender, e.receiver)]


@dataclass
class PartyEndpoint:
    fabric: Fabric
    name: str

    def send(self, to: str, payload: bytes) -> None:
        self.fabric.send(self.name, to, payload)

    def recv(self, frm: str) -> bytes:
        return self.fabric.recv(self.name, frm)

    def channel(self, peer: str) -> "DuplexChannel":
        return DuplexChannel(self, peer)


class DuplexChannel:
    """A two-endpoint view bound to one peer, for protocol code that only
    ever talks to a single counterparty."""

    def __init__(self, endpoint: PartyEndpoint, peer: str):
        self._endpoint = endpoint
        self._peer = peer

    def send(self, payload: bytes) -> None:
        self._endpoint.send(self._peer, payload)

    def recv(self) -> bytes:
        return self._endpoint.recv(self._peer)


def run_parties(
    fabric: Fabric,
    parties: dict[str, Callable[[PartyEndpoint], object]],
    daemons: frozenset[str] | set[str] = frozenset(),
) -> dict[str, object]:
    """Run each party function in its own thread; returns their results.

    Parties named in `daemons` (e.g. a server engine loop) are not waited
    for: once the ordinary parties finish, the fabric is closed, which kicks
    the daemons out of their blocking receives. The first real exception
    (not the shutdown echoes of the other threads) is re-raised wrapped in
    PartyFailed with the offending party's name.
    """
    results: dict[str, object] = {}
    errors: list[tuple[str, BaseException]] = []
    error_lock = threading.Lock()

    def runner(name: str, fn: Callable[[PartyEndpoint], object]) -> None:
        try:
            results[name] = fn(fabric.endpoint(name))
        except BaseException as exc:  # noqa: BLE001 - repropagated below
            with error_lock:
                errors.append((name, exc))
            fabric.close()

    threads = {
        name: threading.Thread(target=runner, args=(name, fn), daemon=True, name=f"party-{name}")
        for name, fn in parties.items()
    }
    for t in threads.values():
        t.start()
    for name, t in threads.items():
        if name not in daemons:
            t.join(timeout=fabric.timeout * 2)
    fabric.close()
    for name in daemons:
        threads[name].join(timeout=5.0)

    from .rendezvous import DealerClosed

    shutdown_echo = (ChannelClosed, DealerClosed)
    real = [(n, e) for n, e in errors if not isinstance(e, shutdown_echo)]
    if real:
        name, exc = real[0]
        raise PartyFailed(name, exc) from exc
    if errors:
        name, exc = errors[0]
        raise PartyFailed(name, exc) from exc
    return results
