"""Simulated lossy message bus between agents.

Each message is independently delivered to every other agent with the
probability configured for its kind, arriving ``latency_decisions`` epochs
after it was sent. Drops are permanent: there are no acks or retries, since
the robustness under test is exactly how the search degrades when peers fall
silent. Delivery randomness is derived per (message, recipient) identity, so
the outcome for one recipient never depends on how many peers exist or on the
order they are processed in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LOCATION = "LOCATION"
OBSERVATION = "OBSERVATION"


@dataclass(frozen=True)
class CommsConfig:
    p_deliver_obs: float = 1.0
    p_deliver_loc: float = 1.0
    latency_decisions: int = 0
    failure_schedule: tuple[tuple[int, int], ...] = ()
    duplicate_prob: float = 0.0  # at-least-once delivery experiments
    record_trace: bool = False

    def __post_init__(self):
        for p in (self.p_deliver_obs, self.p_deliver_loc, self.duplicate_prob):
            if not 0 <= p <= 1:
                raise ValueError("probabilities must be in [0, 1]")
        if self.latency_decisions < 0:
            raise ValueError("latency must be nonnegative")


@dataclass(frozen=True)
class Message:
    origin: int
    seq: int
    kind: str
    payload: dict
    send_epoch: int

    @property
    def key(self) -> tuple[int, int]:
        return (self.origin, self.seq)


def default_delivery_sampler(seed: int):
    """Per-(message, recipient) Bernoulli source keyed by stable identities."""

    def sample(msg: Message, recipient: int, p: float, duplicate_prob: float) -> tuple[bool, bool]:
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=seed, spawn_key=(msg.origin, msg.seq, recipient))
        )
        delivered = bool(rng.random() < p)
        duplicated = bool(delivered and duplicate_prob > 0 and rng.random() < duplicate_prob)
        return delivered, duplicated

    return sample


class MessageBus:
    """Holds in-flight messages; mutated only by the episode orchestrator."""

    def __init__(self, cfg: CommsConfig, agent_ids: list[int], seed: int = 0, sampler=None):
        self.cfg = cfg
        self.agent_ids = list(agent_ids)
        self._sampler = sampler if sampler is not None else default_delivery_sampler(seed)
        self._pending: dict[int, list[tuple[int, int, int, Message]]] = {
            a: [] for a in self.agent_ids
        }
        self.trace: list[dict] = []

    def route(self, messages: list[Message], epoch: int) -> None:
        """Schedule each message toward every other agent.

        A recipient that is dead by the time it would read its inbox simply
        never collects, so in-flight traffic from an agent that later fails
        still arrives at the survivors.
        """
        for msg in messages:
            p = self.cfg.p_deliver_obs if msg.kind == OBSERVATION else self.cfg.p_deliver_loc
            for recipient in self.agent_ids:
                if recipient == msg.origin:
                    continue
                delivered, duplicated = self._sampler(msg, recipient, p, self.cfg.duplicate_prob)
                deliver_epoch = epoch + self.cfg.latency_decisions
                if delivered:
                    self._pending[recipient].append((deliver_epoch, msg.origin, msg.seq, msg))
                    if duplicated:
                        self._pending[recipient].append((deliver_epoch, msg.origin, msg.seq, msg))
                if self.cfg.record_trace:
                    self.trace.append(
                        {
                            "epoch": epoch,
                            "origin": msg.origin,
                            "seq": msg.seq,
                            "kind": msg.kind,
                            "recipient": recipient,
                            "delivered": delivered,
                            "deliver_epoch": deliver_epoch if delivered else None,
                        }
                    )

    def collect(self, agent_id: int, epoch: int) -> list[Message]:
        """Messages whose delivery epoch has passed, in (epoch, origin, seq) order."""
        queue = self._pending[agent_id]
        ready = sorted((t for t in queue if t[0] < epoch), key=lambda t: t[:3])
        self._pending[agent_id] = [t for t in queue if t[0] >= epoch]
        return [t[3] for t in ready]


def apply_failures(agents: dict[int, "object"], epoch: int, cfg: CommsConfig) -> list[int]:
    """Kill agents whose (id, epoch) entry is due; returns newly failed ids."""
    failed = []
    for agent_id, fail_epoch in cfg.failure_schedule:
        if fail_epoch == epoch and agent_id in agents and agents[agent_id].alive:
            agents[agent_id].alive = False
            failed.append(agent_id)
    return failed
