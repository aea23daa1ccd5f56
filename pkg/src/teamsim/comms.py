"""Messages, threads, channel cost models, and forward-only buffered delivery.

A message sent at step t becomes readable at t+1, never sooner. The buffer
keeps pending messages in a canonical (sent_step, sender, id) order so that
delivery order is reproducible run to run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

MAX_REPLY_ROUNDS = 3

CHAT_BASE_MIN = 3
CHAT_WORDS_PER_MINUTE_BLOCK = 100
EMAIL_BASE_MIN = 9
EMAIL_WORDS_PER_MINUTE_BLOCK = 50
MEETING_FLOOR_MIN = 30
MEETING_PREP_MIN = 5
MEETING_PER_PARTICIPANT_MIN = 2


class CommError(ValueError):
    pass


class ThreadClosedError(CommError):
    pass


class ThreadDepthError(CommError):
    pass


class Channel(str, Enum):
    CHAT = "chat"
    EMAIL = "email"
    MEETING = "meeting"


class MessageType(str, Enum):
    HELP_REQUEST = "HELP_REQUEST"
    NEED_CLARIFICATION = "NEED_CLARIFICATION"
    PROGRESS_UPDATE = "PROGRESS_UPDATE"
    MEETING_INVITE = "MEETING_INVITE"
    MEETING_START = "MEETING_START"
    RESPONSE = "RESPONSE"


# Message types that expect a reply; progress updates are fire-and-forget.
REQUEST_TYPES = frozenset({MessageType.HELP_REQUEST, MessageType.NEED_CLARIFICATION})


def word_count(content: str) -> int:
    return len(content.split())


def communication_cost(channel: Channel, content_word_count: int,
                       participants: int = 1) -> float:
    """Hours a communication action costs its initiator (or all attendees).

    chat:    3 min base + 1 min per started 100 words
    email:   9 min base + 1 min per started 50 words
    meeting: max(30, 30 + 5 prep + 2 per participant) min
    """
    if content_word_count < 0:
        raise CommError(f"negative word count: {content_word_count}")
    if channel is Channel.CHAT:
        minutes = CHAT_BASE_MIN + math.ceil(content_word_count / CHAT_WORDS_PER_MINUTE_BLOCK)
    elif channel is Channel.EMAIL:
        minutes = EMAIL_BASE_MIN + math.ceil(content_word_count / EMAIL_WORDS_PER_MINUTE_BLOCK)
    else:
        if participants < 2:
            raise CommError("meeting needs participants")
        minutes = max(
            MEETING_FLOOR_MIN,
            MEETING_FLOOR_MIN + MEETING_PREP_MIN + MEETING_PER_PARTICIPANT_MIN * participants,
        )
    return minutes / 60.0


@dataclass
class Message:
    message_id: str
    thread_id: str
    from_agent: str
    to_agents: tuple[str, ...]
    channel: Channel
    message_type: MessageType
    content: str
    sent_step: int
    delivery_step: int = -1
    about_task: str | None = None
    meeting_id: str | None = None
    cost_hours: float = 0.0

    def __post_init__(self) -> None:
        if not self.to_agents:
            raise CommError("message needs recipients")
        if self.message_type in (MessageType.MEETING_INVITE, MessageType.MEETING_START):
            if self.meeting_id is None:
                raise CommError(f"{self.message_type.value} needs a meeting_id")

    @property
    def word_count(self) -> int:
        return word_count(self.content)


@dataclass
class Thread:
    thread_id: str
    root_message_id: str
    root_sender: str
    root_type: MessageType
    about_task: str | None
    participants: tuple[str, ...]
    reply_rounds: int = 0
    open: bool = True
    resolved: bool = False
    resolver_id: str | None = None

    def register_reply(self, from_agent: str) -> None:
        """Account for one reply round.

        A reply from anyone but the asker resolves a request thread, but the
        thread stays open until that reply lands and its alignment effect is
        applied; closing at send time would let the asker re-request in the
        one-step delivery gap. The depth cap closes immediately.
        """
        if not self.open:
            raise ThreadClosedError("thread closed")
        if self.reply_rounds >= MAX_REPLY_ROUNDS:
            raise ThreadDepthError("thread depth exceeded")
        self.reply_rounds += 1
        if from_agent != self.root_sender and self.root_type in REQUEST_TYPES:
            self.resolved = True
        if self.reply_rounds >= MAX_REPLY_ROUNDS:
            self.open = False

    def close(self) -> None:
        self.open = False


class MeetingStatus(str, Enum):
    PENDING = "pending"
    RUNNING = "running"
    HELD = "held"
    CANCELLED = "cancelled"


@dataclass
class Meeting:
    meeting_id: str
    organizer: str
    invitees: tuple[str, ...]
    about_task: str | None
    invite_step: int
    attending: set[str] = field(default_factory=set)
    responded: set[str] = field(default_factory=set)
    status: MeetingStatus = MeetingStatus.PENDING
    start_step: int | None = None
    duration_steps: int = 0
    cost_hours: float = 0.0
    attendees: tuple[str, ...] = ()


class CommBuffer:
    """Stages sent messages until their delivery step."""

    def __init__(self) -> None:
        self.pending: list[Message] = []

    def enqueue(self, message: Message, current_step: int) -> None:
        if message.sent_step != current_step:
            raise CommError(
                f"message sent_step {message.sent_step} != current step {current_step}"
            )
        message.delivery_step = current_step + 1
        self.pending.append(message)
        self.pending.sort(key=lambda m: (m.sent_step, m.from_agent, m.message_id))

    def pop_due(self, current_step: int) -> list[Message]:
        """Remove and return every message due at `current_step`, in order."""
        due = [m for m in self.pending if m.delivery_step <= current_step]
        self.pending = [m for m in self.pending if m.delivery_step > current_step]
        return due
