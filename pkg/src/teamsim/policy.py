"""Per-step decision making: context snapshots, intentions, and the policies.

Every policy is a pure function of its context: identical contexts yield
identical intentions, which is what makes non-LLM runs reproducible. The
deterministic heuristic policy approximates adaptive behavior with fixed,
configurable thresholds; the LLM policy delegates the same decision to an
external model and falls back to the heuristic on any failure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING

from .adapter import AdapterError, ChatCompletionAdapter
from .comms import Channel, Message, MessageType, word_count
from .model import AgentProfile, Role, order_key, skill_match_score
from . import prompts

if TYPE_CHECKING:  # pragma: no cover
    from .engine import World

# Engine defaults for the deterministic policy; the thresholds are exposed so
# runs can vary them without code changes.
AF_ATTENTION_THRESHOLD = 0.45
STUCK_STEP_THRESHOLD = 4
REPORT_MILESTONES = (0.5, 1.0)
FIXED_COMM_INTERVAL = 16
LONG_CONTENT_WORDS = 120


class IntentionKind(str, Enum):
    CONTINUE_TASK = "CONTINUE_TASK"
    CHECK_MESSAGES = "CHECK_MESSAGES"
    REQUEST_HELP = "REQUEST_HELP"
    NEED_CLARIFICATION = "NEED_CLARIFICATION"
    REPORT_PROGRESS = "REPORT_PROGRESS"
    SCHEDULE_MEETING = "SCHEDULE_MEETING"


@dataclass(frozen=True)
class Intention:
    kind: IntentionKind
    reasoning: str = ""
    task_hint: str | None = None
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class TaskAssignmentView:
    task_id: str
    description: str
    estimated_hours: float
    required_skills: frozenset[str]
    af: float
    hours_worked: float
    stuck_worked_steps: int
    progress: float
    pending_milestone: float | None
    ready: bool
    done: bool


@dataclass(frozen=True)
class TeammateView:
    agent_id: str
    role: Role
    skills: frozenset[str]
    busy: bool


@dataclass(frozen=True)
class LastAction:
    kind: str
    message_type: str | None
    step: int


@dataclass(frozen=True)
class PolicyContext:
    agent: AgentProfile
    step: int
    assigned: tuple[TaskAssignmentView, ...]
    inbox: tuple[Message, ...]
    team_view: tuple[TeammateView, ...]
    manager_id: str
    last_action: LastAction | None
    unanswered_inbound: tuple[str, ...]       # open request threads awaiting my reply
    open_outbound_tasks: frozenset[str]       # my unresolved requests, by task
    has_unprocessed_invite: bool
    has_meeting_start: bool
    blocked_collaborators: dict[str, tuple[str, ...]] = field(default_factory=dict)
    meeting_organized_tasks: frozenset[str] = frozenset()

    @property
    def active_task(self) -> TaskAssignmentView | None:
        """The task CONTINUE_TASK would work on: lowest-id ready assignment."""
        for view in self.assigned:
            if view.ready and not view.done:
                return view
        return None


def build_context(world: "World", agent_id: str) -> PolicyContext:
    """Snapshot exactly what the agent may know at the current step."""
    agent = world.agents[agent_id]
    assigned = []
    for task_id in world.assigned_tasks(agent_id):
        node = world.graph.node(task_id)
        stats = world.task_stats(agent_id, task_id)
        assigned.append(TaskAssignmentView(
            task_id=task_id,
            description=node.description,
            estimated_hours=node.estimated_hours,
            required_skills=node.required_skills,
            af=world.alignment.get(agent_id, task_id),
            hours_worked=stats.hours_worked,
            stuck_worked_steps=stats.stuck_worked_steps,
            progress=node.progress,
            pending_milestone=stats.pending_milestone,
            ready=node.status.value in ("ready", "in_progress"),
            done=node.done,
        ))

    inbox = tuple(world.inboxes[agent_id])
    team_view = tuple(
        TeammateView(
            agent_id=other.agent_id,
            role=other.role,
            skills=other.skills,
            busy=world.is_busy(other.agent_id),
        )
        for other in world.team_in_order()
        if other.agent_id != agent_id
    )

    return PolicyContext(
        agent=agent,
        step=world.clock.step,
        assigned=tuple(assigned),
        inbox=inbox,
        team_view=team_view,
        manager_id=world.manager_id,
        last_action=world.last_actions.get(agent_id),
        unanswered_inbound=tuple(world.unanswered_inbound(agent_id)),
        open_outbound_tasks=frozenset(world.open_outbound_tasks(agent_id)),
        has_unprocessed_invite=world.has_unprocessed_invite(agent_id),
        has_meeting_start=any(
            m.message_type is MessageType.MEETING_START for m in inbox
        ),
        blocked_collaborators=world.blocked_collaborators(agent_id),
        meeting_organized_tasks=frozenset(world.organized_meeting_tasks(agent_id)),
    )


# -- policies ---------------------------------------------------------------


class Policy:
    name = "base"

    def decide(self, context: PolicyContext) -> Intention:
        raise NotImplementedError


class NoCommPolicy(Policy):
    """Agents work their assignments and never communicate."""

    name = "no_comm"

    def decide(self, context: PolicyContext) -> Intention:
        return Intention(IntentionKind.CONTINUE_TASK, reasoning="no-communication policy")


class FixedStepsPolicy(Policy):
    """Workers report on a fixed cadence, then ask for help on their weakest task."""

    name = "fixed_steps"

    def __init__(self, interval: int = FIXED_COMM_INTERVAL) -> None:
        self.interval = interval

    def decide(self, context: PolicyContext) -> Intention:
        if context.agent.role is Role.WORKER:
            open_tasks = [v for v in context.assigned if not v.done]
            last = context.last_action
            if (
                last is not None
                and last.kind == "message_sent"
                and last.message_type == MessageType.PROGRESS_UPDATE.value
                and last.step > 0
                and last.step % self.interval == 0
                and open_tasks
            ):
                weakest = min(open_tasks, key=lambda v: (v.af, order_key(v.task_id)))
                if weakest.task_id not in context.open_outbound_tasks:
                    return Intention(
                        IntentionKind.REQUEST_HELP,
                        reasoning="scheduled follow-up on lowest-alignment task",
                        task_hint=weakest.task_id,
                    )
            if context.step > 0 and context.step % self.interval == 0 and open_tasks:
                return Intention(
                    IntentionKind.REPORT_PROGRESS,
                    reasoning="scheduled progress report",
                    task_hint=open_tasks[0].task_id,
                )
        if context.unanswered_inbound or context.has_unprocessed_invite:
            return Intention(IntentionKind.CHECK_MESSAGES, reasoning="inbox has requests")
        return Intention(IntentionKind.CONTINUE_TASK, reasoning="between scheduled check-ins")


class HeuristicPolicy(Policy):
    """Deterministic rules approximating context-driven communication choices."""

    name = "c2c_heuristic"

    def __init__(self, af_threshold: float = AF_ATTENTION_THRESHOLD,
                 stuck_threshold: int = STUCK_STEP_THRESHOLD) -> None:
        self.af_threshold = af_threshold
        self.stuck_threshold = stuck_threshold

    def decide(self, context: PolicyContext) -> Intention:
        if context.has_unprocessed_invite or context.has_meeting_start:
            return Intention(IntentionKind.CHECK_MESSAGES, reasoning="meeting traffic in inbox")
        if context.unanswered_inbound:
            return Intention(IntentionKind.CHECK_MESSAGES, reasoning="unanswered request in inbox")

        active = context.active_task
        if active is not None and active.task_id not in context.open_outbound_tasks:
            if (
                active.af < self.af_threshold
                and active.hours_worked > 0
                and active.stuck_worked_steps >= self.stuck_threshold
            ):
                return Intention(
                    IntentionKind.REQUEST_HELP,
                    reasoning=(
                        f"alignment {active.af:.2f} stalled for "
                        f"{active.stuck_worked_steps} worked steps"
                    ),
                    task_hint=active.task_id,
                )
            if active.af < self.af_threshold and active.hours_worked == 0:
                return Intention(
                    IntentionKind.NEED_CLARIFICATION,
                    reasoning=f"starting at alignment {active.af:.2f}",
                    task_hint=active.task_id,
                )

        for view in context.assigned:
            blocked = context.blocked_collaborators.get(view.task_id, ())
            if len(blocked) >= 2 and view.task_id not in context.meeting_organized_tasks:
                return Intention(
                    IntentionKind.SCHEDULE_MEETING,
                    reasoning=f"{len(blocked)} collaborators blocked on {view.task_id}",
                    task_hint=view.task_id,
                )

        for view in context.assigned:
            if view.pending_milestone is not None:
                return Intention(
                    IntentionKind.REPORT_PROGRESS,
                    reasoning=f"crossed {view.pending_milestone:.0%} on {view.task_id}",
                    task_hint=view.task_id,
                )

        return Intention(IntentionKind.CONTINUE_TASK, reasoning="no trigger fired")


class LlmPolicy(Policy):
    """Delegates the intention choice to an external model; heuristic fallback."""

    name = "c2c_llm"

    def __init__(self, adapter: ChatCompletionAdapter,
                 fallback: HeuristicPolicy | None = None) -> None:
        self.adapter = adapter
        self.fallback = fallback or HeuristicPolicy()

    def decide(self, context: PolicyContext) -> Intention:
        try:
            parsed = self.adapter.complete_json(self._messages(context))
            kind = IntentionKind(str(parsed.get("intention", "")).strip().upper())
            return Intention(kind, reasoning=str(parsed.get("reasoning", "")))
        except (AdapterError, ValueError) as exc:
            fallback = self.fallback.decide(context)
            warning = f"intention adapter fallback: {exc}"
            return Intention(
                fallback.kind,
                reasoning=fallback.reasoning,
                task_hint=fallback.task_hint,
                warnings=fallback.warnings + (warning,),
            )

    @staticmethod
    def _messages(context: PolicyContext) -> list[dict]:
        lines = []
        for view in context.assigned[:3]:
            lines.append(
                f"- {view.task_id}: {view.description} | progress "
                f"{view.progress:.0%} | alignment {view.af:.2f} | "
                f"{view.hours_worked:.2f}/{view.estimated_hours:.2f} hours"
            )
        tasks_block = "\n".join(lines) if lines else "- (no assigned tasks)"
        counts: dict[str, int] = {}
        for message in context.inbox:
            counts[message.message_type.value] = counts.get(message.message_type.value, 0) + 1
        inbox_desc = ", ".join(f"{k}: {v}" for k, v in sorted(counts.items())) or "empty"
        message_info = (
            f"Inbox: {inbox_desc}. Unanswered requests awaiting you: "
            f"{len(context.unanswered_inbound)}."
        )
        last = context.last_action
        last_info = (
            f"Last action: {last.kind}"
            + (f" ({last.message_type})" if last and last.message_type else "")
            + f" at step {last.step}."
            if last
            else "Last action: none."
        )
        return prompts.intention_messages(
            context.agent.name, context.agent.role.value, tasks_block,
            message_info, last_info,
        )


def build_policy(name: str, adapter: ChatCompletionAdapter | None = None) -> Policy:
    if name == "no_comm":
        return NoCommPolicy()
    if name == "fixed_steps":
        return FixedStepsPolicy()
    if name == "c2c_heuristic":
        return HeuristicPolicy()
    if name == "c2c_llm":
        if adapter is None:
            raise ValueError("c2c_llm policy requires an adapter")
        return LlmPolicy(adapter)
    raise ValueError(f"unknown policy: {name}")


# -- recipients, channels, content ------------------------------------------


def select_recipients(context: PolicyContext, kind: IntentionKind,
                      about_task: str | None) -> list[str]:
    """Who a communicating intention addresses, with deterministic tie-breaks."""
    if kind in (IntentionKind.NEED_CLARIFICATION, IntentionKind.REPORT_PROGRESS):
        return [context.manager_id]
    if kind is IntentionKind.REQUEST_HELP:
        required: frozenset[str] = frozenset()
        for view in context.assigned:
            if view.task_id == about_task:
                required = view.required_skills
                break
        candidates = [
            mate for mate in context.team_view
            if mate.role is Role.WORKER and not mate.busy
        ]
        scored = [
            (skill_match_score(AgentProfile(mate.agent_id, mate.agent_id, mate.role,
                                            mate.skills), required), mate.agent_id)
            for mate in candidates
        ]
        positive = [(s, a) for s, a in scored if s > 0]
        if positive:
            best = max(s for s, _ in positive)
            winner = min((a for s, a in positive if s == best), key=order_key)
            return [winner]
        return [context.manager_id]
    if kind is IntentionKind.SCHEDULE_MEETING:
        blocked = context.blocked_collaborators.get(about_task or "", ())
        recipients = [context.manager_id] + [a for a in blocked]
        seen: set[str] = set()
        ordered = []
        for agent_id in recipients:
            if agent_id not in seen and agent_id != context.agent.agent_id:
                seen.add(agent_id)
                ordered.append(agent_id)
        return ordered
    raise ValueError(f"{kind.value} is not a communicating intention")


def select_channel(kind: IntentionKind, content: str) -> Channel:
    if kind is IntentionKind.SCHEDULE_MEETING:
        return Channel.MEETING
    if kind is IntentionKind.REPORT_PROGRESS:
        return Channel.EMAIL
    if kind is IntentionKind.REQUEST_HELP and word_count(content) >= LONG_CONTENT_WORDS:
        return Channel.EMAIL
    return Channel.CHAT


def compose_message(context: PolicyContext, kind: IntentionKind,
                    view: TaskAssignmentView) -> str:
    """Deterministic content for an outbound communication."""
    if kind is IntentionKind.NEED_CLARIFICATION:
        return (
            f"Clarification needed on {view.task_id}: {view.description} "
            f"I have not started yet and my alignment is {view.af:.2f}. "
            "What are the concrete acceptance criteria, the constraints I must "
            "respect, and the expected interface?"
        )
    if kind is IntentionKind.REQUEST_HELP:
        own = ", ".join(sorted(context.agent.skills))
        required = ", ".join(sorted(view.required_skills)) or "unspecified"
        gap = ", ".join(sorted(view.required_skills - context.agent.skills)) or "none"
        return (
            f"Help needed on {view.task_id}. Scope: {view.description} "
            f"I have worked {view.hours_worked:.2f} hours and progress stands at "
            f"{view.progress:.0%} with alignment {view.af:.2f}, which is holding my "
            "effective output well below plan. The required skills are "
            f"{required}; my own skills are {own}, so the gap is {gap}. "
            "Could you walk me through the recommended approach step by step, "
            "point me to any prior art or reference implementation we already "
            "have in the team, and flag the pitfalls you know about from similar "
            "work? Specifically I need: (1) how to structure the first concrete "
            "deliverable, (2) which interfaces or contracts I must not break, "
            "and (3) a sanity check on my current assumptions before I invest "
            "more hours. A short written answer is fine; detail matters more "
            "than polish here."
        )
    if kind is IntentionKind.REPORT_PROGRESS:
        status = (
            "Subtask finished; ready for the next assignment."
            if view.progress >= 1.0
            else "On track; no blockers beyond the noted alignment."
        )
        return (
            f"Progress report for {view.task_id}: {view.progress:.0%} complete, "
            f"{view.hours_worked:.2f} of {view.estimated_hours:.2f} hours logged, "
            f"alignment {view.af:.2f}. {status}"
        )
    if kind is IntentionKind.SCHEDULE_MEETING:
        return (
            f"Coordination meeting about {view.task_id}: downstream work is "
            "blocked on it. Agenda: sequencing, interface contracts, handoffs."
        )
    raise ValueError(f"{kind.value} has no message content")


def compose_reply(task_id: str | None, root_type: MessageType,
                  replier: AgentProfile) -> str:
    """Deterministic reply content, keyed by what the thread asked for.

    A clarification answer is a full scope brief: it pins acceptance criteria,
    constraints, interfaces, sequencing, and escalation, so it goes out as a
    long-form message. Help answers are short peer pointers.
    """
    task_label = task_id or "your task"
    if root_type is MessageType.NEED_CLARIFICATION:
        return (
            f"Re {task_label}: scope brief follows. Objective: deliver exactly what "
            "the subtask description states, interpreted narrowly; anything the "
            "description does not name is out of scope until we agree otherwise. "
            "Acceptance criteria: the deliverable covers the described scope end "
            "to end, passes its own verification, and leaves neighboring behavior "
            "unchanged unless the description says otherwise; partial work counts "
            "only once it is integrated and demonstrable. Constraints: stay within "
            "the estimated effort envelope, prefer the established patterns of "
            "this team over new abstractions, keep every interface you expose "
            "backward compatible, and take no dependencies beyond what the team "
            "already uses. Interfaces: consume the inputs named in the task "
            "description as they stand today; if you must extend one, write the "
            "extension down and circulate it before building on top of it. "
            "Sequencing: land the smallest end-to-end slice first, then widen "
            "coverage; plan review checkpoints at half and at full completion. "
            "Quality bar: verification accompanies the change, edge cases named "
            "in the description are exercised, and failure paths degrade loudly "
            "rather than silently. Risks to watch: hidden coupling to neighboring "
            "workstreams, assumptions about data shape that nobody has confirmed, "
            "and effort sinks in polishing before the slice works at all. "
            "Escalation: if a blocker costs you more than a few hours, raise it "
            "to me instead of burning time on it; if you need a skill the task "
            "lists and you lack, ask the teammate who has it directly. Reporting: "
            "send progress notes at the usual milestones so the roll-up stays "
            "accurate. Definition of done: the subtask is complete when its "
            "estimated effort has produced the described outcome, verification "
            "passes, and the progress roll-up reflects it without manual "
            "correction from me. This brief is the authoritative scope statement "
            "for the subtask; where it conflicts with informal conversation, the "
            "brief wins. Proceed on this basis and flag anything that still "
            "reads ambiguous to you."
        )
    if root_type is MessageType.HELP_REQUEST:
        skills = ", ".join(sorted(replier.skills)) or "the relevant area"
        return (
            f"Re {task_label}: suggested approach follows. Start from the smallest "
            f"end-to-end slice, reuse our existing patterns for {skills}, and "
            "validate against the estimate before expanding. Known pitfalls: "
            "hidden coupling and unverified assumptions; check both, then iterate."
        )
    return f"Re {task_label}: acknowledged."


def reply_channel(content: str, root_channel: Channel) -> Channel:
    """Long-form answers travel by email, short ones by chat.

    Mirrors the length rule used for initiations: a reply is a detailed
    explanation once it reaches LONG_CONTENT_WORDS, whatever channel the
    request used. Meeting threads never take replies.
    """
    if word_count(content) >= LONG_CONTENT_WORDS:
        return Channel.EMAIL
    if root_channel is Channel.MEETING:
        return Channel.CHAT
    return Channel.CHAT
