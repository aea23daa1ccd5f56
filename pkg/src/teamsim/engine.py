"""The synchronized timestep engine.

Each step runs a fixed phase order: deliver due messages, convene due
meetings, collect one intention per idle agent, resolve intentions into
actions, execute one step of every active action, apply queued alignment
deltas, then flush newly sent messages for next-step delivery. Reordering any
phase breaks the reproducibility guarantees, so all mutation happens here.

Every agent contributes exactly one action-step per step: work, communication
progress, meeting attendance, or an explicit idle transition.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

from .adapter import AdapterError, ChatCompletionAdapter
from .alignment import (AlignmentState, DeltaEvaluation, effective_progress,
                        normalize_reported_alignment, rule_based_delta)
from .comms import (Channel, CommBuffer, Meeting, MeetingStatus, Message,
                    MessageType, REQUEST_TYPES, Thread, communication_cost,
                    word_count)
from .model import (AgentProfile, Scenario, SimClock, hours_to_steps, order_key,
                    validate_scenario)
from .planner import EvenPlanner, LlmPlanner, assign
from .policy import (Intention, IntentionKind, LastAction, Policy, PolicyContext,
                     REPORT_MILESTONES, build_context, build_policy,
                     compose_message, compose_reply, reply_channel,
                     select_channel, select_recipients)
from .taskgraph import TaskGraph
from .trace import TraceLog
from . import prompts

# An invited agent that has not accepted within this many steps of the invite
# being sent no longer delays the meeting; it convenes or cancels without them.
RSVP_GRACE_STEPS = 6


class ActionKind(str, Enum):
    WORK = "work"
    COMMUNICATE = "communicate"
    REPLY = "reply"
    MEETING = "meeting"
    IDLE = "idle"


@dataclass
class ActiveAction:
    kind: ActionKind
    target: str | None
    remaining: int
    total: int
    payload: dict = field(default_factory=dict)


@dataclass
class AgentTaskStats:
    hours_worked: float = 0.0
    stuck_worked_steps: int = 0
    pending_milestone: float | None = None
    reported_milestones: set[float] = field(default_factory=set)


@dataclass
class PendingAfEvaluation:
    agent_id: str
    task_id: str
    cause_id: str
    root_type: MessageType
    original_content: str | None = None
    reply_content: str = ""
    from_agent: str = ""
    thread_id: str | None = None


class RuleBasedEvaluator:
    name = "rule_based"

    def evaluate(self, world: "World", pending: PendingAfEvaluation
                 ) -> tuple[DeltaEvaluation, str | None]:
        return rule_based_delta(pending.root_type), None


class LlmEvaluator:
    """Asks the external model how much a reply improved task understanding."""

    name = "llm"

    def __init__(self, adapter: ChatCompletionAdapter) -> None:
        self.adapter = adapter

    def evaluate(self, world: "World", pending: PendingAfEvaluation
                 ) -> tuple[DeltaEvaluation, str | None]:
        if pending.root_type not in REQUEST_TYPES:
            # Meetings and updates keep their fixed table impact.
            return rule_based_delta(pending.root_type), None
        node = world.graph.node(pending.task_id)
        old_af = world.alignment.get(pending.agent_id, pending.task_id)
        stats = world.task_stats(pending.agent_id, pending.task_id)
        messages = prompts.evaluation_messages(
            task_id=pending.task_id,
            task_description=node.description,
            required_skills=sorted(node.required_skills),
            actual_hours=stats.hours_worked,
            estimated_hours=node.estimated_hours,
            current_alignment=old_af,
            message_type=MessageType.RESPONSE.value,
            from_agent=pending.from_agent,
            original_request=pending.original_content,
            reply_content=pending.reply_content,
        )
        try:
            parsed = self.adapter.complete_json(messages)
            reported = float(parsed["new_alignment_factor"])
            return (
                normalize_reported_alignment(old_af, reported,
                                             str(parsed.get("reasoning", ""))),
                None,
            )
        except (AdapterError, KeyError, TypeError, ValueError) as exc:
            return rule_based_delta(pending.root_type), f"evaluator fallback: {exc}"


def build_evaluator(name: str, adapter: ChatCompletionAdapter | None = None):
    if name == "rule_based":
        return RuleBasedEvaluator()
    if name == "llm":
        if adapter is None:
            raise ValueError("llm evaluator requires an adapter")
        return LlmEvaluator(adapter)
    raise ValueError(f"unknown evaluator: {name}")


class World:
    """All mutable run state; mutated only by the step driver."""

    def __init__(self, scenario: Scenario) -> None:
        self.scenario = scenario
        self.clock = SimClock()
        ordered = sorted(scenario.team, key=lambda a: order_key(a.agent_id))
        self.agents: dict[str, AgentProfile] = {a.agent_id: a for a in ordered}
        self.agent_order: list[str] = [a.agent_id for a in ordered]
        self.manager_id = scenario.manager.agent_id

        self.graph = TaskGraph()
        for i, task in enumerate(scenario.tasks):
            self.graph.add_root(f"T{i + 1}", task.description,
                                task.estimated_hours, task.required_skills)

        self.alignment = AlignmentState()
        self.buffer = CommBuffer()
        self.inboxes: dict[str, list[Message]] = {a: [] for a in self.agent_order}
        self.threads: dict[str, Thread] = {}
        self.thread_replied: dict[str, set[str]] = {}
        self.thread_root: dict[str, Message] = {}
        self.meetings: dict[str, Meeting] = {}
        self.assignments: dict[str, list[str]] = {a: [] for a in self.agent_order}
        self.active: dict[str, ActiveAction] = {}
        self.stats: dict[tuple[str, str], AgentTaskStats] = {}
        self.last_actions: dict[str, LastAction] = {}
        self.staged: list[Message] = []
        self.pending_af: list[PendingAfEvaluation] = []
        self.trace = TraceLog()
        self.comm_cost_total = 0.0
        self.completion_steps: dict[str, int] = {}
        self.planned = False
        self._organized: dict[str, set[str]] = {a: set() for a in self.agent_order}
        self._message_counter = 0
        self._thread_counter = 0
        self._meeting_counter = 0

    # -- id factories ------------------------------------------------------

    def next_message_id(self) -> str:
        self._message_counter += 1
        return f"m{self._message_counter:05d}"

    def next_thread_id(self) -> str:
        self._thread_counter += 1
        return f"th{self._thread_counter:04d}"

    def next_meeting_id(self) -> str:
        self._meeting_counter += 1
        return f"mt{self._meeting_counter:03d}"

    # -- views used by policy context ---------------------------------------

    def team_in_order(self) -> list[AgentProfile]:
        return [self.agents[a] for a in self.agent_order]

    def assigned_tasks(self, agent_id: str) -> list[str]:
        return sorted(self.assignments.get(agent_id, []), key=order_key)

    def task_stats(self, agent_id: str, task_id: str) -> AgentTaskStats:
        key = (agent_id, task_id)
        if key not in self.stats:
            self.stats[key] = AgentTaskStats()
        return self.stats[key]

    def is_busy(self, agent_id: str) -> bool:
        return agent_id in self.active

    def unanswered_inbound(self, agent_id: str) -> list[str]:
        """Open request threads whose root reached this agent, oldest first."""
        found = []
        for msg in self.inboxes[agent_id]:
            if msg.message_type not in REQUEST_TYPES:
                continue
            thread = self.threads.get(msg.thread_id)
            if thread is None or not thread.open:
                continue
            if msg.from_agent == agent_id:
                continue
            if agent_id in self.thread_replied.get(msg.thread_id, set()):
                continue
            found.append((msg.delivery_step, msg.message_id, msg.thread_id))
        found.sort()
        return [tid for _, _, tid in found]

    def open_outbound_tasks(self, agent_id: str) -> set[str]:
        return {
            t.about_task
            for t in self.threads.values()
            if t.open and t.root_sender == agent_id and t.about_task
        }

    def pending_invites(self, agent_id: str) -> list[tuple[int, str, str]]:
        """Delivered, unanswered meeting invites: (delivery, message_id, meeting)."""
        out = []
        for msg in self.inboxes[agent_id]:
            if msg.message_type is not MessageType.MEETING_INVITE:
                continue
            meeting = self.meetings.get(msg.meeting_id or "")
            if meeting is None or meeting.status is not MeetingStatus.PENDING:
                continue
            if agent_id in meeting.responded:
                continue
            out.append((msg.delivery_step, msg.message_id, meeting.meeting_id))
        out.sort()
        return out

    def has_unprocessed_invite(self, agent_id: str) -> bool:
        return bool(self.pending_invites(agent_id))

    def blocked_collaborators(self, agent_id: str) -> dict[str, tuple[str, ...]]:
        """Per own task: assignees of pending sibling tasks that depend on it."""
        result: dict[str, tuple[str, ...]] = {}
        for task_id in self.assigned_tasks(agent_id):
            node = self.graph.node(task_id)
            if node.done or node.parent_id is None:
                continue
            blocked = set()
            for sibling in self.graph.children(node.parent_id):
                if (
                    task_id in sibling.dependencies
                    and not sibling.done
                    and sibling.status.value == "pending"
                    and sibling.assignee
                    and sibling.assignee != agent_id
                ):
                    blocked.add(sibling.assignee)
            if blocked:
                result[task_id] = tuple(sorted(blocked, key=order_key))
        return result

    def organized_meeting_tasks(self, agent_id: str) -> set[str]:
        return set(self._organized.get(agent_id, set()))


@dataclass
class SimResult:
    scenario: Scenario
    world: World
    trace: TraceLog
    completion_steps: dict[str, int | None]
    final_step: int
    completed: bool
    comm_cost_hours: float

    def completion_hours(self, root_id: str) -> float | None:
        boundary = self.completion_steps.get(root_id)
        if boundary is None:
            return None
        return boundary * self.world.clock.hours_per_step


class Simulation:
    """Drives one scenario to completion or the step cap."""

    def __init__(self, scenario: Scenario, policy: Policy | None = None,
                 planner=None, evaluator=None,
                 adapter: ChatCompletionAdapter | None = None,
                 max_steps: int | None = None,
                 parallel_decide: bool = False) -> None:
        scenario = validate_scenario(scenario)
        self.world = World(scenario)
        if max_steps is not None:
            self.world.clock.max_steps = max_steps
        self.policy = policy or build_policy(scenario.policy_name, adapter)
        if planner is not None:
            self.planner = planner
        elif scenario.policy_name == "c2c_llm" and adapter is not None:
            self.planner = LlmPlanner(adapter)
        else:
            self.planner = EvenPlanner()
        self.evaluator = evaluator or build_evaluator(scenario.evaluator_name, adapter)
        self.parallel_decide = parallel_decide

    # -- public API ----------------------------------------------------------

    def run(self) -> SimResult:
        world = self.world
        while world.clock.step < world.clock.max_steps and not world.graph.all_roots_done():
            self.step()
        for message in world.buffer.pending:
            world.trace.append(world.clock.step, "warning", {
                "source": "delivery",
                "detail": f"undelivered at run end: {message.message_id}",
            })
        completion: dict[str, int | None] = {
            root: world.completion_steps.get(root) for root in world.graph.roots
        }
        return SimResult(
            scenario=world.scenario,
            world=world,
            trace=world.trace,
            completion_steps=completion,
            final_step=world.clock.step,
            completed=world.graph.all_roots_done(),
            comm_cost_hours=world.comm_cost_total,
        )

    def step(self) -> None:
        world = self.world
        t = world.clock.step

        self._deliver_due(t)
        self._convene_meetings(t)

        idle = [a for a in world.agent_order if a not in world.active]
        contexts = {a: build_context(world, a) for a in idle}
        needs_policy = {
            a: ctx for a, ctx in contexts.items()
            if not (a == world.manager_id and not world.planned)
        }
        intentions = self._decide(needs_policy)
        for agent_id in idle:
            intention = intentions.get(agent_id) or Intention(
                IntentionKind.CONTINUE_TASK, reasoning="decomposition pending")
            for note in intention.warnings:
                world.trace.append(t, "warning", {"source": "policy", "detail": note})
            self._resolve_intention(agent_id, contexts[agent_id], intention, t)
            action = world.active.get(agent_id)
            if action is not None:
                world.agents[agent_id].busy_until_step = t + action.remaining

        self._execute_actions(t)
        self._apply_pending_af(t)
        self._flush_staged(t)
        world.clock.advance()

    # -- phases ---------------------------------------------------------------

    def _deliver_due(self, t: int) -> None:
        world = self.world
        for message in world.buffer.pop_due(t):
            for recipient in message.to_agents:
                world.inboxes[recipient].append(message)
                world.trace.append(t, "message_delivered", {
                    "message_id": message.message_id,
                    "to": recipient,
                    "from": message.from_agent,
                    "type": message.message_type.value,
                    "thread_id": message.thread_id,
                })
            if message.message_type is MessageType.RESPONSE:
                self._on_reply_delivered(message)

    def _on_reply_delivered(self, message: Message) -> None:
        """A delivered resolving reply queues an alignment evaluation."""
        world = self.world
        thread = world.threads.get(message.thread_id)
        if thread is None or not thread.resolved:
            return
        if message.message_id != thread.resolver_id:
            return
        asker = thread.root_sender
        task_id = thread.about_task
        if task_id is None or asker not in message.to_agents:
            thread.close()
            return
        if not world.alignment.initialized(asker, task_id) or world.graph.node(task_id).done:
            thread.close()
            return
        root = world.thread_root.get(message.thread_id)
        world.pending_af.append(PendingAfEvaluation(
            agent_id=asker,
            task_id=task_id,
            cause_id=message.message_id,
            root_type=thread.root_type,
            original_content=root.content if root else None,
            reply_content=message.content,
            from_agent=message.from_agent,
            thread_id=message.thread_id,
        ))

    def _convene_meetings(self, t: int) -> None:
        world = self.world
        for meeting_id in sorted(world.meetings, key=order_key):
            meeting = world.meetings[meeting_id]
            if meeting.status is not MeetingStatus.PENDING:
                continue
            if t < meeting.invite_step + 2:
                continue
            expected = {meeting.organizer} | set(meeting.attending)
            everyone_answered = set(meeting.responded) >= set(meeting.invitees)
            grace_over = t >= meeting.invite_step + RSVP_GRACE_STEPS
            if any(world.is_busy(a) for a in expected):
                continue
            if len(expected) >= 2 and (everyone_answered or grace_over):
                self._start_meeting(meeting, t)
            elif everyone_answered or grace_over:
                meeting.status = MeetingStatus.CANCELLED
                world.trace.append(t, "warning", {
                    "source": "meeting",
                    "detail": f"{meeting.meeting_id} cancelled: fewer than 2 attendees",
                })

    def _start_meeting(self, meeting: Meeting, t: int) -> None:
        world = self.world
        attendees = tuple(sorted({meeting.organizer} | meeting.attending, key=order_key))
        cost = communication_cost(Channel.MEETING, 0, len(attendees))
        duration = max(1, hours_to_steps(cost, world.clock.hours_per_step))
        meeting.status = MeetingStatus.RUNNING
        meeting.start_step = t
        meeting.attendees = attendees
        meeting.duration_steps = duration
        meeting.cost_hours = cost

        start = Message(
            message_id=world.next_message_id(),
            thread_id=world.next_thread_id(),
            from_agent=meeting.organizer,
            to_agents=attendees,
            channel=Channel.MEETING,
            message_type=MessageType.MEETING_START,
            content=f"Meeting {meeting.meeting_id} starting now.",
            sent_step=t - 1,
            delivery_step=t,
            about_task=meeting.about_task,
            meeting_id=meeting.meeting_id,
            cost_hours=cost,
        )
        world.comm_cost_total += cost
        self._trace_sent(start, t)
        for recipient in attendees:
            world.inboxes[recipient].append(start)
            world.trace.append(t, "message_delivered", {
                "message_id": start.message_id,
                "to": recipient,
                "from": start.from_agent,
                "type": start.message_type.value,
                "thread_id": start.thread_id,
            })
        for agent_id in attendees:
            world.active[agent_id] = ActiveAction(
                kind=ActionKind.MEETING,
                target=meeting.meeting_id,
                remaining=duration,
                total=duration,
            )
            world.agents[agent_id].busy_until_step = t + duration

    def _decide(self, contexts: dict[str, PolicyContext]) -> dict[str, Intention]:
        if not contexts:
            return {}
        if self.parallel_decide and len(contexts) > 1:
            order = list(contexts)
            with ThreadPoolExecutor(max_workers=min(8, len(order))) as pool:
                results = list(pool.map(self.policy.decide,
                                        [contexts[a] for a in order]))
            return dict(zip(order, results))
        return {a: self.policy.decide(ctx) for a, ctx in contexts.items()}

    # -- intention resolution --------------------------------------------------

    def _resolve_intention(self, agent_id: str, context: PolicyContext,
                           intention: Intention, t: int) -> None:
        world = self.world
        kind = intention.kind

        if agent_id == world.manager_id and not world.planned:
            world.active[agent_id] = ActiveAction(
                kind=ActionKind.WORK, target="plan", remaining=1, total=1,
                payload={"plan": True},
            )
            return

        if kind is IntentionKind.CHECK_MESSAGES:
            if self._start_check_messages(agent_id, context, t):
                return
            kind = IntentionKind.CONTINUE_TASK

        if kind in (IntentionKind.REQUEST_HELP, IntentionKind.NEED_CLARIFICATION,
                    IntentionKind.REPORT_PROGRESS):
            if self._start_communication(agent_id, context, intention, kind, t):
                return
            kind = IntentionKind.CONTINUE_TASK

        if kind is IntentionKind.SCHEDULE_MEETING:
            if self._start_meeting_scheduling(agent_id, context, intention, t):
                return
            kind = IntentionKind.CONTINUE_TASK

        # CONTINUE_TASK and every degraded intention end up here.
        active = context.active_task
        if active is not None:
            world.active[agent_id] = ActiveAction(
                kind=ActionKind.WORK, target=active.task_id, remaining=1, total=1,
            )
        else:
            world.active[agent_id] = ActiveAction(
                kind=ActionKind.IDLE, target=None, remaining=1, total=1,
            )

    def _start_check_messages(self, agent_id: str, context: PolicyContext,
                              t: int) -> bool:
        """Oldest actionable inbox item: an invite to accept or a thread to answer."""
        world = self.world
        items: list[tuple[int, str, str, str]] = []
        for delivery, message_id, meeting_id in world.pending_invites(agent_id):
            items.append((delivery, message_id, "rsvp", meeting_id))
        for thread_id in world.unanswered_inbound(agent_id):
            root = world.thread_root[thread_id]
            items.append((root.delivery_step, root.message_id, "reply", thread_id))
        if not items:
            return False
        items.sort()
        _, _, action_type, target = items[0]
        if action_type == "rsvp":
            world.active[agent_id] = ActiveAction(
                kind=ActionKind.REPLY, target=target, remaining=1, total=1,
                payload={"rsvp": target},
            )
            return True
        thread = world.threads[target]
        root = world.thread_root[target]
        content = compose_reply(thread.about_task, thread.root_type,
                                world.agents[agent_id])
        channel = reply_channel(content, root.channel)
        recipients = tuple(sorted(
            ({root.from_agent} | set(root.to_agents)) - {agent_id}, key=order_key,
        ))
        cost = communication_cost(channel, word_count(content), max(1, len(recipients)))
        duration = max(1, hours_to_steps(cost, world.clock.hours_per_step))
        world.active[agent_id] = ActiveAction(
            kind=ActionKind.REPLY, target=target, remaining=duration, total=duration,
            payload={
                "thread_id": target,
                "content": content,
                "recipients": recipients,
                "channel": channel,
                "cost": cost,
            },
        )
        return True

    def _start_communication(self, agent_id: str, context: PolicyContext,
                             intention: Intention, kind: IntentionKind,
                             t: int) -> bool:
        world = self.world
        view = None
        for candidate in context.assigned:
            if candidate.task_id == intention.task_hint:
                view = candidate
                break
        if view is None:
            view = context.active_task
        if view is None:
            return False
        content = compose_message(context, kind, view)
        recipients = select_recipients(context, kind, view.task_id)
        if not recipients:
            return False
        channel = select_channel(kind, content)
        cost = communication_cost(channel, word_count(content), max(1, len(recipients)))
        duration = max(1, hours_to_steps(cost, world.clock.hours_per_step))
        message_type = {
            IntentionKind.REQUEST_HELP: MessageType.HELP_REQUEST,
            IntentionKind.NEED_CLARIFICATION: MessageType.NEED_CLARIFICATION,
            IntentionKind.REPORT_PROGRESS: MessageType.PROGRESS_UPDATE,
        }[kind]
        world.active[agent_id] = ActiveAction(
            kind=ActionKind.COMMUNICATE, target=view.task_id,
            remaining=duration, total=duration,
            payload={
                "message_type": message_type,
                "content": content,
                "recipients": tuple(recipients),
                "channel": channel,
                "about_task": view.task_id,
                "cost": cost,
            },
        )
        return True

    def _start_meeting_scheduling(self, agent_id: str, context: PolicyContext,
                                  intention: Intention, t: int) -> bool:
        world = self.world
        task_id = intention.task_hint
        view = None
        for candidate in context.assigned:
            if candidate.task_id == task_id:
                view = candidate
                break
        if view is None:
            return False
        recipients = select_recipients(context, IntentionKind.SCHEDULE_MEETING,
                                       view.task_id)
        if not recipients:
            return False
        content = compose_message(context, IntentionKind.SCHEDULE_MEETING, view)
        world.active[agent_id] = ActiveAction(
            kind=ActionKind.COMMUNICATE, target=view.task_id, remaining=1, total=1,
            payload={
                "message_type": MessageType.MEETING_INVITE,
                "content": content,
                "recipients": tuple(recipients),
                "channel": Channel.MEETING,
                "about_task": view.task_id,
                "cost": 0.0,
            },
        )
        return True

    # -- execution ---------------------------------------------------------------

    def _execute_actions(self, t: int) -> None:
        world = self.world
        finished: list[str] = []
        for agent_id in world.agent_order:
            action = world.active.get(agent_id)
            if action is None:
                continue
            action.remaining -= 1
            world.trace.append(t, "action", {
                "agent": agent_id,
                "action": action.kind.value,
                "target": action.target,
                "remaining": action.remaining,
            })
            if action.kind is ActionKind.WORK and action.payload.get("plan"):
                self._execute_plan(agent_id, t)
            elif action.kind is ActionKind.WORK:
                self._execute_work(agent_id, action.target, t)
            elif action.remaining == 0 and action.kind is ActionKind.COMMUNICATE:
                self._complete_send(agent_id, action, t)
            elif action.remaining == 0 and action.kind is ActionKind.REPLY:
                self._complete_reply(agent_id, action, t)
            elif action.remaining == 0 and action.kind is ActionKind.MEETING:
                self._complete_meeting_attendance(agent_id, action, t)
            if action.remaining <= 0:
                finished.append(agent_id)
                if action.kind is ActionKind.IDLE:
                    world.last_actions[agent_id] = LastAction("idle", None, t)
                elif action.kind is ActionKind.WORK:
                    world.last_actions[agent_id] = LastAction("work", None, t)
        for agent_id in finished:
            del world.active[agent_id]

    def _execute_plan(self, agent_id: str, t: int) -> None:
        """The manager's step-0 slot: decompose every root and hand out work."""
        world = self.world
        for root_id in list(world.graph.roots):
            node = world.graph.node(root_id)
            plan = self.planner.decompose(node, world.scenario)
            for note in plan.warnings:
                world.trace.append(t, "warning", {"source": "planner", "detail": note})
            created = world.graph.add_subtasks(root_id, list(plan.subtasks))
            assignment = assign(world.graph, [n.task_id for n in created],
                                world.scenario.team)
            for worker_id, task_ids in assignment.items():
                for task_id in task_ids:
                    world.assignments[worker_id].append(task_id)
                    world.alignment.init(worker_id, task_id, step=t)
                    world.trace.append(t, "af_update", {
                        "agent": worker_id,
                        "task": task_id,
                        "old": None,
                        "delta": None,
                        "new": world.alignment.get(worker_id, task_id),
                        "cause": "init",
                    })
        world.planned = True
        world.last_actions[agent_id] = LastAction("work", None, t)

    def _execute_work(self, agent_id: str, task_id: str, t: int) -> None:
        world = self.world
        node = world.graph.node(task_id)
        if node.done:
            return
        af = world.alignment.get(agent_id, task_id)
        effective = effective_progress(world.clock.hours_per_step, af)
        before = node.progress
        became_done = world.graph.record_work(task_id, effective)
        stats = world.task_stats(agent_id, task_id)
        stats.hours_worked += world.clock.hours_per_step
        stats.stuck_worked_steps += 1
        after = node.progress
        for milestone in REPORT_MILESTONES:
            if before < milestone <= after and milestone not in stats.reported_milestones:
                stats.pending_milestone = milestone
        world.trace.append(t, "progress", {
            "agent": agent_id,
            "task": task_id,
            "hours": world.clock.hours_per_step,
            "effective": effective,
            "af": af,
            "progress": after,
        })
        if became_done:
            self._on_task_done(task_id, t)

    def _on_task_done(self, task_id: str, t: int) -> None:
        world = self.world
        world.trace.append(t, "task_done", {
            "task": task_id, "root": False, "boundary": t + 1,
        })
        for thread in world.threads.values():
            if thread.open and thread.about_task == task_id:
                thread.close()
        for root_id in world.graph.roots:
            if world.graph.node(root_id).done and root_id not in world.completion_steps:
                world.completion_steps[root_id] = t + 1
                world.trace.append(t, "task_done", {
                    "task": root_id, "root": True, "boundary": t + 1,
                })

    def _complete_send(self, agent_id: str, action: ActiveAction, t: int) -> None:
        world = self.world
        payload = action.payload
        message_type: MessageType = payload["message_type"]
        thread_id = world.next_thread_id()
        meeting_id = None
        if message_type is MessageType.MEETING_INVITE:
            meeting_id = world.next_meeting_id()
        message = Message(
            message_id=world.next_message_id(),
            thread_id=thread_id,
            from_agent=agent_id,
            to_agents=tuple(payload["recipients"]),
            channel=payload["channel"],
            message_type=message_type,
            content=payload["content"],
            sent_step=t,
            about_task=payload.get("about_task"),
            meeting_id=meeting_id,
            cost_hours=payload["cost"],
        )
        thread = Thread(
            thread_id=thread_id,
            root_message_id=message.message_id,
            root_sender=agent_id,
            root_type=message_type,
            about_task=payload.get("about_task"),
            participants=tuple(sorted({agent_id, *payload["recipients"]}, key=order_key)),
            open=message_type in REQUEST_TYPES,
        )
        world.threads[thread_id] = thread
        world.thread_replied[thread_id] = set()
        world.thread_root[thread_id] = message
        if meeting_id is not None:
            world.meetings[meeting_id] = Meeting(
                meeting_id=meeting_id,
                organizer=agent_id,
                invitees=tuple(payload["recipients"]),
                about_task=payload.get("about_task"),
                invite_step=t,
            )
            world._organized[agent_id].add(payload.get("about_task"))
        world.comm_cost_total += message.cost_hours
        self._trace_sent(message, t)
        world.staged.append(message)
        world.last_actions[agent_id] = LastAction("message_sent",
                                                  message_type.value, t)
        if message_type is MessageType.PROGRESS_UPDATE:
            task_id = payload.get("about_task")
            if task_id:
                stats = world.task_stats(agent_id, task_id)
                progress = world.graph.node(task_id).progress
                for milestone in REPORT_MILESTONES:
                    if milestone <= progress:
                        stats.reported_milestones.add(milestone)
                stats.pending_milestone = None

    def _complete_reply(self, agent_id: str, action: ActiveAction, t: int) -> None:
        world = self.world
        payload = action.payload
        if "rsvp" in payload:
            meeting = world.meetings[payload["rsvp"]]
            meeting.responded.add(agent_id)
            meeting.attending.add(agent_id)
            world.last_actions[agent_id] = LastAction("rsvp", None, t)
            return
        thread = world.threads[payload["thread_id"]]
        if not thread.open:
            # Request became moot (task finished or thread closed) mid-compose.
            world.last_actions[agent_id] = LastAction("reply_dropped", None, t)
            world.trace.append(t, "warning", {
                "source": "reply",
                "detail": f"reply dropped, thread closed: {thread.thread_id}",
            })
            return
        message = Message(
            message_id=world.next_message_id(),
            thread_id=thread.thread_id,
            from_agent=agent_id,
            to_agents=tuple(payload["recipients"]),
            channel=payload["channel"],
            message_type=MessageType.RESPONSE,
            content=payload["content"],
            sent_step=t,
            about_task=thread.about_task,
            cost_hours=payload["cost"],
        )
        thread.register_reply(agent_id)
        world.thread_replied[thread.thread_id].add(agent_id)
        if thread.resolved and thread.resolver_id is None:
            thread.resolver_id = message.message_id
        world.comm_cost_total += message.cost_hours
        self._trace_sent(message, t)
        world.staged.append(message)
        world.last_actions[agent_id] = LastAction("message_sent",
                                                  MessageType.RESPONSE.value, t)

    def _complete_meeting_attendance(self, agent_id: str, action: ActiveAction,
                                     t: int) -> None:
        world = self.world
        meeting = world.meetings[action.target]
        world.last_actions[agent_id] = LastAction("meeting", None, t)
        if meeting.status is not MeetingStatus.RUNNING:
            return
        # All attendees finish on the same step; the first one processed here
        # marks the meeting held and queues the alignment gains.
        meeting.status = MeetingStatus.HELD
        for attendee in meeting.attendees:
            target = self._meeting_gain_task(attendee, meeting)
            if target is not None:
                world.pending_af.append(PendingAfEvaluation(
                    agent_id=attendee,
                    task_id=target,
                    cause_id=meeting.meeting_id,
                    root_type=MessageType.MEETING_INVITE,
                ))

    def _meeting_gain_task(self, agent_id: str, meeting: Meeting) -> str | None:
        """The attendee's task the meeting topic bears on, if any."""
        world = self.world
        about = meeting.about_task
        if about is None:
            return None
        for task_id in world.assigned_tasks(agent_id):
            node = world.graph.node(task_id)
            if node.done:
                continue
            if task_id == about or about in node.dependencies:
                if world.alignment.initialized(agent_id, task_id):
                    return task_id
        return None

    def _apply_pending_af(self, t: int) -> None:
        world = self.world
        pending = sorted(world.pending_af,
                         key=lambda p: (order_key(p.agent_id), p.cause_id))
        world.pending_af = []
        for item in pending:
            if item.thread_id is not None:
                thread = world.threads.get(item.thread_id)
                if thread is not None:
                    thread.close()
            if world.graph.node(item.task_id).done:
                continue
            evaluation, warning = self.evaluator.evaluate(world, item)
            if warning:
                world.trace.append(t, "warning", {
                    "source": "evaluator", "detail": warning,
                })
            old = world.alignment.get(item.agent_id, item.task_id)
            new = world.alignment.apply_delta(item.agent_id, item.task_id,
                                              evaluation.delta, step=t,
                                              cause=item.cause_id)
            if evaluation.delta > 0:
                world.task_stats(item.agent_id, item.task_id).stuck_worked_steps = 0
            world.trace.append(t, "af_update", {
                "agent": item.agent_id,
                "task": item.task_id,
                "old": old,
                "delta": evaluation.delta,
                "new": new,
                "cause": item.cause_id,
            })

    def _flush_staged(self, t: int) -> None:
        world = self.world
        for message in world.staged:
            world.buffer.enqueue(message, t)
        world.staged = []

    def _trace_sent(self, message: Message, t: int) -> None:
        self.world.trace.append(t, "message_sent", {
            "message_id": message.message_id,
            "thread_id": message.thread_id,
            "from": message.from_agent,
            "to": list(message.to_agents),
            "channel": message.channel.value,
            "type": message.message_type.value,
            "about_task": message.about_task,
            "words": message.word_count,
            "cost_h": message.cost_hours,
            "sent_step": message.sent_step,
        })


def run_scenario(scenario: Scenario, adapter: ChatCompletionAdapter | None = None,
                 max_steps: int | None = None,
                 parallel_decide: bool = False) -> SimResult:
    """Convenience wrapper: build a simulation from the scenario and run it."""
    return Simulation(scenario, adapter=adapter, max_steps=max_steps,
                      parallel_decide=parallel_decide).run()
