"""Policy decisions, recipient and channel selection, and message templates."""

import pytest

from teamsim.comms import Channel, MessageType, word_count
from teamsim.model import AgentProfile, Role
from teamsim.policy import (FixedStepsPolicy, HeuristicPolicy, IntentionKind,
                            LastAction, NoCommPolicy, PolicyContext,
                            TaskAssignmentView, TeammateView, compose_message,
                            compose_reply, reply_channel, select_channel,
                            select_recipients)


def view(task_id="T1.1", af=0.30, hours=0.0, stuck=0, progress=0.0,
         milestone=None, ready=True, done=False,
         skills=frozenset({"oauth"})):
    return TaskAssignmentView(
        task_id=task_id, description="integrate the external api",
        estimated_hours=6.0, required_skills=skills, af=af,
        hours_worked=hours, stuck_worked_steps=stuck, progress=progress,
        pending_milestone=milestone, ready=ready, done=done,
    )


def context(agent_role=Role.WORKER, step=5, assigned=(), teammates=(),
            unanswered=(), open_outbound=frozenset(), invite=False,
            meeting_start=False, blocked=None, organized=frozenset(),
            last_action=None):
    agent = AgentProfile("W1", "Worker 1", agent_role,
                         frozenset({"backend", "api"}))
    if agent_role is Role.MANAGER:
        agent = AgentProfile("M1", "Manager 1", agent_role,
                             frozenset({"planning", "coordination"}))
    return PolicyContext(
        agent=agent, step=step, assigned=tuple(assigned), inbox=(),
        team_view=tuple(teammates), manager_id="M1", last_action=last_action,
        unanswered_inbound=tuple(unanswered),
        open_outbound_tasks=frozenset(open_outbound),
        has_unprocessed_invite=invite, has_meeting_start=meeting_start,
        blocked_collaborators=blocked or {},
        meeting_organized_tasks=frozenset(organized),
    )


def mate(agent_id, skills, busy=False, role=Role.WORKER):
    return TeammateView(agent_id=agent_id, role=role,
                        skills=frozenset(skills), busy=busy)


class TestNoComm:
    def test_always_continue(self):
        policy = NoCommPolicy()
        for ctx in (context(), context(assigned=[view()]),
                    context(unanswered=("th1",))):
            assert policy.decide(ctx).kind is IntentionKind.CONTINUE_TASK


class TestFixedSteps:
    def test_report_on_the_interval(self):
        policy = FixedStepsPolicy()
        ctx = context(step=16, assigned=[view(hours=3.0)])
        assert policy.decide(ctx).kind is IntentionKind.REPORT_PROGRESS

    def test_step_zero_not_a_report_step(self):
        ctx = context(step=0, assigned=[view()])
        assert FixedStepsPolicy().decide(ctx).kind is IntentionKind.CONTINUE_TASK

    def test_help_follows_the_report(self):
        last = LastAction("message_sent", MessageType.PROGRESS_UPDATE.value, 16)
        tasks = [view(task_id="T1.1", af=0.45), view(task_id="T1.2", af=0.30)]
        ctx = context(step=17, assigned=tasks, last_action=last)
        intention = FixedStepsPolicy().decide(ctx)
        assert intention.kind is IntentionKind.REQUEST_HELP
        assert intention.task_hint == "T1.2"  # lowest alignment wins

    def test_between_intervals_continue_or_check(self):
        policy = FixedStepsPolicy()
        assert policy.decide(context(step=9, assigned=[view()])).kind \
            is IntentionKind.CONTINUE_TASK
        checked = policy.decide(context(step=9, assigned=[view()],
                                        unanswered=("th1",)))
        assert checked.kind is IntentionKind.CHECK_MESSAGES

    def test_manager_only_checks(self):
        policy = FixedStepsPolicy()
        ctx = context(agent_role=Role.MANAGER, step=16, unanswered=("th1",))
        assert policy.decide(ctx).kind is IntentionKind.CHECK_MESSAGES


class TestHeuristic:
    def test_invite_wins(self):
        ctx = context(invite=True, assigned=[view(af=0.2, hours=1.0, stuck=9)])
        assert HeuristicPolicy().decide(ctx).kind is IntentionKind.CHECK_MESSAGES

    def test_unanswered_inbound_wins_over_help(self):
        ctx = context(unanswered=("th1",),
                      assigned=[view(af=0.2, hours=1.0, stuck=9)])
        assert HeuristicPolicy().decide(ctx).kind is IntentionKind.CHECK_MESSAGES

    def test_stuck_low_alignment_asks_for_help(self):
        ctx = context(assigned=[view(af=0.30, hours=1.0, stuck=4)])
        intention = HeuristicPolicy().decide(ctx)
        assert intention.kind is IntentionKind.REQUEST_HELP
        assert intention.task_hint == "T1.1"

    def test_zero_hours_asks_for_clarification(self):
        ctx = context(assigned=[view(af=0.30, hours=0.0)])
        assert HeuristicPolicy().decide(ctx).kind is IntentionKind.NEED_CLARIFICATION

    def test_open_thread_guard_blocks_requests(self):
        ctx = context(assigned=[view(af=0.30, hours=1.0, stuck=8)],
                      open_outbound={"T1.1"})
        assert HeuristicPolicy().decide(ctx).kind is IntentionKind.CONTINUE_TASK

    def test_aligned_agent_just_works(self):
        ctx = context(assigned=[view(af=0.55, hours=1.0, stuck=9)])
        assert HeuristicPolicy().decide(ctx).kind is IntentionKind.CONTINUE_TASK

    def test_blocked_collaborators_trigger_meeting(self):
        ctx = context(assigned=[view(af=0.55)],
                      blocked={"T1.1": ("W2", "W3")})
        assert HeuristicPolicy().decide(ctx).kind is IntentionKind.SCHEDULE_MEETING

    def test_meeting_not_rescheduled(self):
        ctx = context(assigned=[view(af=0.55)],
                      blocked={"T1.1": ("W2", "W3")}, organized={"T1.1"})
        assert HeuristicPolicy().decide(ctx).kind is IntentionKind.CONTINUE_TASK

    def test_milestone_reported(self):
        ctx = context(assigned=[view(af=0.55, progress=0.5, milestone=0.5)])
        intention = HeuristicPolicy().decide(ctx)
        assert intention.kind is IntentionKind.REPORT_PROGRESS

    def test_purity(self):
        ctx = context(assigned=[view(af=0.30, hours=1.0, stuck=4)])
        first = HeuristicPolicy().decide(ctx)
        second = HeuristicPolicy().decide(ctx)
        assert first == second


class TestSelectRecipients:
    def test_help_goes_to_best_skilled_free_worker(self):
        ctx = context(
            assigned=[view(skills=frozenset({"oauth"}))],
            teammates=[mate("W2", {"backend"}), mate("W3", {"oauth"}),
                       mate("M1", {"planning"}, role=Role.MANAGER)],
        )
        assert select_recipients(ctx, IntentionKind.REQUEST_HELP, "T1.1") == ["W3"]

    def test_skill_tie_breaks_to_lower_id(self):
        ctx = context(
            assigned=[view(skills=frozenset({"oauth"}))],
            teammates=[mate("W5", {"oauth"}), mate("W2", {"oauth"})],
        )
        assert select_recipients(ctx, IntentionKind.REQUEST_HELP, "T1.1") == ["W2"]

    def test_busy_candidates_skipped(self):
        ctx = context(
            assigned=[view(skills=frozenset({"oauth"}))],
            teammates=[mate("W2", {"oauth"}, busy=True), mate("W3", {"oauth"})],
        )
        assert select_recipients(ctx, IntentionKind.REQUEST_HELP, "T1.1") == ["W3"]

    def test_no_match_degrades_to_manager(self):
        ctx = context(
            assigned=[view(skills=frozenset({"oauth"}))],
            teammates=[mate("W2", {"frontend"}, busy=True)],
        )
        assert select_recipients(ctx, IntentionKind.REQUEST_HELP, "T1.1") == ["M1"]

    def test_clarification_and_report_go_to_manager(self):
        ctx = context(assigned=[view()])
        assert select_recipients(ctx, IntentionKind.NEED_CLARIFICATION, "T1.1") == ["M1"]
        assert select_recipients(ctx, IntentionKind.REPORT_PROGRESS, "T1.1") == ["M1"]

    def test_meeting_invites_manager_plus_blocked(self):
        ctx = context(assigned=[view()], blocked={"T1.1": ("W3", "W2")})
        assert select_recipients(ctx, IntentionKind.SCHEDULE_MEETING, "T1.1") == \
            ["M1", "W3", "W2"]

    def test_non_communicating_intention_rejected(self):
        with pytest.raises(ValueError):
            select_recipients(context(), IntentionKind.CONTINUE_TASK, None)


class TestSelectChannel:
    def test_clarification_is_chat(self):
        assert select_channel(IntentionKind.NEED_CLARIFICATION, "short note") \
            is Channel.CHAT

    def test_long_help_is_email(self):
        long_text = " ".join(["word"] * 300)
        assert select_channel(IntentionKind.REQUEST_HELP, long_text) is Channel.EMAIL

    def test_short_help_is_chat(self):
        assert select_channel(IntentionKind.REQUEST_HELP, "quick question") \
            is Channel.CHAT

    def test_report_is_email(self):
        assert select_channel(IntentionKind.REPORT_PROGRESS, "text") is Channel.EMAIL

    def test_meeting_channel_forced(self):
        assert select_channel(IntentionKind.SCHEDULE_MEETING, "x") is Channel.MEETING


class TestComposition:
    def test_help_template_mentions_task_alignment_and_gap(self):
        ctx = context(assigned=[view(af=0.30, hours=1.0,
                                     skills=frozenset({"oauth"}))])
        text = compose_message(ctx, IntentionKind.REQUEST_HELP, ctx.assigned[0])
        assert "T1.1" in text
        assert "0.30" in text
        assert "oauth" in text
        assert word_count(text) >= 120  # detailed request rides email

    def test_report_template_contains_progress(self):
        ctx = context(assigned=[view(progress=0.5, hours=3.0)])
        text = compose_message(ctx, IntentionKind.REPORT_PROGRESS, ctx.assigned[0])
        assert "50%" in text
        assert "T1.1" in text

    def test_templates_deterministic(self):
        ctx = context(assigned=[view()])
        for kind in (IntentionKind.REQUEST_HELP, IntentionKind.NEED_CLARIFICATION,
                     IntentionKind.REPORT_PROGRESS):
            assert compose_message(ctx, kind, ctx.assigned[0]) == \
                compose_message(ctx, kind, ctx.assigned[0])

    def test_clarification_reply_is_long_form_email(self):
        manager = AgentProfile("M1", "Manager 1", Role.MANAGER,
                               frozenset({"planning"}))
        brief = compose_reply("T1.1", MessageType.NEED_CLARIFICATION, manager)
        assert word_count(brief) >= 301
        assert reply_channel(brief, Channel.CHAT) is Channel.EMAIL

    def test_help_reply_is_short_chat(self):
        worker = AgentProfile("W2", "Worker 2", Role.WORKER,
                              frozenset({"oauth"}))
        note = compose_reply("T1.1", MessageType.HELP_REQUEST, worker)
        assert word_count(note) < 120
        assert reply_channel(note, Channel.EMAIL) is Channel.CHAT
