"""Shared scenario builders for the test suite."""

from __future__ import annotations

import pytest

from teamsim.config import expand_team_shorthand
from teamsim.model import AgentProfile, Role, Scenario, TaskSpec, validate_scenario

SKILL_POOL = ["backend", "api", "authentication", "oauth", "testing", "documentation"]

SIMPLE_TASK = TaskSpec(
    description=(
        "Fix five independent bugs across modules: login validation, data "
        "parsing, UI rendering glitches, API timeout handling, and a database "
        "connection leak. No cross-dependencies."
    ),
    estimated_hours=8.0,
    required_skills=frozenset({"backend", "frontend", "database", "api", "testing"}),
)

MEDIUM_TASK = TaskSpec(
    description=(
        "Integrate an external API with authentication, including token "
        "management and error and latency handling; deliver minimal usage docs."
    ),
    estimated_hours=24.0,
    required_skills=frozenset(
        {"backend", "api", "authentication", "oauth", "testing", "documentation"}
    ),
)

COMPLEX_TASK = TaskSpec(
    description=(
        "Build a user authentication service covering registration, login, "
        "password reset, OAuth 2.0 sign-in, JWT issuance and refresh, session "
        "management, and security hardening."
    ),
    estimated_hours=40.0,
    required_skills=frozenset(
        {"backend", "security", "database", "oauth", "authentication",
         "frontend", "testing"}
    ),
)


def make_scenario(task: TaskSpec, team_label: str = "1M+4W",
                  policy: str = "no_comm", seed: int = 7,
                  name: str = "scenario") -> Scenario:
    pool = sorted(task.required_skills)
    team = expand_team_shorthand(team_label, pool)
    return validate_scenario(Scenario(
        name=name,
        team=team,
        tasks=[task],
        policy_name=policy,
        evaluator_name="rule_based",
        seed=seed,
        skill_pool=tuple(pool),
        team_label=team_label,
    ))


def make_team(workers: int = 2, worker_skills: list[frozenset[str]] | None = None
              ) -> list[AgentProfile]:
    team = [AgentProfile("M1", "Manager 1", Role.MANAGER,
                         frozenset({"planning", "coordination"}))]
    for i in range(workers):
        skills = (worker_skills[i] if worker_skills
                  else frozenset({"backend", "testing"}))
        team.append(AgentProfile(f"W{i + 1}", f"Worker {i + 1}", Role.WORKER, skills))
    return team


@pytest.fixture
def simple_scenario() -> Scenario:
    return make_scenario(SIMPLE_TASK, name="simple")


@pytest.fixture
def medium_scenario() -> Scenario:
    return make_scenario(MEDIUM_TASK, name="medium")


@pytest.fixture
def complex_scenario() -> Scenario:
    return make_scenario(COMPLEX_TASK, name="complex")
