"""Task DAG with dependency readiness, progress accounting, and weighted roll-up.

Progress is stored as accumulated effective hours; the completion fraction is
derived from it. A parent is done only when every subtask is done, regardless
of how its weighted progress rounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .model import order_key

# Slack against float drift when effective hours accumulate in many small
# increments; one part in 1e9 of an hour is far below one step of work.
DONE_EPS = 1e-9


class GraphError(ValueError):
    pass


class CycleError(GraphError):
    pass


class BadDependencyError(GraphError):
    pass


class NoSubtasksError(GraphError):
    pass


class TaskAlreadyDoneError(GraphError):
    pass


class TaskStatus(str, Enum):
    PENDING = "pending"
    READY = "ready"
    IN_PROGRESS = "in_progress"
    DONE = "done"


@dataclass(frozen=True)
class SubtaskSpec:
    """Planner-facing subtask description; dependencies are sibling indices."""

    description: str
    estimated_hours: float
    required_skills: frozenset[str]
    suggested_assignee: str | None = None
    dependencies: tuple[int, ...] = ()


@dataclass
class TaskNode:
    task_id: str
    parent_id: str | None
    description: str
    estimated_hours: float
    required_skills: frozenset[str]
    dependencies: frozenset[str] = frozenset()
    assignee: str | None = None
    accumulated_effective_hours: float = 0.0
    status: TaskStatus = TaskStatus.READY

    @property
    def progress(self) -> float:
        return min(1.0, self.accumulated_effective_hours / self.estimated_hours)

    @property
    def done(self) -> bool:
        return self.status is TaskStatus.DONE


class TaskGraph:
    def __init__(self) -> None:
        self.nodes: dict[str, TaskNode] = {}
        self.roots: list[str] = []
        self._children: dict[str, list[str]] = {}

    # -- construction -----------------------------------------------------

    def add_root(self, task_id: str, description: str, estimated_hours: float,
                 required_skills: frozenset[str]) -> TaskNode:
        if task_id in self.nodes:
            raise GraphError(f"duplicate task id: {task_id}")
        if estimated_hours <= 0:
            raise GraphError(f"non-positive effort: {estimated_hours}")
        node = TaskNode(
            task_id=task_id,
            parent_id=None,
            description=description,
            estimated_hours=estimated_hours,
            required_skills=required_skills,
        )
        self.nodes[task_id] = node
        self.roots.append(task_id)
        self._children[task_id] = []
        return node

    def add_subtasks(self, parent_id: str, specs: list[SubtaskSpec]) -> list[TaskNode]:
        """Materialize sibling subtasks under `parent_id`.

        Dependency indices refer to positions in `specs`; edges are restricted
        to siblings and re-checked for cycles.
        """
        parent = self.node(parent_id)
        if self._children[parent_id]:
            raise GraphError(f"{parent_id} already has subtasks")
        if not specs:
            raise NoSubtasksError("no subtasks")

        width = len(str(len(specs)))
        ids = [f"{parent_id}.{i + 1:0{width}d}" for i in range(len(specs))]
        for spec, task_id in zip(specs, ids):
            deps = set()
            for idx in spec.dependencies:
                if not 0 <= idx < len(specs):
                    raise BadDependencyError(f"bad dependency: index {idx}")
                if ids[idx] == task_id:
                    raise CycleError("cycle detected")
                deps.add(ids[idx])
            node = TaskNode(
                task_id=task_id,
                parent_id=parent_id,
                description=spec.description,
                estimated_hours=spec.estimated_hours,
                required_skills=spec.required_skills,
                assignee=spec.suggested_assignee,
                dependencies=frozenset(deps),
                status=TaskStatus.PENDING,
            )
            self.nodes[task_id] = node
            self._children[task_id] = []
            self._children[parent_id].append(task_id)

        self._assert_acyclic(ids)
        parent.status = TaskStatus.IN_PROGRESS
        for task_id in ids:
            self._refresh_readiness(task_id)
        return [self.nodes[i] for i in ids]

    def _assert_acyclic(self, sibling_ids: list[str]) -> None:
        """Kahn's algorithm over the sibling group; raises on any cycle."""
        incoming = {i: set(self.nodes[i].dependencies) for i in sibling_ids}
        queue = sorted((i for i in sibling_ids if not incoming[i]), key=order_key)
        seen = 0
        while queue:
            current = queue.pop(0)
            seen += 1
            for other in sibling_ids:
                if current in incoming[other]:
                    incoming[other].discard(current)
                    if not incoming[other]:
                        queue.append(other)
        if seen != len(sibling_ids):
            raise CycleError("cycle detected")

    # -- queries ----------------------------------------------------------

    def node(self, task_id: str) -> TaskNode:
        try:
            return self.nodes[task_id]
        except KeyError:
            raise GraphError(f"unknown task: {task_id}") from None

    def children(self, task_id: str) -> list[TaskNode]:
        return [self.nodes[c] for c in self._children.get(task_id, [])]

    def is_leaf(self, task_id: str) -> bool:
        return not self._children.get(task_id)

    def ready_tasks(self) -> list[str]:
        """Non-done leaves whose dependencies are all done, in id order."""
        out = []
        for task_id in self.nodes:
            node = self.nodes[task_id]
            if node.done or not self.is_leaf(task_id):
                continue
            if all(self.nodes[d].done for d in node.dependencies):
                out.append(task_id)
        return sorted(out, key=order_key)

    def node_progress(self, task_id: str) -> float:
        node = self.node(task_id)
        if self.is_leaf(task_id):
            return node.progress
        return self.parent_progress(task_id)

    def parent_progress(self, parent_id: str) -> float:
        """Weighted mean of subtask completion, weights = effort estimates."""
        kids = self.children(parent_id)
        if not kids:
            raise NoSubtasksError("no subtasks")
        total = sum(k.estimated_hours for k in kids)
        return sum(k.estimated_hours * self.node_progress(k.task_id) for k in kids) / total

    def all_roots_done(self) -> bool:
        return all(self.nodes[r].done for r in self.roots)

    # -- mutation ----------------------------------------------------------

    def record_work(self, task_id: str, effective_hours: float) -> bool:
        """Credit effective hours to a leaf; returns True when it became done."""
        if effective_hours < 0:
            raise GraphError(f"negative effective hours: {effective_hours}")
        node = self.node(task_id)
        if node.done:
            raise TaskAlreadyDoneError("task already done")
        if not self.is_leaf(task_id):
            raise GraphError(f"{task_id} is not a leaf")
        node.accumulated_effective_hours += effective_hours
        if node.status is TaskStatus.READY:
            node.status = TaskStatus.IN_PROGRESS
        if node.accumulated_effective_hours >= node.estimated_hours - DONE_EPS:
            self._mark_done(node)
            return True
        return False

    def _mark_done(self, node: TaskNode) -> None:
        node.status = TaskStatus.DONE
        for sibling_id in self._children.get(node.parent_id or "", []):
            self._refresh_readiness(sibling_id)
        if node.parent_id is not None:
            parent = self.nodes[node.parent_id]
            if not parent.done and all(k.done for k in self.children(parent.task_id)):
                self._mark_done(parent)

    def _refresh_readiness(self, task_id: str) -> None:
        node = self.nodes[task_id]
        if node.status is TaskStatus.PENDING and all(
            self.nodes[d].done for d in node.dependencies
        ):
            node.status = TaskStatus.READY
