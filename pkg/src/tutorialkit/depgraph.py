"""Dependency DAG over steps, derived from shared objects and temporal order."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .errors import CycleDetected
from .linker import Association


@dataclass(frozen=True)
class DependencyEdge:
    from_step: int
    to_step: int
    shared_objects: frozenset[str]
    manual: bool = False  # user-drawn edges may carry no shared objects


@dataclass(frozen=True)
class DependencyGraph:
    step_count: int
    edges: tuple[DependencyEdge, ...] = field(default=())


def build_dependencies(
    step_count: int, associations: Iterable[Association]
) -> DependencyGraph:
    """Chain each object's steps in temporal order; merge parallel edges.

    Only consecutive mentions are linked, so an object used in steps
    {1, 3, 5} produces 1->3 and 3->5, not the transitive 1->5.
    """
    steps_by_object: dict[str, set[int]] = {}
    for assoc in associations:
        if assoc.step_index >= step_count:
            raise ValueError(
                f"association references step {assoc.step_index} "
                f"but graph has {step_count} steps"
            )
        steps_by_object.setdefault(assoc.object_name, set()).add(assoc.step_index)

    shared: dict[tuple[int, int], set[str]] = {}
    for name, steps in steps_by_object.items():
        ordered = sorted(steps)
        for a, b in zip(ordered, ordered[1:]):
            shared.setdefault((a, b), set()).add(name)

    edges = tuple(
        DependencyEdge(from_step=a, to_step=b, shared_objects=frozenset(names))
        for (a, b), names in sorted(shared.items())
    )
    return DependencyGraph(step_count=step_count, edges=edges)


def validate_acyclic(g: DependencyGraph) -> None:
    """Every edge must point forward in step order; anything else is a cycle."""
    for edge in g.edges:
        if edge.from_step >= edge.to_step:
            raise CycleDetected(edge.from_step, edge.to_step)
