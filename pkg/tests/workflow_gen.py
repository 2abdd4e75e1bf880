"""Random block-structured workflow generator with an independent oracle.

Workflows are built as nested blocks (sequence / parallel fork-join /
exclusive choice), rendered to BPMN XML for the engine, while the
expected per-node fire counts are computed by walking the block tree
directly. The walk never touches engine code, so it is an independent
brute-force simulation of the token game: every reached task fires
once, a parallel block reaches all branches, an exclusive block reaches
exactly the arm its pick variable selects (or the default).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from bpmn_builder import (chain_doc, doc, end, exclusive, flow, parallel,
                          service_task, start)


@dataclass
class Task:
    task_id: str
    service_id: str


@dataclass
class Seq:
    blocks: list


@dataclass
class Par:
    gw_id: str
    branches: list  # Block | None per branch (None = empty branch)


@dataclass
class Xor:
    gw_id: str
    arms: list  # conditioned arms, Block | None each
    default_arm: object  # Block | None, wired as the gateway default
    pick: int  # index into arms, or -1 to route via the default


@dataclass
class Generated:
    document: bytes
    variables: dict
    expected_fires: dict  # node id -> count (tasks and parallel joins)
    task_ids: list[str] = field(default_factory=list)


class WorkflowGenerator:
    def __init__(self, rng: random.Random, services: list[str],
                 max_depth: int = 3, max_branches: int = 6):
        self.rng = rng
        self.services = services
        self.max_depth = max_depth
        self.max_branches = max_branches
        self._counter = 0

    def _next_id(self, prefix: str) -> str:
        self._counter += 1
        return f"{prefix}{self._counter}"

    # -- block tree ---------------------------------------------------------

    def gen_block(self, depth: int):
        if depth >= self.max_depth:
            return self.gen_task()
        roll = self.rng.random()
        if roll < 0.45:
            return self.gen_task()
        if roll < 0.65:
            return Seq([self.gen_block(depth + 1)
                        for _ in range(self.rng.randint(1, 3))])
        if roll < 0.85:
            n = self.rng.randint(2, self.max_branches)
            return Par(self._next_id("par"),
                       [self.gen_optional(depth + 1) for _ in range(n)])
        n = self.rng.randint(1, self.max_branches - 1)
        arms = [self.gen_optional(depth + 1) for _ in range(n)]
        default_arm = self.gen_optional(depth + 1)
        pick = self.rng.choice(list(range(n)) + [-1])
        return Xor(self._next_id("xor"), arms, default_arm, pick)

    def gen_optional(self, depth: int):
        return None if self.rng.random() < 0.2 else self.gen_block(depth)

    def gen_task(self) -> Task:
        return Task(self._next_id("t"), self.rng.choice(self.services))

    # -- oracle ---------------------------------------------------------------

    def expected_fires(self, block, fires: dict) -> None:
        if block is None:
            return
        if isinstance(block, Task):
            fires[block.task_id] = fires.get(block.task_id, 0) + 1
        elif isinstance(block, Seq):
            for child in block.blocks:
                self.expected_fires(child, fires)
        elif isinstance(block, Par):
            for branch in block.branches:
                self.expected_fires(branch, fires)
            join_id = f"{block.gw_id}_join"
            fires[join_id] = fires.get(join_id, 0) + 1
        elif isinstance(block, Xor):
            chosen = (block.arms[block.pick]
                      if 0 <= block.pick < len(block.arms)
                      else block.default_arm)
            self.expected_fires(chosen, fires)

    def pick_variables(self, block, picks: dict) -> None:
        if block is None or isinstance(block, Task):
            return
        if isinstance(block, Seq):
            for child in block.blocks:
                self.pick_variables(child, picks)
        elif isinstance(block, Par):
            for branch in block.branches:
                self.pick_variables(branch, picks)
        elif isinstance(block, Xor):
            picks[block.gw_id] = block.pick
            for arm in block.arms + [block.default_arm]:
                self.pick_variables(arm, picks)

    # -- rendering ---------------------------------------------------------------

    def render(self, block, elements: list, flows: list, entry: str,
               entry_condition: str | None = None,
               entry_flow_id: str | None = None) -> str:
        """Emit a block wired from `entry`; returns its exit node id.

        The entry flow can carry a condition or a forced flow id (for
        gateway default flows); both attach to the block's first node.
        """
        if isinstance(block, Seq):
            node = self.render(block.blocks[0], elements, flows, entry,
                               entry_condition, entry_flow_id)
            for child in block.blocks[1:]:
                node = self.render(child, elements, flows, node)
            return node

        head = self._materialize_head(block, elements)
        flows.append(flow(entry_flow_id or self._next_id("f"), entry, head,
                          condition=entry_condition))

        if isinstance(block, Task):
            return block.task_id

        if isinstance(block, Par):
            join = f"{block.gw_id}_join"
            elements.append(parallel(join))
            for branch in block.branches:
                if branch is None:
                    flows.append(flow(self._next_id("f"), head, join))
                else:
                    exit_node = self.render(branch, elements, flows, head)
                    flows.append(flow(self._next_id("f"), exit_node, join))
            return join

        if isinstance(block, Xor):
            merge = f"{block.gw_id}_merge"
            elements.append(exclusive(merge))
            for i, arm in enumerate(block.arms):
                condition = f"picks.{block.gw_id} == {i}"
                if arm is None:
                    flows.append(flow(self._next_id("f"), head, merge,
                                      condition=condition))
                else:
                    exit_node = self.render(arm, elements, flows, head,
                                            entry_condition=condition)
                    flows.append(flow(self._next_id("f"), exit_node, merge))
            default_flow_id = block._default_flow_id
            if block.default_arm is None:
                flows.append(flow(default_flow_id, head, merge))
            else:
                exit_node = self.render(block.default_arm, elements, flows,
                                        head, entry_flow_id=default_flow_id)
                flows.append(flow(self._next_id("f"), exit_node, merge))
            return merge

        raise TypeError(block)

    def _materialize_head(self, block, elements: list) -> str:
        if isinstance(block, Task):
            elements.append(service_task(block.task_id, block.service_id))
            return block.task_id
        if isinstance(block, Par):
            fork = f"{block.gw_id}_fork"
            elements.append(parallel(fork))
            return fork
        if isinstance(block, Xor):
            split = f"{block.gw_id}_split"
            block._default_flow_id = self._next_id("f")
            elements.append(exclusive(split, default=block._default_flow_id))
            return split
        raise TypeError(block)

    # -- entry point ------------------------------------------------------------

    def generate(self, process_id: str) -> Generated:
        block = Seq([self.gen_block(0)
                     for _ in range(self.rng.randint(1, 3))])
        elements: list[str] = [start()]
        flows: list[str] = []
        exit_node = self.render(block, elements, flows, "start")
        elements.append(end())
        flows.append(flow(self._next_id("f"), exit_node, "end"))

        fires: dict = {}
        self.expected_fires(block, fires)
        picks: dict = {}
        self.pick_variables(block, picks)
        task_ids = sorted(k for k in fires if k.startswith("t"))
        return Generated(doc(process_id, elements + flows),
                         {"picks": picks}, fires, task_ids)


def generate_sequential(rng: random.Random, process_id: str,
                        services: list[str],
                        n_tasks: int) -> tuple[bytes, list[str]]:
    """A purely sequential chain of n service tasks; returns (doc, task ids)."""
    tasks = [(f"t{i}", rng.choice(services)) for i in range(n_tasks)]
    return chain_doc(process_id, tasks), [t[0] for t in tasks]
