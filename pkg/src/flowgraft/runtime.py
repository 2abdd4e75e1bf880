"""Composition root: journal + registry + invoker + engine as one unit.

Opening a runtime on an existing journal replays it, rebuilds the
registry and every instance, and resumes the ones that were still
running (re-invoking any call that was in flight at the crash). Opening
on a fresh path starts empty. Either way the same process can then
deploy, register, and run workflows with no further setup.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from .clock import Clock
from .engine import Engine
from .invoker import InvocationPolicy, Invoker
from .journal import Journal
from .recovery import recover
from .registry import ServiceRegistry

DEFAULT_JOURNAL_ENV = "FLOWGRAFT_JOURNAL"


@dataclass
class Runtime:
    clock: Clock
    journal: Journal
    registry: ServiceRegistry
    invoker: Invoker
    engine: Engine

    @classmethod
    def open(cls, journal_path: str | os.PathLike,
             clock: Clock | None = None,
             policies: dict[str, InvocationPolicy] | None = None,
             resume: bool = True, sync: str = "always",
             io_workers: int = 32, runner_workers: int = 32) -> "Runtime":
        clock = clock or Clock()
        journal = Journal(journal_path, clock=clock, sync=sync)
        events = journal.replay()
        recovered = recover(events, journal=journal, clock=clock)
        registry = recovered.registry
        invoker = Invoker(registry, clock=clock, emit=journal.append)
        engine = Engine(registry, invoker, journal, clock=clock,
                        policies=policies, io_workers=io_workers,
                        runner_workers=runner_workers)
        runtime = cls(clock=clock, journal=journal, registry=registry,
                      invoker=invoker, engine=engine)
        for snapshot in recovered.instances.values():
            instance = engine.adopt(snapshot)
            if resume and snapshot["status"] == "Running":
                engine.resume(instance)
                engine.run_async(instance)
        return runtime

    def close(self) -> None:
        self.engine.shutdown(wait=True)
        self.journal.close()
