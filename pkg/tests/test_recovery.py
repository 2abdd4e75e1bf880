"""Journal-driven recovery: replay equivalence, resume, determinism."""

from __future__ import annotations

import time

from bpmn_builder import chain_doc, parallel_doc
from conftest import invoked_nodes
from flowgraft import InstanceStatus, Runtime, StepKind, replay
from flowgraft.journal import lint_lifecycles
from flowgraft.recovery import recover, reduce_instances
from flowgraft.registry import LocalTarget
from flowgraft.sim import ScriptEntry, SimServiceSpec, spawn_fleet


def register_echo(runtime, *services):
    runtime.registry.register_function("echo", {"kind": "echo"})
    for service in services:
        runtime.registry.register_service(service, "1.0.0",
                                          LocalTarget("echo"))


class TestReplayEquivalence:
    def test_snapshot_equals_reduction_at_every_step_boundary(self, rt):
        register_echo(rt, "alpha", "beta")
        rt.registry.deploy_workflow(
            chain_doc("eq", [("a", "alpha"), ("b", "beta")]), "1.0.0")
        instance = rt.engine.start_workflow("eq", variables={"x": 1})
        boundaries = 0
        while True:
            events = rt.journal.replay()
            reduced = reduce_instances(events)[instance.instance_id]
            assert reduced == instance.snapshot()
            boundaries += 1
            outcome = rt.engine.step(instance)
            if outcome.kind is StepKind.FINISHED:
                break
            if outcome.kind is StepKind.AWAITING_IO:
                instance._wakeup.wait(1.0)
                instance._wakeup.clear()
        final = reduce_instances(rt.journal.replay())[instance.instance_id]
        assert final == instance.snapshot()
        assert final["status"] == "Completed"
        assert boundaries > 5

    def test_parallel_run_replays_equal(self, rt):
        register_echo(rt, "alpha", "beta", "gamma")
        rt.registry.deploy_workflow(
            parallel_doc("peq", [("a", "alpha"), ("b", "beta")],
                         tail=("c", "gamma")), "1.0.0")
        instance = rt.engine.start_workflow("peq")
        rt.engine.run_to_completion(instance)
        reduced = reduce_instances(rt.journal.replay())[instance.instance_id]
        assert reduced == instance.snapshot()

    def test_recovery_is_deterministic(self, rt, journal_path):
        register_echo(rt, "alpha")
        rt.registry.deploy_workflow(chain_doc("det", [("a", "alpha")]),
                                    "1.0.0")
        instance = rt.engine.start_workflow("det", variables={"n": 5})
        rt.engine.run_to_completion(instance)
        events = replay(journal_path)
        first = recover(events)
        second = recover(events)
        assert first.instances == second.instances
        assert first.registry.known_services() == second.registry.known_services()
        assert [d.to_dict() for d in first.registry.list_workflows()] == \
            [d.to_dict() for d in second.registry.list_workflows()]


class TestCrashResume:
    def test_resume_after_stop_at_awaiting_service(self, journal_path):
        # Run to the point where task "a" has been submitted but its
        # completion was never applied, then abandon the runtime. This is
        # the in-process analog of dying mid-invocation.
        first = Runtime.open(journal_path)
        register_echo(first, "alpha", "beta")
        first.registry.deploy_workflow(
            chain_doc("cr", [("a", "alpha"), ("b", "beta")]), "1.0.0")
        instance = first.engine.start_instance(
            first.registry.get_deployment("cr").definition, {"k": 1})
        first.engine.step(instance)  # start event
        first.engine.step(instance)  # submit a -> AwaitingService
        assert any(t.phase.value == "AwaitingService" for t in instance.tokens)
        first.engine.shutdown(wait=True)  # drain the pool, apply nothing
        first.journal.close()
        pre_crash = replay(journal_path, strict=False)
        pre_invoked = [e.payload["node"] for e in pre_crash
                       if e.kind == "TaskInvoked"]
        assert pre_invoked == ["a"]

        second = Runtime.open(journal_path)
        try:
            recovered = second.engine.get_instance(instance.instance_id)
            assert recovered is not None

            deadline = time.time() + 5
            while (recovered.status is InstanceStatus.RUNNING
                   and time.time() < deadline):
                time.sleep(0.02)
            assert recovered.status is InstanceStatus.COMPLETED
            invoked = invoked_nodes(second, instance.instance_id)
            # At-least-once: "a" was re-invoked exactly once on resume.
            assert invoked == ["a", "a", "b"]
            assert lint_lifecycles(second.journal.replay()) == []
        finally:
            second.close()

    def test_resume_after_completed_task_does_not_reinvoke_it(self,
                                                              journal_path):
        first = Runtime.open(journal_path)
        register_echo(first, "alpha", "beta")
        first.registry.deploy_workflow(
            chain_doc("cr2", [("a", "alpha"), ("b", "beta")]), "1.0.0")
        instance = first.engine.start_instance(
            first.registry.get_deployment("cr2").definition)
        # Step until TaskCompleted(a) lands, then stop before b is submitted.
        deadline = time.time() + 5
        while time.time() < deadline:
            first.engine.step(instance)
            kinds = [(e.kind, e.payload.get("node")) for e in
                     first.journal.replay(instance_id=instance.instance_id)]
            if ("TaskCompleted", "a") in kinds:
                break
            time.sleep(0.01)
        assert ("TaskCompleted", "a") in kinds
        first.engine.shutdown(wait=True)
        first.journal.close()

        second = Runtime.open(journal_path)
        try:
            recovered = second.engine.get_instance(instance.instance_id)
            deadline = time.time() + 5
            while (recovered.status is InstanceStatus.RUNNING
                   and time.time() < deadline):
                time.sleep(0.02)
            assert recovered.status is InstanceStatus.COMPLETED
            assert invoked_nodes(second, instance.instance_id) == ["a", "b"]
        finally:
            second.close()

    def test_fresh_journal_recovers_to_empty(self, journal_path):
        runtime = Runtime.open(journal_path)
        runtime.close()
        reopened = Runtime.open(journal_path)
        try:
            assert reopened.engine.list_instances() == []
            assert reopened.registry.list_services() == []
        finally:
            reopened.close()

    def test_registry_survives_restart(self, journal_path):
        first = Runtime.open(journal_path)
        register_echo(first, "alpha")
        first.registry.deploy_workflow(chain_doc("wf", [("a", "alpha")]),
                                       "1.0.0")
        first.registry.deploy_workflow(chain_doc("wf", [("a", "alpha")]),
                                       "1.1.0")
        first.registry.retire_workflow("wf", "1.0.0")
        services_before = [s.to_dict() for s in first.registry.list_services()]
        workflows_before = [w.to_dict() for w in first.registry.list_workflows()]
        first.close()

        second = Runtime.open(journal_path)
        try:
            services_after = [s.to_dict() for s in second.registry.list_services()]
            workflows_after = [w.to_dict() for w in second.registry.list_workflows()]
            assert services_after == services_before
            assert workflows_after == workflows_before
            # Retired state survived; latest active is 1.1.0.
            assert str(second.registry.get_deployment("wf").version) == "1.1.0"
        finally:
            second.close()

    def test_terminal_instances_recover_as_history(self, journal_path):
        first = Runtime.open(journal_path)
        register_echo(first, "alpha")
        first.registry.deploy_workflow(chain_doc("hist", [("a", "alpha")]),
                                       "1.0.0")
        done = first.engine.start_workflow("hist", variables={"v": 9})
        first.engine.run_to_completion(done)
        cancelled = first.engine.start_workflow("hist")
        first.engine.cancel_instance(cancelled)
        first.close()

        second = Runtime.open(journal_path)
        try:
            hist = second.engine.get_instance(done.instance_id)
            assert hist.status is InstanceStatus.COMPLETED
            assert hist.snapshot() == done.snapshot()
            assert second.engine.get_instance(
                cancelled.instance_id).status is InstanceStatus.CANCELLED
        finally:
            second.close()


class TestResumeOverRealSockets:
    def test_resume_reinvokes_inflight_remote_task(self, journal_path):
        spec = SimServiceSpec("remote", script=[ScriptEntry.respond({"ok": 1})])
        with spawn_fleet([spec]) as fleet:
            first = Runtime.open(journal_path)
            fleet.register_all(first.registry)
            first.registry.deploy_workflow(chain_doc("rr", [("a", "remote")]),
                                           "1.0.0")
            instance = first.engine.start_instance(
                first.registry.get_deployment("rr").definition)
            first.engine.step(instance)
            first.engine.step(instance)  # submit; response will be dropped
            first.engine.shutdown(wait=True)
            first.journal.close()

            second = Runtime.open(journal_path)
            try:
                recovered = second.engine.get_instance(instance.instance_id)
                deadline = time.time() + 5
                while (recovered.status is InstanceStatus.RUNNING
                       and time.time() < deadline):
                    time.sleep(0.02)
                assert recovered.status is InstanceStatus.COMPLETED
                # The fleet outlived the engine: both invocations landed.
                assert len(fleet.arrivals("remote")) == 2
            finally:
                second.close()
