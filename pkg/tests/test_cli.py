"""CLI behaviour: offline validate exit codes and client commands
against a live engine subprocess."""

from __future__ import annotations

import json

import pytest
from click.testing import CliRunner

from bpmn_builder import chain_doc
from conftest import FIXTURES
from flowgraft.cli import main
from flowgraft.sim import SimServiceSpec, spawn_fleet
from server_proc import EngineProc

runner = CliRunner()


class TestValidateCommand:
    def test_clean_file_exits_zero_silently(self):
        result = runner.invoke(main, ["validate",
                                      str(FIXTURES / "clean_chain3.bpmn")])
        assert result.exit_code == 0
        assert result.output == ""

    def test_diagnostics_exit_two_with_one_line_each(self):
        result = runner.invoke(main, ["validate",
                                      str(FIXTURES / "bad_cycle.bpmn")])
        assert result.exit_code == 2
        lines = result.output.strip().splitlines()
        assert len(lines) == 1
        assert "NON_TERMINATING_CYCLE" in lines[0]
        assert lines[0].startswith("Error ")

    def test_unparseable_file_exits_one(self, tmp_path):
        bad = tmp_path / "broken.bpmn"
        bad.write_bytes(b"<definitions><oops")
        result = runner.invoke(main, ["validate", str(bad)])
        assert result.exit_code == 1
        assert "XML_MALFORMED" in result.output

    def test_unsupported_element_exits_one(self, tmp_path):
        bad = tmp_path / "timer.bpmn"
        document = chain_doc("p", [("a", "s")]).replace(
            b"<serviceTask", b'<timerEvent id="t"/><serviceTask')
        bad.write_bytes(document)
        result = runner.invoke(main, ["validate", str(bad)])
        assert result.exit_code == 1
        assert "UNSUPPORTED_ELEMENT" in result.output


@pytest.fixture(scope="module")
def live(tmp_path_factory):
    """One engine subprocess plus an echo fleet, shared by client tests."""
    journal = tmp_path_factory.mktemp("cli") / "journal.ndjson"
    with spawn_fleet([SimServiceSpec("alpha"), SimServiceSpec("beta"),
                      SimServiceSpec("gamma")]) as fleet:
        with EngineProc(journal) as engine:
            yield engine, fleet


def cli(live_engine, *args):
    engine, _ = live_engine
    return runner.invoke(main, [*args, "--server", engine.base_url],
                         catch_exceptions=False)


class TestClientCommands:
    def test_register_deploy_run_watch(self, live, tmp_path):
        engine, fleet = live
        for reg in fleet.registrations():
            result = cli(live, "services", "register", "--id",
                         reg["serviceId"], "--version", reg["version"],
                         "--url", reg["baseUrl"], "--path", reg["path"])
            assert result.exit_code == 0, result.output

        listed = cli(live, "services", "list")
        assert listed.exit_code == 0
        assert "alpha" in listed.output and "gamma" in listed.output

        workflow = tmp_path / "chain.bpmn"
        workflow.write_bytes(chain_doc("cli-chain", [
            ("a", "alpha"), ("b", "beta"), ("c", "gamma")]))
        result = cli(live, "deploy", str(workflow), "--version", "1.0.0")
        assert result.exit_code == 0
        assert "deployed cli-chain 1.0.0" in result.output

        result = cli(live, "run", "cli-chain", "--vars", '{"x":1}', "--watch")
        assert result.exit_code == 0, result.output
        assert result.output.strip().endswith("Completed")

    def test_instances_list_show_cancel(self, live):
        engine, _ = live
        result = cli(live, "run", "cli-chain", "--vars", "{}")
        assert result.exit_code == 0
        instance_id = result.output.strip()

        listed = cli(live, "instances", "list")
        assert instance_id in listed.output

        shown = cli(live, "instances", "show", instance_id)
        assert shown.exit_code == 0
        snapshot = json.loads(shown.output)
        assert snapshot["instanceId"] == instance_id

        cancel = cli(live, "instances", "cancel", instance_id)
        # Probably already finished; either way the verb must answer cleanly.
        assert cancel.exit_code in (0, 1)

    def test_run_json_output(self, live):
        result = cli(live, "run", "cli-chain", "--vars", "{}", "--json")
        assert result.exit_code == 0
        body = json.loads(result.output)
        assert body["status"] in ("Running", "Completed")

    def test_monitor_circuits_table(self, live):
        result = cli(live, "monitor", "circuits")
        assert result.exit_code == 0
        assert "state" in result.output

    def test_bad_vars_json_fails_fast(self, live):
        result = runner.invoke(main, ["run", "x", "--vars", "{oops"])
        assert result.exit_code == 1
        assert "not valid JSON" in result.output

    def test_unreachable_server_exits_one(self):
        result = runner.invoke(main, ["services", "list", "--server",
                                      "http://127.0.0.1:1"])
        assert result.exit_code == 1
        assert "cannot reach engine" in result.output

    def test_api_error_rendered(self, live, tmp_path):
        workflow = tmp_path / "dup.bpmn"
        workflow.write_bytes(chain_doc("cli-chain", [("a", "alpha")]))
        result = cli(live, "deploy", str(workflow), "--version", "1.0.0")
        assert result.exit_code == 1
        assert "DUPLICATE_VERSION" in result.output
