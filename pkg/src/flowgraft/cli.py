"""flowgraft command line.

`serve` runs the engine; everything else is a client of a running
engine's HTTP API (`--server` or FLOWGRAFT_SERVER), except `validate`,
which works offline on a local file.

Exit codes: 0 success; 1 operational failure (unreachable server, API
error, parse failure, faulted/cancelled run); 2 `validate` found
diagnostics.
"""

from __future__ import annotations

import json
import sys
import time

import click
import requests

from .errors import ParseError
from .parser import analyze

DEFAULT_LISTEN = "127.0.0.1:7070"


def _fail(message: str, code: int = 1) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _request(method: str, server: str, path: str, **kwargs):
    url = server.rstrip("/") + path
    try:
        resp = requests.request(method, url, timeout=30, **kwargs)
    except requests.RequestException as exc:
        _fail(f"cannot reach engine at {server}: {exc}")
    if resp.status_code >= 400:
        try:
            body = resp.json()
            detail = f"{body.get('code', resp.status_code)}: {body.get('detail', '')}"
            if body.get("diagnostics"):
                detail += "".join(
                    f"\n  {d['severity']} {d['code']} {d['subjectId']}: {d['message']}"
                    for d in body["diagnostics"])
        except ValueError:
            detail = f"HTTP {resp.status_code}"
        _fail(detail)
    return resp


def _split_listen(listen: str) -> tuple[str, int]:
    host, _, port = listen.rpartition(":")
    if not host or not port.isdigit():
        _fail(f"--listen must be host:port, got {listen!r}")
    return host, int(port)


def _table(rows: list[dict], columns: list[str]) -> str:
    widths = {c: max(len(c), *(len(str(r.get(c, ""))) for r in rows))
              for c in columns} if rows else {c: len(c) for c in columns}
    lines = ["  ".join(c.ljust(widths[c]) for c in columns)]
    for r in rows:
        lines.append("  ".join(str(r.get(c, "")).ljust(widths[c])
                               for c in columns))
    return "\n".join(lines)


server_option = click.option(
    "--server", envvar="FLOWGRAFT_SERVER",
    default=f"http://{DEFAULT_LISTEN}", show_default=True,
    help="engine API base URL")
json_option = click.option("--json", "as_json", is_flag=True,
                           help="machine-readable output")


@click.group()
def main() -> None:
    """BPMN-driven microservice orchestration engine."""


@main.command()
@click.option("--listen", envvar="FLOWGRAFT_LISTEN", default=DEFAULT_LISTEN,
              show_default=True, help="host:port to bind")
@click.option("--journal", envvar="FLOWGRAFT_JOURNAL", required=True,
              type=click.Path(), help="journal file path")
@click.option("--sync", type=click.Choice(["always", "batch"]),
              default="always", show_default=True,
              help="journal durability mode")
def serve(listen: str, journal: str, sync: str) -> None:
    """Run the engine and its HTTP API."""
    from .runtime import Runtime
    from .server import serve as run_server

    host, port = _split_listen(listen)
    runtime = Runtime.open(journal, sync=sync)
    click.echo(f"flowgraft engine on http://{host}:{port} (journal {journal})")
    try:
        run_server(runtime, host, port)
    finally:
        runtime.close()


@main.command()
@click.argument("file", type=click.Path(exists=True))
@click.option("--version", default="1.0.0", show_default=True)
@server_option
@json_option
def deploy(file: str, version: str, server: str, as_json: bool) -> None:
    """Deploy a BPMN workflow document."""
    with open(file, "rb") as fh:
        document = fh.read()
    resp = _request("POST", server, f"/workflows?version={version}",
                    data=document,
                    headers={"Content-Type": "application/xml"})
    body = resp.json()
    if as_json:
        click.echo(json.dumps(body))
    else:
        click.echo(f"deployed {body['definitionId']} {body['version']}")


@main.group()
def services() -> None:
    """Manage the service repository pool."""


@services.command("register")
@click.option("--id", "service_id", required=True)
@click.option("--version", required=True)
@click.option("--url", "base_url", default=None, help="remote base URL")
@click.option("--path", default="/", show_default=True)
@click.option("--function", "function_ref", default=None,
              help="local function ref instead of a URL")
@server_option
@json_option
def services_register(service_id: str, version: str, base_url: str | None,
                      path: str, function_ref: str | None, server: str,
                      as_json: bool) -> None:
    """Register one service version."""
    if (base_url is None) == (function_ref is None):
        _fail("exactly one of --url or --function is required")
    payload: dict = {"serviceId": service_id, "version": version}
    if base_url:
        payload.update(baseUrl=base_url, path=path)
    else:
        payload["functionRef"] = function_ref
    resp = _request("POST", server, "/services", json=payload)
    if as_json:
        click.echo(json.dumps(resp.json()))
    else:
        click.echo(f"registered {service_id} {version}")


@services.command("list")
@server_option
@json_option
def services_list(server: str, as_json: bool) -> None:
    """List registered services."""
    body = _request("GET", server, "/services").json()
    if as_json:
        click.echo(json.dumps(body))
        return
    rows = [{"service": s["serviceId"], "version": s["version"],
             "target": s["target"].get("baseUrl",
                                       s["target"].get("functionRef", "")),
             "health": s["health"]} for s in body["services"]]
    click.echo(_table(rows, ["service", "version", "target", "health"]))


@main.command()
@click.argument("definition_id")
@click.option("--version", default=None, help="workflow version (default: latest)")
@click.option("--vars", "variables", default="{}", show_default=True,
              help="initial variables as JSON")
@click.option("--watch", is_flag=True, help="poll status until terminal")
@server_option
@json_option
def run(definition_id: str, version: str | None, variables: str, watch: bool,
        server: str, as_json: bool) -> None:
    """Start a workflow instance."""
    try:
        parsed_vars = json.loads(variables)
    except json.JSONDecodeError as exc:
        _fail(f"--vars is not valid JSON: {exc}")
    payload: dict = {"definitionId": definition_id, "variables": parsed_vars}
    if version:
        payload["version"] = version
    body = _request("POST", server, "/instances", json=payload).json()
    instance_id = body["instanceId"]
    if not watch:
        if as_json:
            click.echo(json.dumps(body))
        else:
            click.echo(instance_id)
        return
    last_status = None
    while True:
        snap = _request("GET", server, f"/instances/{instance_id}").json()
        if snap["status"] != last_status:
            last_status = snap["status"]
            click.echo(f"{instance_id} {last_status}")
        if last_status != "Running":
            break
        time.sleep(0.2)
    if as_json:
        click.echo(json.dumps(snap))
    if last_status != "Completed":
        sys.exit(1)


@main.group()
def instances() -> None:
    """Inspect and control running instances."""


@instances.command("list")
@server_option
@json_option
def instances_list(server: str, as_json: bool) -> None:
    body = _request("GET", server, "/instances").json()
    if as_json:
        click.echo(json.dumps(body))
        return
    rows = [{"instance": i["instanceId"], "workflow": i["definitionId"],
             "version": i["definitionVersion"], "status": i["status"]}
            for i in body["instances"]]
    click.echo(_table(rows, ["instance", "workflow", "version", "status"]))


@instances.command("show")
@click.argument("instance_id")
@server_option
def instances_show(instance_id: str, server: str) -> None:
    snap = _request("GET", server, f"/instances/{instance_id}").json()
    click.echo(json.dumps(snap, indent=2, sort_keys=True))


@instances.command("cancel")
@click.argument("instance_id")
@server_option
def instances_cancel(instance_id: str, server: str) -> None:
    snap = _request("POST", server, f"/instances/{instance_id}/cancel").json()
    click.echo(f"{instance_id} {snap['status']}")


@main.command()
@click.argument("file", type=click.Path(exists=True))
def validate(file: str) -> None:
    """Parse and statically check a BPMN file (offline).

    Exit 0 when clean, 2 with one line per diagnostic, 1 when the
    document does not parse at all.
    """
    with open(file, "rb") as fh:
        document = fh.read()
    try:
        diagnostics = analyze(document)
    except ParseError as exc:
        _fail(f"{exc.kind}: {exc.message}")
    if not diagnostics:
        sys.exit(0)
    for d in diagnostics:
        click.echo(f"{d.severity.value} {d.code.value} {d.subject_id}: "
                   f"{d.message}")
    sys.exit(2)


@main.group()
def monitor() -> None:
    """Engine monitoring."""


@monitor.command("circuits")
@server_option
@json_option
def monitor_circuits(server: str, as_json: bool) -> None:
    body = _request("GET", server, "/monitor/circuits").json()
    if as_json:
        click.echo(json.dumps(body))
        return
    rows = []
    for key, snap in sorted(body["circuits"].items()):
        detail = {k: v for k, v in snap.items()
                  if k not in ("state", "totalCalls")}
        rows.append({"service": key, "state": snap["state"],
                     "calls": snap["totalCalls"],
                     "detail": json.dumps(detail) if detail else ""})
    click.echo(_table(rows, ["service", "state", "calls", "detail"]))


@main.command()
@click.option("--fleet", "fleet_file", required=True,
              type=click.Path(exists=True), help="fleet config JSON")
@click.option("--register-to", "register_to", default=None,
              help="engine URL to auto-register the fleet services with")
def fleet(fleet_file: str, register_to: str | None) -> None:
    """Run a scripted sim-service fleet for demos."""
    from .sim import load_fleet_config, spawn_fleet

    specs = load_fleet_config(fleet_file)
    running = spawn_fleet(specs)
    try:
        for reg in running.registrations():
            click.echo(f"{reg['serviceId']} {reg['version']} at "
                       f"{reg['baseUrl']}{reg['path']}")
            if register_to:
                _request("POST", register_to, "/services", json=reg)
        click.echo("fleet running; Ctrl-C to stop")
        while True:
            time.sleep(1)
    except KeyboardInterrupt:
        pass
    finally:
        running.stop()


if __name__ == "__main__":
    main()
