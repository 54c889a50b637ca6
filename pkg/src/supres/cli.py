"""Command-line client for the solver service.

The CLI is a thin client: it parses a YAML run config, applies overrides,
posts the request to the service API and writes the response to files.  By
default it mounts the application in-process (no socket); point --server at
a running `supres serve` instance to use a remote one.

Exit codes: 0 success, 1 validation error, 2 numerical failure,
3 check-suite failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import httpx

from .config import apply_overrides, load_config
from .errors import ConfigError

_BASE_SECTIONS = ("schema_version", "model", "solver", "output")
_COMMANDS = {
    "solve-sell": ("/solve/sell", _BASE_SECTIONS),
    "solve-buy": ("/solve/buy", _BASE_SECTIONS),
    "simulate": ("/simulate", ("schema_version", "model", "solver", "mc", "simulate")),
    "sweep": ("/sweep", ("schema_version", "model", "solver", "mc", "sweep")),
    "check": ("/check", ("schema_version", "model", "solver", "mc", "mc_checks")),
}


class _InProcessTransport(httpx.BaseTransport):
    """Run requests against the ASGI app without a socket.

    Bridges the sync client onto ASGITransport by draining the async
    response inside a private event loop per request.
    """

    def __init__(self, app):
        self._asgi = httpx.ASGITransport(app=app)

    def handle_request(self, request: httpx.Request) -> httpx.Response:
        import asyncio

        async def _go():
            resp = await self._asgi.handle_async_request(request)
            await resp.aread()
            return resp

        resp = asyncio.run(_go())
        return httpx.Response(status_code=resp.status_code, headers=resp.headers,
                              content=resp.content, request=request)


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=None)
    from .api import create_app

    return httpx.Client(transport=_InProcessTransport(create_app()),
                        base_url="http://supres.local", timeout=None)


def _emit_error(payload: dict) -> None:
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")


def _fmt_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, int):
        return repr(float(v))
    return str(v)


def _write_csv(path: Path, columns: list, rows: list) -> None:
    lines = [",".join(columns)]
    lines += [",".join(_fmt_cell(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _formats(config: dict) -> set:
    return set(config.get("output", {}).get("formats", ["json", "csv"]))


def _post(command: str, config: dict, server: str | None) -> dict:
    path, sections = _COMMANDS[command]
    payload = {k: config[k] for k in sections if k in config}
    with _client(server) as client:
        resp = client.post(path, json=payload)
    if resp.status_code == 200:
        return resp.json()
    try:
        body = resp.json()
    except ValueError:
        body = {"error": {"kind": "numerical", "type": "HTTPError",
                          "message": resp.text[:500]}}
    if resp.status_code == 422:
        body = {"error": {"kind": "validation", "type": "RequestValidationError",
                          "message": json.dumps(body.get("detail", body))}}
    _emit_error(body)
    kind = body.get("error", {}).get("kind", "numerical")
    sys.exit(1 if kind == "validation" else 2)


def _run(command: str, config_path: str, overrides, out: str, server: str | None) -> None:
    try:
        config = apply_overrides(load_config(config_path), overrides)
    except ConfigError as exc:
        _emit_error({"error": {"kind": "validation", "type": "ConfigError",
                               "message": str(exc)}})
        sys.exit(1)

    record = _post(command, config, server)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    formats = _formats(config)

    if command in ("solve-sell", "solve-buy"):
        table = record.pop("value_table")
        if "json" in formats:
            _write_json(out_dir / "solution.json", record)
        if "csv" in formats:
            _write_csv(out_dir / "value_table.csv", table["columns"], table["rows"])
    elif command == "simulate":
        if "json" in formats:
            _write_json(out_dir / "mc_estimate.json", record)
        if "csv" in formats:
            est = record["estimate"]
            cols = ["mean", "std_error", "n_paths", "seed", "truncated_fraction"]
            _write_csv(out_dir / "mc_estimate.csv", cols, [[est[c] for c in cols]])
    elif command == "sweep":
        if "json" in formats:
            _write_json(out_dir / "sweep.json", record)
        if "csv" in formats:
            cols = ["m", "mean", "std_error"]
            rows = [[e[c] for c in cols] for e in record["entries"]]
            _write_csv(out_dir / "sweep.csv", cols, rows)
    elif command == "check":
        _write_json(out_dir / "check_report.json", record)
        if "csv" in formats:
            rows = [[c["name"], c["passed"], c["detail"]] for c in record["checks"]]
            _write_csv(out_dir / "check_report.csv", ["name", "passed", "detail"], rows)
        if not record["passed"]:
            failed = [c["name"] for c in record["checks"] if not c["passed"]]
            _emit_error({"error": {"kind": "numerical", "type": "CheckSuiteFailure",
                                   "message": f"failed checks: {', '.join(failed)}"}})
            sys.exit(3)


def _add_command(group: click.Group, name: str) -> None:
    @group.command(name=name)
    @click.option("--config", "config_path", required=True,
                  type=click.Path(exists=False), help="YAML run configuration.")
    @click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE",
                  help="Override a config entry (dotted path).")
    @click.option("--out", default=".", show_default=True,
                  type=click.Path(file_okay=False), help="Output directory.")
    @click.option("--server", default=None, metavar="URL",
                  help="Remote service URL (default: in-process).")
    def _cmd(config_path, overrides, out, server, _name=name):
        _run(_name, config_path, overrides, out, server)

    _cmd.__doc__ = f"Run the {name} pipeline and write its output files."


@click.group()
def main() -> None:
    """Solver and simulator for two-regime support/resistance trading rules."""


for _name in _COMMANDS:
    _add_command(main, _name)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(host: str, port: int) -> None:
    """Run the HTTP service."""
    import uvicorn

    from .api import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
