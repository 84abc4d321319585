"""Command-line entry points.

Every failure is reported as one JSON object on stderr
(``{"error": {"type", "message"}}``) with a non-zero exit code, so wrappers
never have to scrape tracebacks.  Commands that write artifacts are
deterministic under scripted backends: same inputs, same bytes.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click

from . import __version__
from .backends import ChatBackend, MockBackend, load_script
from .config import AppConfig, build_backend, load_config
from .dataset import compute_stats, load_dataset
from .engine import ClarifierPolicy, advance, handoff_payload, open_session
from .errors import ClarigateError
from .grammar import Summary, assemble_training_instances
from .metrics import (
    compute_execution_metrics,
    compute_metrics,
    read_eval_logs,
    read_execution_logs,
)
from .simulate import TONES, read_records, simulate_records, write_records
from .synthetic import write_bundled_data
from .taskgen import HashingEmbedder, dedup, generate_candidates


def _emit_error(exc: BaseException) -> None:
    payload = {"error": {"type": type(exc).__name__, "message": str(exc)}}
    click.echo(json.dumps(payload, ensure_ascii=False), err=True)


def _json_errors(f):
    """Turn expected failures into the machine-readable stderr contract."""

    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except (click.ClickException, click.Abort, SystemExit):
            raise
        except (ClarigateError, ValueError, OSError, json.JSONDecodeError) as exc:
            _emit_error(exc)
            sys.exit(1)

    return wrapper


def _load_app_config(ctx: click.Context) -> AppConfig:
    return load_config(ctx.obj.get("config_path"))


def _resolve_backend(
    ctx: click.Context, backend_name: str | None, mock_script: str | None
) -> ChatBackend:
    if mock_script is not None:
        return MockBackend(load_script(mock_script))
    config = _load_app_config(ctx)
    name = backend_name or config.service.default_backend
    if name not in config.backends:
        raise ValueError(
            f"backend {name!r} is not configured; pass --mock-script or add it "
            "to the config file"
        )
    return build_backend(config.backends[name])


def _backend_options(f):
    f = click.option(
        "--mock-script",
        type=click.Path(exists=True, dir_okay=False),
        default=None,
        help="Drive a scripted offline backend instead of a configured one.",
    )(f)
    f = click.option(
        "--backend", "backend_name", default=None, help="Configured backend name."
    )(f)
    return f


@click.group()
@click.version_option(version=__version__, prog_name="clarigate")
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="YAML config file.",
)
@click.pass_context
def main(ctx: click.Context, config_path: str | None):
    """Intention clarification gateway: judge, inquire, summarize, hand off."""
    ctx.ensure_object(dict)
    ctx.obj["config_path"] = config_path


@main.command()
@click.option("--task", required=True, help="The task to clarify.")
@_backend_options
@click.option("--max-rounds", type=int, default=None, help="Inquiry round cap.")
@click.option("--handoff", "show_handoff", is_flag=True, help="Print the handoff JSON.")
@click.pass_context
@_json_errors
def chat(ctx, task, backend_name, mock_script, max_rounds, show_handoff):
    """Clarify one task interactively; replies are read from stdin."""
    backend = _resolve_backend(ctx, backend_name, mock_script)
    config = _load_app_config(ctx)
    policy = ClarifierPolicy(
        max_rounds=max_rounds or config.policy.max_rounds,
        force_summary_at_cap=config.policy.force_summary_at_cap,
        parse_retries=config.policy.parse_retries,
    )
    session, move = open_session(task, backend, policy)
    while not isinstance(move, Summary):
        click.echo(f"Agent: {move.question}")
        if move.options:
            click.echo("       options: " + " | ".join(move.options))
        reply = click.prompt("You", type=str)
        move = advance(session, reply)
    click.echo(f"Summary: {move.summary}")
    for constraint in move.constraints:
        click.echo(f"  - {constraint}")
    if show_handoff:
        click.echo(json.dumps(handoff_payload(session), ensure_ascii=False))


@main.command()
@click.option(
    "--tasks",
    "tasks_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="JSONL task split to build conversations for.",
)
@click.option(
    "--assistant-script",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Mock script for the asker backend.",
)
@click.option(
    "--user-script",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Mock script for the simulated user backend.",
)
@click.option("--assistant-backend", default=None, help="Configured asker backend.")
@click.option("--user-backend", default=None, help="Configured user backend.")
@click.option(
    "--tones",
    default=",".join(TONES),
    show_default=True,
    help="Comma-separated user tones to simulate.",
)
@click.option("--max-rounds", type=int, default=5, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option(
    "--rejects",
    "rejects_path",
    type=click.Path(dir_okay=False),
    default=None,
    help="Where to write rejection audits (JSONL).",
)
@click.pass_context
@_json_errors
def simulate(
    ctx,
    tasks_path,
    assistant_script,
    user_script,
    assistant_backend,
    user_backend,
    tones,
    max_rounds,
    workers,
    out_path,
    rejects_path,
):
    """Construct conversation records for a task split with two personas."""
    asker = _resolve_backend(ctx, assistant_backend, assistant_script)
    user = _resolve_backend(ctx, user_backend, user_script)
    tasks = load_dataset(tasks_path)
    tone_list = [t.strip() for t in tones.split(",") if t.strip()]
    report = simulate_records(
        tasks, tone_list, asker, user, max_rounds=max_rounds, max_workers=workers
    )
    write_records(report.records, out_path)
    if rejects_path:
        with Path(rejects_path).open("w", encoding="utf-8") as f:
            for audit in report.rejections:
                f.write(json.dumps(audit, ensure_ascii=False) + "\n")
    click.echo(
        json.dumps(
            {"records": len(report.records), "rejections": len(report.rejections)}
        )
    )


@main.command("build-train-data")
@click.option(
    "--records",
    "records_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Conversation records (JSONL) to cut into instances.",
)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@_json_errors
def build_train_data(records_path, out_path):
    """Cut conversation records into cumulative training instances."""
    records = read_records(records_path)
    count = 0
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8") as f:
        for record in records:
            for instance in assemble_training_instances(record):
                f.write(json.dumps(instance.to_dict(), ensure_ascii=False) + "\n")
                count += 1
    click.echo(json.dumps({"records": len(records), "instances": count}))


@main.command("gen-tasks")
@click.option(
    "--seeds",
    "seeds_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Seed task descriptions, one per line.",
)
@click.option("--category", required=True)
@click.option("--n", "count", type=int, required=True, help="Candidates to produce.")
@_backend_options
@click.option("--k", type=int, default=4, show_default=True, help="Demonstrations per call.")
@click.option("--max-calls", type=int, default=20, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--no-dedup", is_flag=True, help="Skip embedding deduplication.")
@click.option("--threshold", type=float, default=0.8, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.pass_context
@_json_errors
def gen_tasks(
    ctx,
    seeds_path,
    category,
    count,
    backend_name,
    mock_script,
    k,
    max_calls,
    seed,
    no_dedup,
    threshold,
    out_path,
):
    """Generate new task candidates from seed demonstrations."""
    backend = _resolve_backend(ctx, backend_name, mock_script)
    seeds = [
        line.strip()
        for line in Path(seeds_path).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    candidates = generate_candidates(
        seeds, category, count, backend, k=k, max_calls=max_calls, seed=seed
    )
    generated = len(candidates)
    if not no_dedup:
        candidates = dedup(candidates, HashingEmbedder(), threshold=threshold)
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8") as f:
        for candidate in candidates:
            f.write(
                json.dumps(
                    {"text": candidate.text, "category": candidate.category},
                    ensure_ascii=False,
                )
                + "\n"
            )
    click.echo(json.dumps({"generated": generated, "kept": len(candidates)}))


@main.command("eval")
@click.option(
    "--logs",
    "logs_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Evaluation logs (JSONL).",
)
@click.option(
    "--execution-logs",
    "execution_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
)
@click.option(
    "--average",
    type=click.Choice(["macro", "micro"]),
    default="macro",
    show_default=True,
)
@_json_errors
def eval_command(logs_path, execution_path, average):
    """Score evaluation logs; prints the metric report as JSON."""
    report = compute_metrics(read_eval_logs(logs_path), average=average)
    payload = {"interaction": report.to_dict()}
    if execution_path:
        execution = compute_execution_metrics(read_execution_logs(execution_path))
        payload["execution"] = execution.to_dict()
    click.echo(json.dumps(payload, ensure_ascii=False, indent=2))


@main.command()
@click.option(
    "--data",
    "data_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Task split (JSONL).",
)
@click.option("--json", "as_json", is_flag=True, help="Emit JSON instead of a table.")
@_json_errors
def stats(data_path, as_json):
    """Summarize a task split: counts, level shares, option totals."""
    split_stats = compute_stats(load_dataset(data_path))
    if as_json:
        click.echo(json.dumps(split_stats.to_dict(), ensure_ascii=False, indent=2))
        return
    rows = split_stats.display_rows()
    width = max(len(label) for label, _ in rows)
    for label, value in rows:
        click.echo(f"{label:<{width}}  {value}")


@main.command("synth-data")
@click.option(
    "--out-dir",
    "out_dir",
    type=click.Path(file_okay=False),
    default="data",
    show_default=True,
)
@_json_errors
def synth_data(out_dir):
    """Regenerate the bundled synthetic splits and fixtures (deterministic)."""
    written = write_bundled_data(out_dir)
    click.echo(json.dumps({"written": [str(p) for p in written]}))


@main.command("show-config")
@click.pass_context
@_json_errors
def show_config(ctx):
    """Print the effective configuration after all precedence rules."""
    config = _load_app_config(ctx)
    payload = {
        "service": {
            "host": config.service.host,
            "port": config.service.port,
            "store_path": config.service.store_path,
            "snapshot_every": config.service.snapshot_every,
            "default_backend": config.service.default_backend,
            "auth_token_env": config.service.auth_token_env,
        },
        "policy": {
            "max_rounds": config.policy.max_rounds,
            "force_summary_at_cap": config.policy.force_summary_at_cap,
            "parse_retries": config.policy.parse_retries,
        },
        "backends": sorted(config.backends),
    }
    click.echo(json.dumps(payload, ensure_ascii=False, indent=2))


@main.command()
@click.option("--host", default=None, help="Bind address (overrides config).")
@click.option("--port", type=int, default=None, help="Port (overrides config).")
@click.option(
    "--store",
    "store_path",
    type=click.Path(dir_okay=False),
    default=None,
    help="Session event log path (overrides config).",
)
@click.option("--mock-script", type=click.Path(exists=True, dir_okay=False), default=None)
@click.pass_context
@_json_errors
def serve(ctx, host, port, store_path, mock_script):
    """Run the HTTP gateway."""
    import uvicorn

    from .service import create_app

    overrides: dict = {"service": {}}
    if host is not None:
        overrides["service"]["host"] = host
    if port is not None:
        overrides["service"]["port"] = port
    if store_path is not None:
        overrides["service"]["store_path"] = store_path
    config = load_config(ctx.obj.get("config_path"), overrides=overrides)
    backends = None
    if mock_script is not None:
        backends = {"mock": MockBackend(load_script(mock_script))}
    app = create_app(config, backends=backends)
    uvicorn.run(app, host=config.service.host, port=config.service.port)


if __name__ == "__main__":  # pragma: no cover
    main()
