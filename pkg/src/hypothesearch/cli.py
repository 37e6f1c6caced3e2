"""Command-line entry points: run, score, report, review, serve."""

from __future__ import annotations

from pathlib import Path

import click

from .backends import (
    GenerationRequest,
    LiveBackend,
    ReplayBackend,
    ScriptedBackend,
    Stage,
    Transcript,
)
from .errors import HypothesearchError
from .evalharness import ReferenceRow, RunConfig, RunLedger, report as build_report, run as run_harness, score as score_ledger
from .executor import ENTRY_POINTS
from .oracle import OracleBackend
from .prompts import PromptLibrary
from .reduce_store import ReviewHub, SelectionRecord
from .search import PRESETS, SolveContext
from .task_model import (
    Domain,
    load_tasks,
    render_value,
    sample_subset,
    validate_value,
)

_PRESET_DOMAINS = {"arc": Domain.ARC, "1darc": Domain.ARC1D,
                   "sygus": Domain.SYGUS, "listfn": Domain.LISTFN}


def _preset_domain(preset: str) -> Domain:
    return _PRESET_DOMAINS[preset.split("-", 1)[0]]


def _mock_backend() -> ScriptedBackend:
    """Deterministic stand-in: identity programs, placeholder prose."""

    def script(req: GenerationRequest) -> list[str]:
        if req.stage in (Stage.PROGRAM, Stage.REVISE):
            prompt = req.messages[0].content
            entry = next((e for e in ENTRY_POINTS if e in prompt), "transform_list")
            arg = {"transform_grid": "input_grid", "transform_string": "input_string",
                   "transform_list": "input_list"}[entry]
            src = f"```python\ndef {entry}({arg}):\n    return {arg}\n```"
            return [src] * req.n
        if req.stage in (Stage.DIRECT, Stage.COT):
            return ["[]"] * req.n
        return [f"placeholder rule {i}" for i in range(req.n)]

    return ScriptedBackend(script)


def _default_review_dir(ledger: Path) -> Path:
    return ledger.with_suffix(ledger.suffix + ".review")


@click.group()
def main():
    """Inductive-reasoning pipeline: hypothesis sampling, program synthesis,
    sandboxed verification, and evaluation."""


@main.command("run")
@click.option("--preset", required=True, type=click.Choice(sorted(PRESETS)))
@click.option("--dataset-dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--backend", "backend_name", required=True,
              type=click.Choice(["live", "replay", "mock", "oracle"]))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--transcript", "transcript_path", type=click.Path(dir_okay=False),
              help="Record (live/mock/oracle) or replay source (replay).")
@click.option("--run-id", default=None)
@click.option("--model", default="gpt-4", show_default=True)
@click.option("--base-url", default="https://api.openai.com/v1", show_default=True)
@click.option("--subset", type=int, default=None, help="Sample N task ids.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--review-dir", type=click.Path(file_okay=False), default=None)
@click.option("--selection-timeout", type=float, default=None,
              help="Seconds to wait for human selections (human_selected mode).")
def run_cmd(preset, dataset_dir, backend_name, out_path, transcript_path, run_id,
            model, base_url, subset, seed, workers, review_dir, selection_timeout):
    """Execute a preset over a task directory, writing a run ledger."""
    from dataclasses import replace

    search = PRESETS[preset]
    if selection_timeout is not None:
        search = replace(search, selection_timeout_s=selection_timeout)
    domain = _preset_domain(preset)
    tasks = load_tasks(dataset_dir, domain)
    if not tasks:
        raise click.ClickException(f"no *.json tasks in {dataset_dir}")

    task_ids: list[str] = []
    if subset:
        task_ids = sample_subset([t.id for t in tasks], subset, seed)

    transcript = None
    if backend_name == "replay":
        if not transcript_path:
            raise click.ClickException("--backend replay requires --transcript")
        backend = ReplayBackend(Transcript.load(Path(transcript_path)))
    else:
        if backend_name == "live":
            backend = LiveBackend(model, base_url=base_url)
        elif backend_name == "oracle":
            backend = OracleBackend()
        else:
            backend = _mock_backend()
        if transcript_path:
            transcript = Transcript(Path(transcript_path), backend_id=backend.name)

    out = Path(out_path)
    run_id = run_id or out.stem
    hub_dir = Path(review_dir) if review_dir else _default_review_dir(out)
    prompts = PromptLibrary()
    config = RunConfig(run_id=run_id, search=search, preset=preset,
                       seed=seed if subset else None, task_ids=task_ids,
                       template_hashes=prompts.hashes(),
                       backend_id=getattr(backend, "name", backend_name),
                       workers=workers)
    ctx = SolveContext(backend=backend, prompts=prompts, transcript=transcript,
                       review_hub=ReviewHub(hub_dir), run_id=run_id)
    try:
        ledger = run_harness(config, tasks, ctx, out)
    except HypothesearchError as e:
        raise click.ClickException(str(e))
    card = score_ledger(ledger)
    click.echo(f"run {run_id}: {card.solved}/{card.total} solved "
               f"({card.accuracy_display}%), ledger hash {ledger.hash()[:12]}")


@main.command("score")
@click.argument("ledger_path", type=click.Path(exists=True, dir_okay=False))
def score_cmd(ledger_path):
    """Print accuracy and counters for one ledger."""
    ledger = RunLedger.load(Path(ledger_path))
    card = score_ledger(ledger)
    domain = card.domain.value if card.domain else "mixed"
    click.echo(f"{ledger.label} [{domain}] mode={ledger.mode}")
    click.echo(f"  solved        {card.solved}/{card.total} ({card.accuracy_display}%)")
    click.echo(f"  verified      {card.verified}")
    click.echo(f"  false pos.    {card.false_positives}")
    click.echo(f"  skipped       {card.skipped}")
    click.echo(f"  errors        {card.errors}")


@main.command("report")
@click.argument("ledger_paths", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False),
              help="Also write the CSV table here.")
@click.option("--reference", "references", multiple=True,
              help="External comparison row as domain:label:value, e.g. "
                   "arc1d:'Direct (reported)':39.6")
def report_cmd(ledger_paths, csv_path, references):
    """Emit markdown result tables for one or more ledgers."""
    ledgers = [RunLedger.load(Path(p)) for p in ledger_paths]
    refs = []
    for spec_str in references:
        try:
            dom, label, value = spec_str.split(":", 2)
            refs.append(ReferenceRow(Domain(dom), label, value))
        except ValueError:
            raise click.ClickException(f"bad --reference {spec_str!r}")
    rep = build_report(ledgers, references=refs)
    click.echo(rep.markdown)
    if csv_path:
        Path(csv_path).write_text(rep.csv)


@main.command("review")
@click.option("--ledger", "ledger_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--review-dir", type=click.Path(file_okay=False), default=None)
@click.option("--annotator", default="cli", show_default=True)
def review_cmd(ledger_path, review_dir, annotator):
    """Interactively select hypotheses for tasks awaiting review."""
    ledger = RunLedger.load(Path(ledger_path))
    run_id = (ledger.header or {}).get("run_id") or Path(ledger_path).stem
    hub_dir = Path(review_dir) if review_dir else _default_review_dir(Path(ledger_path))
    hub = ReviewHub(hub_dir)
    pending = hub.list_pending(run_id)
    if not pending:
        click.echo("nothing pending")
        return
    for entry in pending:
        domain = Domain(entry["domain"])
        click.echo(f"\n=== task {entry['task_id']} ({domain.value}) ===")
        for i, ex in enumerate(entry["train"]):
            click.echo(f"--- example {i + 1} input ---")
            click.echo(render_value(validate_value(ex["input"], domain), domain))
            click.echo(f"--- example {i + 1} output ---")
            click.echo(render_value(validate_value(ex["output"], domain), domain))
        for i, h in enumerate(entry["hypotheses"]):
            click.echo(f"[{i + 1}] {h['text']}")
        answer = click.prompt(
            "choose hypotheses (comma-separated numbers, 'none', or 'skip')",
            default="skip")
        if answer.strip().lower() == "skip":
            continue
        if answer.strip().lower() == "none":
            chosen = ()
        else:
            try:
                indices = [int(x) - 1 for x in answer.split(",")]
                chosen = tuple(entry["hypotheses"][i]["id"] for i in indices)
            except (ValueError, IndexError):
                click.echo("unrecognized choice, skipping")
                continue
        hub.record_selection(SelectionRecord(run_id, entry["task_id"],
                                             annotator, chosen))
        click.echo("recorded")


@main.command("serve")
@click.option("--ledger", "ledger_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--review-dir", type=click.Path(file_okay=False), default=None)
@click.option("--ui-dir", type=click.Path(file_okay=False), default=None,
              help="Directory with the built review UI (served at /).")
@click.option("--port", type=int, default=8321, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
def serve_cmd(ledger_path, review_dir, ui_dir, port, host):
    """Serve the review API (and UI bundle, if built) over HTTP."""
    import uvicorn

    from .review_api import create_app

    ledger = RunLedger.load(Path(ledger_path))
    run_id = (ledger.header or {}).get("run_id") or Path(ledger_path).stem
    hub_dir = Path(review_dir) if review_dir else _default_review_dir(Path(ledger_path))
    static = Path(ui_dir) if ui_dir else None
    app = create_app(ReviewHub(hub_dir), {run_id: Path(ledger_path)},
                     static_dir=static)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
