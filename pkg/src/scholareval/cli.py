"""Command-line interface.

``scholareval run`` wraps the same job machinery as the HTTP service,
in-process, for single ideas and batch evaluation; ``scholareval eval``
hosts the metric commands.
"""

from __future__ import annotations

import json
import shutil
import sys
import tempfile
from pathlib import Path
from typing import Optional

import click
import requests

from .citations import invalidity_rate
from .config import build_environment, load_config, parse_judge_descriptor
from .dataset import load_scholarideas
from .errors import ScholarEvalError
from .gateway import LlmGateway
from .harness import (
    CoverageScore,
    aggregate_coverage,
    aggregate_coverage_by_discipline,
    judge_pairwise,
    score_coverage,
)
from .jobs import JobRunner, JobState, JobStore, payload_digest
from .runner import MODULES


@click.group()
def main():
    """Literature-grounded evaluation of research ideas."""


@main.command()
@click.option("--idea", "idea_path", required=True, type=click.Path(exists=True),
              help="File containing the research idea text.")
@click.option("--idea-id", default=None, help="Identifier for the idea (default: file stem).")
@click.option("--cutoff", default=None, help="Literature cutoff date (YYYY-MM-DD).")
@click.option("--modules", default="soundness,contribution",
              help="Comma-separated subset of: soundness, contribution.")
@click.option("--out", "out_dir", required=True, type=click.Path(),
              help="Directory for report artifacts.")
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--ablate-mre", is_flag=True, default=None,
              help="Skip reference harvesting and full-text extraction.")
@click.option("--ablate-pa", is_flag=True, default=None,
              help="Skip paper augmentation.")
@click.option("--ablate-pc", is_flag=True, default=None,
              help="Skip pairwise comparison.")
def run(idea_path, idea_id, cutoff, modules, out_dir, config_path,
        ablate_mre, ablate_pa, ablate_pc):
    """Evaluate one idea and write report.md / report.json / events.jsonl."""
    config = load_config(config_path).with_overrides(
        ablate_mre=ablate_mre, ablate_pa=ablate_pa, ablate_pc=ablate_pc
    )
    idea_file = Path(idea_path)
    idea_text = idea_file.read_text(encoding="utf-8")
    module_list = [m.strip() for m in modules.split(",") if m.strip()]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    workdir = Path(tempfile.mkdtemp(prefix="scholareval-job-"))
    try:
        store = JobStore(workdir)
        runner = JobRunner(
            store,
            environment_factory=lambda: build_environment(config),
            max_workers=1,
            job_timeout=config.job_timeout,
        )
        record, _ = store.create(
            idea_id=idea_id or idea_file.stem,
            idea_text=idea_text,
            cutoff_date=cutoff,
            modules=module_list,
            digest=payload_digest(idea_text, cutoff, module_list),
        )
        record = runner.run_sync(record.job_id)
        for name in ("report.md", "report.json", "events.jsonl"):
            source = workdir / record.job_id / name
            if source.exists():
                shutil.copyfile(source, out / name)
        if record.state is not JobState.DONE:
            raise click.ClickException(f"evaluation failed: {record.error}")
        click.echo(f"report written to {out / 'report.md'}")
    finally:
        shutil.rmtree(workdir, ignore_errors=True)


@main.command(name="run-dataset")
@click.option("--dataset", "dataset_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--cutoff", default=None, help="Cutoff applied to every idea.")
@click.option("--modules", default="soundness,contribution")
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
def run_dataset(dataset_dir, out_dir, cutoff, modules, config_path):
    """Evaluate every idea in a dataset tree; reports land as <idea_id>.md,
    ready for `eval coverage --reports`."""
    config = load_config(config_path)
    module_list = [m.strip() for m in modules.split(",") if m.strip()]
    out = Path(out_dir)
    workdir = Path(tempfile.mkdtemp(prefix="scholareval-batch-"))
    failures = 0
    try:
        store = JobStore(workdir)
        runner = JobRunner(
            store,
            environment_factory=lambda: build_environment(config),
            max_workers=1,
            job_timeout=config.job_timeout,
        )
        for idea, _ in load_scholarideas(dataset_dir):
            record, _ = store.create(
                idea_id=idea.id,
                idea_text=idea.text,
                cutoff_date=cutoff,
                modules=module_list,
            )
            record = runner.run_sync(record.job_id)
            if record.state is not JobState.DONE:
                failures += 1
                click.echo(f"{idea.id}\tFAILED\t{record.error}", err=True)
                continue
            target = out / f"{idea.id}.md"
            target.parent.mkdir(parents=True, exist_ok=True)
            shutil.copyfile(workdir / record.job_id / "report.md", target)
            click.echo(f"{idea.id}\tdone")
    finally:
        shutil.rmtree(workdir, ignore_errors=True)
    if failures:
        raise click.ClickException(f"{failures} ideas failed")


@main.command()
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8000, type=int)
def serve(config_path, host, port):
    """Start the HTTP service."""
    import uvicorn

    from .service import create_app

    config = load_config(config_path)
    uvicorn.run(create_app(config), host=host, port=port)


@main.group(name="eval")
def eval_group():
    """Metrics over generated reports."""


def _report_for(reports_dir: Path, idea_id: str) -> Optional[Path]:
    candidates = [
        reports_dir / f"{idea_id}.md",
        reports_dir / idea_id / "report.md",
        reports_dir / f"{idea_id.replace('/', '__')}.md",
    ]
    for path in candidates:
        if path.exists():
            return path
    return None


@eval_group.command()
@click.option("--dataset", "dataset_dir", required=True, type=click.Path(exists=True))
@click.option("--reports", "reports_dir", required=True, type=click.Path(exists=True))
@click.option("--judge", "judge_descriptor", required=True,
              help="fixture:<transcript>[:model] or remote:<model>[:base_url]")
@click.option("--out", "out_path", default=None, type=click.Path(),
              help="Write per-rubric TSV rows here as well as stdout.")
def coverage(dataset_dir, reports_dir, judge_descriptor, out_path):
    """Score every rubric against its idea's report; print rows and means."""
    backend = parse_judge_descriptor(judge_descriptor)
    gateway = LlmGateway()
    pairs = load_scholarideas(dataset_dir)
    reports_root = Path(reports_dir)

    rows: list[str] = ["idea_id\trubric_index\tscore"]
    scores: list[CoverageScore] = []
    skipped = 0
    for idea, rubrics in pairs:
        report_path = _report_for(reports_root, idea.id)
        if report_path is None:
            skipped += 1
            click.echo(f"warning: no report for {idea.id}", err=True)
            continue
        review = report_path.read_text(encoding="utf-8")
        for index, rubric in enumerate(rubrics):
            result = score_coverage(review, rubric, backend, gateway)
            scores.append(result)
            rows.append(f"{idea.id}\t{index}\t{result.score}")

    click.echo("\n".join(rows))
    if out_path:
        Path(out_path).write_text("\n".join(rows) + "\n", encoding="utf-8")
    if scores:
        click.echo(f"\noverall\t{aggregate_coverage(scores):.4f}\t(n={len(scores)})")
        for discipline, mean in aggregate_coverage_by_discipline(scores).items():
            click.echo(f"{discipline}\t{mean:.4f}")
    if skipped:
        click.echo(f"skipped {skipped} ideas without reports", err=True)


@eval_group.command()
@click.option("--report", "report_path", required=True, type=click.Path(exists=True))
@click.option("--timeout", default=10.0, type=float)
def invalidity(report_path, timeout):
    """Reference-invalidity rate (lower bound) for one report file."""
    text = Path(report_path).read_text(encoding="utf-8")
    session = requests.Session()
    try:
        rate = invalidity_rate(text, session)
    except ScholarEvalError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"invalidity_rate\t{rate:.4f}")


@eval_group.command()
@click.option("--a", "path_a", required=True, type=click.Path(exists=True))
@click.option("--b", "path_b", required=True, type=click.Path(exists=True))
@click.option("--judge", "judge_descriptor", required=True)
def pairwise(path_a, path_b, judge_descriptor):
    """Pairwise Evidence/Actionability/Depth judgment of two reports."""
    backend = parse_judge_descriptor(judge_descriptor)
    gateway = LlmGateway()
    verdict = judge_pairwise(
        Path(path_a).read_text(encoding="utf-8"),
        Path(path_b).read_text(encoding="utf-8"),
        backend,
        gateway,
    )
    for criterion, winner in verdict.winners().items():
        click.echo(f"{criterion}\t{winner.value}")


@main.command()
@click.option("--dataset", "dataset_dir", required=True, type=click.Path(exists=True))
def dataset_stats(dataset_dir):
    """Idea and rubric counts for a dataset tree."""
    pairs = load_scholarideas(dataset_dir)
    total = sum(len(rubrics) for _, rubrics in pairs)
    click.echo(f"ideas\t{len(pairs)}")
    click.echo(f"rubrics\t{total}")


if __name__ == "__main__":
    main()
