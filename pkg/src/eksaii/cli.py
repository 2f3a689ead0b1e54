"""Command-line entry point: ``eksaii <command> ...``.

Exit codes: 0 success, 2 usage/config error, 3 data error, 4 internal
invariant violation.
"""

from __future__ import annotations

import functools
import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import io
from .cascade import CascadeConfig, eig_table, score_candidates
from .classifiers import RuleSet, build_pool, fit
from .data import concat
from .errors import ConfigError, EksaiiError
from .explain import dumps_document, render_explanation, render_llm_prompt
from .generators import GeneratorSpec, generate
from .harness import evaluate, mdg_protocol, sdg_protocol
from .pipeline import resolve_smote, train as train_model
from .resampling import balance_dataset


def _guard(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except EksaiiError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(exc.exit_code)
        except (click.exceptions.Exit, click.ClickException, SystemExit):
            raise
        except BrokenPipeError:
            # downstream reader closed early (e.g. piped into head)
            sys.stdout = open(os.devnull, "w")
            sys.exit(0)
        except Exception as exc:  # invariant violations and bugs
            click.echo(f"internal error: {type(exc).__name__}: {exc}", err=True)
            sys.exit(4)
    return wrapper


def _emit(obj, fmt: str, table: str) -> None:
    if fmt == "json":
        click.echo(json.dumps(obj, indent=2, sort_keys=True))
    else:
        click.echo(table)


def _cascade_cfg(path, root=None, seed=0) -> CascadeConfig:
    doc = io.load_config(path) if path else {}
    doc.setdefault("seed", seed)
    if root is not None:
        doc["force_root"] = root
    return CascadeConfig.from_config(doc)


def _smote_setting(value):
    if value is None or value == "none":
        return None
    if value == "full":
        return "full"
    doc = io.load_config(value)
    return doc.get("targets", doc)


def _report_table(rep, title=None) -> str:
    lines = [title] if title else []
    lines.append(f"accuracy  {rep.accuracy:.4f}")
    lines.append(f"macro_f1  {rep.macro_f1:.4f}")
    if rep.effort is not None:
        lines.append(f"effort    {rep.effort}")
    lines.append(f"{'class':<16}{'precision':>10}{'recall':>10}{'f1':>10}{'support':>9}")
    for c, m in rep.per_class.items():
        lines.append(f"{c:<16}{m.precision:>10.4f}{m.recall:>10.4f}{m.f1:>10.4f}{m.support:>9d}")
    lines.append("confusion (rows = true, cols = predicted): " + ", ".join(rep.labels))
    for label, row in zip(rep.labels, rep.confusion):
        lines.append(f"  {label:<14}" + " ".join(f"{v:>5d}" for v in row))
    return "\n".join(lines)


def _eig_lines(rows) -> str:
    out = [f"{'node':<8}{'depth':>6}{'n':>7}  {'classifier':<20}{'eig':>10}  chosen"]
    for node_id, depth, n, cid, e, chosen in rows:
        out.append(f"{node_id:<8}{depth:>6}{n:>7}  {cid:<20}{e:>10.4f}  {'*' if chosen else ''}")
    return "\n".join(out)


def _load_domains(data_dir):
    files = sorted(Path(data_dir).glob("*.csv"))
    if not files:
        raise ConfigError(f"{data_dir}: no .csv dataset files")
    parts = []
    for f in files:
        ds = io.load_dataset(f)
        if all(d is None for d in ds.domains):
            ds.domains = np.full(len(ds), f.stem, dtype=object)
        parts.append(ds)
    merged = concat(parts)
    merged = merged.relabel(merged.y, sorted(merged.class_set, key=io.natural_key))
    return merged.split_by_domain()


def _train_fn(specs, cfg, smote, seed, baseline):
    if baseline is None:
        return lambda ds: train_model(ds, specs, cfg, smote=smote, seed=seed).predict_batch
    spec = next((s for s in specs if s.id == baseline), None)
    if spec is None or spec.one_vs_rest:
        raise ConfigError(f"baseline {baseline!r} must name a plain (non one-vs-rest) pool entry")
    return lambda ds: fit(spec, balance_dataset(ds, resolve_smote(ds, smote, seed)), seed).predict_batch


@click.group()
def cli():
    """Entropy-imbalance-gain cascade of data and knowledge classifiers."""


@cli.command("generate")
@click.option("--spec", "spec_path", required=True, type=click.Path(), help="Generator config (YAML/JSON).")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@_guard
def generate_(spec_path, out_dir):
    """Write one dataset file per synthetic domain."""
    spec = GeneratorSpec.from_config(io.load_config(spec_path))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, ds in generate(spec).items():
        io.save_dataset(ds, out / f"{name}.csv")
        click.echo(f"{out / f'{name}.csv'}\t{len(ds)} rows\t{ds.class_counts()}")


@cli.command("train")
@click.option("--data", "data_path", required=True, type=click.Path())
@click.option("--pool", "pool_path", required=True, type=click.Path())
@click.option("--cascade", "cascade_path", type=click.Path(), default=None)
@click.option("--smote", default=None, help="'full', 'none', or a config mapping class -> target count.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--root", default=None, help="Force this classifier id at the root.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["table", "json"]), default="table")
@_guard
def train_cmd(data_path, pool_path, cascade_path, smote, seed, root, out_path, fmt):
    """Balance, fit the pool, grow the cascade and save a bundle."""
    data = io.load_dataset(data_path)
    specs = io.pool_specs_from_config(io.load_config(pool_path))
    cfg = _cascade_cfg(cascade_path, root, seed)
    model = train_model(data, specs, cfg, smote=_smote_setting(smote), seed=seed,
                        provenance={"dataset_digest": io.file_digest(data_path)})
    io.save_model(model, out_path)
    rows = eig_table(model.tree)
    _emit(
        {"eig_table": [dict(zip(("node", "depth", "n", "classifier", "eig", "chosen"), r)) for r in rows],
         "bundle": str(out_path)},
        fmt,
        _eig_lines(rows) + "\n\n" + model.tree.describe() + f"\n\nbundle written to {out_path}",
    )


@cli.command("eig-report")
@click.option("--data", "data_path", required=True, type=click.Path())
@click.option("--pool", "pool_path", required=True, type=click.Path())
@click.option("--cascade", "cascade_path", type=click.Path(), default=None)
@click.option("--smote", default=None)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--format", "fmt", type=click.Choice(["table", "json"]), default="table")
@_guard
def eig_report(data_path, pool_path, cascade_path, smote, seed, fmt):
    """EIG of every pool member on the full (root) training set, best first."""
    data = io.load_dataset(data_path)
    specs = io.pool_specs_from_config(io.load_config(pool_path))
    cfg = _cascade_cfg(cascade_path, None, seed)
    balanced = balance_dataset(data, resolve_smote(data, _smote_setting(smote), seed))
    pool = build_pool(specs, balanced, seed)
    scores = score_candidates(balanced, pool, cfg)
    branch = {m.id: m.branch for m in pool}
    ranked = sorted(enumerate(scores), key=lambda p: (-p[1].eig, p[0]))
    lines = [f"{'rank':<6}{'classifier':<20}{'branch':<11}{'eig':>10}"]
    for rank, (_, s) in enumerate(ranked, 1):
        lines.append(f"{rank:<6}{s.classifier_id:<20}{branch[s.classifier_id]:<11}{s.eig:>10.4f}")
    _emit([{"classifier": s.classifier_id, "branch": branch[s.classifier_id], "eig": s.eig} for _, s in ranked],
          fmt, "\n".join(lines))


@cli.command("evaluate")
@click.option("--bundle", "bundle_path", required=True, type=click.Path())
@click.option("--data", "data_path", required=True, type=click.Path())
@click.option("--flag-class", default=None, help="Class whose predictions need expert review.")
@click.option("--format", "fmt", type=click.Choice(["table", "json"]), default="table")
@_guard
def evaluate_cmd(bundle_path, data_path, flag_class, fmt):
    """Accuracy, per-class precision/recall/F1, confusion and expert effort."""
    model = io.load_model(bundle_path)
    data = io.load_dataset(data_path, class_set=model.class_set)
    _check_features(model, data)
    if model.provenance.get("dataset_digest") == io.file_digest(data_path):
        click.echo("note: evaluating on the bundle's own training file", err=True)
    rep = evaluate(model.predict_batch, data, flag_class=flag_class)
    _emit(rep.to_dict(), fmt, _report_table(rep))


def _check_features(model, data):
    if tuple(data.feature_names) != tuple(model.feature_names):
        raise ConfigError(f"dataset features {list(data.feature_names)} do not match the bundle's "
                          f"{list(model.feature_names)}")


def _protocol_options(fn):
    for opt in reversed([
        click.option("--data-dir", required=True, type=click.Path(file_okay=False)),
        click.option("--pool", "pool_path", required=True, type=click.Path()),
        click.option("--cascade", "cascade_path", type=click.Path(), default=None),
        click.option("--smote", default=None),
        click.option("--seed", default=0, show_default=True, type=int),
        click.option("--baseline", default=None, help="Evaluate this single pool entry instead of the cascade."),
        click.option("--format", "fmt", type=click.Choice(["table", "json"]), default="table"),
    ]):
        fn = opt(fn)
    return fn


@cli.command("sdg")
@_protocol_options
@click.option("--source", required=True, help="Training domain, or 'all' for every domain in turn.")
@_guard
def sdg_cmd(data_dir, pool_path, cascade_path, smote, seed, baseline, fmt, source):
    """Train on one domain, test on each of the others."""
    domains = _load_domains(data_dir)
    specs = io.pool_specs_from_config(io.load_config(pool_path))
    train_fn = _train_fn(specs, _cascade_cfg(cascade_path, None, seed), _smote_setting(smote), seed, baseline)
    sources = list(domains) if source == "all" else [source]
    out, lines = {}, []
    for s in sources:
        res = sdg_protocol(domains, s, train_fn)
        out[s] = {"average": res.average, "targets": {d: r.to_dict() for d, r in res.reports.items()}}
        cells = "  ".join(f"{d}={r.accuracy:.4f}" for d, r in res.reports.items())
        lines.append(f"source {s:<12} {cells}  avg={res.average:.4f}")
    if len(sources) > 1:
        grand = float(np.mean([v["average"] for v in out.values()]))
        out["_overall_average"] = grand
        lines.append(f"overall average {grand:.4f}")
    _emit(out, fmt, "\n".join(lines))


@cli.command("mdg")
@_protocol_options
@click.option("--held-out", required=True, help="Held-out domain, or 'all' for leave-one-out.")
@_guard
def mdg_cmd(data_dir, pool_path, cascade_path, smote, seed, baseline, fmt, held_out):
    """Train on every domain but one, test on the held-out domain."""
    domains = _load_domains(data_dir)
    specs = io.pool_specs_from_config(io.load_config(pool_path))
    train_fn = _train_fn(specs, _cascade_cfg(cascade_path, None, seed), _smote_setting(smote), seed, baseline)
    targets = list(domains) if held_out == "all" else [held_out]
    out, lines = {}, []
    for d in targets:
        rep = mdg_protocol(domains, d, train_fn)
        out[d] = rep.to_dict()
        lines.append(f"held-out {d:<12} accuracy={rep.accuracy:.4f} macro_f1={rep.macro_f1:.4f}")
    if len(targets) > 1:
        avg = float(np.mean([out[d]["accuracy"] for d in targets]))
        out["_average"] = avg
        lines.append(f"average accuracy {avg:.4f}")
    _emit(out, fmt, "\n".join(lines))


@cli.command("predict")
@click.option("--bundle", "bundle_path", required=True, type=click.Path())
@click.option("--data", "data_path", required=True, type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["table", "json"]), default="table")
@_guard
def predict_cmd(bundle_path, data_path, fmt):
    """Per-instance predicted labels."""
    model = io.load_model(bundle_path)
    data = io.load_dataset(data_path, class_set=None)
    _check_features(model, data)
    preds = model.predict_batch(data.X)
    _emit([{"id": i, "prediction": p} for i, p in zip(data.ids, preds)], fmt,
          "id\tprediction\n" + "\n".join(f"{i}\t{p}" for i, p in zip(data.ids, preds)))


def _rules_from(model, rules_path):
    if rules_path:
        doc = io.load_config(rules_path)
        return RuleSet.from_config(doc.get("rules", []), doc.get("default_class", ""))
    merged = []
    for m in model.pool:
        if m.kind == "rule_based":
            merged.extend(m.ruleset.rules)
    return RuleSet(tuple(merged), "") if merged else None


@cli.command("explain")
@click.option("--bundle", "bundle_path", required=True, type=click.Path())
@click.option("--data", "data_path", required=True, type=click.Path())
@click.option("--rules", "rules_path", type=click.Path(), default=None,
              help="Expert rules whose thresholds are cited next to feature values.")
@click.option("--facts", "facts_path", type=click.Path(), default=None,
              help="Text file, one clinical fact per line, copied into the prompt document.")
@_guard
def explain_cmd(bundle_path, data_path, rules_path, facts_path):
    """Prediction, explanation text and prompt document for every row."""
    model = io.load_model(bundle_path)
    data = io.load_dataset(data_path, class_set=None)
    _check_features(model, data)
    rules = _rules_from(model, rules_path)
    facts = []
    if facts_path:
        facts = [ln.strip() for ln in Path(facts_path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    for i in range(len(data)):
        trace = model.predict_with_trace(data.X[i])
        click.echo(f"=== {data.ids[i]} ===")
        click.echo(render_explanation(trace, rules))
        click.echo("--- prompt ---")
        click.echo(dumps_document(render_llm_prompt(trace, None, facts)))


def main():
    cli()


if __name__ == "__main__":
    main()
