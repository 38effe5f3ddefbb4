"""Command-line interface.

Subcommands: train, score, sanitize, analyze, build-dataset, serve. Each is
a thin layer over the core package; score and sanitize can instead talk to a
running gateway via --server. Exit codes: 0 success, 1 usage error, 2
runtime error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from safegate import analysis, datasets
from safegate.errors import SafegateError
from safegate.recognizer import (
    TrainingConfig,
    default_hidden,
    forward,
    init_recognizer,
    load_params,
    make_scorer,
    persist_params,
    train as train_recognizer,
)
from safegate.recognizer.network import classify
from safegate.encoding import ReferenceEncoder, ReferenceEncoderConfig, RemoteEncoder, extract_eos
from safegate.search import SanitizeStatus, SearchConfig, safe_beam_search
from safegate.service.config import ENV_MODEL, load_gateway_config, parse_listen_addr


def _build_encoder(kind: str, remote_url: str | None, dim: int, max_len: int, lexicon: str | None):
    if kind == "remote":
        if not remote_url:
            raise click.UsageError("--remote-url is required with --encoder remote")
        return RemoteEncoder(remote_url, max_len=max_len)
    words: frozenset[str] = frozenset()
    if lexicon:
        words = frozenset(
            w.strip().lower() for w in Path(lexicon).read_text(encoding="utf-8").split() if w.strip()
        )
    return ReferenceEncoder(ReferenceEncoderConfig(dim=dim, max_len=max_len, unsafe_lexicon=words))


def encoder_options(f):
    for option in reversed(
        [
            click.option("--encoder", "encoder_kind", type=click.Choice(["reference", "remote"]),
                         default="reference", show_default=True, help="Embedding backend."),
            click.option("--remote-url", default=None, help="Remote encoder endpoint."),
            click.option("--dim", default=64, show_default=True, help="Reference encoder width."),
            click.option("--max-len", default=77, show_default=True, help="Sequence capacity."),
            click.option("--lexicon", default=None, type=click.Path(exists=True, dir_okay=False),
                         help="File of unsafe-lexicon words for the reference encoder."),
        ]
    ):
        f = option(f)
    return f


def _iter_prompts(prompt: str | None) -> list[str]:
    if prompt is not None:
        if not prompt.strip():
            raise click.UsageError("--prompt must be non-empty")
        return [prompt]
    lines = [line.strip() for line in sys.stdin]
    prompts = [line for line in lines if line]
    if not prompts:
        raise click.UsageError("no prompts given on --prompt or stdin")
    return prompts


def _load_model(model: str | None):
    import os

    path = model or os.environ.get(ENV_MODEL)
    if not path:
        raise click.UsageError(f"--model or ${ENV_MODEL} is required")
    return load_params(path)


@click.group()
def cli() -> None:
    """Prompt-safety gateway toolkit."""


@cli.command("train")
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Embedding dataset (.sged).")
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Weight file to write.")
@click.option("--epochs", default=50, show_default=True)
@click.option("--batch-size", default=32, show_default=True)
@click.option("--lr", default=1e-3, show_default=True)
@click.option("--dropout", default=0.1, show_default=True)
@click.option("--hidden", default=None, help="Hidden sizes as 'h1,h2' (default scales with dim).")
@click.option("--seed", default=0, show_default=True)
def train_cmd(data, out, epochs, batch_size, lr, dropout, hidden, seed) -> None:
    """Train a recognizer on a labeled embedding dataset."""
    ds = datasets.load_dataset(data)
    if hidden:
        try:
            h1, h2 = (int(part) for part in hidden.split(","))
        except ValueError as exc:
            raise click.UsageError(f"--hidden must be 'h1,h2': {exc}")
    else:
        h1, h2 = default_hidden(ds.dim)
    init = init_recognizer(ds.dim, (h1, h2), dropout_rate=dropout, seed=seed)
    cfg = TrainingConfig(epochs=epochs, batch_size=batch_size, learning_rate=lr, seed=seed)
    params, history = train_recognizer(ds.records, cfg, init)
    persist_params(params, out)
    for epoch, loss in enumerate(history, start=1):
        click.echo(json.dumps({"epoch": epoch, "loss": loss}))
    click.echo(f"wrote {out}", err=True)


@cli.command("score")
@click.option("--prompt", default=None, help="Single prompt (default: read stdin lines).")
@click.option("--model", default=None, type=click.Path(), help=f"Weight file (or ${ENV_MODEL}).")
@click.option("--threshold", default=0.5, show_default=True)
@click.option("--server", default=None, help="Score via a running gateway instead.")
@encoder_options
def score_cmd(prompt, model, threshold, server, encoder_kind, remote_url, dim, max_len, lexicon) -> None:
    """Safety-score prompts; one JSON line per prompt on stdout."""
    prompts = _iter_prompts(prompt)
    if server:
        import requests

        for text in prompts:
            resp = requests.post(server.rstrip("/") + "/v1/check", json={"prompt": text}, timeout=30)
            resp.raise_for_status()
            click.echo(json.dumps({"prompt": text, **resp.json()}))
        return
    params = _load_model(model)
    encoder = _build_encoder(encoder_kind, remote_url, dim, max_len, lexicon)
    for text in prompts:
        res = encoder.encode_text(text, want_attention=False)
        score = forward(params, extract_eos(res)).score
        verdict = classify(score, threshold)
        click.echo(json.dumps({"prompt": text, "safety_score": score, "verdict": verdict.value}))


@cli.command("sanitize")
@click.option("--prompt", default=None, help="Single prompt (default: read stdin lines).")
@click.option("--model", default=None, type=click.Path(), help=f"Weight file (or ${ENV_MODEL}).")
@click.option("--threshold", default=0.5, show_default=True, help="Step-one safety gate.")
@click.option("--beam-width", default=6, show_default=True)
@click.option("--depth", default=25, show_default=True)
@click.option("--tau-safe", default=0.8, show_default=True)
@click.option("--tau-sim", default=0.5, show_default=True)
@click.option("--server", default=None, help="Sanitize via a running gateway instead.")
@encoder_options
def sanitize_cmd(prompt, model, threshold, beam_width, depth, tau_safe, tau_sim, server,
                 encoder_kind, remote_url, dim, max_len, lexicon) -> None:
    """Erase unsafe tokens from prompts; one JSON line per prompt on stdout."""
    prompts = _iter_prompts(prompt)
    if server:
        import requests

        for text in prompts:
            resp = requests.post(server.rstrip("/") + "/v1/sanitize", json={"prompt": text}, timeout=120)
            resp.raise_for_status()
            click.echo(json.dumps({"original": text, **resp.json()}))
        return
    params = _load_model(model)
    encoder = _build_encoder(encoder_kind, remote_url, dim, max_len, lexicon)
    scorer = make_scorer(params)
    cfg = SearchConfig(beam_width=beam_width, depth=depth, tau_safe=tau_safe, tau_sim=tau_sim)
    for text in prompts:
        res = encoder.encode_text(text, want_attention=False)
        score = scorer(extract_eos(res))
        if classify(score, threshold).value == "safe":
            click.echo(json.dumps({"original": text, "status": "already_safe", "prompt": text}))
            continue
        result = safe_beam_search(text, encoder, scorer, cfg, initial=res)
        if result.status is SanitizeStatus.ALREADY_SAFE:
            click.echo(json.dumps({"original": text, "status": "already_safe", "prompt": text}))
            continue
        from safegate.encoding.tokenizer import tokenize

        tokens = tokenize(text, getattr(encoder, "max_len", max_len)).tokens
        click.echo(
            json.dumps(
                {
                    "original": text,
                    "status": result.status.value,
                    "prompt": result.sanitized_prompt,
                    "removed_tokens": [tokens[i] for i in result.best.removed],
                    "safety_score": result.best.safety,
                    "similarity": result.best.similarity,
                    "encoder_calls": result.encoder_calls + 1,
                }
            )
        )


@cli.group("analyze")
def analyze_group() -> None:
    """Embedding-space and filter metrics; JSON reports on stdout."""


@analyze_group.command("mmd")
@click.option("--a", "a_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--b", "b_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--estimator", type=click.Choice(["unbiased", "biased"]), default="unbiased",
              show_default=True)
@click.option("--bandwidth", default="median", show_default=True,
              help="'median' or a positive sigma value.")
def analyze_mmd(a_path, b_path, estimator, bandwidth) -> None:
    """Squared MMD between two embedding datasets."""
    import numpy as np

    bw: str | float
    if bandwidth == "median":
        bw = "median_heuristic"
    else:
        try:
            bw = float(bandwidth)
        except ValueError:
            raise click.UsageError("--bandwidth must be 'median' or a number")
    ds_a = datasets.load_dataset(a_path)
    ds_b = datasets.load_dataset(b_path)
    cfg = analysis.MmdConfig(bandwidth=bw, estimator=estimator)
    value = analysis.mmd(
        np.stack([r.embedding for r in ds_a.records]),
        np.stack([r.embedding for r in ds_b.records]),
        cfg,
    )
    click.echo(
        analysis.report_json(
            "mmd", value,
            {"kernel": "rbf", "bandwidth": bandwidth, "estimator": estimator},
            n_a=len(ds_a.records), n_b=len(ds_b.records),
        )
    )


@analyze_group.command("top1")
@click.option("--prompts", "prompts_path", required=True,
              type=click.Path(exists=True, dir_okay=False), help="One prompt per line.")
@encoder_options
def analyze_top1(prompts_path, encoder_kind, remote_url, dim, max_len, lexicon) -> None:
    """Share of prompts whose EOS position is the top outgoing-attention aggregator."""
    prompts = [l.strip() for l in Path(prompts_path).read_text(encoding="utf-8").splitlines() if l.strip()]
    encoder = _build_encoder(encoder_kind, remote_url, dim, max_len, lexicon)
    value = analysis.top1_aggregator_ratio(prompts, encoder)
    click.echo(analysis.report_json("top1_aggregator_ratio", value, {}, n_a=len(prompts)))


@analyze_group.command("sac")
@click.option("--prompts", "prompts_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help='JSONL of {"text": ..., "keywords": [content token indices]}.')
@click.option("--layers", default=None, help="Inclusive layer range like '0-5' (default: all).")
@encoder_options
def analyze_sac(prompts_path, layers, encoder_kind, remote_url, dim, max_len, lexicon) -> None:
    """EOS attention concentration on keyword tokens."""
    prompts, keywords = [], []
    for line in Path(prompts_path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        raw = json.loads(line)
        prompts.append(raw["text"])
        keywords.append([int(k) for k in raw["keywords"]])
    layer_list = None
    if layers:
        try:
            lo, hi = (int(part) for part in layers.split("-"))
        except ValueError:
            raise click.UsageError("--layers must look like '0-5'")
        layer_list = list(range(lo, hi + 1))
    encoder = _build_encoder(encoder_kind, remote_url, dim, max_len, lexicon)
    value = analysis.semantic_attention_concentration(prompts, encoder, keywords, layer_list)
    click.echo(
        analysis.report_json(
            "semantic_attention_concentration", value, {"layers": layers or "all"}, n_a=len(prompts)
        )
    )


@analyze_group.command("filter")
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--model", default=None, type=click.Path())
@click.option("--threshold", default=0.5, show_default=True)
def analyze_filter(data, model, threshold) -> None:
    """Filter-level confusion rates of a trained recognizer on a dataset."""
    ds = datasets.load_dataset(data)
    params = _load_model(model)
    report = analysis.evaluate_filter(ds.records, params, threshold)
    config = {"threshold": threshold, "counts": report.counts}
    n_a = report.counts["safe_total"]
    n_b = report.counts["unsafe_total"]
    for name, value in (("filter.asr_fnr", report.asr_fnr), ("filter.fpr", report.fpr),
                        ("filter.gsr", report.gsr)):
        click.echo(analysis.report_json(name, value, config, n_a=n_a, n_b=n_b))


@cli.command("build-dataset")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["jsonl", "csv"]), default="jsonl",
              show_default=True)
@click.option("--output", required=True, type=click.Path(dir_okay=False), help=".sged file to write.")
@click.option("--seed", default=None, type=int, help="Recorded in the manifest.")
@encoder_options
def build_dataset_cmd(input_path, fmt, output, seed, encoder_kind, remote_url, dim, max_len,
                      lexicon) -> None:
    """Encode a labeled prompt corpus into an embedding dataset."""
    result = datasets.ingest_prompts(input_path, fmt)
    for error in result.errors:
        click.echo(f"line {error.line}: {error.message}", err=True)
    encoder = _build_encoder(encoder_kind, remote_url, dim, max_len, lexicon)
    ds = datasets.build_embedding_dataset(result.records, encoder, seed=seed)
    datasets.save_dataset(ds, output)
    click.echo(
        f"wrote {len(ds.records)} embeddings (dim {ds.dim}) to {output}; "
        f"{len(result.errors)} malformed rows skipped",
        err=True,
    )


@cli.command("serve")
@click.option("--config", "config_path", default=None, type=click.Path(exists=True, dir_okay=False),
              help="Gateway config JSON.")
@click.option("--model", default=None, type=click.Path(), help="Override the weight file.")
@click.option("--listen", default=None, help="Override host:port.")
def serve_cmd(config_path, model, listen) -> None:
    """Run the gateway HTTP service until interrupted."""
    import uvicorn

    from safegate.service.app import create_app

    config = load_gateway_config(config_path, model_path=model, listen_addr=listen)
    if not config.model_path:
        raise click.UsageError(f"a model is required (config file, --model, or ${ENV_MODEL})")
    load_params(config.model_path)  # fail fast before binding the port
    app = create_app(config)
    host, port = parse_listen_addr(config.listen_addr)
    uvicorn.run(app, host=host, port=port, log_level="info")


def main(argv: list[str] | None = None) -> int:
    """Entry point with the documented exit codes."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except (SafegateError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except click.ClickException as exc:
        exc.show()
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
