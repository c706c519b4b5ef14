"""Command-line surface: synth / prep / train / eval / recommend /
export-embeddings / serve.

Module errors exit 1 with a structured JSON error on stderr; usage errors
exit 2 (argparse default). The model path falls back to $T2C_MODEL when
--model is omitted.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .errors import ChartrecError
from .corpus import (
    DEFAULT_TYPE_MIX,
    SplitSpec,
    dedup,
    down_sample,
    load_corpus,
    save_corpus,
    split,
    synth_corpus,
)
from .grammar import ChartType, serialize_sequence
from .optim import AdamConfig
from .search import SearchConfig, recommend
from .tables import table_from_csv


def _model_path(value: str | None) -> str:
    path = value or os.environ.get("T2C_MODEL")
    if not path:
        raise ChartrecError("no model path: pass --model or set T2C_MODEL")
    return path


def _load_model(value: str | None):
    from .model import DqnModel

    return DqnModel.load(_model_path(value))


def cmd_synth(args) -> int:
    mix = DEFAULT_TYPE_MIX
    if args.mix:
        mix = tuple(float(x) for x in args.mix.split(","))
        if len(mix) != 6:
            raise ChartrecError("--mix needs 6 comma-separated weights")
    entries = synth_corpus(args.size, type_mix=mix, seed=args.seed)
    save_corpus(entries, args.out)
    print(f"wrote {len(entries)} entries to {args.out}")
    return 0


def cmd_prep(args) -> int:
    entries = load_corpus(args.infile)
    entries = dedup(entries)
    entries = down_sample(entries, k=args.k, seed=args.seed)
    ratios = tuple(float(x) for x in args.ratios.split(":"))
    if len(ratios) != 3:
        raise ChartrecError("--ratios must look like 7:1:2")
    parts = split(entries, SplitSpec(ratios=ratios, seed=args.seed))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, part in zip(("train", "valid", "test"), parts):
        save_corpus(part, out / f"{name}.jsonl")
        print(f"{name}: {len(part)} entries")
    return 0


def cmd_train(args) -> int:
    from .model import DqnModel, build_model
    from .training import TrainPlan, train, write_manifest, write_metrics_csv

    corpus_dir = Path(args.corpus)
    train_entries = load_corpus(corpus_dir / "train.jsonl")
    valid_path = corpus_dir / "valid.jsonl"
    valid_entries = load_corpus(valid_path) if valid_path.exists() else []

    plan = TrainPlan(
        regime=args.regime,
        tf_epochs=args.epochs_tf,
        ss_epochs=args.epochs_ss,
        batch_size=args.batch_size,
        optimizer=AdamConfig(lr=args.lr),
        seed=args.seed,
    )
    if plan.regime_kind() == "transfer":
        if not args.encoder_from:
            raise ChartrecError("transfer regime needs --encoder-from <mixed model>")
        mixed = DqnModel.load(args.encoder_from)
        model = DqnModel(mixed.config, mixed.featurizer, seed=args.seed + 101)
        model.share_encoder_from(mixed)
    else:
        model = build_model(
            preset=args.config,
            tables=[e.table for e in train_entries],
            seed=args.seed,
        )
    metrics = train(model, plan, train_entries, valid_entries)
    model.save(args.out)
    write_metrics_csv(metrics, f"{args.out}.metrics.csv")
    write_manifest(plan, {"train": str(corpus_dir / "train.jsonl")}, f"{args.out}.manifest.json")
    print(f"saved model to {args.out} ({model.parameter_count()} parameters)")
    return 0


def cmd_eval(args) -> int:
    from .evaluate import evaluate_model
    from .oracle import OracleCorpusScorer

    entries = load_corpus(args.corpus)
    ks = tuple(int(k) for k in args.k.split(","))
    types = _parse_types(args.types) or tuple(ChartType)[:4]
    config = SearchConfig(
        beam_size=args.beam,
        expand_limit=args.expand_limit,
        chart_types=tuple(sorted(types, key=lambda t: t.token)),
    )
    scorer = OracleCorpusScorer(entries) if args.oracle else _load_model(args.model)
    report = evaluate_model(
        scorer, entries, ks=ks, config=config, design_stage=not args.no_design
    )
    print(report.to_json())
    if args.out:
        Path(args.out).write_text(report.to_json() + "\n", encoding="utf-8")
    print(report.to_text(), file=sys.stderr)
    return 0


def _parse_types(spec: str | None):
    if not spec:
        return None
    return frozenset(ChartType(t.strip().capitalize()) for t in spec.split(","))


def cmd_recommend(args) -> int:
    model = _load_model(args.model)
    table = table_from_csv(Path(args.table).read_text(encoding="utf-8"), table_id=args.table)
    fields = (
        frozenset(int(x) for x in args.fields.split(",")) if args.fields else None
    )
    chart_types = _parse_types(args.type)
    recs = recommend(model, table, fields=fields, chart_types=chart_types, top=args.top)
    payload = []
    for r in recs:
        print(f"{serialize_sequence(r.state)}\t{r.score:.4f}")
        if args.export == "vegalite":
            from .export import to_vegalite

            payload.append(to_vegalite(r.state, table))
    if payload:
        text = json.dumps(payload, indent=2)
        if args.export_out:
            Path(args.export_out).write_text(text + "\n", encoding="utf-8")
        else:
            print(text)
    return 0


def cmd_export_embeddings(args) -> int:
    model = _load_model(args.model)
    entries = load_corpus(args.corpus)
    dim = model.config.enc_out
    with open(args.out, "w", encoding="utf-8") as fh:
        header = ["tableId", "fieldIndex", "header", "fieldType"] + [f"v{i}" for i in range(dim)]
        fh.write("\t".join(header) + "\n")
        for entry in entries:
            memory = model.encode(entry.table)
            for f in entry.table.fields:
                row = [entry.table.table_id, str(f.index), f.header, f.field_type.value]
                row += [f"{x:.6g}" for x in memory[f.index]]
                fh.write("\t".join(row) + "\n")
    print(f"wrote embeddings to {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(_load_model(args.model))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chartrec", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mix", default=None, help="6 comma-separated type weights")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("prep", help="dedup, down-sample and split a corpus")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--ratios", default="7:1:2")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_prep)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("--corpus", required=True, help="directory with train/valid jsonl")
    p.add_argument("--regime", default="mixed")
    p.add_argument("--config", default="tiny", choices=["tiny", "small", "medium", "large"])
    p.add_argument("--epochs-tf", type=int, default=30)
    p.add_argument("--epochs-ss", type=int, default=5)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--encoder-from", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model (or the oracle) on a corpus")
    p.add_argument("--model", default=None)
    p.add_argument("--corpus", required=True)
    p.add_argument("--k", default="1,3")
    p.add_argument("--beam", type=int, default=4)
    p.add_argument("--expand-limit", type=int, default=100)
    p.add_argument("--types", default=None, help="comma-separated chart types to seed")
    p.add_argument("--oracle", action="store_true")
    p.add_argument("--no-design", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("recommend", help="rank charts for a CSV table")
    p.add_argument("--model", default=None)
    p.add_argument("--table", required=True)
    p.add_argument("--fields", default=None)
    p.add_argument("--type", default=None)
    p.add_argument("--top", type=int, default=3)
    p.add_argument("--export", choices=["vegalite"], default=None)
    p.add_argument("--export-out", default=None)
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("export-embeddings", help="dump per-field encoder vectors")
    p.add_argument("--model", default=None)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_embeddings)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--model", default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ChartrecError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
