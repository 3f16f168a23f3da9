"""Command-line entry point: cluster-terms, cluster-proofs, query and explain.

Corpus inputs are definitions files (`name : TYPE := BODY .` declarations)
and proof-trace files (one JSON record per line; files ending in .jsonl).
Reports embed the full run configuration and are byte-identical across reruns
with the same inputs and seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass

from .clustering import ClusterConfig
from .encoders import TacticTable, dump_tables
from .errors import ProofscopeError
from .insight import build_automaton, emit_dot, render_text, select_features
from .proofs import all_patches, cluster_proof_patches, patch_vectors, query_similar
from .recurrent import recurrent_cluster
from .syntax import parse_corpus

PROOF_SUFFIXES = (".jsonl", ".proofs")


@dataclass
class RunConfig:
    command: str
    corpus_paths: list[str]
    granularity: int = 3
    seed: int = 0
    max_rounds: int = 5
    dialect: str = "ssreflect"
    output_format: str = "json"
    out: str | None = None
    dump_tables_path: str | None = None
    query_target: str | None = None

    def cluster_config(self) -> ClusterConfig:
        return ClusterConfig(granularity=self.granularity, seed=self.seed)


def _build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="proofscope",
        description="Cluster term definitions and proof patches, query similarities, "
        "and explain discovered patterns.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command, needs_target in (
        ("cluster-terms", False),
        ("cluster-proofs", False),
        ("query", True),
        ("explain", True),
    ):
        p = sub.add_parser(command)
        p.add_argument("corpus_paths", nargs="+", metavar="CORPUS")
        p.add_argument("--granularity", type=int, default=3)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--max-rounds", type=int, default=5)
        p.add_argument("--dialect", choices=("ssreflect", "coq"), default="ssreflect")
        p.add_argument(
            "--format",
            dest="output_format",
            choices=("json", "text", "dot", "csv"),
            default="json",
        )
        p.add_argument("--out", default=None)
        p.add_argument("--dump-tables", dest="dump_tables_path", default=None)
        p.add_argument("--target", default=None, required=needs_target)
    return parser


def _load_corpus(config: RunConfig):
    defs_texts = []
    records = []
    for path in config.corpus_paths:
        if not os.path.exists(path):
            raise ProofscopeError(f"no such corpus file: {path}")
        with open(path, encoding="utf-8") as handle:
            content = handle.read()
        if path.endswith(PROOF_SUFFIXES):
            for line_number, line in enumerate(content.splitlines(), start=1):
                if not line.strip():
                    continue
                try:
                    records.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise ProofscopeError(
                        f"{path}:{line_number}: not a JSON record: {exc}"
                    ) from None
        else:
            defs_texts.append(content)
    return parse_corpus("\n".join(defs_texts), records, config.dialect)


def _emit(text: str, config: RunConfig):
    if config.out:
        with open(config.out, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _json_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def _csv_lines(vectors: dict) -> str:
    lines = []
    for object_id in sorted(vectors):
        values = ",".join(repr(v) for v in vectors[object_id].values)
        lines.append(f"{object_id},{values}")
    return "\n".join(lines) + "\n"


def _density(vectors: dict) -> float:
    # informational only: fraction of nonzero vector entries
    total = sum(len(v.values) for v in vectors.values())
    nonzero = sum(1 for v in vectors.values() for x in v.values if x != 0.0)
    return nonzero / total if total else 0.0


def _clusters_text(title: str, report: dict) -> list[str]:
    lines = [f"{title}: {report['k']} clusters"]
    for cluster in report["clusters"]:
        lines.append(f"  cluster {cluster['id']}:")
        for member in cluster["members"]:
            lines.append(
                f"    {member['objectId']} (proximity {member['proximity']:.3f})"
            )
    return lines


def run(config: RunConfig) -> int:
    """Execute one command; returns the process exit status."""
    threads = os.environ.get("PROOFSCOPE_THREADS")
    if threads is not None and (not threads.isdigit() or int(threads) < 1):
        raise ProofscopeError(f"PROOFSCOPE_THREADS must be a positive integer: {threads!r}")

    corpus = _load_corpus(config)
    cluster_config = config.cluster_config()
    state = recurrent_cluster(corpus, cluster_config, config.max_rounds)

    # the embedded config covers everything that determines the results;
    # output routing is excluded so identical analyses emit identical bytes
    config_json = asdict(config)
    config_json.pop("out")
    config_json.pop("dump_tables_path")
    report: dict = {"command": config.command, "config": config_json}
    report["rounds"] = state.round
    text_lines: list[str] = []

    if config.command in ("cluster-terms", "cluster-proofs"):
        report["termClusters"] = state.term_clustering.report()
        report["typeClusters"] = (
            state.type_clustering.report() if state.type_clustering else None
        )
        report["history"] = state.history
        report["termVectorDensity"] = _density(state.term_vectors)
        text_lines += _clusters_text("term clusters", report["termClusters"])
        if config.command == "cluster-proofs":
            patch_clustering = cluster_proof_patches(corpus, state, cluster_config)
            report["patchClusters"] = patch_clustering.report()
            table = TacticTable.for_dialect(corpus.dialect)
            report["patchVectorDensity"] = _density(
                patch_vectors(corpus, state.tables, table)
            )
            text_lines += _clusters_text("patch clusters", report["patchClusters"])
        if config.output_format == "csv":
            if config.command == "cluster-proofs":
                table = TacticTable.for_dialect(corpus.dialect)
                vectors = patch_vectors(corpus, state.tables, table)
            else:
                vectors = state.term_vectors
            _emit(_csv_lines(vectors), config)
        elif config.output_format == "text":
            _emit("\n".join(text_lines) + "\n", config)
        else:
            _emit(_json_report(report), config)

    elif config.command == "query":
        results = query_similar(config.query_target, corpus, state, cluster_config)
        report["target"] = config.query_target
        report["results"] = [
            {"objectId": oid, "proximity": prox} for oid, prox in results
        ]
        if config.output_format == "text":
            lines = [f"similar to {config.query_target}:"] + [
                f"  {oid} (proximity {prox:.3f})" for oid, prox in results
            ]
            _emit("\n".join(lines) + "\n", config)
        else:
            _emit(_json_report(report), config)

    elif config.command == "explain":
        try:
            cluster_id = int(config.query_target)
        except (TypeError, ValueError):
            raise ProofscopeError(
                f"explain --target must be a patch cluster id, got {config.query_target!r}"
            ) from None
        patch_clustering = cluster_proof_patches(corpus, state, cluster_config)
        if not 0 <= cluster_id < patch_clustering.k:
            raise ProofscopeError(
                f"cluster id {cluster_id} out of range 0..{patch_clustering.k - 1}"
            )
        tactic_table = TacticTable.for_dialect(corpus.dialect)
        vectors = patch_vectors(corpus, state.tables, tactic_table)
        selection = select_features(list(vectors.values()), patch_clustering)
        members = set(patch_clustering.members(cluster_id))
        patches = [p for p in all_patches(corpus) if p.object_id in members]
        automaton = build_automaton(patches, selection, tactic_table)
        if config.output_format == "dot":
            _emit(emit_dot(automaton), config)
        elif config.output_format == "text":
            _emit(render_text(automaton), config)
        else:
            report["clusterId"] = cluster_id
            report["selection"] = {
                "selected": selection.selected,
                "merit": selection.merit,
            }
            report["automaton"] = automaton.to_json()
            _emit(_json_report(report), config)

    if config.dump_tables_path:
        tactic_table = TacticTable.for_dialect(corpus.dialect)
        for proof in corpus.proofs:
            for step in proof.steps:
                for tactic in step.tactics:
                    tactic_table.register(tactic.name)
        with open(config.dump_tables_path, "w", encoding="utf-8") as handle:
            handle.write(dump_tables(state.tables, tactic_table))
    return 0


def main(argv=None) -> int:
    parser = _build_arg_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors; that's bad input
        code = exc.code if isinstance(exc.code, int) else 1
        return 0 if code == 0 else 1
    config = RunConfig(
        command=args.command,
        corpus_paths=args.corpus_paths,
        granularity=args.granularity,
        seed=args.seed,
        max_rounds=args.max_rounds,
        dialect=args.dialect,
        output_format=args.output_format,
        out=args.out,
        dump_tables_path=args.dump_tables_path,
        query_target=args.target,
    )
    try:
        return run(config)
    except ProofscopeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # surfaced without a traceback
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
