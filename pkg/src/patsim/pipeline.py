"""Stage runner: ingest -> score -> features -> fit -> report/figs, plus synth.

Every stage writes its artifacts under the workdir plus a manifest recording
input digests, parameters, counts, and timing. Stages check that their inputs
were produced by the required upstream stage and that the bytes on disk still
match the recorded digests; artifact writers are deterministic so a rerun
with unchanged inputs reproduces identical outputs. One pipeline instance per
workdir, enforced with a lock file.
"""

from __future__ import annotations

import csv
import dataclasses
import datetime as _dt
import json
import os
import time
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

from . import corpus as corpus_mod
from . import features as features_mod
from . import figures, gam, scoring, synth
from .corpus import file_digest
from .errors import ValidationError

STAGES = ("synth", "ingest", "score", "features", "fit", "report", "figs")

_PATH_OVERRIDES = {
    "patents.csv": "patents",
    "citations.csv": "citations",
    "mock.psim": "psim",
    "scores.csv": "scores",
}


@dataclass
class PipelineConfig:
    workdir: str = "workdir"
    patents: str = ""  # defaults to <workdir>/patents.csv
    citations: str = ""  # defaults to <workdir>/citations.csv
    psim: str = ""  # defaults to <workdir>/mock.psim
    scores: str = ""  # defaults to <workdir>/scores.csv
    strict: bool = False
    keep_negative_lags: bool = False
    utility_only: bool = True
    basis_size: int = 20
    spline_degree: int = 3
    penalty_order: int = 2
    lambda_log_lo: float = gam.LOG_LAMBDA_LO
    lambda_log_hi: float = gam.LOG_LAMBDA_HI
    grid_size: int = 200
    chunk_size: int = 4096
    workers: int = 1
    seed: int = 7
    synth_patents: int = 5000
    synth_edges: int = 50000
    mock_dim: int = 384

    def path(self, name: str) -> Path:
        key = _PATH_OVERRIDES.get(name)
        if key:
            override = getattr(self, key)
            if override:
                return Path(override)
        return Path(self.workdir) / name

    @staticmethod
    def from_file(path) -> "PipelineConfig":
        cfg = PipelineConfig()
        fields = {f.name: f for f in dataclasses.fields(PipelineConfig)}
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ValidationError(f"cannot read config {path}: {exc}") from None
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key not in fields:
                raise ValidationError(f"{path}:{lineno}: unknown config key {key!r}")
            setattr(cfg, key, _coerce(fields[key].type, value, key))
        return cfg


def _coerce(type_name: str, value: str, key: str):
    if type_name == "bool":
        lowered = value.lower()
        if lowered in ("true", "1", "yes", "on"):
            return True
        if lowered in ("false", "0", "no", "off"):
            return False
        raise ValidationError(f"config key {key!r}: invalid boolean {value!r}")
    if type_name == "int":
        return int(value)
    if type_name == "float":
        return float(value)
    return value


def manifest_dir(workdir) -> Path:
    return Path(workdir) / "manifests"


def manifest_path(workdir, stage: str) -> Path:
    return manifest_dir(workdir) / f"{stage}.json"


def read_manifest(workdir, stage: str) -> dict | None:
    path = manifest_path(workdir, stage)
    if not path.exists():
        return None
    return json.loads(path.read_text(encoding="utf-8"))


def require_manifest(workdir, stage: str) -> dict:
    manifest = read_manifest(workdir, stage)
    if manifest is None:
        command = "fit --model 0..3" if stage.startswith("fit") else stage
        raise ValidationError(
            f"missing upstream artifacts for this stage: run `{command}` first"
        )
    return manifest


def verify_outputs(workdir, stage: str) -> list[str]:
    """Recompute digests of a stage's recorded outputs; return mismatches."""
    manifest = require_manifest(workdir, stage)
    bad = []
    for path, digest in manifest["outputs"].items():
        if not os.path.exists(path) or file_digest(path) != digest:
            bad.append(path)
    return bad


def _consume(workdir, stage: str, path: Path) -> tuple[str, str]:
    """Check that `path` matches the digest its producing stage recorded."""
    manifest = require_manifest(workdir, stage)
    recorded = manifest["outputs"].get(str(path))
    if recorded is None:
        raise ValidationError(
            f"{path} is not an output of stage `{stage}`; re-run `{stage}`"
        )
    actual = file_digest(path) if os.path.exists(path) else None
    if actual != recorded:
        raise ValidationError(
            f"{path} changed since `{stage}` produced it; re-run `{stage}`"
        )
    return str(path), recorded


def _record_input(workdir, producer: str, path: Path, inputs: dict) -> None:
    """Record `path` as an input; verify its digest when `producer` made it."""
    if not path.exists():
        raise ValidationError(f"input file {path} not found")
    manifest = read_manifest(workdir, producer)
    if manifest is not None and str(path) in manifest["outputs"]:
        inputs.update([_consume(workdir, producer, path)])
    else:
        inputs[str(path)] = file_digest(path)


@contextmanager
def workdir_lock(workdir):
    lock = Path(workdir) / ".lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise ValidationError(
            f"another pipeline instance holds {lock}; remove the file if stale"
        ) from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        try:
            lock.unlink()
        except OSError:
            pass


def _write_manifest(workdir, stage, params, inputs, outputs, counts, started, elapsed):
    manifest = {
        "stage": stage,
        "params": params,
        "inputs": {str(k): v for k, v in inputs.items()},
        "outputs": {str(p): file_digest(p) for p in outputs},
        "counts": counts,
        "started": started,
        "elapsed_s": round(elapsed, 6),
    }
    path = manifest_path(workdir, stage)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest


def _load_corpus(cfg: PipelineConfig):
    workdir = cfg.workdir
    inputs = dict(
        [
            _consume(workdir, "ingest", Path(workdir) / "corpus_patents.csv"),
            _consume(workdir, "ingest", Path(workdir) / "corpus_edges.csv"),
        ]
    )
    store = corpus_mod.ingest_patents(Path(workdir) / "corpus_patents.csv", strict=True)
    store = corpus_mod.ingest_citations(Path(workdir) / "corpus_edges.csv", store)
    return store, inputs


def stage_synth(cfg: PipelineConfig) -> tuple[dict, list, dict]:
    workdir = Path(cfg.workdir)
    profile = synth.SynthProfile()
    store = synth.synth_corpus(cfg.seed, cfg.synth_patents, cfg.synth_edges, profile)
    patents_path = workdir / "patents.csv"
    citations_path = workdir / "citations.csv"
    corpus_mod.export_corpus(store, patents_path, citations_path)

    utility = corpus_mod.filter_utility(store)
    matrix = synth.mock_matrix(sorted(utility.patents), cfg.seed, cfg.mock_dim)
    psim_path = workdir / "mock.psim"
    from .psim import ids_path, write_matrix

    write_matrix(psim_path, matrix.ids, matrix.data)

    scored, clipped = synth.synth_scores(utility, profile, cfg.seed)
    truth_scores_path = workdir / "truth_scores.csv"
    scoring.write_scores_csv(scored.pairs, truth_scores_path)
    truth_path = workdir / "truth.json"
    synth.write_truth(
        profile,
        truth_path,
        extra={
            "seed": cfg.seed,
            "n_patents": cfg.synth_patents,
            "n_edges": cfg.synth_edges,
            "clipped_scores": clipped,
        },
    )
    outputs = [
        patents_path,
        citations_path,
        psim_path,
        ids_path(psim_path),
        truth_scores_path,
        truth_path,
    ]
    counts = {
        "patents": len(store.patents),
        "edges": len(store.edges),
        "mock_rows": matrix.count,
        "truth_scores": len(scored.pairs),
        "clipped_scores": clipped,
    }
    return {}, outputs, counts


def stage_ingest(cfg: PipelineConfig) -> tuple[dict, list, dict]:
    workdir = Path(cfg.workdir)
    patents_path = cfg.path("patents.csv")
    citations_path = cfg.path("citations.csv")
    inputs: dict = {}
    for path in (patents_path, citations_path):
        if not path.exists():
            raise ValidationError(
                f"input file {path} not found: run `synth` first or point the "
                f"config at real extracts"
            )
        _record_input(cfg.workdir, "synth", path, inputs)
    store = corpus_mod.ingest_patents(patents_path, strict=cfg.strict)
    store = corpus_mod.ingest_citations(citations_path, store)
    if cfg.utility_only:
        store = corpus_mod.filter_utility(store)
    corpus_mod.export_corpus(
        store, workdir / "corpus_patents.csv", workdir / "corpus_edges.csv"
    )
    corpus_mod.write_rejects_report(
        list(store.patent_rejects) + list(store.edge_rejects), workdir / "rejects.csv"
    )
    outputs = [
        workdir / "corpus_patents.csv",
        workdir / "corpus_edges.csv",
        workdir / "rejects.csv",
    ]
    counts = {k: v for k, v in store.provenance.items() if isinstance(v, int)}
    counts["patents_kept"] = len(store.patents)
    counts["edges_kept"] = len(store.edges)
    return inputs, outputs, counts


def stage_score(cfg: PipelineConfig) -> tuple[dict, list, dict]:
    from .psim import ids_path, read_matrix

    workdir = Path(cfg.workdir)
    store, inputs = _load_corpus(cfg)
    psim_path = cfg.path("mock.psim")
    if not psim_path.exists():
        raise ValidationError(
            f"embedding matrix {psim_path} not found: run `synth` or point "
            f"`psim` at an encoder export"
        )
    matrix = read_matrix(psim_path, mmap=True)
    _record_input(cfg.workdir, "synth", psim_path, inputs)
    inputs[str(ids_path(psim_path))] = file_digest(ids_path(psim_path))
    result = scoring.score_edges(
        matrix, store.edges, chunk_size=cfg.chunk_size, workers=cfg.workers
    )
    scores_path = workdir / "scores.csv"
    n = scoring.write_scores_csv(result.pairs, scores_path)
    counts = {"scored": n, "skipped": len(result.skipped)}
    for reason, count in sorted(result.skip_counts().items()):
        counts[f"skipped_{reason}"] = count
    return inputs, [scores_path], counts


def stage_features(cfg: PipelineConfig) -> tuple[dict, list, dict]:
    workdir = Path(cfg.workdir)
    store, inputs = _load_corpus(cfg)
    scores_path = cfg.path("scores.csv")
    if cfg.scores:
        # explicit override (e.g. synthetic truth scores); still digest-checked
        # when the file came out of a recorded stage
        _record_input(cfg.workdir, "synth", scores_path, inputs)
    else:
        inputs.update([_consume(cfg.workdir, "score", scores_path)])
    pairs = scoring.read_scores_csv(scores_path)
    table = features_mod.build_features(
        store, pairs, keep_negative_lags=cfg.keep_negative_lags
    )
    features_path = workdir / "features.csv"
    features_mod.write_features_csv(table, features_path)
    counts = {"rows": table.n, "input_pairs": len(pairs)}
    for reason, c in sorted(table.drop_report.dropped.items()):
        counts[f"dropped_{reason}"] = c
    for reason, c in sorted(table.drop_report.notes.items()):
        counts[f"noted_{reason}"] = c
    return inputs, [features_path], counts


def stage_fit(cfg: PipelineConfig, model_level: int) -> tuple[dict, list, dict]:
    workdir = Path(cfg.workdir)
    features_path = workdir / "features.csv"
    inputs = dict([_consume(cfg.workdir, "features", features_path)])
    table = features_mod.read_features_csv(features_path)
    spec = gam.model_catalog(
        model_level, cfg.basis_size, cfg.spline_degree, cfg.penalty_order
    )
    features_manifest = require_manifest(cfg.workdir, "features")
    dropped = sum(
        v for k, v in features_manifest["counts"].items() if k.startswith("dropped_")
    )
    fit = gam.fit_model(
        spec, table, log_lo=cfg.lambda_log_lo, log_hi=cfg.lambda_log_hi
    )
    report = gam.fit_report(fit, model_level, dropped_rows=dropped)
    fit_path = workdir / f"fit_model{model_level}.json"
    fit_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
    outputs = [fit_path]
    for smooth in fit.smooths:
        effect = gam.partial_effect(fit, smooth.name, cfg.grid_size)
        partial_path = workdir / f"fit_model{model_level}_partial_{smooth.name}.csv"
        with open(partial_path, "w", encoding="utf-8", newline="") as f:
            w = csv.writer(f)
            w.writerow(["grid", "f_hat", "se_lower", "se_upper"])
            for g, fh, se in zip(effect.grid, effect.f_hat, effect.se):
                w.writerow([repr(float(g)), repr(float(fh)), repr(float(fh - se)),
                            repr(float(fh + se))])
        outputs.append(partial_path)
    counts = {
        "n": fit.n,
        "dev_explained": fit.dev_explained,
        "gcv": fit.gcv,
        "aic": fit.aic,
        "edf_total": fit.edf_total,
        "converged": fit.converged,
    }
    return inputs, outputs, counts


def _stars(p: float) -> str:
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


def stage_report(cfg: PipelineConfig) -> tuple[dict, list, dict]:
    workdir = Path(cfg.workdir)
    reports = {}
    inputs = {}
    for level in range(4):
        path = workdir / f"fit_model{level}.json"
        inputs.update([_consume(cfg.workdir, f"fit{level}", path)])
        reports[level] = json.loads(path.read_text(encoding="utf-8"))
    coef_names: list[str] = []
    for level in range(4):
        for coef in reports[level]["coefficients"]:
            if coef["name"] not in coef_names:
                coef_names.append(coef["name"])
    smooth_names: list[str] = []
    for level in range(4):
        for smooth in reports[level]["smooths"]:
            if smooth["name"] not in smooth_names:
                smooth_names.append(smooth["name"])

    rows = []
    for name in coef_names:
        row = [name]
        for level in range(4):
            match = [c for c in reports[level]["coefficients"] if c["name"] == name]
            if match:
                c = match[0]
                row.append(f"{c['estimate']:.4g}{_stars(c['p'])} ({c['se']:.3g})")
            else:
                row.append("")
        rows.append(row)
    for name in smooth_names:
        row = [f"s({name}) edf"]
        for level in range(4):
            match = [s for s in reports[level]["smooths"] if s["name"] == name]
            row.append(f"{match[0]['edf']:.3g}" if match else "")
        rows.append(row)
    for metric in ("aic", "gcv", "dev_explained", "n"):
        row = [metric]
        for level in range(4):
            value = reports[level][metric]
            row.append(f"{value:.6g}" if isinstance(value, float) else str(value))
        rows.append(row)

    report_csv = workdir / "report.csv"
    with open(report_csv, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow(["term", "model0", "model1", "model2", "model3"])
        w.writerows(rows)
    report_json = workdir / "report.json"
    report_json.write_text(
        json.dumps(reports, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    counts = {
        f"dev_explained_model{level}": reports[level]["dev_explained"]
        for level in range(4)
    }
    return inputs, [report_csv, report_json], counts


def stage_figs(cfg: PipelineConfig) -> tuple[dict, list, dict]:
    workdir = Path(cfg.workdir)
    figdir = workdir / "figs"
    figdir.mkdir(exist_ok=True)
    store, inputs = _load_corpus(cfg)
    outputs: list[Path] = []
    skipped: list[str] = []

    outputs.extend(figures.within_counts_bundle(store, figdir))

    scores_path = workdir / "scores.csv"
    if read_manifest(cfg.workdir, "score") is not None:
        inputs.update([_consume(cfg.workdir, "score", scores_path)])
        pairs = scoring.read_scores_csv(scores_path)
        outputs.extend(figures.similarity_bundle(pairs, store, figdir))
    else:
        skipped.append("fig2: run `score` first")

    features_path = workdir / "features.csv"
    if read_manifest(cfg.workdir, "features") is not None:
        inputs.update([_consume(cfg.workdir, "features", features_path)])
        table = features_mod.read_features_csv(features_path)
        outputs.extend(figures.lag_bundle(table, figdir))
    else:
        skipped.append("fig3: run `features` first")

    partials: dict[int, dict[str, dict]] = {}
    for level in range(4):
        if read_manifest(cfg.workdir, f"fit{level}") is None:
            continue
        manifest = require_manifest(cfg.workdir, f"fit{level}")
        per_term: dict[str, dict] = {}
        for out_path in manifest["outputs"]:
            name = Path(out_path).name
            prefix = f"fit_model{level}_partial_"
            if not name.startswith(prefix):
                continue
            inputs.update([_consume(cfg.workdir, f"fit{level}", Path(out_path))])
            term = name[len(prefix):].removesuffix(".csv")
            data = {"grid": [], "f_hat": [], "se_lower": [], "se_upper": []}
            with open(out_path, "r", encoding="utf-8", newline="") as f:
                reader = csv.DictReader(f)
                for row in reader:
                    for key in data:
                        data[key].append(float(row[key]))
            per_term[term] = data
        if per_term:
            partials[level] = per_term
    if partials:
        outputs.extend(figures.partials_bundle(partials, figdir))
    else:
        skipped.append("fig4: run `fit --model 0..3` first")

    counts = {"bundles": 4 - len(skipped), "skipped": len(skipped)}
    for notice in skipped:
        print(f"notice: {notice}")
    return inputs, outputs, counts


def run_stage(stage: str, cfg: PipelineConfig, model_level: int | None = None) -> dict:
    """Run one pipeline stage under the workdir lock and write its manifest."""
    workdir = Path(cfg.workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    manifest_dir(workdir).mkdir(exist_ok=True)
    started = _dt.datetime.now().isoformat(timespec="seconds")
    t0 = time.monotonic()
    with workdir_lock(workdir):
        if stage == "synth":
            inputs, outputs, counts = stage_synth(cfg)
        elif stage == "ingest":
            inputs, outputs, counts = stage_ingest(cfg)
        elif stage == "score":
            inputs, outputs, counts = stage_score(cfg)
        elif stage == "features":
            inputs, outputs, counts = stage_features(cfg)
        elif stage == "fit":
            if model_level is None:
                raise ValidationError("fit requires --model {0,1,2,3}")
            inputs, outputs, counts = stage_fit(cfg, model_level)
            stage = f"fit{model_level}"
        elif stage == "report":
            inputs, outputs, counts = stage_report(cfg)
        elif stage == "figs":
            inputs, outputs, counts = stage_figs(cfg)
        else:
            raise ValidationError(
                f"unknown stage {stage!r} (expected one of {', '.join(STAGES)})"
            )
        params = dataclasses.asdict(cfg)
        if model_level is not None:
            params["model_level"] = model_level
        return _write_manifest(
            cfg.workdir, stage, params, inputs, outputs, counts, started,
            time.monotonic() - t0,
        )
