"""Run configuration, run-directory manifest, and the pipeline stages behind
the CLI verbs. Stages are idempotent per config hash: artifacts are reused
when the hash matches and rebuilt when it changes."""

from __future__ import annotations

import json
import logging
import os
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Iterator, Mapping

from . import __version__
from .classify import (
    ClassifierBackend,
    ClassifierMetrics,
    EnsembleClassifier,
    KeywordClassifierBackend,
    TrainingRecipe,
    classify_batch,
    ensemble_decide,
    evaluate_classifier,
    lexicon_backend,
    load_labeled,
    train_backend,
    ClassificationResult,
    DEFAULT_DESIGNATED_SLOT,
    ENSEMBLE_MIN_REVIEWS,
    SLOTS,
)
from .corpus import (
    CorpusSplit,
    Month,
    align_reviews,
    build_release_instances,
    load_features,
    load_reviews,
    split_groups,
)
from .errors import CapabilityError, ConfigError, MissingArtifactError
from .evaluate import IssueMatcher, MATCH_EXACT, MATCH_SEMANTIC, build_overlap_series
from .hashing import derive_seed, hash_file, hash_json
from .issues import (
    IssueGenConfig,
    IssueModel,
    KeywordIssueBackend,
    KeywordIssueModel,
    finetune_issue_model,
    load_annotations,
)
from .ledgers import (
    METHOD_BASELINE,
    METHOD_PREDICTED,
    MethodIssueLedger,
    run_baseline,
    run_predicted,
)
from .mapping import (
    EmbeddingBackend,
    EmbeddingCache,
    HashEmbeddingBackend,
    build_training_pairs,
    map_features,
    read_pairs,
    write_pairs,
)
from .report import (
    metrics_table_csv,
    metrics_table_markdown,
    overlap_table_csv,
    overlap_table_markdown,
    series_to_json,
    summary_markdown,
    temporal_plot_csv,
)
from .simulate import (
    GenerationModel,
    SimulatorConfig,
    TemplateGenerationBackend,
    TemplateGenerationModel,
    finetune_simulator,
)

log = logging.getLogger(__name__)

STUB = "stub"
REAL = "real"
BACKEND_SLOTS = ("classifier", "embedding", "generator", "issue_model")

DEFAULT_EMBEDDING_MODEL = "princeton-nlp/sup-simcse-bert-base-uncased"


@dataclass(frozen=True)
class RunConfig:
    """One declarative configuration for a full pipeline run.

    Paths are resolved relative to the config file's directory. The global
    seed fans out to every stochastic step; sub-config seeds, when omitted,
    are derived from it.
    """

    app: str
    features_path: str
    reviews_path: str
    annotations_path: str
    cutoff: str
    labeled_reviews_path: str | None = None
    ensemble_min_reviews: int = ENSEMBLE_MIN_REVIEWS
    designated_slot: str = DEFAULT_DESIGNATED_SLOT
    backend_threshold: float = 0.5
    mapper_k: int = 10
    embedding_dimension: int = 64
    simulator: SimulatorConfig = field(default_factory=SimulatorConfig)
    issue_gen: IssueGenConfig = field(default_factory=IssueGenConfig)
    matcher_mode: str = MATCH_EXACT
    matcher_threshold: float = 0.85
    backends: dict[str, str] = field(default_factory=lambda: {s: STUB for s in BACKEND_SLOTS})
    seed: int = 0
    base_dir: Path = field(default_factory=Path, compare=False)

    def __post_init__(self) -> None:
        Month.parse(self.cutoff)  # fail fast on malformed cutoff
        for slot, mode in self.backends.items():
            if slot not in BACKEND_SLOTS or mode not in (STUB, REAL):
                raise ConfigError(f"bad backend selection {slot!r}={mode!r}")
        if self.designated_slot not in SLOTS:
            raise ConfigError(f"designated_slot must be one of {SLOTS}")
        if self.matcher_mode not in (MATCH_EXACT, MATCH_SEMANTIC):
            raise ConfigError(f"matcher_mode must be {MATCH_EXACT!r} or {MATCH_SEMANTIC!r}")

    def resolve(self, raw_path: str) -> Path:
        path = Path(raw_path)
        return path if path.is_absolute() else self.base_dir / path

    def to_json(self) -> dict[str, Any]:
        doc = {
            "app": self.app,
            "features_path": self.features_path,
            "reviews_path": self.reviews_path,
            "annotations_path": self.annotations_path,
            "labeled_reviews_path": self.labeled_reviews_path,
            "cutoff": self.cutoff,
            "ensemble_min_reviews": self.ensemble_min_reviews,
            "designated_slot": self.designated_slot,
            "backend_threshold": self.backend_threshold,
            "mapper_k": self.mapper_k,
            "embedding_dimension": self.embedding_dimension,
            "simulator": self.simulator.to_json(),
            "issue_gen": self.issue_gen.to_json(),
            "matcher_mode": self.matcher_mode,
            "matcher_threshold": self.matcher_threshold,
            "backends": dict(sorted(self.backends.items())),
            "seed": self.seed,
        }
        return doc

    @property
    def config_hash(self) -> str:
        return hash_json(self.to_json())

    @classmethod
    def from_json(cls, raw: Mapping[str, Any], base_dir: Path) -> "RunConfig":
        known = {
            "app",
            "features_path",
            "reviews_path",
            "annotations_path",
            "labeled_reviews_path",
            "cutoff",
            "ensemble_min_reviews",
            "designated_slot",
            "backend_threshold",
            "mapper_k",
            "embedding_dimension",
            "matcher_mode",
            "matcher_threshold",
            "seed",
        }
        unknown = set(raw) - known - {"simulator", "issue_gen", "backends"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        seed = int(raw.get("seed", 0))
        simulator_raw = dict(raw.get("simulator", {}))
        simulator_raw.setdefault("seed", derive_seed(seed, "simulator"))
        issue_raw = dict(raw.get("issue_gen", {}))
        issue_raw.setdefault("seed", derive_seed(seed, "issue-gen"))
        backends = {s: STUB for s in BACKEND_SLOTS}
        backends.update(raw.get("backends", {}))
        try:
            return cls(
                app=str(raw["app"]),
                features_path=str(raw["features_path"]),
                reviews_path=str(raw["reviews_path"]),
                annotations_path=str(raw["annotations_path"]),
                labeled_reviews_path=(
                    str(raw["labeled_reviews_path"])
                    if raw.get("labeled_reviews_path")
                    else None
                ),
                cutoff=str(raw["cutoff"]),
                ensemble_min_reviews=int(raw.get("ensemble_min_reviews", ENSEMBLE_MIN_REVIEWS)),
                designated_slot=str(raw.get("designated_slot", DEFAULT_DESIGNATED_SLOT)),
                backend_threshold=float(raw.get("backend_threshold", 0.5)),
                mapper_k=int(raw.get("mapper_k", 10)),
                embedding_dimension=int(raw.get("embedding_dimension", 64)),
                simulator=SimulatorConfig.from_json(simulator_raw),
                issue_gen=IssueGenConfig.from_json(issue_raw),
                matcher_mode=str(raw.get("matcher_mode", MATCH_EXACT)),
                matcher_threshold=float(raw.get("matcher_threshold", 0.85)),
                backends=backends,
                seed=seed,
                base_dir=base_dir,
            )
        except KeyError as exc:
            raise ConfigError(f"config missing required key: {exc.args[0]}") from exc
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad config value: {exc}") from exc

    @classmethod
    def from_file(cls, path: Path | str) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc.msg})") from exc
        return cls.from_json(raw, base_dir=path.resolve().parent)

    def with_overrides(self, seed: int | None = None, force_stub: bool = False) -> "RunConfig":
        cfg = self
        if seed is not None:
            cfg = replace(
                cfg,
                seed=seed,
                simulator=replace(cfg.simulator, seed=derive_seed(seed, "simulator")),
                issue_gen=replace(cfg.issue_gen, seed=derive_seed(seed, "issue-gen")),
            )
        if force_stub:
            cfg = replace(cfg, backends={s: STUB for s in BACKEND_SLOTS})
        return cfg

    def check_paths(self) -> None:
        """Every referenced input path must exist before any command runs."""
        paths = {
            "features_path": self.features_path,
            "reviews_path": self.reviews_path,
            "annotations_path": self.annotations_path,
        }
        if self.labeled_reviews_path:
            paths["labeled_reviews_path"] = self.labeled_reviews_path
        missing = {key: str(self.resolve(raw)) for key, raw in paths.items()
                   if not self.resolve(raw).exists()}
        if missing:
            listing = ", ".join(f"{key} -> {target}" for key, target in sorted(missing.items()))
            raise ConfigError(f"configured input files do not exist: {listing}")


# stage name -> the CLI command that produces it
STAGE_COMMANDS = {
    "ingest": "ingest",
    "classify": "classify",
    "map": "map",
    "train-simulator": "train simulator",
    "train-issue-model": "train issue-model",
    "run-baseline": "run --method baseline",
    "run-predicted": "run --method predicted",
    "evaluate": "evaluate",
    "report": "report",
}


class RunDirectory:
    """A persistent run directory with a manifest of every emitted artifact."""

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.manifest_path = self.root / "manifest.json"

    # -- manifest ---------------------------------------------------------

    def manifest(self) -> dict[str, Any]:
        if self.manifest_path.exists():
            return json.loads(self.manifest_path.read_text(encoding="utf-8"))
        return {"tool_version": __version__, "stages": {}}

    def _save_manifest(self, manifest: dict[str, Any]) -> None:
        manifest["tool_version"] = __version__
        self.manifest_path.write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    def record_stage(
        self, name: str, config_hash: str, artifacts: dict[str, str], info: dict[str, Any]
    ) -> None:
        manifest = self.manifest()
        manifest["config_hash"] = config_hash
        manifest["stages"][name] = {
            "config_hash": config_hash,
            "completed_at": datetime.now(timezone.utc).isoformat(),
            "artifacts": artifacts,
            "info": info,
        }
        self._save_manifest(manifest)

    def stage_record(self, name: str) -> dict[str, Any] | None:
        return self.manifest()["stages"].get(name)

    def stage_fresh(self, name: str, config_hash: str) -> bool:
        record = self.stage_record(name)
        if record is None or record["config_hash"] != config_hash:
            return False
        for rel, digest in record["artifacts"].items():
            path = self.root / rel
            if not path.exists() or hash_file(path) != digest:
                return False
        return True

    def require_stage(
        self, name: str, config_hash: str, backend_modes: Mapping[str, str] | None = None
    ) -> dict[str, Any]:
        record = self.stage_record(name)
        if record is not None and backend_modes is not None:
            recorded_modes = record.get("info", {}).get("backend_modes")
            if recorded_modes is not None and dict(recorded_modes) != dict(backend_modes):
                raise ConfigError(
                    f"stage {name!r} artifacts were built with backend modes "
                    f"{recorded_modes}, but the current config selects "
                    f"{dict(backend_modes)}; re-run `prereview {STAGE_COMMANDS[name]}`"
                )
        if not self.stage_fresh(name, config_hash):
            raise MissingArtifactError(
                f"stage {name!r} artifacts are missing or were built with a different "
                f"configuration; run `prereview {STAGE_COMMANDS[name]}` first"
            )
        assert record is not None
        return record

    # -- files ------------------------------------------------------------

    def path(self, rel: str) -> Path:
        path = self.root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def write_text(self, rel: str, text: str, artifacts: dict[str, str]) -> None:
        path = self.path(rel)
        path.write_text(text, encoding="utf-8")
        artifacts[rel] = hash_file(path)

    def write_json(self, rel: str, obj: Any, artifacts: dict[str, str]) -> None:
        self.write_text(rel, json.dumps(obj, indent=2, sort_keys=True) + "\n", artifacts)

    def track(self, rel: str, artifacts: dict[str, str]) -> None:
        artifacts[rel] = hash_file(self.root / rel)

    # -- advisory lock ----------------------------------------------------

    @contextmanager
    def lock(self) -> Iterator[None]:
        lock_path = self.root / "lock"
        try:
            fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise ConfigError(
                f"run directory {self.root} is locked by another command "
                f"(remove {lock_path} if stale)"
            ) from None
        try:
            os.write(fd, f"{os.getpid()}\n".encode())
            os.close(fd)
            yield
        finally:
            lock_path.unlink(missing_ok=True)


def run_stage(
    rundir: RunDirectory,
    config: RunConfig,
    name: str,
    deps: tuple[str, ...],
    fn: Callable[[], tuple[dict[str, str], dict[str, Any]]],
) -> bool:
    """Execute one stage unless its artifacts are already fresh. Returns True
    when work was done, False on reuse."""
    for dep in deps:
        rundir.require_stage(dep, config.config_hash, backend_modes=config.backends)
    if rundir.stage_fresh(name, config.config_hash):
        log.info("stage %s: up to date, reusing artifacts", name)
        return False
    artifacts, info = fn()
    info = {"backend_modes": dict(sorted(config.backends.items())), **info}
    rundir.record_stage(name, config.config_hash, artifacts, info)
    log.info("stage %s: wrote %d artifacts", name, len(artifacts))
    return True


# -- backend construction ---------------------------------------------------


def _classifier_recipes(config: RunConfig) -> dict[str, TrainingRecipe]:
    mode = config.backends["classifier"]
    kinds = {"A": "encoder", "B": "encoder", "C": "sentence_head"} if mode == REAL else {}
    return {
        slot: TrainingRecipe(
            slot=slot,
            kind=kinds.get(slot, "stub"),
            threshold=config.backend_threshold,
            seed=derive_seed(config.seed, "classifier", slot),
        )
        for slot in SLOTS
    }


def _embedding_backend(config: RunConfig) -> EmbeddingBackend:
    if config.backends["embedding"] == REAL:
        from . import neural

        return neural.PretrainedSentenceEmbeddingBackend(DEFAULT_EMBEDDING_MODEL)
    return HashEmbeddingBackend(
        dimension=config.embedding_dimension, seed=derive_seed(config.seed, "embedding")
    )


def _load_classifier_backend(path: Path) -> ClassifierBackend:
    raw = json.loads(path.read_text(encoding="utf-8"))
    if raw.get("kind") != "keyword_stub":
        raise CapabilityError(
            f"cannot reload backend of kind {raw.get('kind')!r}; re-run classify"
        )
    return KeywordClassifierBackend.from_json(raw)


def _load_issue_model(path: Path) -> IssueModel:
    raw = json.loads(path.read_text(encoding="utf-8"))
    if raw.get("kind") != "keyword_stub":
        raise CapabilityError(f"cannot reload issue model of kind {raw.get('kind')!r}")
    return KeywordIssueModel.from_json(raw)


def _load_simulator(path: Path) -> GenerationModel:
    raw = json.loads(path.read_text(encoding="utf-8"))
    if raw.get("kind") != "template_stub":
        raise CapabilityError(f"cannot reload simulator of kind {raw.get('kind')!r}")
    return TemplateGenerationModel.from_json(raw)


def _load_split(rundir: RunDirectory) -> CorpusSplit:
    return CorpusSplit.from_json(
        json.loads((rundir.root / "corpus/split.json").read_text(encoding="utf-8"))
    )


def _load_results(rundir: RunDirectory) -> list[ClassificationResult]:
    results = []
    with open(rundir.root / "classify/results.jsonl", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                results.append(ClassificationResult.from_json(json.loads(line)))
    return results


# -- stages ------------------------------------------------------------------


def stage_ingest(config: RunConfig, rundir: RunDirectory) -> bool:
    def work() -> tuple[dict[str, str], dict[str, Any]]:
        features = load_features(config.resolve(config.features_path), config.app)
        reviews = load_reviews(config.resolve(config.reviews_path), config.app)
        instances = build_release_instances(features)
        split = align_reviews(split_groups(instances, Month.parse(config.cutoff)), reviews)
        artifacts: dict[str, str] = {}
        rundir.write_text(
            "corpus/features.jsonl",
            "".join(json.dumps(f.to_json(), sort_keys=True) + "\n" for f in features),
            artifacts,
        )
        rundir.write_text(
            "corpus/reviews.jsonl",
            "".join(json.dumps(r.to_json(), sort_keys=True) + "\n" for r in reviews),
            artifacts,
        )
        rundir.write_json("corpus/split.json", split.to_json(), artifacts)
        rundir.write_text(
            "corpus/discard.log",
            "".join(f"{rid}\n" for rid in split.discarded_review_ids),
            artifacts,
        )
        info = {
            "app": config.app,
            "cutoff": config.cutoff,
            "feature_count": len(features),
            "review_count": len(reviews),
            "existing_instances": len(split.existing_instances),
            "candidate_instances": len(split.candidate_instances),
            "discarded_reviews": len(split.discarded_review_ids),
        }
        return artifacts, info

    return run_stage(rundir, config, "ingest", (), work)


def stage_classify(config: RunConfig, rundir: RunDirectory) -> bool:
    def work() -> tuple[dict[str, str], dict[str, Any]]:
        artifacts: dict[str, str] = {}
        split = _load_split(rundir)
        review_count = rundir.stage_record("ingest")["info"]["review_count"]  # type: ignore[index]
        recipes = _classifier_recipes(config)

        metrics_by_slot: dict[str, ClassifierMetrics] = {}
        training_logs: dict[str, Any] = {}
        if config.labeled_reviews_path:
            labeled = load_labeled(config.resolve(config.labeled_reviews_path))
            train_pool, test_set = _train_test_split(labeled, config.seed)
            backends = {}
            for slot in SLOTS:
                backend = train_backend(slot, train_pool, recipes[slot])
                backends[slot] = backend
                metrics_by_slot[slot] = evaluate_classifier(backend, test_set)
                training_logs[slot] = getattr(backend, "training_log", [])
            ensemble = EnsembleClassifier(
                backends, review_count, config.designated_slot, config.ensemble_min_reviews
            )
            training_logs["ensemble_test"] = evaluate_classifier(ensemble, test_set).to_json()
        else:
            if config.backends["classifier"] == REAL:
                raise ConfigError("real classifier backends require labeled_reviews_path")
            backends = {
                slot: lexicon_backend(
                    slot, derive_seed(config.seed, "lexicon", slot), config.backend_threshold
                )
                for slot in SLOTS
            }

        for slot in SLOTS:
            backend = backends[slot]
            if not isinstance(backend, KeywordClassifierBackend):
                raise CapabilityError(
                    "persisting model-runtime classifier backends is not supported in this "
                    "environment; use stub backends"
                )
            rundir.write_json(f"classify/backend_{slot}.json", backend.to_json(), artifacts)

        aligned = list(split.existing_reviews) + [
            r for _, rs in sorted(split.candidate_reviews.items()) for r in rs
        ]
        results = classify_batch(backends, aligned)
        decided = [
            ensemble_decide(
                result, review_count, config.designated_slot, config.ensemble_min_reviews
            )
            for result in results
        ]
        rundir.write_text(
            "classify/results.jsonl",
            "".join(json.dumps(r.to_json(), sort_keys=True) + "\n" for r in decided),
            artifacts,
        )
        if metrics_by_slot:
            rundir.write_text("classify/metrics.csv", metrics_table_csv(metrics_by_slot), artifacts)
            rundir.write_text(
                "classify/metrics.md",
                metrics_table_markdown(metrics_by_slot, note=_regime_note(config, review_count)),
                artifacts,
            )
        rundir.write_json("classify/training_log.json", training_logs, artifacts)
        privacy_count = sum(1 for r in decided if r.ensemble_is_privacy)
        info = {
            "regime": decided[0].regime if decided else None,
            "classified": len(decided),
            "privacy_reviews": privacy_count,
            "metrics": {slot: m.to_json() for slot, m in metrics_by_slot.items()},
        }
        return artifacts, info

    return run_stage(rundir, config, "classify", ("ingest",), work)


def _train_test_split(
    labeled: list[tuple[str, bool]], seed: int
) -> tuple[list[tuple[str, bool]], list[tuple[str, bool]]]:
    from .training import stratified_split

    return stratified_split(
        labeled, [lab for _, lab in labeled], 0.2, derive_seed(seed, "classifier-test")
    )


def _regime_note(config: RunConfig, review_count: int) -> str:
    if review_count >= config.ensemble_min_reviews:
        return (
            f"Corpus has {review_count} reviews (>= {config.ensemble_min_reviews}): "
            "conjunctive three-backend ensemble regime."
        )
    return (
        f"Corpus has {review_count} reviews (< {config.ensemble_min_reviews}): "
        f"single designated backend {config.designated_slot} decides."
    )


def stage_map(config: RunConfig, rundir: RunDirectory) -> bool:
    def work() -> tuple[dict[str, str], dict[str, Any]]:
        artifacts: dict[str, str] = {}
        split = _load_split(rundir)
        privacy_ids = {
            r.review_id for r in _load_results(rundir) if r.ensemble_is_privacy
        }
        pool = [r for r in split.existing_reviews if r.id in privacy_ids]
        backend = _embedding_backend(config)
        cache = EmbeddingCache()
        mapping = map_features(
            split.existing_features(), pool, backend, config.mapper_k, cache
        )
        pairs = build_training_pairs(split, mapping)
        write_pairs(pairs, rundir.path("map/pairs.jsonl"))
        rundir.track("map/pairs.jsonl", artifacts)
        cache.save(rundir.path("map/embeddings.npy"), rundir.path("map/embeddings.index.json"))
        rundir.track("map/embeddings.npy", artifacts)
        rundir.track("map/embeddings.index.json", artifacts)
        info = {
            "privacy_pool": len(pool),
            "features_mapped": len(mapping),
            "pairs": len(pairs),
            "embedding_backend": backend.name,
            "k": config.mapper_k,
        }
        return artifacts, info

    return run_stage(rundir, config, "map", ("ingest", "classify"), work)


def stage_train_simulator(config: RunConfig, rundir: RunDirectory) -> bool:
    def work() -> tuple[dict[str, str], dict[str, Any]]:
        artifacts: dict[str, str] = {}
        pairs = read_pairs(rundir.root / "map/pairs.jsonl")
        if config.backends["generator"] == REAL:
            from . import neural

            backend = neural.Seq2SeqBackend(neural.Seq2SeqBackend.SIMULATOR_DEFAULT)
        else:
            backend = TemplateGenerationBackend()
        model = finetune_simulator(pairs, config.simulator, backend)
        if not isinstance(model, TemplateGenerationModel):
            raise CapabilityError(
                "persisting model-runtime simulators is not supported in this environment; "
                "use the stub generator"
            )
        rundir.write_json("models/simulator.json", model.to_json(), artifacts)
        rundir.write_json("models/simulator_log.json", model.training_log, artifacts)
        info = {"model_hash": model.handle_id, "pairs": len(pairs), "seed": config.simulator.seed}
        return artifacts, info

    return run_stage(rundir, config, "train-simulator", ("map",), work)


def stage_train_issue_model(config: RunConfig, rundir: RunDirectory) -> bool:
    def work() -> tuple[dict[str, str], dict[str, Any]]:
        artifacts: dict[str, str] = {}
        annotations = load_annotations(config.resolve(config.annotations_path))
        if config.backends["issue_model"] == REAL:
            from . import neural

            backend = neural.Seq2SeqIssueBackend(neural.Seq2SeqBackend.ISSUE_DEFAULT)
        else:
            backend = KeywordIssueBackend()
        model, quality_log = finetune_issue_model(annotations, config.issue_gen, backend)
        if not isinstance(model, KeywordIssueModel):
            raise CapabilityError(
                "persisting model-runtime issue models is not supported in this environment; "
                "use the stub issue backend"
            )
        rundir.write_json("models/issue_model.json", model.to_json(), artifacts)
        rundir.write_json("models/issue_log.json", quality_log, artifacts)
        info = {
            "model_hash": model.handle_id,
            "annotations": len(annotations),
            "seed": config.issue_gen.seed,
        }
        return artifacts, info

    return run_stage(rundir, config, "train-issue-model", (), work)


def stage_run_baseline(config: RunConfig, rundir: RunDirectory) -> bool:
    def work() -> tuple[dict[str, str], dict[str, Any]]:
        artifacts: dict[str, str] = {}
        split = _load_split(rundir)
        review_count = rundir.stage_record("ingest")["info"]["review_count"]  # type: ignore[index]
        backends = {
            slot: _load_classifier_backend(rundir.root / f"classify/backend_{slot}.json")
            for slot in SLOTS
        }
        issue_model = _load_issue_model(rundir.root / "models/issue_model.json")
        ledger = run_baseline(
            split,
            backends,
            issue_model,
            corpus_review_count=review_count,
            designated_slot=config.designated_slot,
            ensemble_min_reviews=config.ensemble_min_reviews,
        )
        ledger.save(rundir.path("ledgers/baseline.json"))
        rundir.track("ledgers/baseline.json", artifacts)
        info = {
            "issue_model_hash": issue_model.handle_id,
            "cutoff": config.cutoff,
            "instances": len(ledger.per_instance),
            "issues": sum(len(v) for v in ledger.per_instance.values()),
        }
        return artifacts, info

    return run_stage(
        rundir, config, "run-baseline", ("ingest", "classify", "train-issue-model"), work
    )


def stage_run_predicted(config: RunConfig, rundir: RunDirectory) -> bool:
    def work() -> tuple[dict[str, str], dict[str, Any]]:
        artifacts: dict[str, str] = {}
        split = _load_split(rundir)
        pairs = read_pairs(rundir.root / "map/pairs.jsonl")
        simulator = _load_simulator(rundir.root / "models/simulator.json")
        issue_model = _load_issue_model(rundir.root / "models/issue_model.json")
        simulated: list[Any] = []
        ledger = run_predicted(
            split, pairs, simulator, issue_model, config.simulator, simulation_sink=simulated
        )
        ledger.save(rundir.path("ledgers/predicted.json"))
        rundir.track("ledgers/predicted.json", artifacts)
        rundir.write_text(
            "simulate/reviews.jsonl",
            "".join(json.dumps(r.to_json(), sort_keys=True) + "\n" for r in simulated),
            artifacts,
        )
        info = {
            "simulator_hash": simulator.handle_id,
            "issue_model_hash": issue_model.handle_id,
            "cutoff": config.cutoff,
            "seed": config.simulator.seed,
            "instances": len(ledger.per_instance),
            "issues": sum(len(v) for v in ledger.per_instance.values()),
        }
        return artifacts, info

    return run_stage(
        rundir,
        config,
        "run-predicted",
        ("ingest", "map", "train-simulator", "train-issue-model"),
        work,
    )


def _matcher(config: RunConfig) -> IssueMatcher:
    if config.matcher_mode == MATCH_SEMANTIC:
        return IssueMatcher(
            mode=MATCH_SEMANTIC,
            threshold=config.matcher_threshold,
            backend=_embedding_backend(config),
        )
    return IssueMatcher(mode=MATCH_EXACT)


def stage_evaluate(config: RunConfig, rundir: RunDirectory) -> bool:
    def work() -> tuple[dict[str, str], dict[str, Any]]:
        artifacts: dict[str, str] = {}
        baseline = MethodIssueLedger.load(rundir.root / "ledgers/baseline.json")
        predicted = MethodIssueLedger.load(rundir.root / "ledgers/predicted.json")
        if not baseline.instance_indices:
            raise ConfigError(
                f"no candidate instances to evaluate; cutoff {config.cutoff} leaves "
                "nothing after the existing group"
            )
        series = build_overlap_series(baseline, predicted, _matcher(config))
        rundir.write_json("eval/series.json", series_to_json(series, config.app), artifacts)
        rundir.write_text("eval/overlap.csv", overlap_table_csv(series), artifacts)
        rundir.write_text(
            "eval/overlap.md", overlap_table_markdown(series, config.app), artifacts
        )
        rundir.write_text("eval/temporal.csv", temporal_plot_csv(series), artifacts)
        final = series.rows[-1]
        info = {
            "instances": len(series.rows),
            "final_baseline_ratio": final.baseline_ratio,
            "final_predicted_ratio": final.predicted_ratio,
            "matcher_mode": series.matcher_mode,
        }
        return artifacts, info

    return run_stage(rundir, config, "evaluate", ("run-baseline", "run-predicted"), work)


def stage_report(config: RunConfig, rundir: RunDirectory) -> bool:
    def work() -> tuple[dict[str, str], dict[str, Any]]:
        artifacts: dict[str, str] = {}
        baseline = MethodIssueLedger.load(rundir.root / "ledgers/baseline.json")
        predicted = MethodIssueLedger.load(rundir.root / "ledgers/predicted.json")
        series = build_overlap_series(baseline, predicted, _matcher(config))
        review_count = rundir.stage_record("ingest")["info"]["review_count"]  # type: ignore[index]
        links = {
            "Overlap table (CSV)": "eval/overlap.csv",
            "Overlap table (Markdown)": "eval/overlap.md",
            "Raw series (JSON)": "eval/series.json",
            "Temporal-ratio plot data": "eval/temporal.csv",
            "Baseline ledger": "ledgers/baseline.json",
            "Predicted ledger": "ledgers/predicted.json",
        }
        if (rundir.root / "classify/metrics.md").exists():
            links["Classifier metrics"] = "classify/metrics.md"
        rundir.write_text(
            "report.md",
            summary_markdown(config.app, series, links, _regime_note(config, review_count)),
            artifacts,
        )
        return artifacts, {"report": "report.md"}

    return run_stage(rundir, config, "report", ("evaluate",), work)
