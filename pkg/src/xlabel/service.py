"""HTTP labeling service.

Session-stateful façade over the labeling engine: upload a record CSV,
open a per-task session, fetch review batches (pseudo-labels, per-feature
heat values, keyword-highlighted note segments, mismatch flags), submit
keep/flip/set decisions (which retrain the model), and export the labeled
dataset.

State is kept on disk under a data directory: uploaded datasets as CSV, one
append-only decision log per session, and a model snapshot per retrain, so a
restarted process reloads identical label stores and models.
"""
from __future__ import annotations

import csv
import io
import json
import os
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import click
import numpy as np
from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from xlabel.ebm import EbmModel, TrainConfig, fit
from xlabel.errors import (
    DegenerateLabels,
    EmptyPool,
    InvalidInput,
    ProtocolError,
    XLabelError,
)
from xlabel.labeling import (
    Decision,
    LabelStore,
    NLeast,
    Provenance,
    SamplingMethod,
    Threshold,
    apply_labels,
    detect_mismatches,
    retrain,
    sample,
    score_records,
)
from xlabel.ncd import (
    CHAIN_ORDER,
    CSV_COLUMNS,
    DEFAULT_SCHEMA,
    LAB_NAMES,
    RawRecord,
    Task,
    extract_matrix,
    keyword_match,
    read_csv,
    rule_based_classify,
    write_csv,
)

HEAT_WIRE_DECIMALS = 6


# ---------------------------------------------------------------------------
# wire models

class SamplingSpec(BaseModel):
    method: Literal["threshold", "n_least"]
    threshold: float | None = None
    n: int | None = None

    def to_method(self) -> SamplingMethod:
        if self.method == "threshold":
            if self.threshold is None:
                raise InvalidInput("threshold sampling needs a 'threshold' value")
            return Threshold(self.threshold)
        if self.n is None:
            raise InvalidInput("n_least sampling needs an 'n' value")
        return NLeast(self.n)

    @classmethod
    def from_method(cls, method: SamplingMethod) -> "SamplingSpec":
        if isinstance(method, Threshold):
            return cls(method="threshold", threshold=method.threshold)
        return cls(method="n_least", n=method.n)


class SessionCreate(BaseModel):
    dataset_id: str
    task: Task
    sampling: SamplingSpec
    detect_mismatches: bool = False


class DecisionBody(BaseModel):
    record_id: str
    action: Literal["keep", "flip", "set"]
    value: int | None = None


class LabelSubmission(BaseModel):
    decisions: list[DecisionBody]
    token: str | None = Field(default=None,
                              description="Replay token: resubmitting the same "
                                          "token returns the cached result.")


# ---------------------------------------------------------------------------
# state

@dataclass
class DatasetState:
    id: str
    records: list[RawRecord]
    imported: dict[Task, np.ndarray]
    index_of: dict[str, int]


@dataclass
class SessionState:
    id: str
    dataset_id: str
    task: Task
    sampling: SamplingMethod
    detect_mismatches: bool
    stores: dict[Task, LabelStore]
    models: dict[Task, EbmModel]
    train_config: TrainConfig
    model_version: int = 0
    presented: dict[int, int] = field(default_factory=dict)
    last_token: str | None = None
    last_response: dict | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def store(self) -> LabelStore:
        return self.stores[self.task]

    @property
    def model(self) -> EbmModel | None:
        return self.models.get(self.task)


def _atomic_write(path: Path, data: bytes):
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


class Storage:
    """Disk layout: datasets/<id>/records.csv and sessions/<id>/{meta.json,
    events.jsonl, model.json}."""

    def __init__(self, data_dir, train_config: TrainConfig = TrainConfig()):
        self.root = Path(data_dir)
        self.train_config = train_config
        self.datasets: dict[str, DatasetState] = {}
        self.sessions: dict[str, SessionState] = {}
        self._create_lock = threading.Lock()
        (self.root / "datasets").mkdir(parents=True, exist_ok=True)
        (self.root / "sessions").mkdir(parents=True, exist_ok=True)
        self._reload()

    # -- datasets

    def add_dataset(self, csv_text: str) -> DatasetState:
        records, imported = read_csv(csv_text)
        dataset_id = uuid.uuid4().hex[:12]
        state = DatasetState(
            id=dataset_id,
            records=records,
            imported=imported,
            index_of={r.id: i for i, r in enumerate(records)},
        )
        ddir = self.root / "datasets" / dataset_id
        ddir.mkdir(parents=True, exist_ok=True)
        _atomic_write(ddir / "records.csv",
                      write_csv(records, imported).encode("utf-8"))
        self.datasets[dataset_id] = state
        return state

    def dataset(self, dataset_id: str) -> DatasetState:
        if dataset_id not in self.datasets:
            raise HTTPException(404, f"unknown dataset {dataset_id!r}")
        return self.datasets[dataset_id]

    # -- sessions

    def _build_stores_and_models(self, dataset: DatasetState):
        """Walk the task chain once: build each task's label store, train a
        model from its imported labels when both classes are present, and
        feed its predictions (model-based, else the rule baseline's) into the
        downstream tasks' ``*_pred`` features."""
        preds: dict[Task, np.ndarray] = {}
        stores: dict[Task, LabelStore] = {}
        models: dict[Task, EbmModel] = {}
        record_ids = [r.id for r in dataset.records]
        for t in CHAIN_ORDER:
            X_t = extract_matrix(dataset.records, t, preds)
            labels = dataset.imported[t]
            provenance = [Provenance.IMPORTED if v >= 0 else None for v in labels]
            stores[t] = LabelStore(X_t, record_ids=record_ids,
                                   labels=labels, provenance=provenance)
            labeled = labels >= 0
            if labeled.any() and labels[labeled].min() != labels[labeled].max():
                model = fit_on(X_t[labeled], labels[labeled], self.train_config, t)
                models[t] = model
                preds[t] = model.predict_label_many(X_t)
            else:
                preds[t] = np.array(
                    [rule_based_classify(r, t) for r in dataset.records],
                    dtype=np.int8)
        return stores, models

    def create_session(self, body: SessionCreate) -> SessionState:
        dataset = self.dataset(body.dataset_id)
        method = body.sampling.to_method()
        stores, models = self._build_stores_and_models(dataset)
        session = SessionState(
            id=uuid.uuid4().hex[:12],
            dataset_id=dataset.id,
            task=body.task,
            sampling=method,
            detect_mismatches=body.detect_mismatches,
            stores=stores,
            models=models,
            train_config=self.train_config,
            model_version=1 if body.task in models else 0,
        )
        with self._create_lock:
            self.sessions[session.id] = session
        sdir = self._session_dir(session.id)
        sdir.mkdir(parents=True, exist_ok=True)
        (sdir / "events.jsonl").touch()
        self._persist_meta(session)
        if session.model is not None:
            self._persist_model(session)
        return session

    def session(self, session_id: str) -> SessionState:
        if session_id not in self.sessions:
            raise HTTPException(404, f"unknown session {session_id!r}")
        return self.sessions[session_id]

    # -- persistence

    def _session_dir(self, session_id: str) -> Path:
        return self.root / "sessions" / session_id

    def _persist_meta(self, session: SessionState):
        meta = {
            "id": session.id,
            "dataset_id": session.dataset_id,
            "task": session.task.value,
            "sampling": SamplingSpec.from_method(session.sampling).model_dump(),
            "detect_mismatches": session.detect_mismatches,
            "model_version": session.model_version,
        }
        _atomic_write(self._session_dir(session.id) / "meta.json",
                      json.dumps(meta, indent=2).encode("utf-8"))

    def _persist_model(self, session: SessionState):
        if session.model is not None:
            _atomic_write(self._session_dir(session.id) / "model.json",
                          session.model.to_bytes())

    def append_event(self, session: SessionState, token, applied, counts):
        line = json.dumps({
            "token": token,
            "applied": [[int(i), int(v)] for i, v in applied],
            "counts": counts,
            "model_version": session.model_version,
        })
        with open(self._session_dir(session.id) / "events.jsonl", "a",
                  encoding="utf-8") as fh:
            fh.write(line + "\n")
        self._persist_meta(session)
        self._persist_model(session)

    def _reload(self):
        for ddir in sorted((self.root / "datasets").iterdir()):
            csv_path = ddir / "records.csv"
            if not csv_path.is_file():
                continue
            records, imported = read_csv(csv_path.read_text("utf-8"))
            self.datasets[ddir.name] = DatasetState(
                id=ddir.name, records=records, imported=imported,
                index_of={r.id: i for i, r in enumerate(records)})
        for sdir in sorted((self.root / "sessions").iterdir()):
            meta_path = sdir / "meta.json"
            if not meta_path.is_file():
                continue
            meta = json.loads(meta_path.read_text("utf-8"))
            dataset = self.datasets.get(meta["dataset_id"])
            if dataset is None:
                continue
            task = Task(meta["task"])
            stores, models = self._build_stores_and_models(dataset)
            session = SessionState(
                id=meta["id"],
                dataset_id=dataset.id,
                task=task,
                sampling=SamplingSpec(**meta["sampling"]).to_method(),
                detect_mismatches=meta["detect_mismatches"],
                stores=stores,
                models=models,
                train_config=self.train_config,
                model_version=meta["model_version"],
            )
            store = session.stores[task]
            last = None
            for line in (sdir / "events.jsonl").read_text("utf-8").splitlines():
                event = json.loads(line)
                decisions = [Decision(i, "set", value=v) for i, v in event["applied"]]
                store = apply_labels(store, decisions)
                last = event
            session.stores[task] = store
            if last is not None:
                session.last_token = last.get("token")
                session.last_response = {"kept": 0, "flipped": 0, "set": 0,
                                         "model_unchanged": False, "model": None}
                session.last_response.update(last.get("counts", {}))
                session.last_response["model_version"] = last["model_version"]
            model_path = sdir / "model.json"
            if model_path.is_file():
                session.models[task] = EbmModel.from_bytes(model_path.read_bytes())
            self.sessions[session.id] = session


def fit_on(X, y, config: TrainConfig, task: Task) -> EbmModel:
    return fit(X, np.asarray(y, dtype=np.int64), config,
               feature_names=DEFAULT_SCHEMA.features(task))


# ---------------------------------------------------------------------------
# payload builders

def _merge_spans(spans):
    merged = []
    for start, end in sorted(spans):
        if merged and start <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(end, merged[-1][1]))
        else:
            merged.append((start, end))
    return merged


def note_segments(note: str, task: Task) -> list[dict]:
    """Split a note into contiguous segments flagged highlighted/plain."""
    _, spans = keyword_match(note, task)
    data = note.encode("utf-8")
    segments = []
    cursor = 0
    for start, end in _merge_spans(spans):
        if start > cursor:
            segments.append({"text": data[cursor:start].decode("utf-8"),
                             "highlight": False})
        segments.append({"text": data[start:end].decode("utf-8"),
                         "highlight": True})
        cursor = end
    if cursor < len(data):
        segments.append({"text": data[cursor:].decode("utf-8"), "highlight": False})
    return segments


def _none_if_nan(value: float):
    return None if np.isnan(value) else float(value)


def _record_payload(task: Task, store: LabelStore, model: EbmModel,
                    dataset: DatasetState, index: int,
                    p: float, conf: float, pseudo: int,
                    is_mismatch: bool) -> dict:
    record = dataset.records[index]
    x = store.features[index]
    heat = {name: round(value, HEAT_WIRE_DECIMALS)
            for name, value in model.heat(x)}
    features = {name: _none_if_nan(v)
                for name, v in zip(model.feature_names, x)}
    stored = int(store.labels[index]) if store.labels[index] >= 0 else None
    return {
        "record_id": record.id,
        "index": index,
        "fields": {
            "age": _none_if_nan(record.age),
            "sex": record.sex,
            "height": _none_if_nan(record.height),
            "weight": _none_if_nan(record.weight),
            **{name: _none_if_nan(record.lab(name)) for name in LAB_NAMES},
        },
        "icd10_codes": list(record.icd10_codes),
        "drugs": list(record.drugs),
        "note": record.note,
        "note_segments": note_segments(record.note, task),
        "pseudo_label": int(pseudo),
        "p": float(p),
        "confidence": float(conf),
        "heat": heat,
        "features": features,
        "is_mismatch": is_mismatch,
        "stored_label": stored,
    }


# ---------------------------------------------------------------------------
# app

def create_app(data_dir, train_config: TrainConfig = TrainConfig()) -> FastAPI:
    app = FastAPI(title="xlabel service", version="0.1.0")
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    storage = Storage(data_dir, train_config)
    app.state.storage = storage

    @app.exception_handler(XLabelError)
    async def _xlabel_error(_request, exc: XLabelError):
        status = 409 if isinstance(exc, ProtocolError) else 400
        return JSONResponse(status_code=status, content={"detail": str(exc)})

    @app.post("/datasets")
    async def upload_dataset(request: Request):
        body = (await request.body()).decode("utf-8", errors="replace")
        dataset = storage.add_dataset(body)
        return {
            "dataset_id": dataset.id,
            "n_records": len(dataset.records),
            "columns": list(CSV_COLUMNS),
            "labeled_counts": {t.value: int(np.sum(dataset.imported[t] >= 0))
                               for t in Task},
        }

    @app.post("/sessions")
    def create_session(body: SessionCreate):
        session = storage.create_session(body)
        return _session_status(session)

    def _session_status(session: SessionState) -> dict:
        store = session.store
        return {
            "session_id": session.id,
            "dataset_id": session.dataset_id,
            "task": session.task.value,
            "status": "TRAINED" if session.model is not None else "UNTRAINED",
            "model_version": session.model_version,
            "sampling": SamplingSpec.from_method(session.sampling).model_dump(),
            "detect_mismatches": session.detect_mismatches,
            "labeled": int(store.labeled_indices().size),
            "unlabeled": int(store.unlabeled_indices().size),
        }

    @app.get("/sessions/{session_id}")
    def session_status(session_id: str):
        return _session_status(storage.session(session_id))

    @app.get("/sessions/{session_id}/batch")
    def get_batch(session_id: str):
        session = storage.session(session_id)
        dataset = storage.dataset(session.dataset_id)
        with session.lock:
            store, model, version = session.store, session.model, session.model_version
        if model is None:
            raise HTTPException(
                409, "session has no trained model yet; submit seed labels "
                     "for both classes via POST .../labels with 'set' decisions")
        rows = []
        presented: dict[int, int] = {}
        mismatches = detect_mismatches(store, model) if session.detect_mismatches else []
        if mismatches:
            report = score_records(model, store, [m.index for m in mismatches])
            for m, p in zip(mismatches, report.p):
                rows.append(_record_payload(session.task, store, model, dataset,
                                            m.index, p=float(p),
                                            conf=m.confidence, pseudo=m.pseudo_label,
                                            is_mismatch=True))
                presented[m.index] = m.pseudo_label
        try:
            sampled = sample(store, model, session.sampling)
        except EmptyPool:
            sampled = []
        if sampled:
            report = score_records(model, store, sampled)
            for index, p, conf, pseudo in zip(report.indices, report.p,
                                              report.confidence, report.pseudo_labels):
                rows.append(_record_payload(session.task, store, model, dataset,
                                            int(index), p=float(p), conf=float(conf),
                                            pseudo=int(pseudo), is_mismatch=False))
                presented[int(index)] = int(pseudo)
        if not rows:
            return Response(status_code=204)
        with session.lock:
            session.presented = presented
        return {"session_id": session.id, "model_version": version,
                "task": session.task.value, "records": rows}

    @app.post("/sessions/{session_id}/labels")
    def submit_labels(session_id: str, body: LabelSubmission):
        session = storage.session(session_id)
        dataset = storage.dataset(session.dataset_id)
        with session.lock:
            if body.token is not None and body.token == session.last_token:
                return session.last_response
            decisions = []
            for d in body.decisions:
                if d.record_id not in dataset.index_of:
                    raise InvalidInput(f"unknown record id {d.record_id!r}")
                decisions.append(Decision(dataset.index_of[d.record_id],
                                          d.action, d.value))
            store = apply_labels(session.store, decisions,
                                 presented=session.presented)
            counts = {
                "kept": sum(1 for d in decisions if d.action == "keep"),
                "flipped": sum(1 for d in decisions if d.action == "flip"),
                "set": sum(1 for d in decisions if d.action == "set"),
            }
            applied = [(d.index, int(store.labels[d.index])) for d in decisions]
            session.stores[session.task] = store
            session.presented = {}
            model_payload = None
            model_unchanged = False
            try:
                model = retrain(store, session.train_config)
                session.models[session.task] = model
                session.model_version += 1
                info = model.train_info
                model_payload = {
                    "rounds_run": info["rounds_run"],
                    "train_log_loss": info["train_log_loss"],
                    "train_accuracy": info["train_accuracy"],
                    "n_records": info["n_records"],
                }
            except DegenerateLabels:
                model_unchanged = True
            response = {
                **counts,
                "model_version": session.model_version,
                "model_unchanged": model_unchanged,
                "model": model_payload,
            }
            session.last_token = body.token
            session.last_response = response
            storage.append_event(session, body.token, applied, counts)
            return response

    @app.get("/sessions/{session_id}/export")
    def export_csv(session_id: str):
        session = storage.session(session_id)
        dataset = storage.dataset(session.dataset_id)
        with session.lock:
            stores = dict(session.stores)
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        prov_cols = [f"{t.value}_provenance" for t in Task]
        writer.writerow(list(CSV_COLUMNS) + prov_cols)
        base = write_csv(dataset.records,
                         labels={t: stores[t].labels for t in Task})
        base_rows = list(csv.reader(io.StringIO(base)))[1:]
        for i, row in enumerate(base_rows):
            for t in Task:
                prov = stores[t].provenance[i]
                row.append(prov.value if prov is not None else "")
            writer.writerow(row)
        return Response(content=buffer.getvalue(), media_type="text/csv")

    return app


@click.command()
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-dir", type=click.Path(file_okay=False),
              default=None, help="State directory (default: $XLABEL_DATA_DIR "
                                 "or ./xlabel-data).")
def main(port, host, data_dir):
    """Run the labeling service."""
    import uvicorn
    resolved = data_dir or os.environ.get("XLABEL_DATA_DIR", "xlabel-data")
    uvicorn.run(create_app(resolved), host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
