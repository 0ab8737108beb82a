"""Acceptable/unusable condition classifier: a 10-31-1 MLP on normalized gases."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Tuple

import numpy as np

from . import mlp
from .autoenc import dumps_model, loads_parts
from .data import Dataset, GasRecord, Label, NormStats, fit_normalizer
from .errors import EmptyBatch, IncompleteRecord, IncompleteTrainingData, SingleClassData

DEFAULT_TRAIN = mlp.TrainConfig(epochs=1500, method="scg", target_error=1e-4)


@dataclass
class ClassifierModel:
    net: mlp.Network
    stats: NormStats
    threshold: float = 0.5
    trace: List[float] = field(default_factory=list)

    def __post_init__(self):
        if not 0 < self.threshold < 1:
            raise ValueError("threshold must lie in (0, 1)")

    def scores(self, X_raw) -> np.ndarray:
        """Network outputs for an (n, p) matrix of raw concentrations."""
        return mlp.forward(self.net, self.stats.scale(np.atleast_2d(X_raw)))[:, 0]


def _targets(dataset: Dataset) -> np.ndarray:
    return np.array([[1.0 if r.label is Label.UNUSABLE else 0.0] for r in dataset])


def train_classifier(dataset: Dataset, config: mlp.TrainConfig = DEFAULT_TRAIN,
                     hidden: int = 31, c: float = 1.0) -> ClassifierModel:
    if len(dataset) == 0 or any(not r.complete for r in dataset):
        raise IncompleteTrainingData("classifier training requires complete records")
    if any(r.label is None for r in dataset):
        raise SingleClassData("every training record needs a label")
    if len({r.label for r in dataset}) < 2:
        raise SingleClassData("training data contains a single class")
    stats = fit_normalizer(dataset)
    width = len(dataset.schema)
    net = mlp.Network.init(mlp.mlp_specs((width, hidden, 1), c=c), config.seed)
    result = mlp.train(net, stats.scale(dataset.values), _targets(dataset), config)
    return ClassifierModel(result.net, stats, trace=list(result.trace))


def classify(model: ClassifierModel, record: GasRecord) -> Tuple[Label, float]:
    """Label is unusable only when the score strictly exceeds the threshold."""
    if not record.complete:
        raise IncompleteRecord(f"record {record.id!r} has missing values")
    score = float(model.scores(record.values)[0])
    return (Label.UNUSABLE if score > model.threshold else Label.ACCEPTABLE), score


def predict_labels(model: ClassifierModel, dataset: Dataset) -> list:
    if any(not r.complete for r in dataset):
        raise IncompleteRecord("all records must be complete")
    if len(dataset) == 0:
        return []
    s = model.scores(dataset.values)
    return [Label.UNUSABLE if v > model.threshold else Label.ACCEPTABLE for v in s]


def evaluate_accuracy(model: ClassifierModel, dataset: Dataset) -> float:
    if len(dataset) == 0:
        raise EmptyBatch("cannot score an empty dataset")
    pred = predict_labels(model, dataset)
    return sum(p == r.label for p, r in zip(pred, dataset)) / len(dataset)


def save_model(model: ClassifierModel, path) -> None:
    Path(path).write_text(dumps_model(model), encoding="utf-8")


def loads_model(text: str) -> ClassifierModel:
    return ClassifierModel(*loads_parts(text))


def load_model(path) -> ClassifierModel:
    return loads_model(Path(path).read_text(encoding="utf-8"))
