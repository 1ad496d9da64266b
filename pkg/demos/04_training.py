"""Train the dressed model on Gaussian blobs, then drive the same run through the CLI."""
import tempfile
from pathlib import Path

import numpy as np

from dressedq.cli import main
from dressedq.dataio import SplitSpec, split_and_batch
from dressedq.model import DressedModel
from dressedq.qlayer import QuantumLayerConfig
from dressedq.smote import LabeledDataset
from dressedq.trainer import TrainConfig, fit

rng = np.random.default_rng(8)
centers = rng.normal(size=(4, 16))
labels = np.repeat(np.arange(4), 50)
ds = LabeledDataset(centers[labels] + rng.normal(size=(200, 16)), labels, ["w", "x", "y", "z"])

plan, val = split_and_batch(ds, SplitSpec(0.8, True, 8))
model = DressedModel.init(16, 4, QuantumLayerConfig(4, 2), seed=8, class_names=ds.class_names)
result = fit(model, plan, val, TrainConfig(epochs=5, seed=8))
for rec in result.history:
    print(f"{rec.epoch} {rec.phase:<10} acc={rec.accuracy:.3f} loss={rec.loss:.4f}")
print(result.confusion["validation"])

# the same data through the CLI, with an lr x optimizer x lora grid
with tempfile.TemporaryDirectory() as tmp:
    data = Path(tmp) / "blobs.csv"
    rows = ["label," + ",".join(f"f{j}" for j in range(16))]
    rows += [ds.class_names[c] + "," + ",".join(repr(float(v)) for v in f) for f, c in zip(ds.features, labels)]
    data.write_text("\n".join(rows) + "\n")
    for opt, lr in [("sgd", "0.05"), ("adam", "0.01")]:
        for lora in ("--no-lora", "--lora"):
            out = Path(tmp) / f"{opt}{lora}"
            code = main(["train", "--data", str(data), "--epochs", "2", "--optimizer", opt, "--lr", lr,
                         lora, "--depth", "2", "--out", str(out)])
            print(opt, lr, lora, "exit", code, (out / "metrics.csv").read_text().splitlines()[-2])
