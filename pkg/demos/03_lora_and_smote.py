"""LoRA adapters on a frozen layer, and SMOTE on an imbalanced toy set."""
import numpy as np

from dressedq.classical import LinearLayer, linear_forward
from dressedq.lora import LoraAdapter, lora_forward, merge
from dressedq.smote import LabeledDataset, SmoteConfig, class_counts, smote_balance

rng = np.random.default_rng(0)
base = LinearLayer.init(6, 4, rng)
adapter = LoraAdapter.wrap(base, rng, rank=2, alpha=4.0, dropout_p=0.0)
x = rng.normal(size=6)

# B starts at zero so the adapter is an exact no-op
print("fresh adapter == base:", np.array_equal(lora_forward(adapter, x), linear_forward(base, x)))

adapter.B = rng.normal(size=adapter.B.shape)
print("scaling alpha/r =", adapter.scaling)
print("merge error:", np.abs(lora_forward(adapter, x) - linear_forward(merge(adapter), x)).max())

## SMOTE
labels = np.array([0] * 20 + [1] * 6 + [2] * 3)
ds = LabeledDataset(rng.normal(size=(len(labels), 2)) + 3 * labels[:, None], labels, ["a", "b", "c"])
balanced = smote_balance(ds, SmoteConfig(k_neighbors=5, seed=1))
print("before", class_counts(ds), "after", class_counts(balanced))
