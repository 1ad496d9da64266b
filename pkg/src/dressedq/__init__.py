"""Hybrid quantum-classical text classification with a simulated dressed quantum network."""

__version__ = "0.1.0"

from .classical import LinearLayer, linear_forward, softmax, softmax_cross_entropy
from .dataio import BatchPlan, RawRecord, SplitSpec, encode_labels, hash_featurize, load_dataset, split_and_batch
from .lora import LoraAdapter, lora_backward, lora_forward, merge
from .model import DressedModel, backward, load_checkpoint, model_forward, save_checkpoint
from .qlayer import CircuitParams, QuantumLayerConfig, embed_angles, param_shift_grad, quantum_forward
from .smote import LabeledDataset, SmoteConfig, class_counts, knn_indices, smote_balance
from .statevec import (
    GateOp,
    StateVector,
    apply_circuit,
    apply_cnot,
    apply_hadamard,
    apply_ry,
    expect_z,
    new_zero_state,
)
from .trainer import MetricsRecord, TrainConfig, accuracy, confusion_matrix, fit, mae
