"""Pluggable model and explainer oracles for the oracle-dependent metrics.

Two built-ins are provided: a linear model whose input-x-gradient explanation
has a closed form (so metric tests have exact expected values), and a bridge
that shells out to an arbitrary command over NPY request/response files.
"""

import subprocess
import tempfile
import threading
from pathlib import Path
from typing import Protocol, runtime_checkable

import numpy as np

from .errors import OracleFailure
from .npyio import read_npy, write_npy


@runtime_checkable
class ModelOracle(Protocol):
    num_classes: int

    def predict(self, inputs: np.ndarray) -> np.ndarray:
        """(N, C, H, W) inputs -> (N, num_classes) logits."""


@runtime_checkable
class ExplainerOracle(Protocol):
    def explain(self, inputs: np.ndarray, target: int) -> np.ndarray:
        """(N, C, H, W) inputs + class index -> (N, C, H, W) attributions."""


class BuiltinLinear:
    """Linear model with per-class weight tensors; doubles as its own explainer.

    predict(x)[k] = <W_k, x>; explain(x, k) = W_k * x (input x gradient),
    which satisfies completeness against a zero baseline exactly.
    """

    def __init__(self, weights: np.ndarray):
        weights = np.asarray(weights, dtype=np.float64)
        if weights.ndim != 4:
            raise ValueError(f"weights must be (num_classes, C, H, W), got {weights.shape}")
        self.weights = weights
        self.num_classes = weights.shape[0]

    def predict(self, inputs):
        inputs = np.asarray(inputs, dtype=np.float64)
        self._check(inputs)
        return np.tensordot(inputs, self.weights, axes=([1, 2, 3], [1, 2, 3]))

    def explain(self, inputs, target):
        inputs = np.asarray(inputs, dtype=np.float64)
        self._check(inputs)
        if not 0 <= target < self.num_classes:
            raise OracleFailure(f"target {target} out of range for {self.num_classes} classes")
        return self.weights[target][None] * inputs

    def _check(self, inputs):
        if inputs.ndim != 4 or inputs.shape[1:] != self.weights.shape[1:]:
            raise OracleFailure(
                f"inputs {inputs.shape} incompatible with weights {self.weights.shape}"
            )


class CallbackOracle:
    """Adapter wrapping plain callables into the oracle contracts."""

    def __init__(self, predict_fn=None, explain_fn=None, num_classes=None):
        self._predict = predict_fn
        self._explain = explain_fn
        if predict_fn is not None and num_classes is None:
            raise ValueError("num_classes is required alongside predict_fn")
        self.num_classes = num_classes

    def predict(self, inputs):
        out = np.asarray(self._predict(np.asarray(inputs)), dtype=np.float64)
        if out.ndim != 2 or out.shape[1] != self.num_classes:
            raise OracleFailure(f"callback returned logits of shape {out.shape}")
        return out

    def explain(self, inputs, target):
        inputs = np.asarray(inputs)
        out = np.asarray(self._explain(inputs, int(target)), dtype=np.float64)
        if out.shape != inputs.shape:
            raise OracleFailure(
                f"callback attribution shape {out.shape} != input shape {inputs.shape}"
            )
        return out


class ExternalCommandOracle:
    """Subprocess oracle over NPY files.

    The command template receives {input} and {output} file paths, plus
    {target} for the explainer role. Each instance serializes its own
    invocations; non-zero exit, timeout or wrong response shape raise
    OracleFailure with captured diagnostics.
    """

    def __init__(self, template: str, role: str, timeout: float = 60.0, num_classes: int = None):
        if role not in ("model", "explainer"):
            raise ValueError("role must be 'model' or 'explainer'")
        if role == "model" and num_classes is None:
            raise ValueError("model oracles must advertise num_classes")
        if role == "explainer" and "{target}" not in template:
            raise ValueError("explainer command templates need a {target} placeholder")
        self.template = template
        self.role = role
        self.timeout = timeout
        self.num_classes = num_classes
        self._lock = threading.Lock()

    def predict(self, inputs):
        out = self._invoke(inputs)
        expected = (np.asarray(inputs).shape[0], self.num_classes)
        if out.shape != expected:
            raise OracleFailure(f"model oracle returned shape {out.shape}, expected {expected}")
        return out

    def explain(self, inputs, target):
        out = self._invoke(inputs, target=int(target))
        if out.shape != np.asarray(inputs).shape:
            raise OracleFailure(
                f"explainer oracle returned shape {out.shape}, expected {np.asarray(inputs).shape}"
            )
        return out

    def _invoke(self, inputs, target=None):
        inputs = np.asarray(inputs, dtype=np.float64)
        with self._lock, tempfile.TemporaryDirectory(prefix="attrens-oracle-") as tmp:
            req = Path(tmp) / "request.npy"
            resp = Path(tmp) / "response.npy"
            write_npy(inputs, req)
            fields = {"input": str(req), "output": str(resp)}
            if target is not None:
                fields["target"] = str(target)
            try:
                cmd = self.template.format(**fields)
            except KeyError as exc:
                raise OracleFailure(f"unknown placeholder in command template: {exc}") from exc
            try:
                proc = subprocess.run(
                    cmd, shell=True, capture_output=True, timeout=self.timeout
                )
            except subprocess.TimeoutExpired as exc:
                raise OracleFailure(f"oracle timed out after {self.timeout}s: {cmd}") from exc
            if proc.returncode != 0:
                raise OracleFailure(
                    f"oracle exited {proc.returncode}: {cmd}\n"
                    f"stderr: {proc.stderr.decode(errors='replace')[-2000:]}"
                )
            if not resp.exists():
                raise OracleFailure(f"oracle wrote no response file: {cmd}")
            try:
                return read_npy(resp)
            except Exception as exc:
                raise OracleFailure(f"unreadable oracle response: {exc}") from exc
