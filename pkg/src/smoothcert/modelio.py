"""Versioned plain-text model files.

Format: one header line "smoothcert-model <version> <kind> <dims...>" where
the dims are kind-specific and end with the label count, followed by all
parameters as whitespace-separated decimals with 17 significant digits in
row-major order.  Kinds:

    constant <dim> <labels>            params: label
    linear   <dim> 2                   params: w[0..dim) b
    interval 1 2                       params: t inner_label outer_label
    logistic <dim> <labels>            params: W row-major, biases
    mlp      <dim> <hidden> <labels>   params: W1, b1, W2, b2

The same format serves trained models and the analytic oracle classifiers.
"""

from __future__ import annotations

import numpy as np

from .oracles import ConstantClassifier, IntervalClassifier, LinearModel
from .training import MlpModel, SoftmaxLinearModel

FORMAT_VERSION = 1
_MAGIC = "smoothcert-model"


def _fmt(values) -> str:
    flat = np.asarray(values, dtype=np.float64).ravel()
    return " ".join(f"{v:.17g}" for v in flat)


def save_model(model, path) -> None:
    if isinstance(model, ConstantClassifier):
        dim = getattr(model, "dim", 0)
        header = f"{_MAGIC} {FORMAT_VERSION} constant {dim} {model.num_labels}"
        body = [str(model.label)]
    elif isinstance(model, LinearModel):
        header = f"{_MAGIC} {FORMAT_VERSION} linear {model.dim} 2"
        body = [_fmt(model.w), _fmt([model.b])]
    elif isinstance(model, IntervalClassifier):
        header = f"{_MAGIC} {FORMAT_VERSION} interval 1 2"
        body = [_fmt([model.t]), str(model.inner_label), str(model.outer_label)]
    elif isinstance(model, SoftmaxLinearModel):
        header = f"{_MAGIC} {FORMAT_VERSION} logistic {model.dim} {model.num_labels}"
        body = [_fmt(model.weights), _fmt(model.biases)]
    elif isinstance(model, MlpModel):
        header = (f"{_MAGIC} {FORMAT_VERSION} mlp {model.dim} "
                  f"{model.hidden_width} {model.num_labels}")
        body = [_fmt(model.w1), _fmt(model.b1), _fmt(model.w2), _fmt(model.b2)]
    else:
        raise ValueError(f"cannot serialize model type {type(model).__name__}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        fh.write("\n".join(body) + "\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        params = fh.read().split()
    if len(header) < 4 or header[0] != _MAGIC:
        raise ValueError(f"{path}: not a model file")
    if int(header[1]) != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported format version {header[1]}")
    kind = header[2]
    dims = [int(v) for v in header[3:]]

    def floats(count: int, offset: int) -> np.ndarray:
        if offset + count > len(params):
            raise ValueError(f"{path}: truncated parameter section")
        return np.asarray([float(v) for v in params[offset:offset + count]])

    if kind == "constant":
        dim, labels = dims
        model = ConstantClassifier(int(float(params[0])), num_labels=labels)
        model.dim = dim
        return model
    if kind == "linear":
        dim, _ = dims
        w = floats(dim, 0)
        return LinearModel(w, float(params[dim]))
    if kind == "interval":
        t = float(params[0])
        return IntervalClassifier(t=t, inner_label=int(float(params[1])),
                                  outer_label=int(float(params[2])))
    if kind == "logistic":
        dim, labels = dims
        weights = floats(labels * dim, 0).reshape(labels, dim)
        return SoftmaxLinearModel(weights, floats(labels, labels * dim))
    if kind == "mlp":
        dim, hidden, labels = dims
        off = 0
        w1 = floats(hidden * dim, off).reshape(hidden, dim); off += hidden * dim
        b1 = floats(hidden, off); off += hidden
        w2 = floats(labels * hidden, off).reshape(labels, hidden); off += labels * hidden
        b2 = floats(labels, off)
        return MlpModel(w1, b1, w2, b2)
    raise ValueError(f"{path}: unknown model kind '{kind}'")
