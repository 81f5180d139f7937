"""Fashion-landmark predictor: correlation layer + dense tanh network.

Given the model's and the person's human landmarks and the garment's
fashion landmarks (all normalized), predict where the garment's fashion
landmarks land on the person. The network input is the flattened outer
product of the two flattened human-landmark vectors (18 x 18 = 324 values)
followed by the 12 fashion-landmark coordinates. Six tanh layers of width
900, 800, 600, 500, 250, 100 feed a 12-unit sigmoid output.

Everything here is plain numpy with hand-written backpropagation and Adam.
Weight matrices are stored ``(fan_in, fan_out)`` so a layer computes
``x @ w + b``.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .landmarks import N_FASHION, N_HUMAN, Landmark, array_to_landmarks, landmarks_to_array

CORR_SIZE = 2 * N_HUMAN
INPUT_DIM = CORR_SIZE * CORR_SIZE + 2 * N_FASHION
OUTPUT_DIM = 2 * N_FASHION
HIDDEN = (900, 800, 600, 500, 250, 100)
DIMS = (INPUT_DIM,) + HIDDEN + (OUTPUT_DIM,)
FORMAT_VERSION = 1
DEFAULT_EPOCHS = 316
DEFAULT_BATCH = 64


class ModelFormatError(ValueError):
    pass


def sigmoid(z):
    # split by sign to avoid overflow in exp
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass(eq=False)
class PredictorModel:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("need one bias vector per weight matrix")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ValueError(f"layer {i}: weight {w.shape} and bias {b.shape} disagree")
            if i and self.weights[i - 1].shape[1] != w.shape[0]:
                raise ValueError(f"layer {i} input size does not match previous layer")

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0],) + tuple(w.shape[1] for w in self.weights)

    def params(self) -> list[np.ndarray]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    def copy(self) -> "PredictorModel":
        return PredictorModel([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def __eq__(self, other):
        if not isinstance(other, PredictorModel):
            return NotImplemented
        a, b = self.params(), other.params()
        return len(a) == len(b) and all(np.array_equal(x, y) for x, y in zip(a, b))

    __hash__ = None


def init_model(seed: int = 0, dims: Sequence[int] = DIMS) -> PredictorModel:
    """Glorot-uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return PredictorModel(weights, biases)


def zeros_model(dims: Sequence[int] = DIMS) -> PredictorModel:
    return PredictorModel(
        [np.zeros((a, b)) for a, b in zip(dims[:-1], dims[1:])],
        [np.zeros(b) for b in dims[1:]],
    )


# ---------------------------------------------------------------------------
# inputs


def correlation_map(f_a, f_b) -> np.ndarray:
    """Outer product ``C[i, j] = f_a[i] * f_b[j]``."""
    f_a = np.asarray(f_a, dtype=np.float64).ravel()
    f_b = np.asarray(f_b, dtype=np.float64).ravel()
    if f_a.shape != f_b.shape:
        raise ValueError(f"length mismatch: {f_a.size} vs {f_b.size}")
    return np.outer(f_a, f_b)


def assemble_inputs(m_hlm, p_hlm, c_flm) -> np.ndarray:
    """Batched network input from coordinate arrays.

    Shapes ``(B, 9, 2)``, ``(B, 9, 2)``, ``(B, 6, 2)`` (or unbatched) to
    ``(B, 336)``.
    """
    m = np.asarray(m_hlm, dtype=np.float64).reshape(-1, CORR_SIZE)
    p = np.asarray(p_hlm, dtype=np.float64).reshape(-1, CORR_SIZE)
    c = np.asarray(c_flm, dtype=np.float64).reshape(-1, 2 * N_FASHION)
    if not len(m) == len(p) == len(c):
        raise ValueError("batch sizes of the three landmark sets differ")
    corr = np.einsum("bi,bj->bij", m, p).reshape(len(m), -1)
    return np.concatenate([corr, c], axis=1)


def _check_visible(name, lms, n):
    if len(lms) != n:
        raise ValueError(f"{name}: expected {n} landmarks, got {len(lms)}")
    hidden = [i for i, lm in enumerate(lms) if not lm.visible]
    if hidden:
        raise ValueError(f"{name}: landmarks {hidden} are not visible")


# ---------------------------------------------------------------------------
# network


def forward_batch(model: PredictorModel, x, return_cache: bool = False):
    """Network output ``(B, 12)`` for input rows ``x``."""
    a = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if a.shape[1] != model.dims[0]:
        raise ValueError(f"input has {a.shape[1]} features, model expects {model.dims[0]}")
    acts = [a]
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ w + b
        a = sigmoid(z) if i == last else np.tanh(z)
        acts.append(a)
    return (a, acts) if return_cache else a


def forward(
    model: PredictorModel,
    m_hlm: Sequence[Landmark],
    p_hlm: Sequence[Landmark],
    c_flm: Sequence[Landmark],
) -> tuple[Landmark, ...]:
    """Predict the garment's fashion landmarks on the person."""
    _check_visible("model human landmarks", m_hlm, N_HUMAN)
    _check_visible("person human landmarks", p_hlm, N_HUMAN)
    _check_visible("garment fashion landmarks", c_flm, N_FASHION)
    x = assemble_inputs(
        landmarks_to_array(m_hlm), landmarks_to_array(p_hlm), landmarks_to_array(c_flm)
    )
    return array_to_landmarks(forward_batch(model, x)[0].reshape(N_FASHION, 2))


def loss_l2(pred, gt) -> float:
    """Sum of squared coordinate differences."""
    if pred and isinstance(pred[0], Landmark):
        pred = landmarks_to_array(pred)
    if gt and isinstance(gt[0], Landmark):
        gt = landmarks_to_array(gt)
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {gt.shape}")
    return float(np.sum((pred - gt) ** 2))


def batch_loss(model: PredictorModel, x, y) -> float:
    """Mean over the batch of the per-sample L2 loss."""
    out = forward_batch(model, x)
    y = np.asarray(y, dtype=np.float64).reshape(out.shape)
    return float(np.sum((out - y) ** 2) / len(out))


def gradients(model: PredictorModel, x, y) -> tuple[float, list[np.ndarray]]:
    """Mean batch L2 loss and its gradient.

    The gradient list is ordered like :meth:`PredictorModel.params`
    (``w0, b0, w1, b1, ...``).
    """
    out, acts = forward_batch(model, x, return_cache=True)
    if len(out) == 0:
        raise ValueError("empty batch")
    y = np.asarray(y, dtype=np.float64)
    if y.size != out.size:
        raise ValueError(f"targets have {y.size} values, expected {out.size}")
    y = y.reshape(out.shape)
    n = len(out)
    diff = out - y
    loss = float(np.sum(diff * diff) / n)

    grads: list[np.ndarray] = [None] * (2 * len(model.weights))
    delta = (2.0 / n) * diff * out * (1.0 - out)  # through the sigmoid
    for i in range(len(model.weights) - 1, -1, -1):
        grads[2 * i] = acts[i].T @ delta
        grads[2 * i + 1] = delta.sum(axis=0)
        if i:
            h = acts[i]
            delta = (delta @ model.weights[i].T) * (1.0 - h * h)  # through tanh
    return loss, grads


# ---------------------------------------------------------------------------
# optimizer


@dataclass(eq=False)
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_model(cls, model: PredictorModel, **hyper) -> "AdamState":
        params = model.params()
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params], **hyper)

    def copy(self) -> "AdamState":
        return AdamState(
            [a.copy() for a in self.m],
            [a.copy() for a in self.v],
            self.step,
            self.lr,
            self.beta1,
            self.beta2,
            self.eps,
        )


def _adam_inplace(params, grads, state: AdamState) -> None:
    if len(grads) != len(params):
        raise ValueError("gradient bundle does not match the model")
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} does not match parameter {p.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


def adam_step(
    model: PredictorModel, grads: Sequence[np.ndarray], state: AdamState
) -> tuple[PredictorModel, AdamState]:
    """One bias-corrected Adam update; inputs are left untouched."""
    new_model, new_state = model.copy(), state.copy()
    _adam_inplace(new_model.params(), list(grads), new_state)
    return new_model, new_state


# ---------------------------------------------------------------------------
# training


@dataclass
class PoseDataset:
    """Training pairs: one person, one garment, two poses.

    Inputs are the human landmarks in pose A (``m_hlm``), in pose B
    (``p_hlm``) and the garment's fashion landmarks in pose A (``c_flm``);
    the target is the garment's fashion landmarks observed in pose B.
    """

    m_hlm: np.ndarray  # (S, 9, 2)
    p_hlm: np.ndarray  # (S, 9, 2)
    c_flm: np.ndarray  # (S, 6, 2)
    target: np.ndarray  # (S, 6, 2)

    def __post_init__(self):
        self.m_hlm = np.asarray(self.m_hlm, dtype=np.float64).reshape(-1, N_HUMAN, 2)
        self.p_hlm = np.asarray(self.p_hlm, dtype=np.float64).reshape(-1, N_HUMAN, 2)
        self.c_flm = np.asarray(self.c_flm, dtype=np.float64).reshape(-1, N_FASHION, 2)
        self.target = np.asarray(self.target, dtype=np.float64).reshape(-1, N_FASHION, 2)
        if not len(self.m_hlm) == len(self.p_hlm) == len(self.c_flm) == len(self.target):
            raise ValueError("dataset arrays have different sample counts")

    def __len__(self):
        return len(self.m_hlm)

    def inputs(self) -> np.ndarray:
        return assemble_inputs(self.m_hlm, self.p_hlm, self.c_flm)

    def targets(self) -> np.ndarray:
        return self.target.reshape(len(self), -1)

    @classmethod
    def from_annotation_pairs(cls, pairs) -> "PoseDataset":
        """Build from ``(pose_a, pose_b)`` normalized annotations of the same outfit."""
        m, p, c, t = [], [], [], []
        for a, b in pairs:
            if a.fashion_landmarks is None or b.fashion_landmarks is None:
                raise ValueError(f"{a.image_path} / {b.image_path}: fashion landmarks missing")
            for ann in (a, b):
                _check_visible(ann.image_path, ann.human_landmarks, N_HUMAN)
                _check_visible(ann.image_path, ann.fashion_landmarks, N_FASHION)
            m.append(landmarks_to_array(a.human_landmarks))
            p.append(landmarks_to_array(b.human_landmarks))
            c.append(landmarks_to_array(a.fashion_landmarks))
            t.append(landmarks_to_array(b.fashion_landmarks))
        return cls(np.array(m), np.array(p), np.array(c), np.array(t))


@dataclass
class TrainConfig:
    epochs: int = DEFAULT_EPOCHS
    batch_size: int = DEFAULT_BATCH
    seed: int = 0
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    target_loss: float | None = None  # stop once the updated model's loss drops below


@dataclass(eq=False)
class TrainResult:
    model: PredictorModel
    state: AdamState
    losses: list[float] = field(default_factory=list)
    seconds: float = 0.0
    final_loss: float = float("nan")  # full-dataset loss of ``model``


def train(
    dataset: PoseDataset,
    config: TrainConfig = TrainConfig(),
    model: PredictorModel | None = None,
    log=None,
) -> TrainResult:
    """Minibatch Adam on the L2 loss; deterministic for a given seed.

    ``losses[k]`` is the sample-weighted mean of the minibatch losses seen
    during epoch ``k`` (each taken before its update). With ``target_loss``
    set, the full dataset is re-scored after every epoch and training stops
    as soon as the updated model is below the target.
    """
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    rng = np.random.default_rng(config.seed)
    model = init_model(int(rng.integers(2**63))) if model is None else model.copy()
    state = AdamState.for_model(
        model, lr=config.lr, beta1=config.beta1, beta2=config.beta2, eps=config.eps
    )
    x, y = dataset.inputs(), dataset.targets()
    params = model.params()
    losses = []
    start = time.perf_counter()
    for epoch in range(config.epochs):
        order = rng.permutation(len(x))
        total = 0.0
        for lo in range(0, len(x), config.batch_size):
            idx = order[lo : lo + config.batch_size]
            loss, grads = gradients(model, x[idx], y[idx])
            _adam_inplace(params, grads, state)
            total += loss * len(idx)
        losses.append(total / len(x))
        if log is not None:
            log(epoch, losses[-1])
        if config.target_loss is not None and batch_loss(model, x, y) < config.target_loss:
            break
    final = batch_loss(model, x, y)
    return TrainResult(model, state, losses, time.perf_counter() - start, final)


# ---------------------------------------------------------------------------
# serialization


def save_model(model: PredictorModel) -> bytes:
    """Versioned JSON; floats are written with full round-trip precision."""
    obj = {
        "version": FORMAT_VERSION,
        "dims": list(model.dims),
        "layers": [
            {"w": w.ravel().tolist(), "b": b.tolist()}
            for w, b in zip(model.weights, model.biases)
        ],
    }
    return json.dumps(obj, separators=(",", ":")).encode("utf-8")


def load_model(data: bytes | str) -> PredictorModel:
    try:
        obj = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ModelFormatError(f"unreadable model file: {exc}") from exc
    if not isinstance(obj, dict) or obj.get("version") != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model version {obj.get('version') if isinstance(obj, dict) else None!r}")
    dims = obj.get("dims")
    layers = obj.get("layers")
    if not isinstance(dims, list) or not isinstance(layers, list) or len(layers) != len(dims) - 1:
        raise ModelFormatError("dims and layers disagree")
    weights, biases = [], []
    for i, layer in enumerate(layers):
        fan_in, fan_out = dims[i], dims[i + 1]
        w = np.asarray(layer.get("w", []), dtype=np.float64)
        b = np.asarray(layer.get("b", []), dtype=np.float64)
        if w.size != fan_in * fan_out or b.size != fan_out:
            raise ModelFormatError(
                f"layer {i}: expected {fan_in}x{fan_out} weights and {fan_out} biases, "
                f"got {w.size} and {b.size}"
            )
        weights.append(w.reshape(fan_in, fan_out))
        biases.append(b)
    return PredictorModel(weights, biases)


def write_model(model: PredictorModel, path) -> None:
    with open(path, "wb") as fh:
        fh.write(save_model(model))


def read_model(path, expected_dims: Sequence[int] | None = DIMS) -> PredictorModel:
    with open(path, "rb") as fh:
        model = load_model(fh.read())
    if expected_dims is not None and tuple(model.dims) != tuple(expected_dims):
        raise ModelFormatError(f"model dims {model.dims} do not match {tuple(expected_dims)}")
    return model
