"""Six-branch, two-head regression network.

Five image branches (full face and its four quarters) and one structured
branch run in parallel with separate weights; their embeddings are
concatenated and passed through a shared trunk that feeds one head for PBF
and one for SMM.  Heads predict standardized targets.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ..preprocess import STRUCTURED_NAMES, NormStats
from ..rng import make_rng
from .ops import (
    check_finite,
    conv2d_backward,
    conv2d_forward,
    dense_backward,
    dense_forward,
    gap_backward,
    gap_forward,
    maxpool_backward,
    maxpool_forward,
    relu_backward,
    relu_forward,
)

IMAGE_BRANCHES = ("full", "ul", "ur", "ll", "lr")
HEADS = ("head_pbf", "head_smm")
N_STRUCTURED = len(STRUCTURED_NAMES)


@dataclass
class ArchitectureSpec:
    image_side: int = 128
    conv_channels: tuple = (8, 16, 32)
    kernel: int = 3
    struct_widths: tuple = (16, 16)
    trunk_widths: tuple = (64, 32)
    head_widths: tuple = (16,)
    activation: str = "relu"

    def __post_init__(self):
        self.conv_channels = tuple(int(c) for c in self.conv_channels)
        self.struct_widths = tuple(int(c) for c in self.struct_widths)
        self.trunk_widths = tuple(int(c) for c in self.trunk_widths)
        self.head_widths = tuple(int(c) for c in self.head_widths)
        self.validate()

    def validate(self):
        if self.activation != "relu":
            raise ValueError(f"unsupported activation {self.activation!r}")
        if not self.conv_channels or not self.struct_widths:
            raise ValueError("image and structured branches need at least one layer")
        if self.kernel < 1 or self.kernel % 2 == 0:
            raise ValueError(f"kernel must be odd, got {self.kernel}")
        n_pool = len(self.conv_channels) - 1
        if self.image_side < 2 ** n_pool or self.image_side % (2 ** n_pool):
            raise ValueError(
                f"image_side {self.image_side} not divisible by 2**{n_pool} "
                f"({len(self.conv_channels)} conv layers)"
            )
        if any(w < 1 for w in self.conv_channels + self.struct_widths + self.trunk_widths + self.head_widths):
            raise ValueError("all layer widths must be >= 1")

    def to_dict(self):
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    @property
    def concat_width(self):
        return len(IMAGE_BRANCHES) * self.conv_channels[-1] + self.struct_widths[-1]


def branch_layers(arch):
    """Layer lists per branch: ('conv'|'dense', name, in, out) or ('relu'|'pool'|'gap',)."""
    layers = {}
    for br in IMAGE_BRANCHES:
        seq = []
        c_in = 1
        for i, c_out in enumerate(arch.conv_channels):
            seq.append(("conv", f"{br}.conv{i}", c_in, c_out))
            seq.append(("relu",))
            seq.append(("pool",) if i < len(arch.conv_channels) - 1 else ("gap",))
            c_in = c_out
        layers[br] = seq

    def mlp(prefix, n_in, widths, final_relu):
        seq = []
        for i, n_out in enumerate(widths):
            seq.append(("dense", f"{prefix}.dense{i}", n_in, n_out))
            if final_relu or i < len(widths) - 1:
                seq.append(("relu",))
            n_in = n_out
        return seq

    layers["struct"] = mlp("struct", N_STRUCTURED, arch.struct_widths, final_relu=False)
    layers["trunk"] = mlp("trunk", arch.concat_width, arch.trunk_widths, final_relu=True)
    trunk_out = arch.trunk_widths[-1] if arch.trunk_widths else arch.concat_width
    for head in HEADS:
        layers[head] = mlp(head, trunk_out, arch.head_widths + (1,), final_relu=False)
    return layers


def param_shapes(arch):
    """Ordered {name: shape} for every trainable tensor."""
    shapes = {}
    for seq in branch_layers(arch).values():
        for layer in seq:
            if layer[0] == "conv":
                _, name, c_in, c_out = layer
                shapes[name + ".w"] = (c_out, c_in, arch.kernel, arch.kernel)
                shapes[name + ".b"] = (c_out,)
            elif layer[0] == "dense":
                _, name, n_in, n_out = layer
                shapes[name + ".w"] = (n_in, n_out)
                shapes[name + ".b"] = (n_out,)
    return shapes


def fan_in(shape):
    return int(np.prod(shape[1:])) if len(shape) == 4 else shape[0]


@dataclass(frozen=True)
class TargetStats:
    pbf_mean: float
    pbf_sd: float
    smm_mean: float
    smm_sd: float

    def __post_init__(self):
        if not (self.pbf_sd > 0 and self.smm_sd > 0):
            raise ValueError("target SDs must be > 0")

    @classmethod
    def from_targets(cls, targets):
        t = np.asarray(targets, dtype=np.float64).reshape(-1, 2)
        return cls(t[:, 0].mean(), t[:, 0].std(), t[:, 1].mean(), t[:, 1].std())

    @property
    def mean(self):
        return np.array([self.pbf_mean, self.smm_mean])

    @property
    def sd(self):
        return np.array([self.pbf_sd, self.smm_sd])

    def standardize(self, values):
        return (np.asarray(values, dtype=np.float64) - self.mean) / self.sd

    def destandardize(self, z):
        return np.asarray(z, dtype=np.float64) * self.sd + self.mean

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class NetworkModel:
    arch: ArchitectureSpec
    params: dict
    norm_stats: NormStats
    target_stats: TargetStats = field(default_factory=lambda: TargetStats(0.0, 1.0, 0.0, 1.0))
    # preprocessing settings the model was trained with (plain dict), if known
    preprocess: dict = None

    def copy(self):
        params = {k: v.copy() for k, v in self.params.items()}
        return NetworkModel(self.arch, params, self.norm_stats, self.target_stats, self.preprocess)

    def check(self):
        expected = param_shapes(self.arch)
        if list(expected) != list(self.params):
            raise ValueError("parameter names do not match the architecture")
        for name, shape in expected.items():
            if self.params[name].shape != shape:
                raise ValueError(f"{name}: shape {self.params[name].shape}, expected {shape}")


def init_model(arch, seed, norm_stats=None, target_stats=None):
    """He-uniform weights (variance 2/fan_in), zero biases."""
    arch.validate()
    rng = make_rng(seed)
    params = {}
    for name, shape in param_shapes(arch).items():
        if name.endswith(".b"):
            params[name] = np.zeros(shape)
        else:
            limit = np.sqrt(6.0 / fan_in(shape))
            params[name] = rng.uniform(-limit, limit, size=shape)
    if norm_stats is None:
        norm_stats = NormStats(0.0, 1.0, 0.0, 1.0, 0.0, 1.0)
    if target_stats is None:
        target_stats = TargetStats(0.0, 1.0, 0.0, 1.0)
    return NetworkModel(arch, params, norm_stats, target_stats)


@dataclass
class Batch:
    images: list  # 5 arrays (N, 1, S, S), pixel values scaled to [0, 1]
    structured: np.ndarray  # (N, 7)
    targets: np.ndarray  # (N, 2): pbf, smm

    def __len__(self):
        return self.structured.shape[0]


def stack_samples(samples):
    """PreprocessedSample list -> Batch."""
    imgs = []
    for i in range(len(IMAGE_BRANCHES)):
        arr = np.stack([s.images[i].array for s in samples]).astype(np.float64) / 255.0
        imgs.append(arr[:, None, :, :])
    structured = np.stack([s.structured for s in samples]).astype(np.float64)
    targets = np.array([s.targets for s in samples], dtype=np.float64)
    return Batch(imgs, structured, targets)


def _check_inputs(model, batch):
    side = model.arch.image_side
    for name, arr in zip(IMAGE_BRANCHES, batch.images):
        if arr.ndim != 4 or arr.shape[1:] != (1, side, side):
            raise ValueError(f"branch {name}: expected images of shape (N, 1, {side}, {side}), got {arr.shape}")
    if batch.structured.ndim != 2 or batch.structured.shape[1] != N_STRUCTURED:
        raise ValueError(f"branch struct: expected (N, {N_STRUCTURED}) features, got {batch.structured.shape}")
    n = batch.structured.shape[0]
    if any(a.shape[0] != n for a in batch.images):
        raise ValueError("branches disagree on batch size")


def _seq_forward(seq, params, x, tape):
    for layer in seq:
        kind = layer[0]
        if kind == "conv":
            name = layer[1]
            x, cache = conv2d_forward(x, params[name + ".w"], params[name + ".b"])
        elif kind == "dense":
            name = layer[1]
            x, cache = dense_forward(x, params[name + ".w"], params[name + ".b"])
        elif kind == "relu":
            x, cache = relu_forward(x)
        elif kind == "pool":
            x, cache = maxpool_forward(x)
        else:
            x, cache = gap_forward(x)
        if tape is not None:
            tape.append(cache)
        if kind in ("conv", "dense"):
            check_finite(x, f"forward {layer[1]}")
    return x


def _seq_backward(seq, params, tape, dout, grads, need_input_grad):
    for pos in range(len(seq) - 1, -1, -1):
        layer, cache = seq[pos], tape[pos]
        kind = layer[0]
        if kind == "conv":
            name = layer[1]
            dout, dw, db = conv2d_backward(dout, cache, need_dx=need_input_grad or pos > 0)
            grads[name + ".w"] = check_finite(dw, f"backward {name}.w")
            grads[name + ".b"] = db
        elif kind == "dense":
            name = layer[1]
            dout, dw, db = dense_backward(dout, cache, params[name + ".w"])
            grads[name + ".w"] = check_finite(dw, f"backward {name}.w")
            grads[name + ".b"] = db
        elif kind == "relu":
            dout = relu_backward(dout, cache)
        elif kind == "pool":
            dout = maxpool_backward(dout, cache)
        else:
            dout = gap_backward(dout, cache)
    return dout


def forward_batch(model, batch, tapes=None):
    """Standardized predictions (N, 2); fills ``tapes`` when given."""
    _check_inputs(model, batch)
    layers = branch_layers(model.arch)
    p = model.params

    def run(name, x):
        tape = None
        if tapes is not None:
            tape = tapes.setdefault(name, [])
        return _seq_forward(layers[name], p, x, tape)

    # (N, 1, S, S) and (1, N, S, S) share a memory layout
    embeddings = [run(br, x.reshape(1, *x.shape[:1], *x.shape[2:])) for br, x in zip(IMAGE_BRANCHES, batch.images)]
    embeddings.append(run("struct", batch.structured))
    shared = run("trunk", np.concatenate(embeddings, axis=1))
    return np.concatenate([run(head, shared) for head in HEADS], axis=1)


def batch_loss_from_z(z_pred, z_true, weights):
    w = np.asarray(weights, dtype=np.float64)
    err = z_pred - z_true
    return float(np.mean((err * err) @ w))


def loss(pred, target, weights, target_stats):
    """Weighted squared error in standardized units for one sample or a batch.

    ``pred`` and ``target`` are (pbf, smm) in task units, or (N, 2) arrays;
    batch loss is the mean over samples.
    """
    zp = np.atleast_2d(target_stats.standardize(pred))
    zt = np.atleast_2d(target_stats.standardize(target))
    return batch_loss_from_z(zp, zt, weights)


def loss_and_grads(model, batch, weights=(1.0, 1.0)):
    """Batch loss and exact reverse-mode gradients for every parameter."""
    tapes = {}
    z = forward_batch(model, batch, tapes)
    zt = model.target_stats.standardize(batch.targets)
    w = np.asarray(weights, dtype=np.float64)
    value = batch_loss_from_z(z, zt, w)
    dz = 2.0 * (z - zt) * w / len(batch)
    layers = branch_layers(model.arch)
    p = model.params
    grads = {}
    d_shared = None
    for i, head in enumerate(HEADS):
        d = _seq_backward(layers[head], p, tapes[head], dz[:, i:i + 1], grads, True)
        d_shared = d if d_shared is None else d_shared + d
    d_concat = _seq_backward(layers["trunk"], p, tapes["trunk"], d_shared, grads, True)
    width = model.arch.conv_channels[-1]
    for i, br in enumerate(IMAGE_BRANCHES):
        _seq_backward(layers[br], p, tapes[br], d_concat[:, i * width:(i + 1) * width], grads, False)
    _seq_backward(layers["struct"], p, tapes["struct"], d_concat[:, len(IMAGE_BRANCHES) * width:], grads, False)
    return value, {name: grads[name] for name in p}


def backward(model, batch, weights=(1.0, 1.0)):
    return loss_and_grads(model, batch, weights)[1]


def forward(model, sample):
    """(pbf_hat, smm_hat) in task units for one PreprocessedSample."""
    z = forward_batch(model, stack_samples([sample]))
    pbf, smm = model.target_stats.destandardize(z[0])
    return float(pbf), float(smm)


def predict_batch(model, samples, workers=1):
    """Per-sample forward passes, order preserved; bit-identical for any ``workers``."""
    samples = list(samples)
    if workers > 1 and len(samples) > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(lambda s: forward(model, s), samples))
    return [forward(model, s) for s in samples]


def predict_fast(model, samples, batch_size=64):
    """Batched prediction (N, 2) in task units; may differ from ``forward`` in the last ulp."""
    out = []
    for start in range(0, len(samples), batch_size):
        z = forward_batch(model, stack_samples(samples[start:start + batch_size]))
        out.append(model.target_stats.destandardize(z))
    return np.concatenate(out, axis=0) if out else np.zeros((0, 2))
