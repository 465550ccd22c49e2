"""The per-pixel network: forward, loss, explicit backward, training loop.

Plain numpy, no autograd.  Convolutions are im2col + matrix products so the
heavy lifting stays in BLAS.  The net takes an S x 25 x 25 patch stack and
emits (inside probability, distance to edge).

Layout notes, fixed across the module:
  - activations are channel-last (batch, row, col, channel);
  - conv weights are (3, 3, c_in, c_out), flattened to (9*c_in, c_out) for
    the product, matching im2col's (ky, kx, channel) column order;
  - every forward pass runs in fixed-size chunks of CHUNK samples, padded
    with zeros.  Constant GEMM shapes keep results bit-identical whether a
    pixel is predicted alone or in a full batch (BLAS kernels pick
    different summation orders for different shapes, same-shape calls are
    stable).
"""

import logging
import struct
import time
import zlib
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger("pixelseg.network")

PATCH_SIDE = 25
CHUNK = 64
BCE_EPS = 1e-7
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

CHECKPOINT_MAGIC = b"PXSEGNET"
CHECKPOINT_VERSION = 1


class CheckpointError(RuntimeError):
    pass


class ArchMismatchError(CheckpointError):
    pass


class TrainingDivergedError(RuntimeError):
    pass


@dataclass(frozen=True)
class Architecture:
    """Shape bookkeeping for the fixed block pattern.

    Three conv blocks ([3x3 conv, relu] x2 + additive skip + 2x2 floor max
    pool) at widths 24/48/96 take the 25x25 input to 12, then 6, then 3;
    the 3x3x96 tail flattens into four relu dense layers and the two
    scalar heads.
    """

    n_scales: int
    conv_widths: tuple = (24, 48, 96)
    dense_widths: tuple = (256, 128, 64, 32)

    def param_shapes(self):
        """Canonical (name, shape) list; parameter order everywhere."""
        shapes = []
        c_in = self.n_scales
        side = PATCH_SIDE
        for bi, width in enumerate(self.conv_widths, start=1):
            shapes.append(("block%d.conv1.w" % bi, (3, 3, c_in, width)))
            shapes.append(("block%d.conv1.b" % bi, (width,)))
            shapes.append(("block%d.conv2.w" % bi, (3, 3, width, width)))
            shapes.append(("block%d.conv2.b" % bi, (width,)))
            if c_in != width:
                # skip path needs a channel projection; no bias, conv2's is enough
                shapes.append(("block%d.proj.w" % bi, (c_in, width)))
            c_in = width
            side = side // 2
        feat = side * side * c_in
        prev = feat
        for di, width in enumerate(self.dense_widths, start=1):
            shapes.append(("dense%d.w" % di, (prev, width)))
            shapes.append(("dense%d.b" % di, (width,)))
            prev = width
        shapes.append(("class.w", (prev, 1)))
        shapes.append(("class.b", (1,)))
        shapes.append(("dist.w", (prev, 1)))
        shapes.append(("dist.b", (1,)))
        return shapes

    def param_count(self):
        return sum(int(np.prod(shape)) for _, shape in self.param_shapes())

    def feature_shapes(self):
        """Per-stage (rows, cols, channels) after each block's pool."""
        out = []
        side = PATCH_SIDE
        for width in self.conv_widths:
            side = side // 2
            out.append((side, side, width))
        return out


def arch_from_params(params):
    """Recover the Architecture from parameter shapes."""
    n_scales = params["block1.conv1.w"].shape[2]
    conv_widths = tuple(
        params["block%d.conv1.w" % bi].shape[3] for bi in (1, 2, 3)
    )
    dense_widths = []
    di = 1
    while ("dense%d.w" % di) in params:
        dense_widths.append(params["dense%d.w" % di].shape[1])
        di += 1
    return Architecture(n_scales, conv_widths, tuple(dense_widths))


def init_params(arch, seed, dtype=np.float32):
    """Fan-in-scaled uniform weights (bound sqrt(6/fan_in)), zero biases."""
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape in arch.param_shapes():
        if name.endswith(".b"):
            params[name] = np.zeros(shape, dtype)
            continue
        if name.endswith("proj.w") or name.startswith("dense") or name.startswith(("class", "dist")):
            fan_in = shape[0]
        else:  # 3x3 conv
            fan_in = 9 * shape[2]
        bound = np.sqrt(6.0 / fan_in)
        params[name] = rng.uniform(-bound, bound, size=shape).astype(dtype)
    return params


# ---------------------------------------------------------------------------
# forward / backward plumbing


def _im2col3(x):
    """(b, h, w, c) -> (b*h*w, 9c) patch matrix for a same-padded 3x3 conv."""
    b, h, w, c = x.shape
    padded = np.zeros((b, h + 2, w + 2, c), x.dtype)
    padded[:, 1:-1, 1:-1] = x
    cols = np.empty((b, h, w, 9, c), x.dtype)
    k = 0
    for dy in range(3):
        for dx in range(3):
            cols[:, :, :, k] = padded[:, dy:dy + h, dx:dx + w]
            k += 1
    return cols.reshape(b * h * w, 9 * c)


def _col2im3(dcols, b, h, w, c):
    """Adjoint of _im2col3: scatter column gradients back onto the image."""
    dcols = dcols.reshape(b, h, w, 9, c)
    dpad = np.zeros((b, h + 2, w + 2, c), dcols.dtype)
    k = 0
    for dy in range(3):
        for dx in range(3):
            dpad[:, dy:dy + h, dx:dx + w] += dcols[:, :, :, k]
            k += 1
    return dpad[:, 1:-1, 1:-1]


def _maxpool(y):
    """2x2 stride-2 max pool with floor cropping (odd row/col dropped)."""
    b, h, w, c = y.shape
    h2, w2 = h // 2, w // 2
    out = y[:, 0:h2 * 2:2, 0:w2 * 2:2].copy()
    for i2, j2 in ((0, 1), (1, 0), (1, 1)):
        np.maximum(out, y[:, i2:h2 * 2:2, j2:w2 * 2:2], out=out)
    return out


def _maxpool_back(d, y, pooled):
    """Route gradients to the first pool candidate that achieved the max.

    Candidate priority (0,0), (0,1), (1,0), (1,1): on exact ties only the
    first gets the gradient, which keeps the pass deterministic.
    """
    b, h, w, c = y.shape
    h2, w2 = pooled.shape[1], pooled.shape[2]
    dy = np.zeros_like(y)
    taken = np.zeros(pooled.shape, dtype=bool)
    for i2, j2 in ((0, 0), (0, 1), (1, 0), (1, 1)):
        cand = y[:, i2:h2 * 2:2, j2:w2 * 2:2]
        hit = (cand == pooled) & ~taken
        taken |= hit
        dy[:, i2:h2 * 2:2, j2:w2 * 2:2] += np.where(hit, d, 0)
    return dy


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _forward_chunk(params, x):
    """One padded chunk through the whole net; returns outputs + cache.

    x: (CHUNK, 25, 25, S) channel-last, already the parameter dtype.
    """
    b = x.shape[0]
    cache = {"x0": x, "blocks": [], "dense": []}
    h = x
    for bi in (1, 2, 3):
        w1 = params["block%d.conv1.w" % bi]
        w2 = params["block%d.conv2.w" % bi]
        c_in, width = w1.shape[2], w1.shape[3]
        hh, ww = h.shape[1], h.shape[2]
        cols1 = _im2col3(h)
        z1 = cols1 @ w1.reshape(9 * c_in, width)
        z1 += params["block%d.conv1.b" % bi]
        h1 = np.maximum(z1, 0).reshape(b, hh, ww, width)
        cols2 = _im2col3(h1)
        z2 = cols2 @ w2.reshape(9 * width, width)
        z2 += params["block%d.conv2.b" % bi]
        h2 = np.maximum(z2, 0).reshape(b, hh, ww, width)
        proj_name = "block%d.proj.w" % bi
        if proj_name in params:
            skip = (h.reshape(b * hh * ww, c_in) @ params[proj_name]).reshape(b, hh, ww, width)
        else:
            skip = h
        y = h2 + skip
        pooled = _maxpool(y)
        cache["blocks"].append((h, cols1, h1, cols2, h2, y, pooled))
        h = pooled
    flat = h.reshape(b, -1)
    a = flat
    for di in range(1, len([k for k in params if k.startswith("dense")]) // 2 + 1):
        z = a @ params["dense%d.w" % di] + params["dense%d.b" % di]
        a_next = np.maximum(z, 0)
        cache["dense"].append((a, a_next))
        a = a_next
    logit = (a @ params["class.w"])[:, 0] + params["class.b"][0]
    dist = (a @ params["dist.w"])[:, 0] + params["dist.b"][0]
    prob = _sigmoid(logit)
    cache["top"] = (a, prob, dist)
    return prob, dist, cache


def _backward_chunk(params, cache, dlogit, ddist, grads):
    """Accumulate parameter gradients for one chunk.

    dlogit/ddist are per-sample gradients of the total loss wrt the class
    logit and distance output (already scaled by 1/batch; padding rows 0).
    """
    a_top, _, _ = cache["top"]
    grads["class.w"] += a_top.T @ dlogit[:, None]
    grads["class.b"] += np.array([dlogit.sum()], a_top.dtype)
    grads["dist.w"] += a_top.T @ ddist[:, None]
    grads["dist.b"] += np.array([ddist.sum()], a_top.dtype)
    da = dlogit[:, None] @ params["class.w"].T + ddist[:, None] @ params["dist.w"].T

    for di in range(len(cache["dense"]), 0, -1):
        a_in, a_out = cache["dense"][di - 1]
        dz = da * (a_out > 0)
        grads["dense%d.w" % di] += a_in.T @ dz
        grads["dense%d.b" % di] += dz.sum(axis=0)
        da = dz @ params["dense%d.w" % di].T

    b = cache["x0"].shape[0]
    h_next = cache["blocks"][-1][6]  # pooled output of the last block
    dh = da.reshape(h_next.shape)
    for bi in (3, 2, 1):
        h_in, cols1, h1, cols2, h2, y, pooled = cache["blocks"][bi - 1]
        hh, ww = h_in.shape[1], h_in.shape[2]
        c_in = h_in.shape[3]
        width = h2.shape[3]
        dy = _maxpool_back(dh, y, pooled)
        dh2 = dy  # y = h2 + skip
        dz2 = (dh2 * (h2 > 0)).reshape(b * hh * ww, width)
        w2 = params["block%d.conv2.w" % bi]
        grads["block%d.conv2.w" % bi] += (cols2.T @ dz2).reshape(w2.shape)
        grads["block%d.conv2.b" % bi] += dz2.sum(axis=0)
        dh1 = _col2im3(dz2 @ w2.reshape(9 * width, width).T, b, hh, ww, width)
        dz1 = (dh1 * (h1 > 0)).reshape(b * hh * ww, width)
        w1 = params["block%d.conv1.w" % bi]
        grads["block%d.conv1.w" % bi] += (cols1.T @ dz1).reshape(w1.shape)
        grads["block%d.conv1.b" % bi] += dz1.sum(axis=0)
        dh_in = _col2im3(dz1 @ w1.reshape(9 * c_in, width).T, b, hh, ww, c_in)
        proj_name = "block%d.proj.w" % bi
        if proj_name in params:
            dskip2d = dy.reshape(b * hh * ww, width)
            grads[proj_name] += h_in.reshape(b * hh * ww, c_in).T @ dskip2d
            dh_in += (dskip2d @ params[proj_name].T).reshape(b, hh, ww, c_in)
        else:
            dh_in += dy
        dh = dh_in
    return grads


def _to_chunks(stacks, dtype):
    """Channel-last zero-padded CHUNK-sized views of a (n, S, 25, 25) batch."""
    stacks = np.asarray(stacks)
    if stacks.ndim != 4:
        raise ValueError("expected (n, scales, 25, 25) stacks, got %s" % (stacks.shape,))
    n = stacks.shape[0]
    x = np.ascontiguousarray(stacks.transpose(0, 2, 3, 1), dtype=dtype)
    for lo in range(0, n, CHUNK):
        part = x[lo:lo + CHUNK]
        if part.shape[0] < CHUNK:
            full = np.zeros((CHUNK,) + part.shape[1:], dtype)
            full[: part.shape[0]] = part
            part = full
        yield lo, min(lo + CHUNK, n), part


def _check_channels(params, stacks):
    s_params = params["block1.conv1.w"].shape[2]
    s_input = stacks.shape[1]
    if s_params != s_input:
        raise ValueError(
            "stack has %d scale channels but the network expects %d" % (s_input, s_params)
        )


def forward_batch(params, stacks):
    """(probabilities, distances) for a (n, S, 25, 25) batch of stacks."""
    stacks = np.asarray(stacks)
    _check_channels(params, stacks)
    dtype = params["class.w"].dtype
    n = stacks.shape[0]
    probs = np.empty(n, dtype)
    dists = np.empty(n, dtype)
    for lo, hi, chunk in _to_chunks(stacks, dtype):
        prob, dist, _ = _forward_chunk(params, chunk)
        probs[lo:hi] = prob[: hi - lo]
        dists[lo:hi] = dist[: hi - lo]
    return probs, dists


def forward(params, stack):
    """Single patch stack (S, 25, 25) -> (probability, distance)."""
    probs, dists = forward_batch(params, np.asarray(stack)[None])
    return float(probs[0]), float(dists[0])


# ---------------------------------------------------------------------------
# loss and gradients


def loss_terms(prob, dist_pred, class_t, dist_t, cap, lam=1.0):
    """Per-sample (bce, distance) loss terms.

    BCE on the clamped probability; squared distance error with both sides
    scaled by cap so the two terms are comparable.  The distance term
    applies to outies too (their target is 0).
    """
    p = np.clip(prob, BCE_EPS, 1.0 - BCE_EPS)
    bce = -(class_t * np.log(p) + (1.0 - class_t) * np.log1p(-p))
    dd = (dist_pred - dist_t) / cap
    return bce, lam * dd * dd


def loss(prob, dist_pred, class_t, dist_t, cap, lam=1.0):
    """Mean total loss over a batch (scalars work too)."""
    bce, dterm = loss_terms(
        np.atleast_1d(prob), np.atleast_1d(dist_pred),
        np.atleast_1d(class_t), np.atleast_1d(dist_t), cap, lam,
    )
    return float(np.mean(bce + dterm))


def backward(params, stacks, class_t, dist_t, cap, lam=1.0):
    """Gradients of the mean batch loss wrt every parameter.

    Returns (grads, stats) with stats holding the mean loss and its two
    components.  The clamp in the BCE is ignored by the gradient (it only
    engages within 1e-7 of saturation, where the exact gradient is ~0
    anyway).
    """
    stacks = np.asarray(stacks)
    _check_channels(params, stacks)
    n = stacks.shape[0]
    if n == 0:
        raise ValueError("empty batch")
    dtype = params["class.w"].dtype
    class_t = np.asarray(class_t, dtype)
    dist_t = np.asarray(dist_t, dtype)
    cap = float(cap)
    grads = {name: np.zeros_like(p) for name, p in params.items()}
    bce_total = 0.0
    dist_total = 0.0
    for lo, hi, chunk in _to_chunks(stacks, dtype):
        prob, dist, cache = _forward_chunk(params, chunk)
        m = hi - lo
        ct = np.zeros(CHUNK, dtype)
        dt = np.zeros(CHUNK, dtype)
        ct[:m] = class_t[lo:hi]
        dt[:m] = dist_t[lo:hi]
        bce, dterm = loss_terms(prob[:m], dist[:m], ct[:m], dt[:m], cap, lam)
        bce_total += float(np.sum(bce))
        dist_total += float(np.sum(dterm))
        dlogit = (prob - ct) / n
        ddist = (2.0 * lam / (cap * cap)) * (dist - dt) / n
        dlogit[m:] = 0
        ddist[m:] = 0
        _backward_chunk(params, cache, dlogit, ddist, grads)
    stats = {
        "loss": (bce_total + dist_total) / n,
        "class_loss": bce_total / n,
        "dist_loss": dist_total / n,
    }
    return grads, stats


class Adam:
    """Adaptive-moment optimizer, the standard first-order recipe."""

    def __init__(self, params, learning_rate):
        self.lr = learning_rate
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params, grads):
        self.t += 1
        b1t = 1.0 - ADAM_BETA1 ** self.t
        b2t = 1.0 - ADAM_BETA2 ** self.t
        for name, p in params.items():
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= ADAM_BETA1
            m += (1.0 - ADAM_BETA1) * g
            v *= ADAM_BETA2
            v += (1.0 - ADAM_BETA2) * (g * g)
            p -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + ADAM_EPS)


@dataclass
class TrainReport:
    """What a training run did: losses per epoch and the EF bookkeeping."""

    epochs: int
    plan_size: int
    m_available: int
    fraction: float
    seed: int
    t_samples: int = 0
    ef: float = 0.0
    class_loss: list = field(default_factory=list)
    dist_loss: list = field(default_factory=list)
    wall_seconds: float = 0.0

    def lines(self):
        out = []
        for i, (cl, dl) in enumerate(zip(self.class_loss, self.dist_loss), start=1):
            out.append("epoch %d/%d  class_loss %.6f  dist_loss %.6f"
                       % (i, self.epochs, cl, dl))
        out.append("E=%d F=%g M=%d T=%d EF=%g"
                   % (self.epochs, self.fraction, self.m_available, self.t_samples, self.ef))
        return out


def train(plan, images, labels_list, config, progress=None):
    """Run the optimizer over the sample plan; returns (params, report).

    images must be normalized already.  Deterministic for a fixed config
    seed in single-threaded use.  A non-finite loss aborts with a pointer
    at the learning rate.
    """
    from . import sampler  # late import, sampler pulls no network code

    arch = Architecture(n_scales=len(config.scales))
    params = init_params(arch, config.seed)
    n = len(plan)
    report = TrainReport(
        epochs=config.epochs,
        plan_size=n,
        m_available=plan.m_available,
        fraction=plan.fraction,
        seed=config.seed,
    )
    if n == 0:
        raise ValueError("empty sample plan")

    opt = Adam(params, config.learning_rate)
    shuffle_rng = np.random.default_rng(config.seed + 1)
    started = time.perf_counter()
    batches = sampler.assemble_batches(
        plan, images, labels_list, config.dist_cap, config.batch_size,
        config.scales, shuffle_rng, epochs=config.epochs,
    )
    per_epoch = -(-n // config.batch_size)  # ceil
    epoch_cl = 0.0
    epoch_dl = 0.0
    seen = 0
    batch_i = 0
    for stacks, class_t, dist_t in batches:
        grads, stats = backward(params, stacks, class_t, dist_t, config.dist_cap)
        if not np.isfinite(stats["loss"]):
            raise TrainingDivergedError(
                "loss became non-finite at batch %d; try a lower learning_rate "
                "(current %g)" % (batch_i + 1, config.learning_rate)
            )
        opt.step(params, grads)
        epoch_cl += stats["class_loss"] * len(class_t)
        epoch_dl += stats["dist_loss"] * len(class_t)
        seen += len(class_t)
        batch_i += 1
        if batch_i % per_epoch == 0:
            epoch = batch_i // per_epoch
            report.class_loss.append(epoch_cl / seen)
            report.dist_loss.append(epoch_dl / seen)
            if progress is not None:
                progress("epoch %d/%d  class_loss %.6f  dist_loss %.6f"
                         % (epoch, config.epochs, report.class_loss[-1], report.dist_loss[-1]))
            epoch_cl = epoch_dl = 0.0
            seen = 0
            for name, p in params.items():
                if not np.all(np.isfinite(p)):
                    raise TrainingDivergedError(
                        "parameter %r became non-finite; try a lower learning_rate" % name
                    )
    report.t_samples = config.epochs * n
    report.ef = report.t_samples / plan.m_available if plan.m_available else 0.0
    report.wall_seconds = time.perf_counter() - started
    return params, report


# ---------------------------------------------------------------------------
# checkpoints
#
# Layout (all little-endian): 8-byte magic, u32 version, u32 S, u32*S scales,
# u32 conv-width count + widths, u32 dense-width count + widths, u64 seed,
# u64 scalar parameter count, float32 parameter blob in canonical order,
# trailing u32 crc32 of everything before it.  No timestamps inside, so the
# same run writes the same bytes.


def save_checkpoint(params, arch, config, path):
    """Write params + architecture + the training seed to a binary file."""
    if len(config.scales) != arch.n_scales:
        raise ValueError("config lists %d scales but the architecture has %d"
                         % (len(config.scales), arch.n_scales))
    order = arch.param_shapes()
    count = arch.param_count()
    head = bytearray()
    head += CHECKPOINT_MAGIC
    head += struct.pack("<I", CHECKPOINT_VERSION)
    head += struct.pack("<I", arch.n_scales)
    head += struct.pack("<%dI" % arch.n_scales, *config.scales)
    head += struct.pack("<I", len(arch.conv_widths))
    head += struct.pack("<%dI" % len(arch.conv_widths), *arch.conv_widths)
    head += struct.pack("<I", len(arch.dense_widths))
    head += struct.pack("<%dI" % len(arch.dense_widths), *arch.dense_widths)
    head += struct.pack("<Q", config.seed)
    head += struct.pack("<Q", count)
    blob = bytearray(head)
    for name, shape in order:
        p = params[name]
        if p.shape != shape:
            raise ValueError("parameter %r has shape %s, expected %s" % (name, p.shape, shape))
        blob += np.ascontiguousarray(p, dtype="<f4").tobytes()
    blob += struct.pack("<I", zlib.crc32(bytes(blob)) & 0xFFFFFFFF)
    with open(path, "wb") as fh:
        fh.write(bytes(blob))


def load_checkpoint(path, expect_scales=None):
    """Read a checkpoint back; returns (params, arch, info).

    info carries the stored scales and seed.  Corruption (bad magic,
    truncation, checksum) raises CheckpointError; a scale-set different
    from expect_scales raises ArchMismatchError.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < len(CHECKPOINT_MAGIC) + 8 or raw[: len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise CheckpointError("not a checkpoint file: %s" % path)
    body, tail = raw[:-4], raw[-4:]
    if struct.unpack("<I", tail)[0] != (zlib.crc32(body) & 0xFFFFFFFF):
        raise CheckpointError("checkpoint checksum mismatch (truncated or corrupt): %s" % path)

    off = len(CHECKPOINT_MAGIC)

    def take(fmt):
        nonlocal off
        size = struct.calcsize(fmt)
        if off + size > len(body):
            raise CheckpointError("checkpoint truncated: %s" % path)
        vals = struct.unpack_from(fmt, body, off)
        off += size
        return vals

    (version,) = take("<I")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError("unsupported checkpoint version %d" % version)
    (n_scales,) = take("<I")
    scales = take("<%dI" % n_scales)
    (n_conv,) = take("<I")
    conv_widths = take("<%dI" % n_conv)
    (n_dense,) = take("<I")
    dense_widths = take("<%dI" % n_dense)
    (seed,) = take("<Q")
    (count,) = take("<Q")

    arch = Architecture(n_scales, tuple(conv_widths), tuple(dense_widths))
    if arch.param_count() != count:
        raise CheckpointError("checkpoint parameter count %d does not match its architecture"
                              % count)
    if expect_scales is not None and tuple(expect_scales) != tuple(scales):
        raise ArchMismatchError(
            "checkpoint was trained with scales %s but the project asks for %s"
            % (list(scales), list(tuple(expect_scales)))
        )
    expected_bytes = count * 4
    if len(body) - off != expected_bytes:
        raise CheckpointError("checkpoint blob has %d bytes, expected %d"
                              % (len(body) - off, expected_bytes))
    flat = np.frombuffer(body, dtype="<f4", count=count, offset=off)
    params = {}
    pos = 0
    for name, shape in arch.param_shapes():
        size = int(np.prod(shape))
        params[name] = flat[pos:pos + size].reshape(shape).copy()
        pos += size
    info = {"scales": tuple(int(s) for s in scales), "seed": int(seed)}
    return params, arch, info
