"""Layer primitives: conv2d / dense / flatten on NHWC numpy arrays."""

from dataclasses import dataclass, field

import numpy as np

KINDS = ("conv2d", "dense", "flatten")
PADDINGS = ("same", "valid")


@dataclass(frozen=True)
class LayerSpec:
    """One layer of the chain. ``units`` is channels for conv, neurons for dense."""

    kind: str
    units: int = 0
    kernel: int = 0
    stride: int = 1
    padding: str = "same"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}, expected one of {KINDS}")
        if self.kind in ("conv2d", "dense") and self.units <= 0:
            raise ValueError(f"{self.kind} layer needs units > 0, got {self.units}")
        if self.kind == "conv2d":
            if self.kernel <= 0 or self.kernel % 2 == 0:
                raise ValueError(f"conv kernels must be square with odd side, got {self.kernel}")
            if self.stride <= 0:
                raise ValueError(f"conv stride must be positive, got {self.stride}")
            if self.padding not in PADDINGS:
                raise ValueError(f"conv padding must be one of {PADDINGS}, got {self.padding!r}")


def conv_output_hw(size: int, kernel: int, stride: int, padding: str) -> int:
    if padding == "same":
        return -(-size // stride)
    if size < kernel:
        raise ValueError(f"valid conv needs input size >= kernel, got {size} < {kernel}")
    return (size - kernel) // stride + 1


@dataclass
class ConvPlan:
    """Precomputed gather/scatter geometry for one conv layer at a fixed input shape."""

    in_shape: tuple
    out_shape: tuple
    kernel: int
    stride: int
    pad: tuple  # (top, bottom, left, right)
    padded_hw: tuple
    gather: np.ndarray  # (P*k*k,) linear index into the padded (Hp*Wp) plane
    scatter: np.ndarray = field(default=None, repr=False)  # (P*k*k, C) flat channel-expanded index


def build_conv_plan(in_shape: tuple, spec: LayerSpec) -> ConvPlan:
    h, w, c = in_shape
    k, s = spec.kernel, spec.stride
    ho = conv_output_hw(h, k, s, spec.padding)
    wo = conv_output_hw(w, k, s, spec.padding)
    if spec.padding == "same":
        pad_h = max((ho - 1) * s + k - h, 0)
        pad_w = max((wo - 1) * s + k - w, 0)
        pt, pl = pad_h // 2, pad_w // 2
        pb, pr = pad_h - pt, pad_w - pl
    else:
        pt = pb = pl = pr = 0
    hp, wp = h + pt + pb, w + pl + pr

    oy = np.repeat(np.arange(ho) * s, wo)  # (P,)
    ox = np.tile(np.arange(wo) * s, ho)
    ky = np.repeat(np.arange(k), k)  # (k*k,)
    kx = np.tile(np.arange(k), k)
    rows = oy[:, None] + ky[None, :]
    cols = ox[:, None] + kx[None, :]
    gather = (rows * wp + cols).ravel().astype(np.int64)
    scatter = (gather[:, None] * c + np.arange(c)[None, :]).astype(np.int64)
    return ConvPlan(
        in_shape=in_shape,
        out_shape=(ho, wo, spec.units),
        kernel=k,
        stride=s,
        pad=(pt, pb, pl, pr),
        padded_hw=(hp, wp),
        gather=gather,
        scatter=scatter,
    )


def im2col(x: np.ndarray, plan: ConvPlan) -> np.ndarray:
    """(N,H,W,C) -> (N*P, k*k*C) patch matrix matching W.reshape(k*k*C, units)."""
    pt, pb, pl, pr = plan.pad
    h, w, c = plan.in_shape
    hp, wp = plan.padded_hw
    n = x.shape[0]
    if pt or pb or pl or pr:
        padded = np.zeros((n, hp, wp, c), dtype=x.dtype)
        padded[:, pt : pt + h, pl : pl + w, :] = x
        x = padded
    flat = x.reshape(n, hp * wp, c)
    patches = np.take(flat, plan.gather, axis=1)  # (N, P*k*k, C)
    k2c = plan.kernel * plan.kernel * c
    return patches.reshape(n * (patches.shape[1] // (plan.kernel * plan.kernel)), k2c)


def conv_forward(x, plan: ConvPlan, weight, bias, want_cols=False):
    n = x.shape[0]
    ho, wo, co = plan.out_shape
    cols = im2col(x, plan)
    wmat = weight.reshape(-1, co)
    u = cols @ wmat + bias
    u = u.reshape(n, ho, wo, co)
    return (u, cols) if want_cols else (u, None)


def conv_backward(d_u, cols, plan: ConvPlan, weight):
    """Returns (d_weight, d_bias, d_input) for the conv layer."""
    n = d_u.shape[0]
    ho, wo, co = plan.out_shape
    h, w, c = plan.in_shape
    hp, wp = plan.padded_hw
    p = ho * wo
    du_mat = d_u.reshape(n * p, co)
    d_weight = (cols.T @ du_mat).reshape(weight.shape)
    d_bias = du_mat.sum(axis=0)

    wmat = weight.reshape(-1, co)
    d_cols = du_mat @ wmat.T  # (N*P, k*k*C), rows grouped per (sample, position)
    d_cols = d_cols.reshape(n, -1, c)  # (N, P*k*k, C)
    offsets = (np.arange(n, dtype=np.int64) * (hp * wp * c))[:, None, None]
    gidx = offsets + plan.scatter[None]
    acc = np.bincount(gidx.ravel(), weights=d_cols.ravel(), minlength=n * hp * wp * c)
    d_padded = acc.reshape(n, hp, wp, c).astype(d_u.dtype)
    pt, pb, pl, pr = plan.pad
    d_x = d_padded[:, pt : pt + h, pl : pl + w, :]
    return d_weight, d_bias, np.ascontiguousarray(d_x)


def dense_forward(x, weight, bias):
    return x @ weight + bias


def dense_backward(d_u, x_in, weight):
    d_weight = x_in.T @ d_u
    d_bias = d_u.sum(axis=0)
    d_x = d_u @ weight.T
    return d_weight, d_bias, d_x
