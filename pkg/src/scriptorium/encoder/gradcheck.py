"""Hand-derived gradients for a two-layer truncation of the encoder.

The truncation is the 7x7/2 stem convolution followed by ReLU, global average
pooling and an affine head restricted to the 64 stem channels, trained with
softmax cross-entropy. Everything runs in float64 numpy so it can be checked
against finite differences and autograd independently.
"""
import numpy as np

STRIDE = 2
PAD = 3


def truncate(model):
    """Frozen float64 copies of the stem kernel and the matching head slice."""
    conv = model.stem[0].weight.detach().double().numpy().copy()
    head_w = model.head.weight.detach().double().numpy()[:, : conv.shape[0]].copy()
    head_b = model.head.bias.detach().double().numpy().copy()
    return {"conv": conv, "head_w": head_w, "head_b": head_b}


def _im2col(x, k):
    # x: (C, H, W) -> (positions, C*k*k)
    c, h, w = x.shape
    xp = np.pad(x, ((0, 0), (PAD, PAD), (PAD, PAD)))
    oh = (h + 2 * PAD - k) // STRIDE + 1
    ow = (w + 2 * PAD - k) // STRIDE + 1
    cols = np.empty((oh * ow, c * k * k))
    for i in range(oh):
        for j in range(ow):
            patch = xp[:, i * STRIDE:i * STRIDE + k, j * STRIDE:j * STRIDE + k]
            cols[i * ow + j] = patch.ravel()
    return cols, oh, ow


def _col2im(dcols, shape, k, oh, ow):
    c, h, w = shape
    dxp = np.zeros((c, h + 2 * PAD, w + 2 * PAD))
    for i in range(oh):
        for j in range(ow):
            dxp[:, i * STRIDE:i * STRIDE + k, j * STRIDE:j * STRIDE + k] += (
                dcols[i * ow + j].reshape(c, k, k)
            )
    return dxp[:, PAD:PAD + h, PAD:PAD + w]


def loss(params, x, label):
    conv, head_w, head_b = params["conv"], params["head_w"], params["head_b"]
    k = conv.shape[-1]
    cols, _, _ = _im2col(x, k)
    z = cols @ conv.reshape(conv.shape[0], -1).T
    pooled = np.maximum(z, 0).mean(axis=0)
    logits = head_w @ pooled + head_b
    shifted = logits - logits.max()
    return float(np.log(np.exp(shifted).sum()) - shifted[label])


def loss_and_grads(params, x, label):
    """Loss plus analytic gradients w.r.t. every parameter and the input."""
    conv, head_w, head_b = params["conv"], params["head_w"], params["head_b"]
    out_c, k = conv.shape[0], conv.shape[-1]
    kernel = conv.reshape(out_c, -1)

    cols, oh, ow = _im2col(x, k)
    z = cols @ kernel.T
    act = np.maximum(z, 0)
    pooled = act.mean(axis=0)
    logits = head_w @ pooled + head_b
    shifted = logits - logits.max()
    probs = np.exp(shifted) / np.exp(shifted).sum()
    value = float(np.log(np.exp(shifted).sum()) - shifted[label])

    dlogits = probs.copy()
    dlogits[label] -= 1.0
    d_head_w = np.outer(dlogits, pooled)
    d_head_b = dlogits
    dpooled = head_w.T @ dlogits
    dz = np.broadcast_to(dpooled / z.shape[0], z.shape) * (z > 0)
    d_conv = (dz.T @ cols).reshape(conv.shape)
    dx = _col2im(dz @ kernel, x.shape, k, oh, ow)
    return value, {"conv": d_conv, "head_w": d_head_w, "head_b": d_head_b, "input": dx}


def numeric_grads(params, x, label, eps=1e-6):
    """Central differences for every parameter entry and input pixel."""
    out = {}
    targets = dict(params, input=x)
    for name, arr in targets.items():
        grad = np.zeros_like(arr)
        flat = arr.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up = loss(params, x, label)
            flat[i] = orig - eps
            down = loss(params, x, label)
            flat[i] = orig
            grad.reshape(-1)[i] = (up - down) / (2 * eps)
        out[name] = grad
    return out


def max_relative_error(a, b, floor=1e-8):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)))
