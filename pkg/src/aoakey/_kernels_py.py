"""Pure-numpy implementations of the numeric kernels.

Same call signatures as the compiled module ``aoakey._kernels``; selected as a
fallback by :mod:`aoakey.backend` when the extension is unavailable or when
``AOAKEY_PURE=1`` is set.
"""

import numpy as np

BACKEND = "pure"


def steering_matrix(beta_r, elem_az, az, el):
    """UCA steering vectors for a batch of look directions.

    Entry [m, g] = exp(j * beta_r * sin(el[g]) * cos(az[g] - elem_az[m])).
    """
    az = np.asarray(az, dtype=np.float64)
    el = np.asarray(el, dtype=np.float64)
    phase = beta_r * np.sin(el)[None, :] * np.cos(az[None, :] - np.asarray(elem_az)[:, None])
    return np.exp(1j * phase)


def music_power(noise_basis_h, steering, floor):
    """MUSIC pseudo-power 1 / (||U_v^H a||^2 + floor) per grid column."""
    proj = noise_basis_h @ steering
    denom = np.einsum("kg,kg->g", proj.conj(), proj).real + floor
    return 1.0 / np.maximum(denom, 1e-15)


def xsbs_power(adjoint, steering):
    """Cross-correlation power |a_k^H v|^2 per beam column."""
    return np.abs(steering.conj().T @ np.asarray(adjoint)) ** 2


def quantize_levels(values, low, high, n_bits):
    """Uniform quantizer indices: floor((v-low)/(high-low) * 2^n), clamped."""
    levels = 1 << int(n_bits)
    x = (np.asarray(values, dtype=np.float64) - low) / (high - low)
    idx = np.floor(x * levels).astype(np.int64)
    return np.clip(idx, 0, levels - 1)


def gray_encode(levels, n_bits, repeat):
    """Gray-code each level to ``n_bits`` bits, repeating the MSB ``repeat`` times.

    Output is one uint8 row of ``n_bits + repeat - 1`` bits per level,
    flattened in level order (repeated-MSB block first, then the remaining
    Gray bits most-significant first).
    """
    levels = np.asarray(levels, dtype=np.int64)
    gray = levels ^ (levels >> 1)
    width = n_bits + repeat - 1
    out = np.empty((levels.size, width), dtype=np.uint8)
    msb = (gray >> (n_bits - 1)) & 1
    for j in range(repeat):
        out[:, j] = msb
    for i in range(1, n_bits):
        out[:, repeat - 1 + i] = (gray >> (n_bits - 1 - i)) & 1
    return out.reshape(-1)
