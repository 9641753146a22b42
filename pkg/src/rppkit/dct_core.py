"""Block DCT and the adaptive DCT rate loss.

For every non-overlapping N x N block of a plane:

1. take the 2-D DCT-II spectrum ``F``;
2. keep the high-frequency region ``h + w >= S`` (anti-diagonal cut);
3. average the magnitudes of that region over the whole block area to get
   the threshold ``T``;
4. the *selection* is the high-frequency coefficients with ``|F| < T``;
5. the block loss is the L1 norm of the selected coefficients.

The frame loss is the mean (or sum) of block losses; with several block
sizes the per-size losses are averaged.

All reductions run in a fixed sequential order (row-major inside a block,
block-grid order across blocks) so results are reproducible bit-for-bit and
match a naive loop implementation exactly.
"""

import enum
import functools
from dataclasses import dataclass

import numpy as np

from ._validation import check_plane, check_unit_interval
from .exceptions import ConfigError, ContractViolation
from .media_io import Frame, PixelFormat

ALLOWED_BLOCK_SIZES = (4, 8, 16, 32)


class Normalization(enum.Enum):
    ORTHONORMAL = "orthonormal"
    # Unscaled cosine sums: every coefficient is the orthonormal one divided
    # by a_h * a_w with a_0 = sqrt(1/N), a_k = sqrt(2/N).
    PAPER_RAW = "paper-raw"


class ThresholdMode(enum.Enum):
    BLOCK_AREA = "block-area"  # divide by N*N
    MASKED_MEAN = "masked-mean"  # divide by the number of masked coefficients


class Reduction(enum.Enum):
    MEAN = "mean"
    SUM = "sum"


@dataclass(frozen=True)
class DctConfig:
    """Parameters of the adaptive DCT loss.

    ``diagonal_threshold`` is the anti-diagonal cut ``S``; ``None`` means
    ``S = N`` for each block size.
    """

    block_sizes: tuple = (8, 16)
    diagonal_threshold: int = None
    normalization: Normalization = Normalization.ORTHONORMAL
    threshold_mode: ThresholdMode = ThresholdMode.BLOCK_AREA
    reduction: Reduction = Reduction.MEAN

    def __post_init__(self):
        sizes = self.block_sizes
        if isinstance(sizes, (int, np.integer)):
            sizes = (int(sizes),)
        sizes = tuple(int(n) for n in sizes)
        if not sizes:
            raise ConfigError("block_sizes must not be empty")
        for n in sizes:
            if n not in ALLOWED_BLOCK_SIZES:
                raise ConfigError(
                    f"block size {n} not in {ALLOWED_BLOCK_SIZES}"
                )
        if len(set(sizes)) != len(sizes):
            raise ConfigError(f"duplicate block sizes in {sizes}")
        s = self.diagonal_threshold
        if s is not None:
            s = int(s)
            for n in sizes:
                if not 0 <= s <= 2 * n - 2:
                    raise ConfigError(
                        f"diagonal threshold S={s} outside [0, {2 * n - 2}] for N={n}"
                    )
        object.__setattr__(self, "block_sizes", sizes)
        object.__setattr__(self, "diagonal_threshold", s)
        for field, kind in (("normalization", Normalization),
                            ("threshold_mode", ThresholdMode), ("reduction", Reduction)):
            try:
                object.__setattr__(self, field, kind(getattr(self, field)))
            except ValueError:
                choices = ", ".join(k.value for k in kind)
                raise ConfigError(
                    f"{field} must be one of {choices}, got {getattr(self, field)!r}"
                ) from None

    def s_for(self, n):
        return n if self.diagonal_threshold is None else self.diagonal_threshold

    def single(self, n):
        return DctConfig(
            (n,), self.diagonal_threshold, self.normalization,
            self.threshold_mode, self.reduction,
        )


@dataclass(frozen=True, eq=False)
class BlockSpectrum:
    coeffs: np.ndarray
    block_row: int = 0
    block_col: int = 0
    normalization: Normalization = Normalization.ORTHONORMAL

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.float64)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ContractViolation(f"spectrum must be square, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ContractViolation("spectrum contains NaN or Inf")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def n(self):
        return self.coeffs.shape[0]


@dataclass(frozen=True, eq=False)
class FrequencyMask:
    mask: np.ndarray
    s: int

    @property
    def n(self):
        return self.mask.shape[0]

    @property
    def cardinality(self):
        return int(self.mask.sum())


@functools.lru_cache(maxsize=None)
def _dct_matrix(n, normalization):
    h = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    m = np.cos(np.pi * h * (i + 0.5) / n)
    if normalization is Normalization.ORTHONORMAL:
        scale = np.full(n, np.sqrt(2.0 / n))
        scale[0] = np.sqrt(1.0 / n)
        m = scale[:, None] * m
    m.setflags(write=False)
    return m


def dct_matrix(n, normalization=Normalization.ORTHONORMAL):
    """``M`` such that the block spectrum is ``M @ block @ M.T``."""
    return _dct_matrix(int(n), Normalization(normalization))


def coefficient_scale(n):
    """Per-coefficient factor mapping raw coefficients to orthonormal ones."""
    a = np.full(n, np.sqrt(2.0 / n))
    a[0] = np.sqrt(1.0 / n)
    return np.outer(a, a)


def _transform(blocks, normalization):
    """Forward transform of a stack of blocks shaped (..., N, N).

    Blocks are transformed relative to their first sample and the offset is
    added back to the DC term, so flat blocks get AC coefficients that are
    exactly zero rather than rounding noise.
    """
    n = blocks.shape[-1]
    m = dct_matrix(n, normalization)
    offset = blocks[..., :1, :1]
    out = m @ (blocks - offset) @ m.T
    dc_gain = n if normalization is Normalization.ORTHONORMAL else n * n
    out[..., 0, 0] += offset[..., 0, 0] * dc_gain
    return out


def _check_block(block):
    b = check_plane(block, "block")
    n = b.shape[0]
    if b.shape[1] != n or n not in ALLOWED_BLOCK_SIZES:
        raise ContractViolation(
            f"block must be N x N with N in {ALLOWED_BLOCK_SIZES}, got {b.shape}"
        )
    return b


def dct2d_forward(block, config=None, block_row=0, block_col=0):
    """2-D DCT-II of one square block."""
    norm = (config or DctConfig()).normalization
    b = _check_block(block)
    return BlockSpectrum(_transform(b, norm), block_row, block_col, norm)


def dct2d_inverse(spectrum, config=None):
    """Inverse of the orthonormal transform.

    The unnormalized basis is not self-inverting, so ``PAPER_RAW`` input is
    rejected.
    """
    if isinstance(spectrum, BlockSpectrum):
        norm, coeffs = spectrum.normalization, spectrum.coeffs
    else:
        norm, coeffs = Normalization.ORTHONORMAL, _check_block(spectrum)
    if config is not None:
        norm = config.normalization
    if norm is not Normalization.ORTHONORMAL:
        raise ContractViolation("inverse DCT requires ORTHONORMAL normalization")
    m = dct_matrix(coeffs.shape[0], norm)
    return m.T @ coeffs @ m


def high_freq_mask(n, s=None):
    """Indicator of the high-frequency region ``h + w >= s`` (default ``s = n``)."""
    s = n if s is None else int(s)
    if not 0 <= s <= 2 * n - 2:
        raise ConfigError(f"S={s} outside [0, {2 * n - 2}] for N={n}")
    idx = np.arange(n)
    mask = (idx[:, None] + idx[None, :]) >= s
    mask.setflags(write=False)
    return FrequencyMask(mask, s)


def _seq_sum_last(x):
    """Sequential left-to-right sum over the last axis (cumsum is ordered)."""
    if x.shape[-1] == 0:
        return np.zeros(x.shape[:-1])
    return np.cumsum(x, axis=-1)[..., -1]


def _thresholds(coeffs, mask, mode):
    """Threshold per block for a stack of spectra shaped (..., N, N)."""
    n = coeffs.shape[-1]
    masked = np.where(mask, np.abs(coeffs), 0.0).reshape(coeffs.shape[:-2] + (n * n,))
    total = _seq_sum_last(masked)
    if mode is ThresholdMode.BLOCK_AREA:
        return total / float(n * n)
    count = int(mask.sum())
    return total / float(count) if count else np.zeros_like(total)


def adaptive_threshold(spectrum, mask, config=None):
    """Mean magnitude of the masked coefficients over the full block area."""
    coeffs = spectrum.coeffs if isinstance(spectrum, BlockSpectrum) else np.asarray(spectrum)
    m = mask.mask if isinstance(mask, FrequencyMask) else np.asarray(mask, dtype=bool)
    if coeffs.shape != m.shape:
        raise ContractViolation(
            f"spectrum {coeffs.shape} and mask {m.shape} disagree on N"
        )
    mode = (config or DctConfig()).threshold_mode
    return float(_thresholds(coeffs, m, mode))


def selection_set(coeffs, mask, threshold):
    """Masked coefficients strictly below the threshold in magnitude."""
    t = np.asarray(threshold)[..., None, None]
    return mask & (np.abs(coeffs) < t)


# -- blocks ------------------------------------------------------------------


def padded_shape(height, width, n):
    return -(-height // n) * n, -(-width // n) * n


def blockize(plane, n):
    """Tile a plane into (rows, cols, n, n) blocks, edge-replicating to a multiple of n."""
    p = np.asarray(plane.luma if isinstance(plane, Frame) else plane, dtype=np.float64)
    h, w = p.shape
    hp, wp = padded_shape(h, w, n)
    if (hp, wp) != (h, w):
        p = np.pad(p, ((0, hp - h), (0, wp - w)), mode="edge")
    return p.reshape(hp // n, n, wp // n, n).transpose(0, 2, 1, 3).copy()


def unblockize(blocks, shape):
    """Reassemble blocks and crop to ``shape`` (height, width).

    ``blocks`` is either the 4-D array produced by :func:`blockize` or an
    iterable of ``(block_row, block_col, data)`` triples in any order.
    """
    if not isinstance(blocks, np.ndarray):
        items = list(blocks)
        if not items:
            raise ContractViolation("no blocks to assemble")
        n = np.shape(items[0][2])[0]
        rows = max(r for r, _, _ in items) + 1
        cols = max(c for _, c, _ in items) + 1
        grid = np.full((rows, cols, n, n), np.nan)
        for r, c, data in items:
            grid[r, c] = data
        if np.isnan(grid).any():
            raise ContractViolation("block grid has holes")
        blocks = grid
    rows, cols, n, _ = blocks.shape
    full = blocks.transpose(0, 2, 1, 3).reshape(rows * n, cols * n)
    h, w = shape
    return full[:h, :w].copy()


def iter_blocks(plane, n):
    """Yield ``(block_row, block_col, data)`` for every block."""
    grid = blockize(plane, n)
    for r in range(grid.shape[0]):
        for c in range(grid.shape[1]):
            yield r, c, grid[r, c]


def block_spectra(plane, n, normalization=Normalization.ORTHONORMAL):
    """Spectra of every block of a plane, shaped (rows, cols, n, n)."""
    return _transform(blockize(plane, n), Normalization(normalization))


# -- loss --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BlockAnalysis:
    """Per-block internals of the loss for one block size."""

    n: int
    s: int
    spectra: np.ndarray  # (rows, cols, n, n)
    thresholds: np.ndarray  # (rows, cols)
    selection: np.ndarray  # (rows, cols, n, n) bool
    block_losses: np.ndarray  # (rows, cols)
    loss: float


def _working_plane(frame, min_size=1):
    if isinstance(frame, Frame):
        if frame.pixel_format is PixelFormat.RGB:
            raise ContractViolation("adaptive DCT loss needs a GRAY or YUV frame")
        return check_plane(frame.luma, "frame", min_size)
    return check_plane(frame, "frame", min_size)


def _reduce_blocks(block_losses, reduction):
    flat = block_losses.reshape(-1)
    total = float(_seq_sum_last(flat))
    if reduction is Reduction.MEAN:
        return total / flat.size
    return total


def analyze_block_size(plane, n, config):
    mask = high_freq_mask(n, config.s_for(n)).mask
    spectra = block_spectra(plane, n, config.normalization)
    thresholds = _thresholds(spectra, mask, config.threshold_mode)
    sel = selection_set(spectra, mask, thresholds)
    rows, cols = spectra.shape[:2]
    picked = np.where(sel, np.abs(spectra), 0.0).reshape(rows, cols, n * n)
    block_losses = _seq_sum_last(picked)
    return BlockAnalysis(
        n, config.s_for(n), spectra, thresholds, sel, block_losses,
        _reduce_blocks(block_losses, config.reduction),
    )


def analyze(frame, config=None):
    """Loss internals for every configured block size."""
    config = config or DctConfig()
    plane = _working_plane(frame, max(config.block_sizes))
    return [analyze_block_size(plane, n, config) for n in config.block_sizes]


def _combine(values):
    total = 0.0
    for v in values:
        total += v
    return total / len(values)


def adaptive_dct_loss(frame, config=None):
    """Adaptive DCT loss of a GRAY frame (or a 2-D array of samples)."""
    return _combine([a.loss for a in analyze(frame, config)])


def _fold_padding(grad, shape):
    """Accumulate gradient of edge-replicated padding back onto source pixels."""
    h, w = shape
    hp, wp = grad.shape
    if (hp, wp) == (h, w):
        return grad
    rows = np.minimum(np.arange(hp), h - 1)
    cols = np.minimum(np.arange(wp), w - 1)
    out_r = np.zeros((h, wp))
    np.add.at(out_r, rows, grad)
    out = np.zeros((h, w))
    np.add.at(out.T, cols, out_r.T)
    return out


def adaptive_dct_loss_grad(frame, config=None):
    """Gradient of the loss with the selection frozen.

    The selection (mask, threshold comparison and sign pattern) is held
    constant, so inside a region where it does not change the loss is linear
    in the pixels and this is its exact gradient.
    """
    config = config or DctConfig()
    plane = _working_plane(frame, max(config.block_sizes))
    grad = np.zeros(plane.shape)
    weight = 1.0 / len(config.block_sizes)
    for a in analyze(plane, config):
        m = dct_matrix(a.n, config.normalization)
        g = np.where(a.selection, np.sign(a.spectra), 0.0)
        if config.reduction is Reduction.MEAN:
            g = g / a.block_losses.size
        pix = m.T @ g @ m
        rows, cols = pix.shape[:2]
        full = pix.transpose(0, 2, 1, 3).reshape(rows * a.n, cols * a.n)
        grad += weight * _fold_padding(full, plane.shape)
    return grad


# -- filter ------------------------------------------------------------------


def filter_plane(plane, config=None, strength=1.0):
    """Attenuate selected coefficients by ``1 - strength``; no clamping.

    Block sizes are processed in ascending order, each on the output of the
    previous one.
    """
    config = config or DctConfig()
    strength = check_unit_interval(strength, "strength")
    out = _working_plane(plane, max(config.block_sizes))
    h, w = out.shape
    for n in sorted(config.block_sizes):
        a = analyze_block_size(out, n, config)
        m = dct_matrix(n, Normalization.ORTHONORMAL)
        if config.normalization is Normalization.ORTHONORMAL:
            ortho = a.spectra
        else:
            ortho = a.spectra * coefficient_scale(n)
        # Subtract only the removed part so untouched content stays bit-exact.
        removed = np.where(a.selection, ortho * strength, 0.0)
        out = out - unblockize(m.T @ removed @ m, (h, w))
    return out


def adaptive_dct_filter(frame, config=None, strength=1.0):
    """Deterministic preprocessor that shrinks the loss's selected coefficients.

    ``strength=1`` zeroes them, which minimizes the loss for the frozen
    selection. GRAY/YUV frames are filtered on the luma plane (chroma passes
    through); RGB frames have each plane filtered. Output is clamped to [0, 1].
    """
    if isinstance(frame, Frame):
        if frame.pixel_format is PixelFormat.RGB:
            targets = range(3)
        else:
            targets = (0,)
        planes = list(frame.planes)
        for i in targets:
            planes[i] = np.clip(filter_plane(planes[i], config, strength), 0.0, 1.0)
        return frame.replace_planes(planes)
    return np.clip(filter_plane(frame, config, strength), 0.0, 1.0)
