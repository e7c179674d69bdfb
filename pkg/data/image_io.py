"""File persistence: images, kernel text files and JSON documents."""

import hashlib
import json
import os
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError
from loguru import logger

from core.errors import ImageIOError
from data.models import BlurKernel, RasterImage

READ_SUFFIXES = {'.pgm', '.png'}
WRITE_SUFFIXES = {'.pgm', '.png'}

# Luminance weights (R, G, B)
LUMA = np.array([0.299, 0.587, 0.114])

SIXTEEN_BIT_MODES = {'I;16', 'I;16B', 'I;16L', 'I;16N', 'I'}


def _open_channels(path):
    """Read a file into a float (height, width, channels) array in [0, 1]"""
    path = Path(path)
    if path.suffix.lower() not in READ_SUFFIXES:
        raise ImageIOError(path, f"unsupported image format '{path.suffix}'")
    try:
        with Image.open(path) as img:
            img.load()
            mode = img.mode
            if mode in SIXTEEN_BIT_MODES:
                array = np.asarray(img, dtype=np.float64) / 65535.0
                return array[:, :, None]
            if mode in ('L', '1'):
                return np.asarray(img.convert('L'), dtype=np.float64)[:, :, None] / 255.0
            if mode == 'LA':
                return np.asarray(img.convert('L'), dtype=np.float64)[:, :, None] / 255.0
            return np.asarray(img.convert('RGB'), dtype=np.float64) / 255.0
    except (OSError, UnidentifiedImageError, ValueError) as e:
        if isinstance(e, ImageIOError):
            raise
        raise ImageIOError(path, f"cannot read image ({e})") from e


def load_image(path):
    """Load an image as a single luminance channel

    Args:
        path: PGM (8/16-bit) or PNG (gray/RGB) file

    Returns:
        RasterImage: Intensities in [0, 1]; colour is reduced with 0.299R + 0.587G + 0.114B

    Raises:
        ImageIOError: If the file cannot be read or has an unsupported format
    """
    array = _open_channels(path)
    if array.shape[2] == 1:
        return RasterImage(array[:, :, 0])
    return RasterImage(array @ LUMA)


def load_color_channels(path):
    """Load every channel of an image separately

    Args:
        path: PGM or PNG file

    Returns:
        list: One RasterImage per channel (a single entry for grayscale)
    """
    array = _open_channels(path)
    return [RasterImage(array[:, :, c]) for c in range(array.shape[2])]


def _to_uint8(data):
    return np.round(np.clip(data, 0.0, 1.0) * 255.0).astype(np.uint8)


def save_color_channels(channels, path):
    """Save one (gray) or three (RGB) channels as an 8-bit image

    Args:
        channels (list): RasterImage per channel
        path: Destination .png or .pgm; RGB to .pgm is written as luminance
    """
    path = Path(path)
    if path.suffix.lower() not in WRITE_SUFFIXES:
        raise ImageIOError(path, f"unsupported output format '{path.suffix}'")
    if len(channels) == 3 and path.suffix.lower() == '.png':
        stacked = np.stack([c.data for c in channels], axis=2)
        image = Image.fromarray(_to_uint8(stacked))
    else:
        if len(channels) == 3:
            logger.warning(f"{path}: PGM output is single-channel, writing luminance")
            gray = np.stack([c.data for c in channels], axis=2) @ LUMA
        else:
            gray = channels[0].data
        image = Image.fromarray(_to_uint8(gray))
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        image.save(path)
    except OSError as e:
        raise ImageIOError(path, f"cannot write image ({e})") from e
    logger.debug(f"Wrote image {path}")


def save_image(image, path):
    """Save a single-channel image as 8-bit PGM (P5) or PNG

    Args:
        image (RasterImage): Image with values in [0, 1] (clipped on write)
        path: Destination path
    """
    save_color_channels([image], path)


def load_kernel(path):
    """Read a kernel text file: first line the side, then side rows of weights

    The weights are renormalized to sum 1; negatives beyond -1e-9 are rejected.

    Args:
        path: Kernel file

    Returns:
        BlurKernel: Normalized kernel
    """
    path = Path(path)
    try:
        lines = [line.split() for line in path.read_text().splitlines() if line.strip()]
    except OSError as e:
        raise ImageIOError(path, f"cannot read kernel ({e})") from e
    try:
        side = int(lines[0][0])
        rows = [[float(v) for v in row] for row in lines[1:side + 1]]
        weights = np.array(rows, dtype=np.float64)
    except (IndexError, ValueError) as e:
        raise ImageIOError(path, f"malformed kernel file ({e})") from e
    if weights.shape != (side, side):
        raise ImageIOError(path, f"expected {side}x{side} weights, got {weights.shape}")
    if weights.min() < -1e-9:
        raise ImageIOError(path, "kernel has negative weights")
    weights = np.clip(weights, 0.0, None)
    total = weights.sum()
    if total <= 0:
        raise ImageIOError(path, "kernel weights sum to zero")
    return BlurKernel(weights / total)


def save_kernel(kernel, path):
    """Write a kernel in the text format read by load_kernel"""
    path = Path(path)
    lines = [str(kernel.side)]
    lines += [" ".join(f"{w:.17g}" for w in row) for row in kernel.weights]
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n")
    except OSError as e:
        raise ImageIOError(path, f"cannot write kernel ({e})") from e


def write_json(data, path):
    """Write a JSON document with stable key order"""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(data, indent=2, sort_keys=True, default=str) + "\n")
    except OSError as e:
        raise ImageIOError(path, f"cannot write JSON ({e})") from e


def read_json(path):
    """Read a JSON document"""
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except (OSError, ValueError) as e:
        raise ImageIOError(path, f"cannot read JSON ({e})") from e


def file_sha256(path):
    """sha256 hex digest of a file's bytes"""
    digest = hashlib.sha256()
    with open(path, 'rb') as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b''):
            digest.update(chunk)
    return digest.hexdigest()


def sibling_path(out_path, suffix):
    """Path next to out_path with its extension replaced, e.g. out.png -> out.kernel.txt"""
    out_path = Path(out_path)
    return out_path.with_name(out_path.stem + suffix)


def list_images(directory):
    """Sorted image files directly inside a directory"""
    return sorted(
        Path(directory) / name for name in os.listdir(directory)
        if Path(name).suffix.lower() in READ_SUFFIXES
    )
