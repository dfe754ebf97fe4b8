"""
Image and raw-dump file I/O.

Images travel through the toolkit as float64 tensors shaped (channels, height,
width) with values in [0, 1]. Files on disk are sRGB encoded unless the
caller asks for linear values.
"""

import os
from typing import List, Optional, Sequence

import cv2
import numpy as np
import torch
import yaml

from .error_handler import FormatError, InvalidInputError


RAW_DTYPE = "float32-le"
CHANNEL_ORDERS = {1: "Y", 3: "RGB"}


def srgb_to_linear(values: torch.Tensor) -> torch.Tensor:
    """sRGB electro-optical transfer function (IEC 61966-2-1)."""
    values = values.clamp(0.0, 1.0)
    return torch.where(
        values <= 0.04045,
        values / 12.92,
        ((values + 0.055) / 1.055) ** 2.4,
    )


def linear_to_srgb(values: torch.Tensor) -> torch.Tensor:
    """Inverse of srgb_to_linear."""
    values = values.clamp(0.0, 1.0)
    return torch.where(
        values <= 0.0031308,
        values * 12.92,
        1.055 * values ** (1.0 / 2.4) - 0.055,
    )


def _to_chw(array: np.ndarray) -> torch.Tensor:
    """Convert an OpenCV HxW / HxWxC (BGR) array to an RGB CHW float tensor in [0, 1]."""
    if array.dtype == np.uint8:
        scaled = array.astype(np.float64) / 255.0
    elif array.dtype == np.uint16:
        scaled = array.astype(np.float64) / 65535.0
    else:
        scaled = np.clip(array.astype(np.float64), 0.0, 1.0)

    if scaled.ndim == 2:
        scaled = scaled[np.newaxis]
    else:
        if scaled.shape[2] == 4:
            scaled = scaled[:, :, :3]
        if scaled.shape[2] == 3:
            scaled = scaled[:, :, ::-1]
        scaled = np.transpose(scaled, (2, 0, 1))

    return torch.from_numpy(np.ascontiguousarray(scaled))


def _to_hwc(image: torch.Tensor, bit_depth: int) -> np.ndarray:
    """Quantize a CHW tensor in [0, 1] to the OpenCV layout."""
    if bit_depth not in (8, 16):
        raise InvalidInputError(f"Image bit depth must be 8 or 16, got {bit_depth}")
    peak = 255 if bit_depth == 8 else 65535
    dtype = np.uint8 if bit_depth == 8 else np.uint16

    array = image.detach().to(torch.float64).clamp(0.0, 1.0).cpu().numpy()
    codes = np.rint(array * peak).astype(dtype)

    if codes.shape[0] == 1:
        return codes[0]
    # RGB -> BGR
    return np.ascontiguousarray(np.transpose(codes, (1, 2, 0))[:, :, ::-1])


def check_image(image: torch.Tensor, name: str = "image") -> None:
    """Raise InvalidInputError unless image is a finite (C, H, W) tensor with C in {1, 3}."""
    if not isinstance(image, torch.Tensor) or image.dim() != 3:
        raise InvalidInputError(f"{name} must be a (channels, height, width) tensor")
    if image.shape[0] not in (1, 3):
        raise InvalidInputError(f"{name} must have 1 or 3 channels, got {image.shape[0]}")
    if not torch.isfinite(image).all():
        raise InvalidInputError(f"{name} contains non-finite values")


def load_image(path: str, linear: bool = False) -> torch.Tensor:
    """
    Load an image file as a float64 (C, H, W) tensor in [0, 1].

    Args:
        path: Image file path
        linear: Skip the sRGB decoding when True

    Returns:
        1-channel tensor for grayscale files, 3-channel RGB otherwise
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"Image file not found: {path}")

    array = cv2.imread(path, cv2.IMREAD_UNCHANGED)
    if array is None:
        raise FormatError(f"Cannot decode image file: {path}")

    image = _to_chw(array)
    if image.shape[0] == 2:
        # gray + alpha
        image = image[:1]
    return image if linear else srgb_to_linear(image)


def save_image(path: str, image: torch.Tensor, bit_depth: int = 8, linear: bool = False) -> str:
    """
    Encode and write an image.

    Values are sRGB encoded unless linear is set, clamped to [0, 1] and
    quantized to bit_depth (8 or 16).
    """
    check_image(image)
    encoded = image.detach().to(torch.float64)
    if not linear:
        encoded = linear_to_srgb(encoded)

    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)

    if not cv2.imwrite(path, _to_hwc(encoded, bit_depth)):
        raise FormatError(f"Cannot encode image file: {path}", filename=path)
    return path


def resize_image(image: torch.Tensor, width: int, height: int) -> torch.Tensor:
    """Bicubic resize to (width, height), clamped to [0, 1]."""
    check_image(image)
    if width < 1 or height < 1:
        raise InvalidInputError(f"Invalid resize target {width}x{height}")

    channels = image.shape[0]
    array = np.transpose(image.detach().to(torch.float64).cpu().numpy(), (1, 2, 0))
    resized = cv2.resize(np.ascontiguousarray(array), (width, height), interpolation=cv2.INTER_CUBIC)
    resized = resized.reshape(height, width, channels)
    return torch.from_numpy(np.transpose(resized, (2, 0, 1)).copy()).clamp(0.0, 1.0)


def write_raw_dump(path: str, tensor: torch.Tensor, channel_order: Optional[str] = None) -> str:
    """
    Write a (C, H, W) tensor as row-major little-endian float32 plus a YAML header.

    The header lives next to the payload at `<path>.yaml`.
    """
    if tensor.dim() == 2:
        tensor = tensor.unsqueeze(0)
    if tensor.dim() != 3:
        raise InvalidInputError("Raw dumps hold (channels, height, width) tensors")

    channels, height, width = tensor.shape
    if channel_order is None:
        channel_order = CHANNEL_ORDERS.get(channels, "C" * channels)
    if len(channel_order) != channels:
        raise InvalidInputError(
            f"Channel order '{channel_order}' does not match {channels} channels")

    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)

    payload = tensor.detach().to(torch.float64).cpu().numpy().astype("<f4")
    payload.tofile(path)

    header = {
        "width": int(width),
        "height": int(height),
        "channels": int(channels),
        "channel_order": channel_order,
        "dtype": RAW_DTYPE,
        "layout": "channel-planar, row-major",
    }
    with open(f"{path}.yaml", "w", encoding="utf-8") as f:
        yaml.safe_dump(header, f, sort_keys=False)
    return path


def read_raw_dump(path: str) -> torch.Tensor:
    """Read a raw float dump written by write_raw_dump as a float64 tensor."""
    header_path = f"{path}.yaml"
    if not os.path.exists(path):
        raise FileNotFoundError(f"Raw dump not found: {path}")
    if not os.path.exists(header_path):
        raise FormatError(f"Raw dump header missing: {header_path}")

    try:
        with open(header_path, "r", encoding="utf-8") as f:
            header = yaml.safe_load(f)
        width = int(header["width"])
        height = int(header["height"])
        channels = int(header["channels"])
        dtype = header["dtype"]
    except (yaml.YAMLError, KeyError, TypeError, ValueError) as e:
        raise FormatError(f"Malformed raw dump header {header_path}: {e}") from e

    if dtype != RAW_DTYPE:
        raise FormatError(f"Unsupported raw dump dtype: {dtype}")

    payload = np.fromfile(path, dtype="<f4")
    if payload.size != width * height * channels:
        raise FormatError(
            f"Raw dump {path} holds {payload.size} values, header declares "
            f"{channels}x{height}x{width}")

    return torch.from_numpy(payload.astype(np.float64).reshape(channels, height, width))


def _as_rgb(image: torch.Tensor) -> torch.Tensor:
    return image.expand(3, -1, -1) if image.shape[0] == 1 else image


def side_by_side(images: Sequence[torch.Tensor]) -> torch.Tensor:
    """Concatenate equally tall images left to right."""
    if not images:
        raise InvalidInputError("side_by_side needs at least one image")
    heights = {image.shape[1] for image in images}
    if len(heights) != 1:
        raise InvalidInputError(f"Images differ in height: {sorted(heights)}")

    parts: List[torch.Tensor] = list(images)
    if len({image.shape[0] for image in parts}) > 1:
        parts = [_as_rgb(image) for image in parts]
    return torch.cat(parts, dim=2)


def crop(image: torch.Tensor, x: int, y: int, width: int, height: int) -> torch.Tensor:
    """Cut a window out of an image; the window is clipped to the image bounds."""
    _, image_height, image_width = image.shape
    x0, y0 = max(0, x), max(0, y)
    x1, y1 = min(image_width, x + width), min(image_height, y + height)
    if x1 <= x0 or y1 <= y0:
        raise InvalidInputError(
            f"Crop window ({x}, {y}, {width}x{height}) lies outside a "
            f"{image_width}x{image_height} image")
    return image[:, y0:y1, x0:x1]


def save_codes(path: str, codes: np.ndarray) -> str:
    """Write a 2D array of unsigned integer codes as a grayscale PNG (8 or 16 bit)."""
    if codes.ndim != 2 or codes.dtype not in (np.uint8, np.uint16):
        raise InvalidInputError("Code images must be 2D uint8 or uint16 arrays")
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    if not cv2.imwrite(path, np.ascontiguousarray(codes)):
        raise FormatError(f"Cannot encode code image: {path}", filename=path)
    return path


def load_codes(path: str) -> np.ndarray:
    """Read a grayscale code image written by save_codes without any conversion."""
    if not os.path.exists(path):
        raise FormatError(f"Code image missing: {path}")
    codes = cv2.imread(path, cv2.IMREAD_UNCHANGED)
    if codes is None:
        raise FormatError(f"Cannot decode code image: {path}")
    if codes.ndim != 2:
        raise FormatError(f"Code image {path} is not single-channel")
    return codes
