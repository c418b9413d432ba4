"""8-bit raster type and binary PGM/PPM (P5/P6) reading and writing."""

from dataclasses import dataclass

import numpy as np


class ImageFormatError(ValueError):
    """Raised when a PGM/PPM file cannot be decoded."""


@dataclass(eq=False)
class Image:
    """Row-major, channel-interleaved 8-bit raster.

    ``pixels`` is stored as a ``uint8`` array of shape (height, width, channels).
    """

    width: int
    height: int
    channels: int
    pixels: np.ndarray

    def __post_init__(self):
        if self.channels not in (1, 3):
            raise ValueError(f"channels must be 1 or 3, got {self.channels}")
        if self.width < 1 or self.height < 1:
            raise ValueError(f"image dimensions must be >= 1, got {self.width}x{self.height}")
        px = np.asarray(self.pixels)
        if px.size != self.width * self.height * self.channels:
            raise ValueError(
                f"pixel buffer has {px.size} values, expected "
                f"{self.width}*{self.height}*{self.channels}"
            )
        if px.dtype != np.uint8:
            if px.size and (px.min() < 0 or px.max() > 255):
                raise ValueError("pixel values must lie in [0, 255]")
            px = px.astype(np.uint8)
        self.pixels = np.ascontiguousarray(px.reshape(self.height, self.width, self.channels))

    @classmethod
    def from_array(cls, arr):
        """Build from an (h, w) or (h, w, c) array."""
        arr = np.asarray(arr)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        h, w, c = arr.shape
        return cls(w, h, c, arr)

    @property
    def array(self):
        """(h, w) view for gray images, (h, w, 3) for RGB."""
        return self.pixels[:, :, 0] if self.channels == 1 else self.pixels

    def __eq__(self, other):
        if not isinstance(other, Image):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and self.channels == other.channels
            and np.array_equal(self.pixels, other.pixels)
        )

    def __repr__(self):
        return f"Image({self.width}x{self.height}, channels={self.channels})"


_MAGIC = {b"P5": 1, b"P6": 3}
_FIELDS = ("width", "height", "maxval")


def _parse_header(data):
    """Return (channels, width, height, offset of pixel data)."""
    magic = data[:2]
    if magic not in _MAGIC:
        raise ImageFormatError(f"magic: expected P5 or P6, got {magic!r}")
    pos = 2
    values = []
    comments = 0
    n = len(data)
    while len(values) < 3:
        if pos >= n:
            raise ImageFormatError(f"{_FIELDS[len(values)]}: header truncated")
        ch = data[pos:pos + 1]
        if ch.isspace():
            pos += 1
            continue
        if ch == b"#":
            comments += 1
            if comments > 1:
                raise ImageFormatError("header: more than one comment line")
            end = data.find(b"\n", pos)
            if end < 0:
                raise ImageFormatError("header: unterminated comment")
            pos = end + 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace():
            pos += 1
        token = data[start:pos]
        if not token.isdigit():
            raise ImageFormatError(f"{_FIELDS[len(values)]}: not a decimal integer: {token!r}")
        values.append(int(token))
    # exactly one whitespace byte separates maxval from the raster
    if pos >= n or not data[pos:pos + 1].isspace():
        raise ImageFormatError("maxval: missing separator before pixel data")
    width, height, maxval = values
    if width < 1:
        raise ImageFormatError(f"width: must be >= 1, got {width}")
    if height < 1:
        raise ImageFormatError(f"height: must be >= 1, got {height}")
    if maxval != 255:
        raise ImageFormatError(f"maxval: only 255 is supported, got {maxval}")
    return _MAGIC[magic], width, height, pos + 1


def decode_image(data):
    channels, width, height, offset = _parse_header(data)
    expected = width * height * channels
    raster = data[offset:offset + expected]
    if len(raster) < expected:
        raise ImageFormatError(
            f"pixel data: truncated, expected {expected} bytes, got {len(raster)}"
        )
    pixels = np.frombuffer(raster, dtype=np.uint8).copy()
    return Image(width, height, channels, pixels)


def encode_image(img):
    magic = "P5" if img.channels == 1 else "P6"
    header = f"{magic}\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.pixels.tobytes()


def read_image(path):
    with open(path, "rb") as fh:
        data = fh.read()
    try:
        return decode_image(data)
    except ImageFormatError as exc:
        raise ImageFormatError(f"{path}: {exc}") from None


def write_image(img, path):
    try:
        with open(path, "wb") as fh:
            fh.write(encode_image(img))
    except OSError as exc:
        raise OSError(f"cannot write image {path}: {exc}") from exc
