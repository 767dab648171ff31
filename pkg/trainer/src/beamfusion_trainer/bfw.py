"""Weight-file container shared with the inference engine.

Layout: magic "BFW1", u32 version (1), u32 P, F, F', D, K, the STFT config
(u32 nfft, window_len, hop, then u16-length UTF-8 window name), u32 tensor
count, and per tensor: u16 name length + name, u8 rank, u32 dims, row-major
little-endian float32 data.
"""

import io
import struct

import numpy as np

from .stft import StftSetup

MAGIC = b"BFW1"
VERSION = 1


class FormatError(ValueError):
    pass


def _read(fh, fmt):
    size = struct.calcsize(fmt)
    buf = fh.read(size)
    if len(buf) != size:
        raise FormatError("truncated file")
    vals = struct.unpack(fmt, buf)
    return vals[0] if len(vals) == 1 else vals


def _write_str(fh, s: str):
    b = s.encode("utf-8")
    fh.write(struct.pack("<H", len(b)))
    fh.write(b)


def _read_str(fh) -> str:
    n = _read(fh, "<H")
    buf = fh.read(n)
    if len(buf) != n:
        raise FormatError("truncated string")
    return buf.decode("utf-8")


def write_weight_file(path, header: dict, tensors: dict):
    """header keys: P, F, Fp, D, K, stft (StftSetup)."""
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", VERSION))
    buf.write(struct.pack("<IIIII", header["P"], header["F"], header["Fp"],
                          header["D"], header["K"]))
    cfg = header["stft"]
    buf.write(struct.pack("<III", cfg.nfft, cfg.window_len, cfg.hop))
    _write_str(buf, cfg.window)
    buf.write(struct.pack("<I", len(tensors)))
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(arr, dtype="<f4")
        _write_str(buf, name)
        buf.write(struct.pack("<B", arr.ndim))
        for d in arr.shape:
            buf.write(struct.pack("<I", d))
        buf.write(arr.tobytes())
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def read_weight_file(path):
    """Returns (header dict, name -> float32 array)."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}")
        version = _read(fh, "<I")
        if version != VERSION:
            raise FormatError(f"unsupported version {version}")
        p, f, fp, d, k = _read(fh, "<IIIII")
        nfft, window_len, hop = _read(fh, "<III")
        window = _read_str(fh)
        count = _read(fh, "<I")
        tensors = {}
        for _ in range(count):
            name = _read_str(fh)
            rank = _read(fh, "<B")
            shape = tuple(_read(fh, "<I") for _ in range(rank))
            n = int(np.prod(shape)) if shape else 1
            buf = fh.read(4 * n)
            if len(buf) != 4 * n:
                raise FormatError(f"truncated tensor {name!r}")
            tensors[name] = np.frombuffer(buf, dtype="<f4").reshape(shape).copy()
    header = {"P": p, "F": f, "Fp": fp, "D": d, "K": k,
              "stft": StftSetup(nfft, window_len, hop, window)}
    return header, tensors
