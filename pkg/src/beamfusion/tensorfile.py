"""Binary tensor containers: BFW1 model weights and the filter-bank file.

Both files share the magic "BFW1", a u32 version, a format-specific header,
and a named-tensor section: u32 tensor count, then per tensor a u16 name
length, the UTF-8 name, a u8 rank, u32 dims, and row-major little-endian
float32 data. All integers are little-endian.
"""

import io
import struct

import numpy as np

from .stft import StftConfig

MAGIC = b"BFW1"
VERSION = 1
KIND_MODEL = 0
KIND_FILTERBANK = 1


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


def write_tensors(fh, tensors: dict):
    fh.write(struct.pack("<I", len(tensors)))
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(arr, dtype="<f4")
        _write_str(fh, name)
        fh.write(struct.pack("<B", arr.ndim))
        for d in arr.shape:
            fh.write(struct.pack("<I", d))
        fh.write(arr.tobytes())


def read_tensors(fh) -> dict:
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
    return tensors


def _write_stft_config(fh, cfg: StftConfig):
    fh.write(struct.pack("<III", cfg.nfft, cfg.window_len, cfg.hop))
    _write_str(fh, cfg.window)


def _read_stft_config(fh) -> StftConfig:
    nfft, window_len, hop = _read(fh, "<III")
    window = _read_str(fh)
    return StftConfig(nfft, window_len, hop, window)


def _check_magic(fh):
    magic = fh.read(4)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    version = _read(fh, "<I")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")


def write_model_file(path, header: dict, tensors: dict):
    """header keys: P, F, Fp, D, K, stft (StftConfig)."""
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", VERSION))
    buf.write(struct.pack("<IIIII", header["P"], header["F"], header["Fp"],
                          header["D"], header["K"]))
    _write_stft_config(buf, header["stft"])
    write_tensors(buf, tensors)
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def read_model_file(path):
    with open(path, "rb") as fh:
        _check_magic(fh)
        p, f, fp, d, k = _read(fh, "<IIIII")
        cfg = _read_stft_config(fh)
        tensors = read_tensors(fh)
    header = {"P": p, "F": f, "Fp": fp, "D": d, "K": k, "stft": cfg}
    return header, tensors


def write_filterbank_file(path, header: dict, tensors: dict):
    """header keys: M, spacing, fs, nfft, theta_s; per-filter data in tensors."""
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", VERSION))
    buf.write(struct.pack("<B", KIND_FILTERBANK))
    buf.write(struct.pack("<I", header["M"]))
    buf.write(struct.pack("<ddId", header["spacing"], header["fs"],
                          header["nfft"], header["theta_s"]))
    write_tensors(buf, tensors)
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def read_filterbank_file(path):
    with open(path, "rb") as fh:
        _check_magic(fh)
        kind = _read(fh, "<B")
        if kind != KIND_FILTERBANK:
            raise FormatError("not a filter-bank file")
        m = _read(fh, "<I")
        spacing, fs, nfft, theta_s = _read(fh, "<ddId")
        tensors = read_tensors(fh)
    header = {"M": m, "spacing": spacing, "fs": fs, "nfft": nfft, "theta_s": theta_s}
    return header, tensors
