"""Model file container shared by the network and the baselines.

Layout::

    BODYCOMP <version> <manifest-bytes>\\n
    <manifest: UTF-8 JSON>
    <blob: little-endian float64 arrays, in manifest order>

The manifest lists every array's name and shape and the SHA-256 of the blob.
"""

import hashlib
import json

import numpy as np

MAGIC = b"BODYCOMP"
VERSION = 1


class ContainerError(ValueError):
    pass


def write_container(path, kind, meta, arrays):
    """``arrays`` is an ordered iterable of (name, ndarray)."""
    blob_parts = []
    entries = []
    for name, arr in arrays:
        a = np.ascontiguousarray(arr, dtype="<f8")
        entries.append({"name": name, "shape": list(a.shape)})
        blob_parts.append(a.tobytes())
    blob = b"".join(blob_parts)
    manifest = {
        "kind": kind,
        "version": VERSION,
        "meta": meta,
        "arrays": entries,
        "blob_bytes": len(blob),
        "sha256": hashlib.sha256(blob).hexdigest(),
    }
    body = json.dumps(manifest, sort_keys=True).encode("utf-8")
    header = MAGIC + f" {VERSION} {len(body)}\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header + body + blob)


def read_container(path, kind=None):
    """Return (meta, {name: ndarray}) after validating version and checksum."""
    with open(path, "rb") as fh:
        data = fh.read()
    nl = data.find(b"\n")
    head = data[:nl].split() if nl > 0 else []
    if len(head) != 3 or head[0] != MAGIC:
        raise ContainerError(f"{path}: not a model file")
    try:
        version, body_len = int(head[1]), int(head[2])
    except ValueError:
        raise ContainerError(f"{path}: malformed header") from None
    if version != VERSION:
        raise ContainerError(f"{path}: version mismatch (file {version}, supported {VERSION})")
    body = data[nl + 1:nl + 1 + body_len]
    try:
        manifest = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise ContainerError(f"{path}: checksum mismatch (manifest unreadable, file truncated?)") from None
    blob = data[nl + 1 + body_len:]
    if len(blob) != manifest["blob_bytes"] or hashlib.sha256(blob).hexdigest() != manifest["sha256"]:
        raise ContainerError(f"{path}: checksum mismatch")
    if kind is not None and manifest["kind"] != kind:
        raise ContainerError(f"{path}: expected a {kind!r} file, got {manifest['kind']!r}")
    arrays = {}
    offset = 0
    for entry in manifest["arrays"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape, dtype=np.int64))
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=offset).reshape(shape)
        arrays[entry["name"]] = arr.astype(np.float64)
        offset += 8 * count
    return manifest["meta"], arrays
