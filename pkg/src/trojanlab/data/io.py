"""Dataset files.

Binary layout (little-endian):

    magic        4 bytes  b"TJD1"
    version      u16      currently 1
    H, W, C      u32 * 3
    class count  u32
    split tag    u8       0 train, 1 valid, 2 test, 3 seed
    N            u64
    labels       u32 * N
    provenance   bitmap, ceil(N / 8) bytes, MSB-first (numpy packbits order)
    payload      raw uint8 image bytes, N*H*W*C
"""

import struct
from pathlib import Path

import numpy as np

from ..errors import DatasetFormatError
from .dataset import SPLITS, LabeledDataset

MAGIC = b"TJD1"
VERSION = 1


def save_dataset(dataset: LabeledDataset, path) -> None:
    n = len(dataset)
    h, w, c = dataset.geometry
    header = b"".join(
        [
            MAGIC,
            struct.pack("<H", VERSION),
            struct.pack("<III", h, w, c),
            struct.pack("<I", dataset.class_count),
            struct.pack("<B", SPLITS.index(dataset.split)),
            struct.pack("<Q", n),
        ]
    )
    labels = dataset.labels.astype("<u4").tobytes()
    bitmap = np.packbits(dataset.provenance.astype(bool)).tobytes()
    Path(path).write_bytes(header + labels + bitmap + dataset.images.tobytes())


def load_dataset(path) -> LabeledDataset:
    blob = Path(path).read_bytes()
    if blob[:4] != MAGIC:
        raise DatasetFormatError(f"bad magic {blob[:4]!r}, expected {MAGIC!r}")
    pos = 4
    (version,) = struct.unpack_from("<H", blob, pos)
    pos += 2
    if version != VERSION:
        raise DatasetFormatError(f"unsupported dataset version {version}")
    h, w, c = struct.unpack_from("<III", blob, pos)
    pos += 12
    (class_count,) = struct.unpack_from("<I", blob, pos)
    pos += 4
    (split_code,) = struct.unpack_from("<B", blob, pos)
    pos += 1
    if split_code >= len(SPLITS):
        raise DatasetFormatError(f"bad split tag {split_code}")
    (n,) = struct.unpack_from("<Q", blob, pos)
    pos += 8
    need = n * 4 + (n + 7) // 8 + n * h * w * c
    if len(blob) - pos != need:
        raise DatasetFormatError(
            f"payload length mismatch: header needs {need} bytes after offset {pos}, "
            f"file carries {len(blob) - pos}"
        )
    labels = np.frombuffer(blob, dtype="<u4", count=n, offset=pos).astype(np.int64)
    pos += n * 4
    bitmap = np.frombuffer(blob, dtype=np.uint8, count=(n + 7) // 8, offset=pos)
    provenance = np.unpackbits(bitmap, count=n).astype(np.uint8)
    pos += (n + 7) // 8
    images = np.frombuffer(blob, dtype=np.uint8, count=n * h * w * c, offset=pos).reshape(n, h, w, c)
    return LabeledDataset(images.copy(), labels, class_count, SPLITS[split_code], provenance)


def import_image_folder(root, split: str, geometry=(32, 32, 3)) -> LabeledDataset:
    """Load a directory of class subdirectories of raster images.

    Class indices follow the sorted subdirectory names; images are resized to
    ``geometry``. Needs Pillow (install the ``images`` extra).
    """
    try:
        from PIL import Image
    except ImportError as exc:
        raise ImportError("importing image folders needs Pillow: pip install trojanlab[images]") from exc
    root = Path(root)
    classes = sorted(p.name for p in root.iterdir() if p.is_dir())
    if len(classes) < 2:
        raise DatasetFormatError(f"{root} must contain at least two class subdirectories")
    h, w, c = geometry
    images, labels = [], []
    for idx, name in enumerate(classes):
        for file in sorted((root / name).iterdir()):
            if file.suffix.lower() not in (".png", ".jpg", ".jpeg", ".bmp", ".ppm", ".gif"):
                continue
            with Image.open(file) as im:
                arr = np.asarray(im.convert("RGB").resize((w, h)), dtype=np.uint8)
            images.append(arr)
            labels.append(idx)
    if not images:
        raise DatasetFormatError(f"no raster images found under {root}")
    return LabeledDataset(np.stack(images), np.asarray(labels), len(classes), split)
