"""Alpha-blend masks over [0, 1] float images."""

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeMismatchError


@dataclass
class BlendMask:
    """A bare (pattern, alpha) pair; anything with these two fields blends."""

    pattern: np.ndarray
    alpha: np.ndarray


def apply_mask(image: np.ndarray, mask) -> np.ndarray:
    """Blend ``mask.pattern`` into a float image (or batch): (1-a)*x + a*p.

    Pure function of its inputs; the result is clamped to [0, 1]. ``mask`` is
    any object exposing ``pattern`` and ``alpha`` arrays of the image shape.
    """
    image = np.asarray(image)
    pattern = np.asarray(mask.pattern, dtype=image.dtype)
    alpha = np.asarray(mask.alpha, dtype=image.dtype)
    if image.shape[-pattern.ndim :] != pattern.shape or pattern.shape != alpha.shape:
        raise ShapeMismatchError(
            f"mask shape {pattern.shape}/{alpha.shape} does not match image shape {image.shape}"
        )
    return np.clip((1.0 - alpha) * image + alpha * pattern, 0.0, 1.0)
