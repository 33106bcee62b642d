"""Black-box saliency maps by randomized input masking.

Scorers are either spec strings understood by the C++ core
(``"synthetic:region:0,0,8,8"``, ``"subprocess:<cmd>"``, ``"http://host:port"``)
or Python callables ``f(batch, target) -> list[float]`` where ``batch`` is a
float32 array of shape (B, H, W, 3) with values in [0, 1].
"""

from ._risekit import (
    RisekitError,
    auc,
    deletion,
    exact_saliency,
    explain,
    gaussian_blur,
    generate_masks,
    insertion,
    load_image,
    pointing_game,
    read_rsal,
    sliding_window,
    write_rsal,
)

__all__ = [
    "RisekitError",
    "auc",
    "deletion",
    "exact_saliency",
    "explain",
    "gaussian_blur",
    "generate_masks",
    "insertion",
    "load_image",
    "pointing_game",
    "read_rsal",
    "sliding_window",
    "write_rsal",
]
