"""Embedded digit bitmaps: 10 glyphs, 8 columns x 12 rows, 2px strokes.

Bitmap fonts keep rendering bit-exact everywhere; "font size" variation is
realized by nearest-neighbor scaling of these masters.
"""

from __future__ import annotations

import numpy as np

GLYPH_W = 8
GLYPH_H = 12

_GLYPHS_ART = {
    0: [
        ".######.",
        "########",
        "##....##",
        "##....##",
        "##....##",
        "##....##",
        "##....##",
        "##....##",
        "##....##",
        "##....##",
        "########",
        ".######.",
    ],
    1: [
        "...##...",
        "..###...",
        ".####...",
        "...##...",
        "...##...",
        "...##...",
        "...##...",
        "...##...",
        "...##...",
        "...##...",
        ".######.",
        ".######.",
    ],
    2: [
        ".######.",
        "########",
        "##....##",
        "......##",
        ".....###",
        "....###.",
        "...###..",
        "..###...",
        ".###....",
        "###.....",
        "########",
        "########",
    ],
    3: [
        "########",
        "########",
        "......##",
        ".....##.",
        "..#####.",
        "..#####.",
        ".....##.",
        "......##",
        "......##",
        "##....##",
        "########",
        ".######.",
    ],
    4: [
        "....###.",
        "...####.",
        "..##.##.",
        ".##..##.",
        "##...##.",
        "########",
        "########",
        ".....##.",
        ".....##.",
        ".....##.",
        ".....##.",
        ".....##.",
    ],
    5: [
        "########",
        "########",
        "##......",
        "##......",
        "#######.",
        "########",
        "......##",
        "......##",
        "......##",
        "##....##",
        "########",
        ".######.",
    ],
    6: [
        "..#####.",
        ".######.",
        "##......",
        "##......",
        "#######.",
        "########",
        "##....##",
        "##....##",
        "##....##",
        "##....##",
        "########",
        ".######.",
    ],
    7: [
        "########",
        "########",
        "......##",
        ".....##.",
        ".....##.",
        "....##..",
        "....##..",
        "...##...",
        "...##...",
        "..##....",
        "..##....",
        "..##....",
    ],
    8: [
        ".######.",
        "########",
        "##....##",
        "##....##",
        ".######.",
        ".######.",
        "##....##",
        "##....##",
        "##....##",
        "##....##",
        "########",
        ".######.",
    ],
    9: [
        ".######.",
        "########",
        "##....##",
        "##....##",
        "##....##",
        "########",
        ".#######",
        "......##",
        "......##",
        "......##",
        ".######.",
        ".#####..",
    ],
}


def _parse(art: list[str]) -> np.ndarray:
    grid = np.array([[c == "#" for c in row] for row in art], dtype=bool)
    assert grid.shape == (GLYPH_H, GLYPH_W), f"glyph art must be {GLYPH_H}x{GLYPH_W}"
    assert grid.any(), "glyph art is empty"
    return grid


GLYPHS: dict[int, np.ndarray] = {d: _parse(a) for d, a in _GLYPHS_ART.items()}
