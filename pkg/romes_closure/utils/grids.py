import numpy as np


def coordinates_2D(m, as_mat=False):
    """Node coordinates of a uniform (m+1) x (m+1) grid on the unit square

    Args:
        m: (int) number of cells per side
        as_mat: (bool, optional) return (m+1, m+1) matrices indexed [i, j]
            with x = i*h, y = j*h instead of flattened vectors
    Returns:
        x, y: coordinates, flattened in row-major [i, j] order unless `as_mat`
    """
    assert m >= 1, f'grid needs at least one cell per side, got {m}'
    axis = np.arange(m + 1) / m
    x_mat, y_mat = np.meshgrid(axis, axis, indexing='ij')
    if as_mat:
        return x_mat, y_mat
    return x_mat.flatten(), y_mat.flatten()


def block_index(x, y, blocks=3):
    """Index of the equal-size block of a `blocks` x `blocks` partition containing (x, y)

    Blocks are numbered row by row from the bottom-left corner; points on the
    interior block boundaries belong to the block above/right of them.
    """
    bx = np.minimum(np.floor(np.asarray(x) * blocks), blocks - 1).astype(int)
    by = np.minimum(np.floor(np.asarray(y) * blocks), blocks - 1).astype(int)
    return by * blocks + bx


def gaussian_bump(x, y, center=(0.35, 0.6), width=0.15, amplitude=10.0):
    cx, cy = center
    r2 = (np.asarray(x) - cx) ** 2 + (np.asarray(y) - cy) ** 2
    return amplitude * np.exp(-r2 / (2 * width ** 2))


def harmonic_mean(a, b):
    return 2.0 * a * b / (a + b)
