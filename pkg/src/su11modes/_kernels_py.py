"""NumPy implementations of the hot loops; fallback for the compiled core."""
import numpy as np


def bin_profiles(frames, pix, bins, wts, n_bins):
    """Scatter pixel values into bins: out[f, bins[k]] += wts[k] * frames[f, pix[k]].

    ``frames`` has shape (n_frames, n_pixels).
    """
    frames = np.asarray(frames)
    w = np.zeros((frames.shape[1], n_bins))
    np.add.at(w, (pix, bins), wts)
    return frames @ w


def comoment_update(mean, comoment, n, profiles):
    """Fold a batch of profiles into running (mean, co-moment) state in place.

    Returns the new count.  Uses the pairwise mean/co-moment combination so
    that a batch behaves like a single merged accumulator.
    """
    profiles = np.atleast_2d(np.asarray(profiles, dtype=np.float64))
    nb = profiles.shape[0]
    if nb == 0:
        return n
    bmean = profiles.mean(axis=0)
    centered = profiles - bmean
    bcom = centered.T @ centered
    total = n + nb
    delta = bmean - mean
    comoment += bcom + np.outer(delta, delta) * (n * nb / total)
    mean += delta * (nb / total)
    return total


def binned_comoment_update(mean, comoment, n, frames, pix, bins, wts, norm):
    """Bin raw frames and fold them into the running state; returns the new count."""
    prof = bin_profiles(frames, pix, bins, wts, mean.shape[0]) * norm
    return comoment_update(mean, comoment, n, prof)
