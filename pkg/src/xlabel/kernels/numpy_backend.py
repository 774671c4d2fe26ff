"""Pure-numpy boosting kernel.

Fallback used when the compiled extension is unavailable. Both backends
implement the same contract: cyclic rounds over features, each feature step
adds ``learning_rate * mean(residual)`` to every occupied bin, where the
residual ``y - sigmoid(raw)`` is recomputed after every feature update.
Optionally tracks log-loss on a holdout slice and stops early.
"""
import numpy as np

NAME = "numpy"


def _mean_logloss(raw, y):
    # log(1 + exp(-z)) with z = raw on positives, -raw on negatives
    z = np.where(y > 0.5, raw, -raw)
    return float(np.mean(np.logaddexp(0.0, -z)))


def boost_cycle(bins_tr, y_tr, n_bins, intercept, learning_rate, n_rounds,
                bins_ho, y_ho, patience):
    """Run cyclic boosting rounds.

    Parameters
    ----------
    bins_tr : int32 array (n, d)
        Per-record bin index for each feature.
    y_tr : float64 array (n,)
        Binary targets.
    n_bins : int32 array (d,)
        Total bin count per feature (value bins + missing bin).
    intercept : float
        Fixed additive offset; not updated by boosting.
    bins_ho, y_ho : arrays
        Holdout slice; pass shape-(0, d) / (0,) to disable tracking.
    patience : int
        Stop once this many rounds pass without a new best holdout loss.
        0 disables early stopping.

    Returns
    -------
    (scores, rounds_run, best_round)
        ``scores`` is float64 (d, max(n_bins)); ``best_round`` is the round
        with the lowest holdout loss (0 = intercept only), or ``rounds_run``
        when tracking is disabled.
    """
    n, d = bins_tr.shape
    width = int(n_bins.max()) if d else 0
    scores = np.zeros((d, width))
    counts = [np.bincount(bins_tr[:, j], minlength=int(n_bins[j])).astype(np.float64)
              for j in range(d)]
    occupied = [c > 0 for c in counts]

    raw = np.full(n, float(intercept))
    track = bins_ho.shape[0] > 0 and patience > 0
    raw_ho = np.full(bins_ho.shape[0], float(intercept))

    best_round = 0
    best_loss = _mean_logloss(raw_ho, y_ho) if track else np.inf
    rounds_run = 0

    for r in range(1, n_rounds + 1):
        for j in range(d):
            p = 1.0 / (1.0 + np.exp(-raw))
            sums = np.bincount(bins_tr[:, j], weights=y_tr - p, minlength=int(n_bins[j]))
            upd = np.zeros(int(n_bins[j]))
            occ = occupied[j]
            upd[occ] = learning_rate * sums[occ] / counts[j][occ]
            scores[j, :int(n_bins[j])] += upd
            raw += upd[bins_tr[:, j]]
            if track:
                raw_ho += upd[bins_ho[:, j]]
        rounds_run = r
        if track:
            loss = _mean_logloss(raw_ho, y_ho)
            if loss < best_loss:
                best_loss = loss
                best_round = r
            elif r - best_round >= patience:
                break

    if not track:
        best_round = rounds_run
    return scores, rounds_run, best_round
