"""Cox proportional-hazards model with Breslow tie handling.

Fitting maximizes the Breslow partial likelihood by Newton's method with
step-halving and a small ridge jitter on the Hessian solve. The baseline
cumulative hazard uses the Breslow estimator. The model predicts the
intervention window (IW) as the median survival time of
S(t | x) = exp(-H0(t) * exp(beta' x)), truncated at the largest observed
event time when the curve never reaches one half.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConvergenceError, FitError

_LN2 = float(np.log(2.0))


@dataclass(frozen=True)
class SurvivalEstimate:
    iw: float


@dataclass
class CoxModel:
    beta: np.ndarray                # (d,)
    event_times: np.ndarray         # ascending unique event times
    cum_hazard: np.ndarray          # Breslow H0 at event_times
    max_event_time: float

    def to_dict(self) -> dict:
        return {
            "beta": [float(b) for b in self.beta],
            "event_times": [float(t) for t in self.event_times],
            "cum_hazard": [float(h) for h in self.cum_hazard],
            "max_event_time": float(self.max_event_time),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CoxModel":
        return cls(
            beta=np.array(d["beta"], dtype=float),
            event_times=np.array(d["event_times"], dtype=float),
            cum_hazard=np.array(d["cum_hazard"], dtype=float),
            max_event_time=float(d["max_event_time"]),
        )


def _prepare(X, durations, events):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    durations = np.asarray(durations, dtype=float)
    events = np.asarray(events, dtype=bool)
    if X.shape[0] != len(durations) or len(durations) != len(events):
        raise FitError("X, durations and events must be aligned")
    if np.any(durations < 0):
        raise FitError("durations must be non-negative")
    if not events.any():
        raise FitError("no uncensored observations; the partial likelihood is empty")
    order = np.argsort(durations, kind="stable")
    return X[order], durations[order], events[order]


def _pl_terms(beta, X, durations, events, want_hess=True):
    """Breslow partial log-likelihood, gradient, and (optionally) Hessian.

    One descending-time sweep: the risk set at a time consists of every
    subject with duration >= that time, so cumulative sums grow as t falls.
    Ties share their time's denominator (Breslow).
    """
    n, d = X.shape
    eta = X @ beta
    shift = float(eta.max())
    w = np.exp(eta - shift)
    wX = X * w[:, None]

    ll = 0.0
    grad = np.zeros(d)
    hess = np.zeros((d, d)) if want_hess else None

    s0 = 0.0
    s1 = np.zeros(d)
    s2 = np.zeros((d, d)) if want_hess else None

    i = n - 1
    while i >= 0:
        t = durations[i]
        j = i
        while j >= 0 and durations[j] == t:
            j -= 1
        block = slice(j + 1, i + 1)
        s0 += float(w[block].sum())
        s1 += wX[block].sum(axis=0)
        if want_hess:
            s2 += wX[block].T @ X[block]
        ev = events[block]
        dj = int(ev.sum())
        if dj > 0:
            xbar = s1 / s0
            ll += float(eta[block][ev].sum()) - dj * (np.log(s0) + shift)
            grad += X[block][ev].sum(axis=0) - dj * xbar
            if want_hess:
                hess -= dj * (s2 / s0 - np.outer(xbar, xbar))
        i = j
    return ll, grad, hess


def cox_loglik(beta, X, durations, events) -> float:
    """Breslow partial log-likelihood at ``beta`` (public for audits)."""
    X, durations, events = _prepare(X, durations, events)
    ll, _, _ = _pl_terms(np.asarray(beta, dtype=float), X, durations, events,
                         want_hess=False)
    return ll


def cox_gradient(beta, X, durations, events) -> np.ndarray:
    X, durations, events = _prepare(X, durations, events)
    _, grad, _ = _pl_terms(np.asarray(beta, dtype=float), X, durations, events,
                           want_hess=False)
    return grad


def fit_cox(X, durations, events, max_iter: int = 100, tol: float = 1e-8,
            ridge: float = 1e-8) -> CoxModel:
    """Fit the model by Newton iteration with step-halving.

    Args:
        X: (n, d) covariates.
        durations: time from each observation to its event or censoring.
        events: True where the event (negative terminal outcome) was observed.
        tol: convergence threshold on the gradient's max-norm.

    Raises:
        ConvergenceError: iteration budget exhausted; diagnostics carry the
            last gradient norm and iteration count.
    """
    X, durations, events = _prepare(X, durations, events)
    n, d = X.shape
    beta = np.zeros(d)
    ll, grad, hess = _pl_terms(beta, X, durations, events)
    for it in range(max_iter):
        if np.max(np.abs(grad)) < tol:
            break
        step_dir = np.linalg.solve(-hess + ridge * np.eye(d), grad)
        step = 1.0
        for _ in range(30):
            cand = beta + step * step_dir
            cand_ll, cand_grad, cand_hess = _pl_terms(cand, X, durations, events)
            if np.isfinite(cand_ll) and cand_ll >= ll - 1e-10:
                break
            step *= 0.5
        else:
            raise ConvergenceError(
                "step-halving failed to improve the partial likelihood",
                diagnostics={"iteration": it, "loglik": ll},
            )
        beta, ll, grad, hess = cand, cand_ll, cand_grad, cand_hess
    else:
        raise ConvergenceError(
            f"Newton did not converge in {max_iter} iterations",
            diagnostics={"iterations": max_iter, "grad_norm": float(np.max(np.abs(grad))),
                         "loglik": ll},
        )

    # Breslow baseline cumulative hazard over ascending event times.
    eta = X @ beta
    shift = float(eta.max())
    w = np.exp(eta - shift)
    times = []
    hazards = []
    s0 = 0.0
    i = n - 1
    while i >= 0:
        t = durations[i]
        j = i
        while j >= 0 and durations[j] == t:
            j -= 1
        block = slice(j + 1, i + 1)
        s0 += float(w[block].sum())
        dj = int(events[block].sum())
        if dj > 0:
            times.append(t)
            hazards.append(dj / (s0 * np.exp(shift)))
        i = j
    times = np.array(times[::-1], dtype=float)
    h0 = np.array(hazards[::-1], dtype=float)
    return CoxModel(
        beta=beta,
        event_times=times,
        cum_hazard=np.cumsum(h0),
        max_event_time=float(times[-1]),
    )


def survival_curve(model: CoxModel, x) -> tuple[np.ndarray, np.ndarray]:
    """S(t | x) evaluated at the model's event times."""
    risk = float(np.exp(model.beta @ np.asarray(x, dtype=float)))
    return model.event_times, np.exp(-model.cum_hazard * risk)


def predict_iw(model: CoxModel, x) -> SurvivalEstimate:
    """Median survival time of S(t | x), truncated at the largest event time.

    The median is the earliest event time where the survival curve reaches
    one half; when it never does within the observed range, the maximum
    observed event time stands in.
    """
    eta = float(model.beta @ np.asarray(x, dtype=float))
    # S(t) <= 1/2  <=>  H0(t) >= ln 2 * exp(-eta)
    threshold = _LN2 * np.exp(-eta)
    idx = int(np.searchsorted(model.cum_hazard, threshold, side="left"))
    if idx >= len(model.event_times):
        return SurvivalEstimate(iw=model.max_event_time)
    return SurvivalEstimate(iw=float(model.event_times[idx]))
