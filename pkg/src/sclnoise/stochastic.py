"""Brownian paths, the pathwise flow transformation, and Monte Carlo ensembles.

Noise enters exclusively through the change of variables
u(t, x) = v(t, x - W_t), where v solves the shifted deterministic problem
dt v + b(x + W_t, v) dx v = eps Lap v.  This realizes the transport noise
exactly, with no stochastic-integral discretization.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError
from .fields import GridFunction
from .flux import FluxField
from .kinetic import chi_field, gap_report
from .solver import SolverConfig, Trajectory, solve_viscous

__all__ = [
    "BrownianPath",
    "sample_brownian",
    "transformed_solve_per_path",
    "EnsembleConfig",
    "EnsembleStats",
    "make_functionals",
    "ensemble_expectation",
    "stability_experiment",
    "selection_study",
]


@dataclass(frozen=True)
class BrownianPath:
    """Discrete Brownian trajectory on a uniform time lattice."""

    times: np.ndarray
    values: np.ndarray
    amplitude_sigma: float
    seed: int

    def at(self, t):
        """Piecewise-linear interpolation between lattice points."""
        return np.interp(t, self.times, self.values)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


def sample_brownian(T: float, dt: float, sigma: float, seed: int) -> BrownianPath:
    """Counter-based sampling: same (seed, N, T, sigma) gives identical bytes."""
    if dt <= 0 or T < dt:
        raise InvalidParameterError("need dt > 0 and T >= dt")
    n = int(round(T / dt))
    times = np.linspace(0.0, T, n + 1)
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    incr = rng.standard_normal(n) * (sigma * np.sqrt(T / n))
    values = np.empty(n + 1)
    values[0] = 0.0
    np.cumsum(incr, out=values[1:])
    return BrownianPath(times=times, values=values,
                        amplitude_sigma=float(sigma), seed=int(seed))


def transformed_solve_per_path(
    b: FluxField,
    u0: GridFunction,
    W: BrownianPath,
    cfg: SolverConfig,
    T: float,
    output_times=None,
) -> Trajectory:
    """Solve one noise realization through the flow transformation.

    The shifted problem dt v + b(x + W_t, v) dx v = eps Lap v is marched on
    u0's grid; each snapshot is translated back by the path value at its
    time with linear interpolation at fractional offsets.
    """
    x = u0.centers
    if b.xi_slope is not None:
        slope = b.xi_slope

        def g(t, xc, v):
            return slope(xc + W.at(t)) * v
    else:
        def g(t, xc, v):
            return b.eval(xc + W.at(t), v)

    shifted = solve_viscous(g, u0, cfg, T, output_times=output_times)
    back = []
    for t, snap in zip(shifted.times, shifted.snapshots):
        w = float(W.at(t))
        if w == 0.0:
            back.append(snap)
        else:
            back.append(snap.with_values(
                np.interp(x - w, x, snap.values, left=0.0, right=0.0)))
    return Trajectory(tuple(back), shifted.times, cfg)


# ---------------------------------------------------------------------------
# ensembles


@dataclass(frozen=True)
class EnsembleConfig:
    n_paths: int
    base_seed: int
    sigma: float
    solver: SolverConfig
    T: float
    output_times: tuple
    path_dt: float | None = None  # default T/256
    n_threads: int = 1

    def __post_init__(self):
        if self.n_paths < 1:
            raise InvalidParameterError("n_paths must be >= 1")
        if self.T <= 0:
            raise InvalidParameterError("horizon T must be positive")

    def path_seed(self, index: int) -> int:
        # per-path seed = base_seed + path index (collision-free by design)
        return self.base_seed + index

    def sample_path(self, index: int) -> BrownianPath:
        dt = self.path_dt if self.path_dt is not None else self.T / 256.0
        return sample_brownian(self.T, dt, self.sigma, self.path_seed(index))


@dataclass(frozen=True)
class EnsembleStats:
    """Per-time mean / variance / stderr of each requested functional."""

    times: np.ndarray
    mean: dict
    variance: dict
    stderr: dict
    n_paths: int

    def rows(self):
        """Flat rows (time, functional, mean, variance, stderr, n_paths)."""
        out = []
        for name in sorted(self.mean):
            for i, t in enumerate(self.times):
                out.append((float(t), name,
                            float(self.mean[name][i]),
                            float(self.variance[name][i]),
                            float(self.stderr[name][i]),
                            self.n_paths))
        return out


def make_functionals(names, reference=None, R: float = 1.0, n_xi: int = 64):
    """Build the registered trajectory functionals by name.

    reference, required by l1_gap_vs, is callable (t, x_array) -> values.
    kinetic_gap_total evaluates the gap functional of chi of the snapshot.
    """
    fns = {}
    for name in names:
        if name == "l1_norm":
            fns[name] = lambda t, u: u.norm_l1()
        elif name == "linf_norm":
            fns[name] = lambda t, u: u.norm_linf()
        elif name == "mass":
            fns[name] = lambda t, u: u.integral()
        elif name == "l1_gap_vs":
            if reference is None:
                raise InvalidParameterError("l1_gap_vs needs a reference solution")
            def gap(t, u, _ref=reference):
                return u.with_values(u.values - _ref(t, u.centers)).norm_l1()
            fns[name] = gap
        elif name == "kinetic_gap_total":
            def kg(t, u, _R=R, _n=n_xi):
                return gap_report(chi_field(u, _R, _n)).gap_total
            fns[name] = kg
        else:
            raise InvalidParameterError(f"unknown functional {name!r}")
    return fns


def _run_indexed(tasks, n_threads: int):
    """Evaluate tasks (callables) preserving index order in the result list."""
    results = [None] * len(tasks)
    if n_threads <= 1:
        for i, task in enumerate(tasks):
            results[i] = task()
        return results
    with ThreadPoolExecutor(max_workers=n_threads) as pool:
        futures = {pool.submit(task): i for i, task in enumerate(tasks)}
        for fut, i in futures.items():
            results[i] = fut.result()
    return results


def _stats_from_samples(times, samples_by_fn, n_paths):
    mean, var, stderr = {}, {}, {}
    for name, arr in samples_by_fn.items():
        a = np.asarray(arr)  # shape (n_paths, n_times)
        mean[name] = a.mean(axis=0)
        v = a.var(axis=0, ddof=1) if n_paths > 1 else np.zeros(a.shape[1])
        var[name] = v
        stderr[name] = np.sqrt(v / n_paths)
    return EnsembleStats(times=np.asarray(times), mean=mean, variance=var,
                         stderr=stderr, n_paths=n_paths)


def ensemble_expectation(
    b: FluxField,
    u0: GridFunction,
    ens: EnsembleConfig,
    functionals: dict,
) -> EnsembleStats:
    """Monte Carlo expectation of trajectory functionals over Brownian paths.

    Deterministic under any thread count: per-path seeds are fixed by index
    and the reduction is ordered by path index.
    """
    eval_times = np.asarray(sorted(set([0.0] + list(ens.output_times) + [ens.T])))

    def run_path(i):
        W = ens.sample_path(i)
        try:
            traj = transformed_solve_per_path(b, u0, W, ens.solver, ens.T,
                                              output_times=ens.output_times)
        except Exception as exc:
            raise type(exc)(f"path {i} (seed {ens.path_seed(i)}): {exc}") from exc
        out = {}
        for name, fn in functionals.items():
            out[name] = [fn(t, traj.at_time(t)) for t in eval_times]
        return out

    tasks = [lambda _i=i: run_path(_i) for i in range(ens.n_paths)]
    per_path = _run_indexed(tasks, ens.n_threads)
    samples = {name: [res[name] for res in per_path] for name in functionals}
    return _stats_from_samples(eval_times, samples, ens.n_paths)


def stability_experiment(
    b: FluxField,
    u0_1: GridFunction,
    u0_2: GridFunction,
    sigma: float,
    eps_list,
    ens: EnsembleConfig,
    mollify=None,
) -> list[dict]:
    """Coupled-path gap measurement E int |u1 - u2| dx.

    For each eps in eps_list, the flux is regularized at scale eps (via the
    mollify callable, signature mollify(b, eps) -> FluxField); the solver
    settings, including the viscosity, come from ens.solver.  Both solutions
    ride the SAME Brownian path per sample (common random numbers).  A
    sigma = 0 control run is included.
    Rows: dict(eps, sigma, time, gap_mean, gap_stderr, ratio_to_initial).
    """
    if not u0_1.same_grid(u0_2):
        raise InvalidParameterError("initial data must share a grid")
    gap0 = u0_1.with_values(u0_1.values - u0_2.values).norm_l1()
    eval_times = np.asarray(sorted(set([0.0] + list(ens.output_times) + [ens.T])))
    rows = []

    for eps in eps_list:
        b_eps = b if mollify is None else mollify(b, eps)
        cfg = ens.solver
        for sig in (sigma, 0.0):
            n_paths = ens.n_paths if sig > 0 else 1

            def run_path(i, _sig=sig, _b=b_eps, _cfg=cfg):
                W = sample_brownian(
                    ens.T,
                    ens.path_dt if ens.path_dt is not None else ens.T / 256.0,
                    _sig, ens.path_seed(i))
                t1 = transformed_solve_per_path(_b, u0_1, W, _cfg, ens.T,
                                                output_times=ens.output_times)
                t2 = transformed_solve_per_path(_b, u0_2, W, _cfg, ens.T,
                                                output_times=ens.output_times)
                return [t1.at_time(t).with_values(
                            t1.at_time(t).values - t2.at_time(t).values).norm_l1()
                        for t in eval_times]

            tasks = [lambda _i=i: run_path(_i) for i in range(n_paths)]
            gaps = np.asarray(_run_indexed(tasks, ens.n_threads))
            mean = gaps.mean(axis=0)
            se = (np.sqrt(gaps.var(axis=0, ddof=1) / n_paths)
                  if n_paths > 1 else np.zeros_like(mean))
            for j, t in enumerate(eval_times):
                rows.append({
                    "eps": float(eps), "sigma": float(sig), "time": float(t),
                    "gap_mean": float(mean[j]), "gap_stderr": float(se[j]),
                    "ratio_to_initial": float(mean[j] / gap0) if gap0 > 0 else 0.0,
                })
    return rows


def mollification_stability_experiment(
    b: FluxField,
    u0: GridFunction,
    sigma: float,
    eps_list,
    ens: EnsembleConfig,
    mollify,
    control_T: float | None = None,
) -> list[dict]:
    """Approximation-independence probe: same data, two regularization scales.

    For each eps, the gap E int |u^{eps} - u^{eps/2}| dx between the solves
    with flux mollified at eps and at eps/2 is measured with coupled paths
    (same W, same solver viscosity from ens.solver).  A sigma = 0
    single-path control is included; it is marched to control_T (default
    ens.T) so the deterministic gap can be read at a later horizon.
    Rows: dict(eps, sigma, time, gap_mean, gap_stderr).
    """
    if control_T is None:
        control_T = ens.T
    rows = []
    for eps in eps_list:
        b_coarse = mollify(b, eps)
        b_fine = mollify(b, eps / 2.0)
        cfg = ens.solver
        for sig in (sigma, 0.0):
            n_paths = ens.n_paths if sig > 0 else 1
            horizon = ens.T if sig > 0 else control_T
            outs = sorted(set(t for t in list(ens.output_times) + [ens.T]
                              if t < horizon))
            eval_times = np.asarray(sorted(set([0.0] + outs + [horizon])))

            def run_path(i, _sig=sig, _T=horizon, _outs=tuple(outs),
                         _eval=eval_times):
                W = sample_brownian(
                    _T,
                    ens.path_dt if ens.path_dt is not None else ens.T / 256.0,
                    _sig, ens.path_seed(i))
                t1 = transformed_solve_per_path(b_coarse, u0, W, cfg, _T,
                                                output_times=_outs)
                t2 = transformed_solve_per_path(b_fine, u0, W, cfg, _T,
                                                output_times=_outs)
                return [t1.at_time(t).with_values(
                            t1.at_time(t).values - t2.at_time(t).values).norm_l1()
                        for t in _eval]

            tasks = [lambda _i=i: run_path(_i) for i in range(n_paths)]
            gaps = np.asarray(_run_indexed(tasks, ens.n_threads))
            mean = gaps.mean(axis=0)
            se = (np.sqrt(gaps.var(axis=0, ddof=1) / n_paths)
                  if n_paths > 1 else np.zeros_like(mean))
            for j, t in enumerate(eval_times):
                rows.append({
                    "eps": float(eps), "sigma": float(sig), "time": float(t),
                    "gap_mean": float(mean[j]), "gap_stderr": float(se[j]),
                })
    return rows


def selection_study(
    b: FluxField,
    u0: GridFunction,
    sigma_list,
    ens: EnsembleConfig,
    references: dict,
) -> list[dict]:
    """Distances of the vanishing-noise ensemble mean to candidate limits.

    references maps label -> callable (t, x_array) -> values.  For each
    sigma the ensemble-mean field at t = T is compared in L1 to each
    reference; stderr is the integrated pointwise standard error of the
    mean field.  Rows: dict(sigma, dist_to_<label>..., stderr).
    """
    sigmas = list(sigma_list)
    if any(s2 >= s1 for s1, s2 in zip(sigmas, sigmas[1:])) or sigmas[-1] <= 0:
        raise InvalidParameterError("sigma_list must be strictly decreasing and positive")
    rows = []
    for sigma in sigmas:
        def run_path(i, _sigma=sigma):
            W = sample_brownian(
                ens.T,
                ens.path_dt if ens.path_dt is not None else ens.T / 256.0,
                _sigma, ens.path_seed(i))
            traj = transformed_solve_per_path(b, u0, W, ens.solver, ens.T,
                                              output_times=(ens.T,))
            return traj.at_time(ens.T).values

        tasks = [lambda _i=i: run_path(_i) for i in range(ens.n_paths)]
        fields = np.asarray(_run_indexed(tasks, ens.n_threads))
        mean_field = u0.with_values(fields.mean(axis=0))
        if ens.n_paths > 1:
            se = np.sqrt(fields.var(axis=0, ddof=1) / ens.n_paths)
        else:
            se = np.zeros(u0.n)
        row = {"sigma": float(sigma)}
        for label, ref in references.items():
            diff = mean_field.values - ref(ens.T, u0.centers)
            row[f"dist_to_{label}"] = float(np.sum(np.abs(diff)) * u0.dx)
        row["stderr"] = float(np.sum(se) * u0.dx)
        rows.append(row)
    return rows
