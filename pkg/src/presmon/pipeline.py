"""End-to-end orchestration: prepare, train, simulate, report.

Each stage reads only what earlier stages wrote under the run directory,
so stages can be re-run independently and every number in the final report
can be recomputed from persisted files. All outputs are byte-deterministic
for a given configuration and seed.

Run directory layout::

    config.json                 resolved configuration
    prepared/
        train.csv cal.csv test.csv
        schema.json counterfactuals.csv prepare_meta.json
    models/
        ensemble.json cox.json tlearner.json classif_cal.json regr_cals.json
    sim/
        episodes.csv gain_curve.csv simulate_report.json
    report/
        convergence.csv total_gain.csv utilization.csv report.json
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .agent import (
    AgentConfig,
    always_policy,
    convergence_point,
    effect_threshold_policy,
    gain_after,
    never_policy,
    op_threshold_policy,
    oracle_policy,
    random_policy,
    run_baseline,
    run_online_training,
)
from .conformal import (
    CohortEffectBounds,
    ClassifCalibration,
    RegrCalibration,
    calibrate_classifier,
    calibrate_regressor,
    cohort_effect_bounds,
    conformal_interval,
    conformal_set,
    conformal_te,
)
from .counterfactual import (
    PotentialOutcomes,
    impute_counterfactuals,
    read_counterfactuals,
    write_counterfactuals,
)
from .errors import ConfigError, DataError
from .eventlog import (
    NEGATIVE,
    EventLog,
    LogConfig,
    extract_prefixes,
    parse_log,
    split_log,
    write_log,
)
from .features import FeatureSchema, InterCaseIndex, encode_prefixes, fit_schema
from .models import (
    BaggedTreeEnsemble,
    CoxModel,
    TLearner,
    fit_cox,
    fit_ensemble,
    fit_tlearner,
    predict_iw,
)
from .rng import substream
from .simenv import (
    NormalizationStats,
    PrefixEstimates,
    ReplayEnvironment,
    RewardParams,
    VARIANTS,
    resource_boundaries,
    utilization,
)
from .synthetic import SyntheticSpec, gen_synthetic, synthetic_log_config

BASELINES = ("never", "always", "random", "op_threshold", "effect_threshold",
             "oracle")


@dataclass(frozen=True)
class ModelParams:
    n_members: int = 10
    max_depth: int = 6
    min_samples_leaf: int = 20
    cohort_bins: int = 5

    def to_dict(self) -> dict:
        return {"n_members": self.n_members, "max_depth": self.max_depth,
                "min_samples_leaf": self.min_samples_leaf,
                "cohort_bins": self.cohort_bins}

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        return cls(**d)


@dataclass(frozen=True)
class RunConfig:
    seed: int = 7
    synthetic: SyntheticSpec | None = None
    log_path: str | None = None
    log: LogConfig | None = None
    split: tuple = (0.5, 0.25, 0.25)
    max_prefix: int | None = None
    alpha: float = 0.1
    models: ModelParams = ModelParams()
    reward: RewardParams = RewardParams()
    t_dur: float = 16.0
    resources: tuple = (2,)
    variants: tuple = ("all",)
    baselines: tuple = ("never", "always", "op_threshold")
    op_tau: float = 0.5
    effect_tau: float = 0.1
    random_p: float = 0.5
    replications: int = 3
    te_mode: str = "estimate"
    agent: AgentConfig = AgentConfig()
    demand_reference: str = "negative_untreated"
    demand_value: float | None = None
    write_trace: bool = False

    def __post_init__(self):
        if self.synthetic is None and self.log_path is None:
            raise ConfigError("config needs either synthetic or log_path")
        if self.log_path is not None and self.log is None:
            raise ConfigError("parsing an external log requires log settings")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must be in (0, 1), got {self.alpha}")
        bad = set(self.variants) - set(VARIANTS)
        if bad:
            raise ConfigError(f"unknown variants {sorted(bad)}")
        bad = set(self.baselines) - set(BASELINES)
        if bad:
            raise ConfigError(f"unknown baselines {sorted(bad)}")
        if self.te_mode not in ("estimate", "realized"):
            raise ConfigError(f"unknown te_mode {self.te_mode!r}")
        for n in self.resources:
            if n is not None and (not isinstance(n, int) or n < 1):
                raise ConfigError(f"resource counts must be ints >= 1 or null, got {n}")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if self.demand_reference not in ("negative_untreated", "cases", "explicit"):
            raise ConfigError(f"unknown demand_reference {self.demand_reference!r}")
        if self.demand_reference == "explicit" and self.demand_value is None:
            raise ConfigError("explicit demand_reference needs demand_value")

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "synthetic": None if self.synthetic is None else self.synthetic.to_dict(),
            "log_path": self.log_path,
            "log": None if self.log is None else self.log.to_dict(),
            "split": list(self.split),
            "max_prefix": self.max_prefix,
            "alpha": self.alpha,
            "models": self.models.to_dict(),
            "reward": self.reward.to_dict(),
            "t_dur": self.t_dur,
            "resources": list(self.resources),
            "variants": list(self.variants),
            "baselines": list(self.baselines),
            "op_tau": self.op_tau,
            "effect_tau": self.effect_tau,
            "random_p": self.random_p,
            "replications": self.replications,
            "te_mode": self.te_mode,
            "agent": self.agent.to_dict(),
            "demand_reference": self.demand_reference,
            "demand_value": self.demand_value,
            "write_trace": self.write_trace,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        kw = dict(d)
        if kw.get("synthetic") is not None:
            kw["synthetic"] = SyntheticSpec.from_dict(kw["synthetic"])
        if kw.get("log") is not None:
            kw["log"] = LogConfig.from_dict(kw["log"])
        if "split" in kw:
            kw["split"] = tuple(kw["split"])
        if "models" in kw:
            kw["models"] = ModelParams.from_dict(kw["models"])
        if "reward" in kw:
            kw["reward"] = RewardParams.from_dict(kw["reward"])
        if "resources" in kw:
            kw["resources"] = tuple(kw["resources"])
        for key in ("variants", "baselines"):
            if key in kw:
                kw[key] = tuple(kw[key])
        if "agent" in kw:
            kw["agent"] = AgentConfig.from_dict(kw["agent"])
        return cls(**kw)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        return RunConfig.from_dict(json.loads(path.read_text()))
    except (json.JSONDecodeError, TypeError, KeyError) as err:
        raise ConfigError(f"malformed config {path}: {err}") from err


class RunPaths:
    def __init__(self, out_dir: str | Path):
        self.root = Path(out_dir)
        self.config = self.root / "config.json"
        self.prepared = self.root / "prepared"
        self.models = self.root / "models"
        self.sim = self.root / "sim"
        self.report = self.root / "report"

    def split_csv(self, name: str) -> Path:
        return self.prepared / f"{name}.csv"


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return "-"
    return str(v)


def _write_csv(path: Path, header: list[str], rows: list[tuple]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


# --- prepare ----------------------------------------------------------------


def prepare(config: RunConfig, out_dir: str | Path) -> dict:
    """Materialize splits, feature schema, and (when available) the
    ground-truth potential-outcome table."""
    paths = RunPaths(out_dir)
    paths.prepared.mkdir(parents=True, exist_ok=True)

    truth: dict[str, PotentialOutcomes] | None = None
    if config.synthetic is not None:
        log_cfg = config.log if config.log is not None else synthetic_log_config()
        log, truth = gen_synthetic(config.synthetic, config.seed)
    else:
        log_cfg = config.log
        log = parse_log(config.log_path, log_cfg)

    train, cal, test = split_log(log, config.split)
    cap = config.max_prefix if config.max_prefix is not None \
        else train.length_percentile(0.9)
    schema = fit_schema(train, delta_attrs=log_cfg.delta_attrs)

    for name, part in (("train", train), ("cal", cal), ("test", test)):
        write_log(part, paths.split_csv(name))
    _write_json(paths.prepared / "schema.json", schema.to_dict())
    if truth is not None:
        test_ids = {c.case_id for c in test}
        write_counterfactuals(
            {cid: po for cid, po in truth.items() if cid in test_ids},
            paths.prepared / "counterfactuals.csv")

    resolved = dataclasses.replace(config, log=log_cfg)
    _write_json(paths.config, resolved.to_dict())

    meta = {
        "n_cases": len(log),
        "n_train": len(train),
        "n_cal": len(cal),
        "n_test": len(test),
        "split": {"policy": "temporal", "ratios": list(config.split)},
        "max_prefix": cap,
        "alpha": config.alpha,
        "intercase_window": schema.intercase_window,
        "ground_truth_outcomes": truth is not None,
        "cleaning": {
            "input_rows": log.cleaning.input_rows,
            "events_dropped_bad_timestamp": log.cleaning.events_dropped_bad_timestamp,
            "cases_dropped_empty": log.cleaning.cases_dropped_empty,
            "cases_dropped_unlabeled": log.cleaning.cases_dropped_unlabeled,
            "cases_kept": log.cleaning.cases_kept,
        },
    }
    _write_json(paths.prepared / "prepare_meta.json", meta)
    return meta


# --- train ------------------------------------------------------------------


@dataclass
class Artifacts:
    ensemble: BaggedTreeEnsemble
    cox: CoxModel
    tlearner: TLearner
    classif_cal: ClassifCalibration
    iw_cal: RegrCalibration
    arm1_cal: RegrCalibration
    arm0_cal: RegrCalibration
    cohort: CohortEffectBounds
    norm: NormalizationStats
    alpha: float


def _load_prepared(paths: RunPaths, config: RunConfig):
    meta = json.loads((paths.prepared / "prepare_meta.json").read_text())
    schema = FeatureSchema.from_dict(
        json.loads((paths.prepared / "schema.json").read_text()))
    log_cfg = config.log
    parts = {name: parse_log(paths.split_csv(name), log_cfg)
             for name in ("train", "cal", "test")}
    merged = EventLog(cases=tuple(
        sorted((c for part in parts.values() for c in part),
               key=lambda c: (c.arrival_time, c.case_id))))
    index = InterCaseIndex(merged)
    return meta, schema, parts, index


def _prefix_pairs(log: EventLog, cap: int):
    pairs = []
    for case in log:
        for p in extract_prefixes(case, cap):
            pairs.append((case, p))
    return pairs


def _matrices(pairs, schema, index):
    prefixes = [p for _, p in pairs]
    X = encode_prefixes(prefixes, schema, index)
    outcomes = np.array([c.outcome for c, _ in pairs], dtype=int)
    durations = np.array([c.end_time - p.prefix_end_time for c, p in pairs])
    events = (outcomes == NEGATIVE).astype(int)
    treated = np.array([c.treated for c, _ in pairs], dtype=bool)
    return X, outcomes, durations, events, treated


def train(config: RunConfig, out_dir: str | Path) -> dict:
    """Fit predictive, survival, and causal models on the training split and
    calibrate them on the calibration split."""
    paths = RunPaths(out_dir)
    paths.models.mkdir(parents=True, exist_ok=True)
    meta, schema, parts, index = _load_prepared(paths, config)
    cap = meta["max_prefix"]
    mp = config.models

    X, outcomes, durations, events, treated = _matrices(
        _prefix_pairs(parts["train"], cap), schema, index)
    rng = substream(config.seed, "train")
    ensemble = fit_ensemble(X, events, n_members=mp.n_members,
                            max_depth=mp.max_depth,
                            min_samples_leaf=mp.min_samples_leaf, rng=rng)
    cox = fit_cox(X, durations, events)
    tlearner = fit_tlearner(X, treated, 1 - events, n_members=mp.n_members,
                            max_depth=mp.max_depth,
                            min_samples_leaf=mp.min_samples_leaf,
                            rng=substream(config.seed, "train", "tlearner"))

    Xc, out_c, dur_c, ev_c, tr_c = _matrices(
        _prefix_pairs(parts["cal"], cap), schema, index)
    op_cal = ensemble.predict(Xc)
    classif_cal = calibrate_classifier(op_cal, out_c)
    neg_mask = ev_c == 1
    if not neg_mask.any():
        raise DataError("calibration split has no negative-outcome cases; "
                        "cannot calibrate the intervention-window model")
    iw_pred = np.array([predict_iw(cox, x).iw for x in Xc[neg_mask]])
    iw_cal = calibrate_regressor(iw_pred, dur_c[neg_mask])
    p1_cal, p0_cal = tlearner.predict_arms(Xc)
    y_pos_c = (1 - ev_c).astype(float)
    if not tr_c.any() or tr_c.all():
        raise DataError("calibration split lacks one treatment arm; "
                        "cannot calibrate effect intervals")
    arm1_cal = calibrate_regressor(p1_cal[tr_c], y_pos_c[tr_c])
    arm0_cal = calibrate_regressor(p0_cal[~tr_c], y_pos_c[~tr_c])
    te_ints = [conformal_te(arm1_cal, arm0_cal, p1_cal[i], p0_cal[i], config.alpha)
               for i in range(len(p0_cal))]
    cohort = cohort_effect_bounds(
        p0_cal, np.array([iv.lo for iv in te_ints]),
        np.array([iv.hi for iv in te_ints]), n_bins=mp.cohort_bins)

    arts = Artifacts(ensemble=ensemble, cox=cox, tlearner=tlearner,
                     classif_cal=classif_cal, iw_cal=iw_cal,
                     arm1_cal=arm1_cal, arm0_cal=arm0_cal, cohort=cohort,
                     norm=NormalizationStats(lo=np.zeros(1), hi=np.ones(1)),
                     alpha=config.alpha)
    cal_rows = compute_prefix_estimates(_prefix_pairs(parts["cal"], cap),
                                        schema, index, arts)
    arts.norm = NormalizationStats.fit(cal_rows)

    _write_json(paths.models / "ensemble.json", ensemble.to_dict())
    _write_json(paths.models / "cox.json", cox.to_dict())
    _write_json(paths.models / "tlearner.json", tlearner.to_dict())
    _write_json(paths.models / "classif_cal.json", classif_cal.to_dict())
    _write_json(paths.models / "regr_cals.json", {
        "confidence": 1.0 - config.alpha,
        "alpha": config.alpha,
        "iw": iw_cal.to_dict(),
        "arm1": arm1_cal.to_dict(),
        "arm0": arm0_cal.to_dict(),
        "cohort": cohort.to_dict(),
        "norm": arts.norm.to_dict(),
    })
    return {
        "n_train_prefixes": int(X.shape[0]),
        "n_cal_prefixes": int(Xc.shape[0]),
        "n_features": int(X.shape[1]),
    }


def load_artifacts(out_dir: str | Path) -> Artifacts:
    paths = RunPaths(out_dir)
    missing = [n for n in ("ensemble", "cox", "tlearner", "classif_cal",
                           "regr_cals")
               if not (paths.models / f"{n}.json").exists()]
    if missing:
        raise DataError(f"model artifacts missing: {missing}; run train first")
    regr = json.loads((paths.models / "regr_cals.json").read_text())
    return Artifacts(
        ensemble=BaggedTreeEnsemble.from_dict(
            json.loads((paths.models / "ensemble.json").read_text())),
        cox=CoxModel.from_dict(
            json.loads((paths.models / "cox.json").read_text())),
        tlearner=TLearner.from_dict(
            json.loads((paths.models / "tlearner.json").read_text())),
        classif_cal=ClassifCalibration.from_dict(
            json.loads((paths.models / "classif_cal.json").read_text())),
        iw_cal=RegrCalibration.from_dict(regr["iw"]),
        arm1_cal=RegrCalibration.from_dict(regr["arm1"]),
        arm0_cal=RegrCalibration.from_dict(regr["arm0"]),
        cohort=CohortEffectBounds.from_dict(regr["cohort"]),
        norm=NormalizationStats.from_dict(regr["norm"]),
        alpha=regr["alpha"],
    )


def compute_prefix_estimates(pairs, schema: FeatureSchema,
                             index: InterCaseIndex,
                             arts: Artifacts) -> list[PrefixEstimates]:
    """Everything the state vector needs, for each decision point, computed
    once from the persisted artifacts."""
    prefixes = [p for _, p in pairs]
    X = encode_prefixes(prefixes, schema, index)
    ests = arts.ensemble.estimates(X)
    p1_all, p0_all = arts.tlearner.predict_arms(X)
    rows = []
    for i, (case, prefix) in enumerate(pairs):
        t = prefix.prefix_end_time
        ctx = index.context(t, schema.intercase_window)
        cset = conformal_set(arts.classif_cal, ests[i].op, arts.alpha)
        iw = predict_iw(arts.cox, X[i]).iw
        ciw = conformal_interval(arts.iw_cal, iw, arts.alpha, lo_clamp=0.0)
        p1, p0 = float(p1_all[i]), float(p0_all[i])
        cte = conformal_te(arts.arm1_cal, arts.arm0_cal, p1, p0, arts.alpha)
        cate_lo, cate_hi = arts.cohort.lookup(p0)
        rows.append(PrefixEstimates(
            case_id=case.case_id, k=prefix.k, t=t,
            op=float(ests[i].op), tu=float(ests[i].tu), iw=float(iw),
            ciw_lo=float(ciw.lo), ciw_hi=float(ciw.hi),
            p1=p1, p0=p0, te=p1 - p0,
            cte_lo=float(cte.lo), cte_hi=float(cte.hi),
            cate_lo=float(cate_lo), cate_hi=float(cate_hi),
            cop_neg=bool(cset.contains_negative),
            cop_pos=bool(cset.contains_positive),
            wip=float(ctx.wip), arrival_rate=float(ctx.arrival_rate)))
    return rows


# --- simulate ---------------------------------------------------------------


def _n_str(n) -> str:
    return "inf" if n is None else str(n)


def _policy_for(name: str, config: RunConfig, po_table, seed_names):
    if name == "never":
        return never_policy()
    if name == "always":
        return always_policy()
    if name == "random":
        return random_policy(config.random_p, substream(config.seed, *seed_names))
    if name == "op_threshold":
        return op_threshold_policy(config.op_tau)
    if name == "effect_threshold":
        return effect_threshold_policy(config.effect_tau)
    if name == "oracle":
        return oracle_policy(po_table)
    raise ConfigError(f"unknown baseline {name!r}")


def simulate(config: RunConfig, out_dir: str | Path) -> dict:
    """Replay the test split under every configured policy, pool size, and
    replication; persist episode-level results."""
    paths = RunPaths(out_dir)
    paths.sim.mkdir(parents=True, exist_ok=True)
    meta, schema, parts, index = _load_prepared(paths, config)
    arts = load_artifacts(out_dir)
    test = parts["test"]
    cap = meta["max_prefix"]
    pairs = _prefix_pairs(test, cap)

    cf_path = paths.prepared / "counterfactuals.csv"
    if cf_path.exists():
        po_table = read_counterfactuals(cf_path)
        imputed = False
    else:
        def features_for_case(case):
            prefix = extract_prefixes(case, cap)[-1]
            return encode_prefixes([prefix], schema, index)[0]
        po_table = impute_counterfactuals(
            test, arts.tlearner, features_for_case,
            substream(config.seed, "impute"))
        write_counterfactuals(po_table, paths.sim / "counterfactuals_imputed.csv")
        imputed = True

    points = compute_prefix_estimates(pairs, schema, index, arts)
    ends = {c.case_id: c.end_time for c in test}
    duration = test.duration()
    if config.demand_reference == "explicit":
        demand_count = float(config.demand_value)
    elif config.demand_reference == "cases":
        demand_count = float(len(test))
    else:
        demand_count = float(sum(1 for po in po_table.values()
                                 if po.y0 == NEGATIVE))
    boundaries = resource_boundaries(int(demand_count), config.t_dur, duration)

    def make_env(n, variant):
        return ReplayEnvironment(points, po_table, ends, n, config.t_dur,
                                 config.reward, arts.norm, variant=variant,
                                 te_mode=config.te_mode)

    episode_rows: list[tuple] = []
    curve_rows: list[tuple] = []
    runs: dict[str, dict] = {}

    def record(run_id: str, env: ReplayEnvironment, extra: dict) -> None:
        curve = env.gain_curve()
        c_star = convergence_point(curve)
        info = {
            "n_episodes": len(env.records),
            "interventions": env.interventions,
            "total_gain": float(curve[-1]) if len(curve) else 0.0,
            "c_star": c_star,
            "post_gain": gain_after(curve, c_star) if c_star is not None else 0.0,
        }
        n = extra.get("n")
        if n is not None:
            rep = utilization(n, env.interventions, config.t_dur, duration)
            info["rho"] = rep.rho
            info["utilization_level"] = rep.level
        else:
            info["rho"] = None
            info["utilization_level"] = None
        info.update(extra)
        runs[run_id] = info
        for r in env.records:
            episode_rows.append((run_id, r.completion_index, r.case_id,
                                 r.frequency, r.final_outcome, r.gain))
        for i, g in enumerate(curve):
            curve_rows.append((run_id, i, float(g)))

    for variant in config.variants:
        for n in config.resources:
            for rep in range(config.replications):
                run_id = f"{variant}|n={_n_str(n)}|rep={rep}"
                env = make_env(n, variant)
                rng = substream(config.seed, "simulate", variant, _n_str(n), rep)
                result = run_online_training(env, config.agent, rng)
                record(run_id, env, {"kind": "agent", "variant": variant,
                                     "n": n, "rep": rep,
                                     "n_updates": result.n_updates})

    for name in config.baselines:
        for n in config.resources:
            run_id = f"baseline:{name}|n={_n_str(n)}"
            env = make_env(n, "all")
            policy = _policy_for(name, config, po_table,
                                 ("simulate", "baseline", name, _n_str(n)))
            run_baseline(env, policy)
            record(run_id, env, {"kind": "baseline", "baseline": name, "n": n})

    _write_csv(paths.sim / "episodes.csv",
               ["run_id", "completion_index", "case_id", "frequency",
                "final_outcome", "gain"], episode_rows)
    _write_csv(paths.sim / "gain_curve.csv",
               ["run_id", "completion_index", "cumulative_gain"], curve_rows)
    report = {
        "n_points": len(points),
        "n_cases": len(test),
        "duration": duration,
        "counterfactuals_imputed": imputed,
        "demand_reference": config.demand_reference,
        "demand_count": demand_count,
        "boundaries": boundaries,
        "runs": runs,
    }
    _write_json(paths.sim / "simulate_report.json", report)
    return report


# --- report -----------------------------------------------------------------


def _read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    if not path.exists():
        raise DataError(f"missing file: {path}")
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    return header, [line.split(",") for line in lines[1:]]


def verify_gain_accounting(config: RunConfig, out_dir: str | Path) -> dict:
    """Recompute every persisted gain from its episode record and every
    total from its episodes; report any mismatch."""
    paths = RunPaths(out_dir)
    sim_report = json.loads((paths.sim / "simulate_report.json").read_text())
    _, rows = _read_csv(paths.sim / "episodes.csv")
    g_out = config.reward.gain_out
    c_in = config.reward.c_in
    mismatches: list[str] = []
    totals: dict[str, float] = {}
    counts: dict[str, int] = {}
    for run_id, _, case_id, freq, outcome, gain in rows:
        stored = float(gain)
        recomputed = g_out * (1.0 if int(outcome) == 1 else 0.0) \
            - int(freq) * c_in
        if recomputed != stored:
            mismatches.append(f"{run_id}/{case_id}: gain {stored} != {recomputed}")
        totals[run_id] = totals.get(run_id, 0.0) + stored
        counts[run_id] = counts.get(run_id, 0) + 1
    for run_id, info in sim_report["runs"].items():
        if run_id not in totals:
            mismatches.append(f"{run_id}: no episodes persisted")
            continue
        if totals[run_id] != info["total_gain"]:
            mismatches.append(f"{run_id}: total {info['total_gain']} != "
                              f"{totals[run_id]}")
        if counts[run_id] != info["n_episodes"]:
            mismatches.append(f"{run_id}: {counts[run_id]} episodes != "
                              f"{info['n_episodes']}")
    return {"ok": not mismatches, "runs_checked": len(sim_report["runs"]),
            "episodes_checked": len(rows), "mismatches": mismatches}


def report(config: RunConfig, out_dir: str | Path) -> dict:
    """Condense simulation outputs into the final tables and audit them."""
    paths = RunPaths(out_dir)
    paths.report.mkdir(parents=True, exist_ok=True)
    sim_report = json.loads((paths.sim / "simulate_report.json").read_text())
    runs = sim_report["runs"]

    conv_rows, gain_rows, util_rows = [], [], []
    for run_id in sorted(runs):
        info = runs[run_id]
        c_star = info["c_star"]
        conv_rows.append((run_id, info["n_episodes"],
                          "-" if c_star is None else c_star))
        gain_rows.append((run_id, float(info["total_gain"]),
                          float(info["post_gain"])))
        util_rows.append((run_id, _n_str(info["n"]), info["interventions"],
                          "-" if info["rho"] is None else repr(info["rho"]),
                          "-" if info["utilization_level"] is None
                          else info["utilization_level"]))
    _write_csv(paths.report / "convergence.csv",
               ["run_id", "n_episodes", "c_star"], conv_rows)
    _write_csv(paths.report / "total_gain.csv",
               ["run_id", "total_gain", "post_convergence_gain"], gain_rows)
    _write_csv(paths.report / "utilization.csv",
               ["run_id", "n_resources", "interventions", "rho", "level"],
               util_rows)

    medians: dict[str, dict] = {}
    for variant in config.variants:
        for n in config.resources:
            reps = [runs[rid] for rid in runs
                    if runs[rid].get("kind") == "agent"
                    and runs[rid].get("variant") == variant
                    and runs[rid].get("n") == n]
            if not reps:
                continue
            key = f"{variant}|n={_n_str(n)}"
            post = sorted(r["post_gain"] for r in reps)
            total = sorted(r["total_gain"] for r in reps)
            medians[key] = {
                "replications": len(reps),
                "converged": sum(1 for r in reps if r["c_star"] is not None),
                "median_total_gain": total[len(total) // 2],
                "median_post_gain": post[len(post) // 2],
            }

    audit = verify_gain_accounting(config, out_dir)
    out = {
        "boundaries": sim_report["boundaries"],
        "demand_count": sim_report["demand_count"],
        "duration": sim_report["duration"],
        "medians": medians,
        "audit": audit,
    }
    _write_json(paths.report / "report.json", out)
    return out


def run_all(config: RunConfig, out_dir: str | Path) -> dict:
    prepare(config, out_dir)
    cfg = load_config(RunPaths(out_dir).config)
    train(cfg, out_dir)
    simulate(cfg, out_dir)
    return report(cfg, out_dir)
