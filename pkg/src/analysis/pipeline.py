"""
High-level orchestration: search -> train -> prune -> symbolic fit -> evaluate,
with every artifact written into one run directory.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import pandas as pd

from src.analysis.plots import plot_edges, plot_history, plot_term_importance
from src.analysis.report import RunReport, evaluate_stages
from src.config import COX_CONFIG, DATA_PATHS, SYMBOLIC_CONFIG
from src.dataset import CsvSchema, Dataset, columns_from_inputs, load_dataset
from src.exceptions import InvalidArgumentError, InvalidStateError
from src.kan.network import Network, forward
from src.kan.serialization import load_model, save_model
from src.preprocessor import apply_standardization, prepare_datasets
from src.survival.coxph import coxph_fit
from src.symbolic.fitting import auto_symbolic, export_edge_samples, finetune_affine
from src.symbolic.formula import Formula, render_formula, term_importance
from src.training.search import SearchSpace, random_search
from src.training.trainer import TrainConfig, TrainHistory, auto_prune, build_network, train


@dataclass
class PipelineOutputs:
    out_dir: str
    files: Dict[str, str] = field(default_factory=dict)
    report: Optional[RunReport] = None


def scale_like(ds: Dataset, net: Network) -> Dataset:
    """Standardize ds with the statistics recorded on the network's inputs."""
    if ds.feature_names != net.feature_names:
        raise InvalidArgumentError(f"Data columns {ds.feature_names} do not match the model inputs {net.feature_names}")
    if all(col.standardized or col.is_categorical for col in ds.columns) or not any(m.mean is not None for m in net.input_meta):
        return ds
    return apply_standardization(ds, columns_from_inputs(net.input_meta))


class SurvKANPipeline:
    """Runs the modelling stages and keeps their artifacts under out_dir."""

    def __init__(self, cfg: Optional[TrainConfig] = None, out_dir: str = DATA_PATHS["runs"], verbose: bool = True) -> None:
        self.cfg = cfg or TrainConfig()
        self.out_dir = out_dir
        self.verbose = verbose
        self.timing: Dict[str, float] = {}
        os.makedirs(out_dir, exist_ok=True)

    def path(self, key: str) -> str:
        return os.path.join(self.out_dir, DATA_PATHS[key])

    def _say(self, message: str) -> None:
        if self.verbose:
            print(message)

    def _timed(self, stage: str, started: float) -> None:
        self.timing[stage] = round(time.perf_counter() - started, 3)

    # -- data --------------------------------------------------------------
    def load_datasets(
        self,
        train_path: str,
        test_path: Optional[str] = None,
        schema: Optional[CsvSchema] = None,
        scale: bool = True,
    ) -> Tuple[Dataset, Optional[Dataset]]:
        train_ds = load_dataset(train_path, schema=schema)
        test_ds = load_dataset(test_path, schema=schema) if test_path else None
        if test_ds is not None and test_ds.feature_names != train_ds.feature_names:
            raise InvalidArgumentError("Train and test files have different covariate columns")
        self._say(f"✅ Loaded {len(train_ds)} training rows" + (f" and {len(test_ds)} test rows" if test_ds else ""))
        return prepare_datasets(train_ds, test_ds, scale=scale)

    def load_stage_model(self, key: str, required_hint: str) -> Network:
        path = self.path(key)
        if not os.path.exists(path):
            raise InvalidStateError(f"No model at {path}", hint=required_hint)
        return load_model(path)

    # -- stages ------------------------------------------------------------
    def search(
        self,
        data: Dataset,
        space: Optional[SearchSpace] = None,
        trials: int = 30,
        folds: int = 4,
        jobs: int = 1,
        seed: int = 0,
    ) -> Tuple[TrainConfig, pd.DataFrame]:
        started = time.perf_counter()
        self._say(f"🔄 Random search: {trials} trials, {folds}-fold cross-validation")
        best, leaderboard = random_search(data, space, trials=trials, seed=seed, folds=folds, jobs=jobs, verbose=self.verbose)
        leaderboard.to_csv(self.path("leaderboard_csv"), index=False)
        best.save(self.path("best_config_json"))
        self.cfg = best
        failed = int(leaderboard["mean_c"].isna().sum())
        if failed:
            self._say(f"⚠️ {failed} trials failed; see {self.path('leaderboard_csv')}")
        self._say(f"✅ Best mean C-index {leaderboard['mean_c'].max():.4f}; saved {self.path('best_config_json')}")
        self._timed("search", started)
        return best, leaderboard

    def train(self, data: Dataset) -> Tuple[Network, Network, float, TrainHistory]:
        started = time.perf_counter()
        self._say(f"🔄 Training shape {[data.X.shape[1], *self.cfg.hidden, 1]} for up to {self.cfg.steps} steps")
        trained, history = train(build_network(self.cfg, data), data, self.cfg, verbose=self.verbose)
        pruned, threshold = auto_prune(trained, data, self.cfg)
        save_model(trained, self.path("trained_model_json"))
        save_model(pruned, self.path("pruned_model_json"))
        save_model(pruned, self.path("model_json"))
        history.to_frame().to_csv(self.path("history_csv"), index=False)
        dropped = pruned.dropped_features()
        self._say(f"✅ Pruned at threshold {threshold:.4g}; {len(pruned.active_edges())} active edges")
        if dropped:
            self._say(f"⚠️ Dropped features: {', '.join(dropped)}")
        self._timed("train", started)
        return trained, pruned, threshold, history

    def symbolize(
        self,
        net: Network,
        data: Dataset,
        finetune_steps: int = SYMBOLIC_CONFIG["finetune_steps"],
        precision: int = SYMBOLIC_CONFIG["precision"],
        jobs: int = 1,
        export_samples: bool = False,
    ) -> Tuple[Network, Formula]:
        started = time.perf_counter()
        if net.stage == "trained":
            self._say("⚠️ Model was not pruned; fitting every edge")
        _, cache = forward(net, data.X)
        if export_samples:
            paths = export_edge_samples(net, cache, self.path("edge_samples"))
            self._say(f"💾 Exported {len(paths)} edge sample files to {self.path('edge_samples')}")
        self._say(f"🔄 Fitting symbolic forms for {len(net.active_edges())} edges")
        symnet = auto_symbolic(net, cache, jobs=jobs, verbose=self.verbose)
        symnet = finetune_affine(symnet, data, steps=finetune_steps, verbose=self.verbose)
        formula = render_formula(symnet, precision=precision)
        save_model(symnet, self.path("model_json"))
        self.write_formula(formula, symnet, data)
        for (l, j, i) in symnet.active_edges():
            edge = symnet.layers[l].symbolic[(j, i)]
            if edge.low_fidelity:
                self._say(f"⚠️ Edge ({l},{i},{j}) is low fidelity (R^2={edge.r2:.3f})")
        self._say(f"✅ theta = {formula.text}")
        self._timed("symbolic", started)
        return symnet, formula

    def write_formula(self, formula: Formula, symnet: Network, data: Dataset) -> None:
        payload = formula.to_dict()
        if any(col.standardized for col in data.columns):
            raw = render_formula(symnet, precision=formula.precision, columns=data.columns)
            payload["raw_units_text"] = raw.text
        with open(self.path("formula_txt"), "w", encoding="utf-8") as handle:
            handle.write(formula.text + "\n")
        with open(self.path("formula_json"), "w", encoding="utf-8") as handle:
            json.dump(payload, handle, indent=2)

    def evaluate(
        self,
        train_ds: Dataset,
        test_ds: Dataset,
        bootstrap: int = COX_CONFIG["bootstrap"],
        seed: int = 0,
        threshold: Optional[float] = None,
    ) -> RunReport:
        """Score every saved stage, CoxPH and (if known) the true formula on test_ds."""
        started = time.perf_counter()
        models: Dict[str, Network] = {}
        for stage, key in (("trained", "trained_model_json"), ("pruned", "pruned_model_json")):
            if os.path.exists(self.path(key)):
                models[stage] = load_model(self.path(key))
        current = self.load_stage_model("model_json", "run `survkan train` first")
        if current.stage == "symbolic":
            models["symbolic"] = current
        elif "pruned" not in models:
            models["pruned"] = current

        coxph = coxph_fit(train_ds.X, train_ds.outcome, feature_names=train_ds.feature_names)
        self._say(f"🔄 Bootstrapping C-index ({bootstrap} resamples) for {', '.join(models)}")
        reports = evaluate_stages(models, test_ds, coxph=coxph, B=bootstrap, seed=seed)

        report = RunReport(
            config=self.cfg.to_dict(),
            fingerprints={"train": train_ds.fingerprint(), "test": test_ds.fingerprint()},
            prune_threshold=threshold,
            dropped_features=models.get("pruned", current).dropped_features(),
        )
        for name, stage_report in reports.items():
            report.add_stage(name, stage_report)
        if "symbolic" in models:
            formula = render_formula(models["symbolic"])
            importance = term_importance(formula, test_ds.X)
            report.formula = formula.text
            report.term_importance = importance.to_dict(orient="records")
            reports["symbolic"].term_importance = {row["term"]: row["sigma"] for row in report.term_importance}
            report.stages["symbolic"] = reports["symbolic"].to_dict()
        self._timed("evaluate", started)
        report.timing = dict(self.timing)
        report.save(self.path("report_json"))
        for line in report.summary_lines():
            self._say(f"   {line}")
        self._say(f"💾 Saved report to {self.path('report_json')}")
        return report

    def edge_plot_sources(self) -> Tuple[Network, Optional[Network]]:
        """(spline network, symbolic overlay) for the edge panels.

        Once model.json is symbolic its forward pass yields the fitted
        operators, so the samples come from the saved pruned (or trained)
        spline model instead.
        """
        current = self.load_stage_model("model_json", "run `survkan train` first")
        if current.stage != "symbolic":
            return current, None
        for key in ("pruned_model_json", "trained_model_json"):
            if os.path.exists(self.path(key)):
                return load_model(self.path(key)), current
        self._say("⚠️ No spline model saved next to the symbolic one; edge samples show the fitted operators")
        return current, None

    def plot(self, data: Dataset, history: Optional[pd.DataFrame] = None, report: Optional[RunReport] = None) -> List[str]:
        net, overlay = self.edge_plot_sources()
        _, cache = forward(net, data.X)
        directory = self.path("plots")
        paths = plot_edges(net, cache, directory, overlay=overlay)
        if history is None and os.path.exists(self.path("history_csv")):
            history = pd.read_csv(self.path("history_csv"))
        if history is not None:
            paths.append(plot_history(history, os.path.join(directory, "history.svg")))
        if report is not None and report.term_importance:
            paths.append(plot_term_importance(pd.DataFrame(report.term_importance), os.path.join(directory, "term_importance.svg")))
        self._say(f"✅ Saved {len(paths)} plots to {directory}")
        return paths

    # -- end to end --------------------------------------------------------
    def run(
        self,
        train_ds: Dataset,
        test_ds: Dataset,
        search_trials: int = 0,
        space: Optional[SearchSpace] = None,
        folds: int = 4,
        jobs: int = 1,
        bootstrap: int = COX_CONFIG["bootstrap"],
        seed: int = 0,
        finetune_steps: int = SYMBOLIC_CONFIG["finetune_steps"],
        precision: int = SYMBOLIC_CONFIG["precision"],
        plots: bool = True,
    ) -> PipelineOutputs:
        outputs = PipelineOutputs(out_dir=self.out_dir)
        if search_trials > 0:
            self.search(train_ds, space, trials=search_trials, folds=folds, jobs=jobs, seed=seed)
            outputs.files["leaderboard"] = self.path("leaderboard_csv")
            outputs.files["best_config"] = self.path("best_config_json")
        _, pruned, threshold, history = self.train(train_ds)
        self.symbolize(pruned, train_ds, finetune_steps=finetune_steps, precision=precision, jobs=jobs)
        report = self.evaluate(train_ds, test_ds, bootstrap=bootstrap, seed=seed, threshold=threshold)
        if plots:
            self.plot(train_ds, history.to_frame(), report)
            outputs.files["plots"] = self.path("plots")
        for key in ("trained_model_json", "pruned_model_json", "model_json", "history_csv", "formula_txt", "formula_json", "report_json"):
            outputs.files[key] = self.path(key)
        outputs.report = report
        return outputs
