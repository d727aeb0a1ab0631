# scripts/validate_synthetic.py
"""
Check a finished run on generated data against the synthetic recovery criteria:
noise inputs pruned, expected operators on the signal edges, and symbolic
C-index parity with the true formula.
"""
import argparse
import json
import os
import sys
sys.path.append(os.path.join(os.path.dirname(__file__), '..'))

from src.config import DATA_PATHS
from src.kan.serialization import load_model

# formula -> (expected layer-0 operators, expected output operators, parity check)
CRITERIA = {
    "gaussian": ({"x^2"}, {"exp"}, ("within", 0.015)),
    "shallow": ({"tanh", "sin", "x^2"}, None, ("within", 0.015)),
    "deep": (None, None, ("at_least", 0.01)),
    "difficult": (None, None, ("within", 0.01)),
}
COXPH_RANGES = {"gaussian": (0.48, 0.52), "shallow": (0.67, 0.70)}
OPERATOR_R2 = 0.99


def _load_json(path):
    with open(path, "r", encoding="utf-8") as handle:
        return json.load(handle)


def operator_findings(model, signal):
    """Operator names and R^2 on layer-0 edges of signal inputs and on the output layer."""
    first, last = [], []
    for (l, j, i) in model.active_edges():
        edge = model.layers[l].symbolic.get((j, i))
        if edge is None:
            continue
        if l == 0 and model.feature_names[i] in signal:
            first.append((edge.name, edge.r2))
        elif l == model.depth - 1 and l > 0:
            last.append((edge.name, edge.r2))
    return first, last


def validate(run_dir, data_dir):
    failures = []
    meta = _load_json(os.path.join(data_dir, DATA_PATHS["meta_json"]))
    provenance = meta.get("provenance") or {}
    formula = provenance.get("formula")
    if formula not in CRITERIA:
        print(f"⚠️ No recovery criteria for formula '{formula}'; checking parity only")
    expected_first, expected_last, parity = CRITERIA.get(formula, (None, None, ("within", 0.015)))

    report = _load_json(os.path.join(run_dir, DATA_PATHS["report_json"]))
    stages = report["stages"]
    model = load_model(os.path.join(run_dir, DATA_PATHS["model_json"]))

    n_noise = int(provenance.get("noise_features", 0))
    names = [c["name"] for c in meta["columns"]]
    noise = set(names[len(names) - n_noise:]) if n_noise else set()
    signal = [name for name in names if name not in noise]
    kept_noise = noise - set(report["dropped_features"])
    if kept_noise:
        failures.append(f"noise inputs not pruned: {', '.join(sorted(kept_noise))}")
    else:
        print(f"✅ All {len(noise)} noise inputs pruned")

    if model.stage != "symbolic":
        failures.append("model.json is not symbolic; run `survkan symbolic` first")
    else:
        first, last = operator_findings(model, signal)
        for label, expected, found in (("layer-0", expected_first, first), ("output", expected_last, last)):
            if expected is None:
                continue
            names_found = {name for name, _ in found}
            weak = [name for name, r2 in found if not r2 > OPERATOR_R2]
            if not expected <= names_found:
                failures.append(f"{label} operators {sorted(names_found)} miss {sorted(expected - names_found)}")
            elif weak:
                failures.append(f"{label} operators with R^2 <= {OPERATOR_R2}: {weak}")
            else:
                print(f"✅ {label} operators {sorted(names_found)}")

    if "symbolic" not in stages or "true_formula" not in stages:
        failures.append("report.json lacks symbolic or true_formula C-index")
    else:
        sym, true = stages["symbolic"]["c_index"], stages["true_formula"]["c_index"]
        mode, tol = parity
        ok = abs(sym - true) <= tol if mode == "within" else sym >= true - tol
        message = f"symbolic C {sym:.4f} vs true-formula C {true:.4f} (tolerance {tol})"
        if ok:
            print(f"✅ {message}")
        else:
            failures.append(message)

    if formula in COXPH_RANGES and "coxph" in stages:
        lo, hi = COXPH_RANGES[formula]
        c = stages["coxph"]["c_index"]
        if lo <= c <= hi:
            print(f"✅ CoxPH C {c:.4f} in [{lo}, {hi}]")
        else:
            failures.append(f"CoxPH C {c:.4f} outside [{lo}, {hi}]")
    return failures


def main():
    parser = argparse.ArgumentParser(description="Validate a synthetic-data run")
    parser.add_argument("--run", default=DATA_PATHS["runs"], help="run directory")
    parser.add_argument("--data", default=DATA_PATHS["synthetic"], help="generated data directory")
    args = parser.parse_args()

    print(f"🔄 Validating {args.run} against {args.data}")
    failures = validate(args.run, args.data)
    for failure in failures:
        print(f"❌ {failure}")
    if failures:
        print(f"❌ {len(failures)} checks failed")
        return 1
    print("✅ All checks passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
