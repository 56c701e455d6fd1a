"""Tune the classical washout for the ISO double lane change and report it.

The optimiser keeps |x| below 1 m over the whole manoeuvre and minimises the
sensed force and roll-rate errors.  Figures go to runs/demo_cw/.

    python demos/02_classical_washout.py
"""
import os

from mcalab.metrics import evaluate_mca, sensed_signals
from mcalab.plots import evaluation_figures
from mcalab.trajectory import iso_double_lane_change
from mcalab.washout import cw_optimize, cw_run

out = "runs/demo_cw"
os.makedirs(out, exist_ok=True)
ref = iso_double_lane_change(10.0)
res = cw_optimize(ref, seed=0)
print("parameters:", {k: round(v, 4) for k, v in res.params.to_dict().items()})
print(f"cost {res.cost:.5g}, max |x| {res.max_abs_x:.3f} m, {res.n_feasible_starts}/{res.n_starts} feasible starts")
plat = cw_run(res.params, ref)
print(evaluate_mca(plat, ref).to_text(), end="")
evaluation_figures(plat, ref, sensed_signals(plat, ref), out, x_max=1.0)
res.to_json(os.path.join(out, "cw_params.json"))
