"""Run the admissibility audit on the shipped fixtures and print the constants.

The audit checks the structural hypotheses (positive capacities and
conductivities, fuel regularity, decaying heat-loss profiles), then measures
the quantitative constants the solver plans its windows with: the source
Lipschitz bound kappa on the working ball, the magnitude bound mu, the
semigroup growth rate beta, and the certified contraction window T'.
"""

from layerburn.fixtures import homogeneous_drift, ignition_coupled, reactive_two_layer
from layerburn.hypothesis import audit_problem

for name, (problem, T) in (
    ("drift (source-free)", homogeneous_drift()),
    ("reactive two-layer", reactive_two_layer()),
    ("ignition (prescribed fuel)", ignition_coupled()),
):
    report = audit_problem(problem, T)
    print(f"=== {name}, T = {T} ===")
    print(report.to_text())
    print()

# the same audit refuses a heat-loss profile that reaches the boundary
problem, T = reactive_two_layer()
bad = problem.with_params(qhat1=0.1 + 0.0 * problem.params.qhat1)
report = audit_problem(bad, T)
print("=== constant qhat_1 (inadmissible) ===")
print(report.to_text())
