"""Walkthrough: which actuation matrices admit actuation coordinates?

A system is collocated when the transpose of its actuation matrix is a
Jacobian, i.e. every column is a gradient field; then the generalized
work of each input depends only on the endpoints of the motion.  This
script runs the mixed-partial symmetry test on all the built-in systems
and demonstrates the path-dependence witness for the one that fails.
"""

import numpy as np

from collodyn import PathIntegrator, check_integrability, integrate_passive_output
from collodyn.models import (
    GvsRod,
    Pcc2Model,
    Satellite,
    SpringMechanism2R,
    TendonFinger,
    bellows_pair,
)

systems = {
    "satellite (normal + tangential force)": Satellite(),
    "spring-driven 2R mechanism": SpringMechanism2R(),
    "tendon-driven finger": TendonFinger(),
    "two-body constant-curvature arm": Pcc2Model(),
    "tendon-driven rod (reduced)": GvsRod.reduced(),
    "volumetric chambers": bellows_pair(),
}

print("integrability verdicts (mixed-partial symmetry per column):\n")
for name, system in systems.items():
    act = system.actuation
    report = check_integrability(act, act.default_box(), tol=1e-4)
    print(f"  {name}")
    for i, (verdict, residual) in enumerate(
        zip(report.verdicts, report.worst_residuals)
    ):
        print(f"    column {i + 1}: {verdict:16s} worst residual {residual:.3e}")
    print()

# The satellite's tangential force is the classic counterexample: the work
# it does depends on the radius history.  A closed loop of unit enclosed
# area picks up exactly that area in the second output channel.
sat = Satellite()
s = np.arange(0.0, 1.0 + 5e-4, 1e-3)
loop = np.stack(
    [1.5 + 0.5 * np.cos(2 * np.pi * s), 0.5 * np.sin(2 * np.pi * s)], axis=1
)
y = integrate_passive_output(PathIntegrator(sat.actuation, loop[0]), sat.actuation, s, loop)
print("satellite: passive-output integral around a closed loop:")
print(f"  normal channel     {y[0]:+.2e}   (conservative: returns to zero)")
print(f"  tangential channel {y[1]:+.2e}   (equals the enclosed area {np.pi * 0.25:.4f})")
