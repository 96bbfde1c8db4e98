"""Built-in example bundles selectable with ``--example N`` on the CLI.

1. A nonlinear bimodal system with a quadratic output map; the plant slides
   along x1 = 0 under its periodic input, and the bundled gains certify at
   rate 4 under the l1 measure.
2. A piecewise-affine system switching on x2 with output x1 + x2; constant
   Jacobians make its certificates exact.  The bundled shared gain certifies
   at rate 1; (1.5, 2) achieves 2.5.
3. A driven oscillator with dry friction, switching on the velocity sign.
   Certified at rate 0.1 under the uniform-norm measure.  The default
   simulate block starts inside the stick band so the trajectory records a
   sliding (stick) phase; the observe and regstudy blocks start from rest at
   displaced position, which keeps every surface hit transversal.
"""

from __future__ import annotations

from .config import Bundle, load_bundle_text

EXAMPLE_1 = """\
n = 2
measure = "l1"

[params]
pi = 3.141592653589793

[fields]
f_plus = ["-9*x1 - 3*x1^2 - 18", "-4*x2"]
f_minus = ["-9*x1 + 3*x1^2 + 18", "-4*x2"]
h = "x1"
g = ["x1^2"]
u = ["sin(2*pi*t)", "sin(2*pi*t)"]

[observer]
L_plus = [[-2.0], [0.0]]
L_minus = [[2.0], [0.0]]

[simulate]
x0 = [3.0, 3.0]
t0 = 0.0
tf = 3.0
plot_states = [1]

[observe]
xhat0 = [0.0, 0.0]
K = 1.0
slack = 0.05

[certify]
region = [[-5.0, 5.0], [-5.0, 5.0]]
grid = [41, 41]
output_range = [[0.0, 25.0]]
output_grid = [41]

[synth]
# feasible boxes sit strictly inside the analytically safe gain region, and
# the wide output range makes the sampled surface condition approximate the
# all-outputs one, so any returned gain keeps the jump term negative
box_plus = [[-2.8, 5.0], [-2.8, 5.0]]
box_minus = [[-5.0, 2.8], [-5.0, 2.8]]
output_range = [[0.0, 400.0]]
budget = 120

[regstudy]
eps = [1e-2, 5e-3, 2.5e-3]
t0 = 0.0
tf = 3.0
"""

EXAMPLE_2 = """\
n = 2
measure = "l1"

[params]
pi = 3.141592653589793

[pwa]
A1 = [[-1.0, 0.0], [2.0, -2.0]]
b1 = [-1.0, -3.0]
A2 = [[-1.0, 0.0], [2.0, -3.0]]
b2 = [2.0, 4.0]
B = [0.0, 1.0]
h = [0.0, 1.0]
c = [1.0, 1.0]
u = "4*sin(2*pi*t)"

[observer]
L_plus = [[1.0], [1.0]]
L_minus = [[1.0], [1.0]]

[simulate]
x0 = [0.3, 0.3]
t0 = 0.0
tf = 5.0
plot_states = [2]

[observe]
xhat0 = [0.0, 0.0]
K = 1.0
slack = 0.05

[certify]
region = [[-5.0, 5.0], [-5.0, 5.0]]
grid = [41, 41]
output_range = [[-10.0, 10.0]]
output_grid = [41]

[synth]
tie = true
box_plus = [[-5.0, 5.0], [-5.0, 5.0]]
box_minus = [[-5.0, 5.0], [-5.0, 5.0]]
budget = 150

[regstudy]
eps = [1e-2, 5e-3, 2.5e-3]
t0 = 0.0
tf = 5.0
"""

EXAMPLE_3 = """\
n = 2
measure = "linf"

[params]
omega_n = 1.0
Q = 10.0
m = 1.0
F_f = 0.1
F_d = 1.0
omega_d = 3.141592653589793

[fields]
f_plus = ["x2", "-omega_n*x1 - (omega_n/Q)*x2 - F_f/m"]
f_minus = ["x2", "-omega_n*x1 - (omega_n/Q)*x2 + F_f/m"]
h = "x2"
g = ["x1"]
u = ["0", "(F_d/m)*sin(omega_d*t)"]

[observer]
L_plus = [[1.1], [-1.0]]
L_minus = [[1.1], [-1.0]]

[simulate]
# starts inside the stick band of the friction model, so the trajectory
# opens with a sliding (stick) phase before settling into pure slip
x0 = [0.05, 0.0]
t0 = 0.0
tf = 60.0
plot_states = [1, 2]

[observe]
# released from rest at displaced position; every surface hit is transversal
x0 = [-1.0, 0.0]
xhat0 = [0.0, 0.0]
K = 1.0
slack = 0.05

[certify]
region = [[-2.0, 2.0], [-2.0, 2.0]]
grid = [41, 41]
output_range = [[-2.0, 2.0]]
output_grid = [41]

[synth]
box_plus = [[1.05, 5.0], [-1.85, -0.15]]
box_minus = [[1.05, 5.0], [-1.85, -0.15]]
tie = true
budget = 120

[regstudy]
x0 = [-1.0, 0.0]
t0 = 0.0
tf = 20.0
eps = [1e-2, 5e-3, 2.5e-3]
"""

EXAMPLES = {1: EXAMPLE_1, 2: EXAMPLE_2, 3: EXAMPLE_3}


def load_example(number: int) -> Bundle:
    if number not in EXAMPLES:
        raise ValueError(f"no built-in example {number}; choose from {sorted(EXAMPLES)}")
    return load_bundle_text(EXAMPLES[number], f"example-{number}")
