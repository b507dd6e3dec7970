"""Ready-to-run experiment configurations.

Each preset is a complete config file; `conslaw preset <name>` writes it out
so the standard experiments can be reproduced (and edited) without touching
code.
"""

SOD = """\
# Sod shock tube: the classic 1D Euler Riemann problem.
[grid]
cells = 400
origin = 0
extent = 1

[scheme]
equation = euler
gamma = 1.4
flux = hllc
reconstruction = weno2
rk_order = 2
cfl = 0.475
t_end = 0.2
boundary = outflow

[initial]
variables = primitive
rho = x < 0.5 ? 1.0 : 0.125
vx = 0
p = x < 0.5 ? 1.0 : 0.1

[output]
directory = out-sod
snapshot_times = 0.2
"""

ADVECTION_SMOOTH = """\
# Smooth density wave advected by a uniform Euler flow; exact solution is
# the initial profile translated by t, which makes this a convergence test.
[grid]
cells = 128
origin = 0
extent = 1

[scheme]
equation = euler
gamma = 1.4
flux = hllc
reconstruction = weno3
rk_order = 3
cfl = 0.475
t_end = 1.0
boundary = periodic

[initial]
variables = primitive
rho = 1.0 + 0.5 * sin(2 * pi * x)
vx = 1.0
p = 1.0

[output]
directory = out-advection
snapshot_times = 1.0
"""

KH2D = """\
# Kelvin-Helmholtz instability in 2D: shear flow with two states and a
# randomly perturbed interface (random Fourier modes via X0..X3).
[grid]
cells = 64 64
origin = 0 0
extent = 1 1

[scheme]
equation = euler
gamma = 1.4
flux = hllc
reconstruction = weno3
rk_order = 3
cfl = 0.475
t_end = 2.0
boundary = periodic

[initial]
variables = primitive
rho = y < 0.25 + 0.01 * sin(2 * pi * (x + X0)) ? 1.0 : (y < 0.75 + 0.01 * sin(2 * pi * (x + X1)) ? 2.0 : 1.0)
vx = y < 0.25 + 0.01 * sin(2 * pi * (x + X2)) ? -0.5 : (y < 0.75 + 0.01 * sin(2 * pi * (x + X3)) ? 0.5 : -0.5)
vy = 0
p = 2.5

[parallel]
ranks = 1 1

[uq]
method = mc
samples = 8
seed = 42
stochastic_dim = 4
workers = 1
functionals = moments

[output]
directory = out-kh2d
snapshot_times = 2.0
"""

KH3D = """\
# Kelvin-Helmholtz instability in 3D (desk-scale resolution).
[grid]
cells = 32 32 32
origin = 0 0 0
extent = 1 1 1

[scheme]
equation = euler
gamma = 1.4
flux = hllc
reconstruction = weno3
rk_order = 3
cfl = 0.475
t_end = 1.0
boundary = periodic

[initial]
variables = primitive
rho = y < 0.25 + 0.01 * sin(2 * pi * (x + X0)) ? 1.0 : (y < 0.75 + 0.01 * sin(2 * pi * (x + X1)) ? 2.0 : 1.0)
vx = y < 0.25 + 0.01 * sin(2 * pi * (x + X2)) ? -0.5 : (y < 0.75 + 0.01 * sin(2 * pi * (x + X3)) ? 0.5 : -0.5)
vy = 0
vz = 0
p = 2.5

[parallel]
ranks = 1 1 1

[uq]
method = mc
samples = 4
seed = 42
stochastic_dim = 4
workers = 1
functionals = moments

[output]
directory = out-kh3d
snapshot_times = 1.0
"""

PRESETS = {
    "sod": SOD,
    "advection-smooth": ADVECTION_SMOOTH,
    "kh2d": KH2D,
    "kh3d": KH3D,
}
