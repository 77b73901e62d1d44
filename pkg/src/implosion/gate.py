"""Real-time flow z' = i(f(z) - z) near a (nearly) degenerate parabolic point
and the gate structure read off from where its trajectories start and end."""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import RK45

from .errors import AmbiguousGate, BranchCut, StiffnessFailure
from .index import fixed_points_with_index, well_behaved_indices
from .poly import PolyMap, fixed_points

R0 = 0.5
ATOL = 1e-10
RTOL = 1e-9
MAX_STEPS = 1_000_000
T_MAX = 1e14
CONVERGED = 1e-6
MATCH_TOL = 1e-4


class Direction(enum.Enum):
    FORWARD = 1
    BACKWARD = -1


class Endpoint(enum.Enum):
    CONVERGED = "converged"
    EXITED_DISK = "exited_disk"
    BUDGET_EXHAUSTED = "budget_exhausted"


@dataclass
class Trajectory:
    samples: list  # (t, z) pairs, t signed by the direction
    endpoint: Endpoint
    fixed_index: int | None = None  # index into `fixed` when converged
    fixed: list = field(default_factory=list, repr=False)

    @property
    def end(self) -> complex:
        return self.samples[-1][1]


def _vector_field(map: PolyMap, sign: int):
    c = np.asarray(map.coeffs, dtype=complex)

    def rhs(t, y):
        z = y[0]
        fz = 0j
        for ck in c[::-1]:
            fz = fz * z + ck
        return np.array([sign * 1j * (fz - z)])

    return rhs


def _nearest(fixed: list[complex], z: complex) -> tuple[int, float]:
    d = [abs(z - f) for f in fixed]
    k = int(np.argmin(d))
    return k, d[k]


def flow(map: PolyMap, z0: complex, t_max: float = T_MAX, direction: Direction = Direction.FORWARD,
         r0: float = R0, max_steps: int = MAX_STEPS) -> Trajectory:
    """Integrate z' = +-i(f(z) - z) from z0 with an embedded 5(4) Runge-Kutta pair.

    Stops when the orbit is within 1e-6 of a fixed point and still approaching
    it, when it leaves the disk of radius 2 r0, or at |t| = t_max.
    """
    z0 = complex(z0)
    fixed = [f.location for f in fixed_points(map)]
    sign = direction.value
    k, d = _nearest(fixed, z0)
    if d < CONVERGED:
        return Trajectory([(0.0, z0)], Endpoint.CONVERGED, k, fixed)
    solver = RK45(_vector_field(map, sign), 0.0, np.array([z0]), t_max, rtol=RTOL, atol=ATOL)
    samples = [(0.0, z0)]
    last = d
    for _ in range(max_steps):
        msg = solver.step()
        if solver.status == "failed":
            raise StiffnessFailure(f"step size underflow at t = {solver.t:.3g}: {msg}")
        z = complex(solver.y[0])
        samples.append((sign * solver.t, z))
        if abs(z) > 2 * r0:
            return Trajectory(samples, Endpoint.EXITED_DISK, None, fixed)
        k, d = _nearest(fixed, z)
        if d < CONVERGED and d < last:
            return Trajectory(samples, Endpoint.CONVERGED, k, fixed)
        last = d
        if solver.status == "finished":
            break
    return Trajectory(samples, Endpoint.BUDGET_EXHAUSTED, None, fixed)


def rk4_endpoint(map: PolyMap, z0: complex, t: float, h: float, direction: Direction = Direction.FORWARD) -> complex:
    """Classical fixed-step RK4 to time t; used for the step-halving self-check."""
    rhs = _vector_field(map, direction.value)
    y = np.array([complex(z0)])
    n = int(round(t / h))
    s = 0.0
    for _ in range(n):
        k1 = rhs(s, y)
        k2 = rhs(s, y + h / 2 * k1)
        k3 = rhs(s, y + h / 2 * k2)
        k4 = rhs(s, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        s += h
    return complex(y[0])


# gate structure --------------------------------------------------------------

STAR = "*"


@dataclass(frozen=True)
class GateStructure:
    gates: tuple  # entries STAR or a seed index j (1-based)

    def __str__(self) -> str:
        return "(" + ", ".join(str(g) for g in self.gates) + ")"


def seeds(nu: int = 2, r0: float = R0) -> dict:
    """Seed points z_{k,-} = r0 e^{2 pi i (k-1)/nu}, z_{k,+} = e^{i pi/nu} z_{k,-}."""
    out = {}
    for k in range(1, nu + 1):
        zm = r0 * cmath.exp(2j * math.pi * (k - 1) / nu)
        out[(k, "-")] = zm
        out[(k, "+")] = cmath.exp(1j * math.pi / nu) * zm
    return out


def _endpoint_label(traj: Trajectory, dump: dict, key) -> complex:
    if traj.endpoint is not Endpoint.CONVERGED:
        raise AmbiguousGate(f"trajectory {key} ended with {traj.endpoint.value}", dump)
    loc = traj.fixed[traj.fixed_index]
    if abs(traj.end - loc) > MATCH_TOL:
        raise AmbiguousGate(f"trajectory {key} ends away from every fixed point", dump)
    if sum(abs(traj.end - f) <= MATCH_TOL for f in traj.fixed) > 1:
        raise AmbiguousGate(f"trajectory {key} ends near several fixed points", dump)
    return loc


def classify_gate(a: complex, r0: float = R0) -> GateStructure:
    """Gate vector of z + a z^2 + z^3 (nu = 2) from the endpoints of the seed trajectories.

    gate_k = * when the trajectory through z_{k,+} starts and ends at the same
    fixed point; gate_k = j when it shares both endpoints with the trajectory
    through z_{j,-}.
    """
    map = PolyMap.cubic_a(a)
    nu = 2
    trajs, ends = {}, {}
    for key, z0 in seeds(nu, r0).items():
        fwd = flow(map, z0, direction=Direction.FORWARD, r0=r0)
        bwd = flow(map, z0, direction=Direction.BACKWARD, r0=r0)
        trajs[key] = (fwd, bwd)
    for key, (fwd, bwd) in trajs.items():
        ends[key] = (_endpoint_label(bwd, trajs, key), _endpoint_label(fwd, trajs, key))
    gates = []
    for k in range(1, nu + 1):
        start, stop = ends[(k, "+")]
        if start == stop:
            gates.append(STAR)
            continue
        partners = [j for j in range(1, nu + 1) if ends[(j, "-")] == (start, stop)]
        if len(partners) != 1:
            raise AmbiguousGate(f"gate {k}: {len(partners)} matching trajectories", trajs)
        gates.append(partners[0])
    return GateStructure(tuple(gates))


def tau_of_a(a: complex) -> complex:
    """-2 pi i / log(1 + a^2), principal logarithm."""
    a = complex(a)
    if a == 0:
        raise ValueError("tau(a) needs a != 0")
    w = 1 + a * a
    if w.imag == 0 and w.real <= 0:
        raise BranchCut("1 + a^2 lies on the branch cut of log")
    return -2j * math.pi / cmath.log(w)


def well_behaved(map: PolyMap, M: float = 3.0, r0: float = R0) -> bool:
    """Index criterion: every proper nonempty subset of the fixed points in the
    disk of radius r0 has |sum Im iota| > M."""
    fps = [f for f in fixed_points_with_index(map) if abs(f.location) < r0]
    # a fixed point of multiplicity m counts once, with its full index
    return well_behaved_indices([f.index for f in fps], M)
