"""Pulse-sequence execution on the 6-level electron/13C register.

Two fidelities are available:

``ideal``
    microwave pulses are instantaneous rotations acting identically on both
    nuclear states; delays evolve exactly under the frame Hamiltonian.
``full``
    microwave pulses last ``(angle/360)/rabi`` us and are exponentiated
    together with the frame Hamiltonian (piecewise-constant, RWA).

Drive convention: a pulse of angle ``theta`` and phase ``phi`` on the pair
``(a, b)`` is ``exp(-i theta (cos(phi) sx + sin(phi) sy) / 2)`` where the
Pauli pair is ordered with ``a`` the lower-``m_S`` level, i.e. ``(-1, 0)`` for
the ``0,-1`` transition and ``(0, +1)`` for ``0,+1``. With this ordering a
270 deg pulse followed by the pi-time delay prepares ``(|00> + i|11>)/sqrt2``
and ``CleanupU`` keeps ``|00>`` while ejecting ``|01>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Sequence as _Seq, Union

import numpy as np

from .linalg import dagger, expm_unitary, kron, partial_trace_electron
from .model import (
    COMP,
    ID2,
    MS_INDEX,
    PhysicalParams,
    frame_hamiltonian_6,
)

DIM = 6
TRACE_DRIFT_TOL = 1e-9

TRANSITIONS = {"0,-1": (-1, 0), "0,+1": (0, +1)}


class PhysicsInvariantError(RuntimeError):
    """A propagated state stopped being a valid density matrix."""


# ---------------------------------------------------------------------------
# Sequence elements
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Delay:
    """Free evolution; ``duration=None`` is the symbolic sweep variable ``tau``."""

    duration: float | None

    def __post_init__(self):
        if self.duration is not None and not (self.duration >= 0 and math.isfinite(self.duration)):
            raise ValueError(f"delay duration must be finite and >= 0, got {self.duration}")

    @property
    def symbolic(self) -> bool:
        return self.duration is None


@dataclass(frozen=True)
class MwPulse:
    transition: str
    rabi: float
    phase: float
    angle: float

    def __post_init__(self):
        if self.transition not in TRANSITIONS:
            raise ValueError(f"unknown transition {self.transition!r}; expected one of {sorted(TRANSITIONS)}")
        if not (self.rabi > 0 and math.isfinite(self.rabi)):
            raise ValueError(f"rabi frequency must be positive, got {self.rabi}")
        if not (math.isfinite(self.phase) and math.isfinite(self.angle)):
            raise ValueError("pulse phase and angle must be finite")

    @property
    def duration(self) -> float:
        return abs(self.angle) / 360.0 / self.rabi


@dataclass(frozen=True)
class Laser:
    duration: float = 5.0

    def __post_init__(self):
        if not (self.duration >= 0 and math.isfinite(self.duration)):
            raise ValueError(f"laser duration must be finite and >= 0, got {self.duration}")


@dataclass(frozen=True)
class SwapEN:
    pass


@dataclass(frozen=True)
class CleanupU:
    pass


@dataclass(frozen=True)
class CleanupV:
    pass


@dataclass(frozen=True)
class U180e:
    pass


@dataclass(frozen=True)
class Measure:
    """Terminal readout marker; ``kind`` is ``fluor``, ``populations`` or ``tomo``."""

    kind: str = "fluor"

    def __post_init__(self):
        if self.kind not in ("fluor", "populations", "tomo"):
            raise ValueError(f"unknown measurement {self.kind!r}")


PulseElement = Union[Delay, MwPulse, Laser, SwapEN, CleanupU, CleanupV, U180e, Measure]


@dataclass(frozen=True)
class Sequence:
    elements: tuple = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    @property
    def measurement(self) -> str | None:
        for e in reversed(self.elements):
            if isinstance(e, Measure):
                return e.kind
        return None

    @property
    def symbolic_slots(self) -> int:
        return sum(isinstance(e, Delay) and e.symbolic for e in self.elements)

    def bind(self, tau: float) -> "Sequence":
        """Replace the symbolic delay by ``Delay(tau)``."""
        return replace(self, elements=tuple(
            Delay(tau) if isinstance(e, Delay) and e.symbolic else e for e in self.elements
        ))


@dataclass(frozen=True)
class SimOptions:
    """Execution settings.

    ``init_p00``/``init_p01`` set the population split left by the optical
    initialization (it is an input, not a derived quantity). ``shots`` turns on
    binomial photon statistics in :func:`fluorescence`. ``gate_scale`` rescales
    every microwave rotation angle, to model amplitude miscalibration.
    """

    mode: str = "ideal"
    init: str = "ideal"
    init_p00: float = 0.91
    init_p01: float = 0.09
    shots: int | None = None
    seed: int = 0
    params: PhysicalParams = field(default_factory=PhysicalParams)
    u180_rabi: float = 7.0
    cleanup_rabi: float = 7.0
    plus_transverse: bool = False
    plus_detuning: float = 0.0
    gate_scale: float = 1.0

    def __post_init__(self):
        if self.mode not in ("ideal", "full"):
            raise ValueError(f"mode must be 'ideal' or 'full', got {self.mode!r}")
        if self.init not in ("ideal", "paper"):
            raise ValueError(f"init must be 'ideal' or 'paper', got {self.init!r}")
        if not (0 <= self.init_p00 <= 1 and 0 <= self.init_p01 <= 1):
            raise ValueError("initial populations must lie in [0, 1]")
        if abs(self.init_p00 + self.init_p01 - 1) > 1e-12:
            raise ValueError("init_p00 + init_p01 must equal 1")
        if self.shots is not None and self.shots <= 0:
            raise ValueError("shots must be a positive integer")


def cleanup_delay(p: PhysicalParams) -> float:
    """Free-evolution gap of the clean-up composites, ``1 / (2 |A_zz|)`` us."""
    return 1.0 / (2.0 * abs(p.A_zz))


def expand(e, opts: SimOptions) -> list:
    """Rewrite composite elements into primitive ones."""
    if isinstance(e, U180e):
        return [MwPulse("0,-1", opts.u180_rabi, 0.0, 180.0)]
    if isinstance(e, CleanupU):
        d = cleanup_delay(opts.params)
        return [MwPulse("0,+1", opts.cleanup_rabi, 90.0, 90.0), Delay(d),
                MwPulse("0,+1", opts.cleanup_rabi, 0.0, 90.0)]
    if isinstance(e, CleanupV):
        d = cleanup_delay(opts.params)
        return [MwPulse("0,+1", opts.cleanup_rabi, 0.0, 90.0), Delay(d),
                MwPulse("0,+1", opts.cleanup_rabi, 90.0, 90.0)]
    return [e]


# ---------------------------------------------------------------------------
# Propagators
# ---------------------------------------------------------------------------

def _pair_paulis(transition: str) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = TRANSITIONS[transition]
    a, b = MS_INDEX[lo], MS_INDEX[hi]
    sx = np.zeros((3, 3), dtype=complex)
    sy = np.zeros((3, 3), dtype=complex)
    sx[a, b] = sx[b, a] = 1.0
    sy[a, b] = -1j
    sy[b, a] = 1j
    return sx, sy


def _drive(e: MwPulse) -> np.ndarray:
    """``(cos(phi) sx + sin(phi) sy) / 2 (x) 1_n`` on the addressed pair."""
    sx, sy = _pair_paulis(e.transition)
    ph = math.radians(e.phase)
    return kron(0.5 * (math.cos(ph) * sx + math.sin(ph) * sy), ID2)


@lru_cache(maxsize=64)
def _frame_h(opts: SimOptions) -> np.ndarray:
    h = frame_hamiltonian_6(opts.params, plus_transverse=opts.plus_transverse,
                            plus_detuning=opts.plus_detuning)
    h.setflags(write=False)
    return h


def _freeze(u: np.ndarray) -> np.ndarray:
    u.setflags(write=False)
    return u


@lru_cache(maxsize=4096)
def element_propagator(e, opts: SimOptions) -> np.ndarray:
    """6x6 unitary of a single element (not defined for :class:`Laser`)."""
    if isinstance(e, Laser):
        raise TypeError("the laser pulse is not unitary; use laser_channel")
    if isinstance(e, Measure):
        return _freeze(np.eye(DIM, dtype=complex))
    if isinstance(e, Delay):
        if e.symbolic:
            raise ValueError("symbolic delay 'tau' must be bound before propagation")
        return _freeze(expm_unitary(_frame_h(opts), e.duration))
    if isinstance(e, SwapEN):
        u = np.eye(DIM, dtype=complex)
        i01, i10 = COMP[1], COMP[2]
        u[[i01, i10]] = u[[i10, i01]]
        return _freeze(u)
    if isinstance(e, MwPulse):
        theta = math.radians(e.angle) * opts.gate_scale
        g = _drive(e)
        if opts.mode == "ideal":
            return _freeze(expm_unitary(g, theta))
        t = e.duration
        if t == 0.0:
            return _freeze(np.eye(DIM, dtype=complex))
        # drive amplitude is rabi*scale; theta/t = 2*pi*rabi*scale (signed by angle)
        h = _frame_h(opts) + (theta / t) * g
        return _freeze(expm_unitary(h, t))
    if isinstance(e, (U180e, CleanupU, CleanupV)):
        u = np.eye(DIM, dtype=complex)
        for sub in expand(e, opts):
            u = element_propagator(sub, opts) @ u
        return _freeze(u)
    raise TypeError(f"unknown sequence element {e!r}")


def element_duration(e, opts: SimOptions) -> float:
    if isinstance(e, (Delay, Laser)):
        return 0.0 if e.duration is None else e.duration
    if isinstance(e, MwPulse):
        return e.duration if opts.mode == "full" else 0.0
    if isinstance(e, (U180e, CleanupU, CleanupV)):
        return sum(element_duration(s, opts) for s in expand(e, opts))
    return 0.0


def sequence_unitary(elements: _Seq, opts: SimOptions) -> np.ndarray:
    u = np.eye(DIM, dtype=complex)
    for e in elements:
        u = element_propagator(e, opts) @ u
    return u


# ---------------------------------------------------------------------------
# Channels and states
# ---------------------------------------------------------------------------

def electron_ground() -> np.ndarray:
    p = np.zeros((3, 3), dtype=complex)
    p[MS_INDEX[0], MS_INDEX[0]] = 1.0
    return p


def laser_channel(rho: np.ndarray) -> np.ndarray:
    """Optical pumping: electron to ``m_S=0``, nuclear state untouched."""
    return kron(electron_ground(), partial_trace_electron(rho, 3))


def nuclear_flip_channel(rho: np.ndarray, p_flip: float) -> np.ndarray:
    x = kron(np.eye(3), np.array([[0, 1], [1, 0]], dtype=complex))
    return (1 - p_flip) * rho + p_flip * (x @ rho @ x)


def computational_state(index: int) -> np.ndarray:
    """Density matrix of logical basis state ``index`` (0..3 for |00>..|11>)."""
    rho = np.zeros((DIM, DIM), dtype=complex)
    rho[COMP[index], COMP[index]] = 1.0
    return rho


def embed(op4: np.ndarray) -> np.ndarray:
    """Place a 4x4 register operator (or 4-vector) into the 6-level space."""
    op4 = np.asarray(op4, dtype=complex)
    if op4.ndim == 1:
        v = np.zeros(DIM, dtype=complex)
        v[COMP] = op4
        return v
    out = np.zeros((DIM, DIM), dtype=complex)
    out[np.ix_(COMP, COMP)] = op4
    return out


def restrict(op6: np.ndarray) -> np.ndarray:
    return np.asarray(op6)[np.ix_(COMP, COMP)]


def init_optical(opts: SimOptions = SimOptions(), cleanup: bool = True) -> np.ndarray:
    """Optical initialization: ``[laser, swap, laser]`` from the maximally mixed state.

    The nuclear polarization left by the swap is set to ``init_p00`` (the rest
    ends up in ``|01>``), then ``CleanupU`` ejects the ``|01>`` part to ``m_S=+1``.
    """
    rho = np.eye(DIM, dtype=complex) / DIM
    rho = laser_channel(rho)
    swap = element_propagator(SwapEN(), opts)
    rho = swap @ rho @ dagger(swap)
    rho = laser_channel(rho)
    rho = nuclear_flip_channel(rho, opts.init_p01)
    if cleanup:
        u = element_propagator(CleanupU(), opts)
        rho = u @ rho @ dagger(u)
    return rho


def initial_state(opts: SimOptions) -> np.ndarray:
    return init_optical(opts) if opts.init == "paper" else computational_state(0)


# ---------------------------------------------------------------------------
# Propagation and readout
# ---------------------------------------------------------------------------

def _check(rho: np.ndarray, where: str) -> None:
    tr = np.trace(rho).real
    if abs(tr - 1.0) > TRACE_DRIFT_TOL:
        raise PhysicsInvariantError(f"trace drifted to {tr:.15g} after {where}")


def propagate(rho0: np.ndarray, seq, opts: SimOptions = SimOptions(), *,
              sample_step: float | None = None, trajectory: bool = False):
    """Apply ``seq`` left to right.

    Returns ``(rho_final, traj)``; ``traj`` is ``None`` unless ``trajectory`` is
    set, in which case it lists ``(time_us, rho)`` at every element boundary and
    every ``sample_step`` inside delays.
    """
    rho = np.array(rho0, dtype=complex)
    if rho.shape != (DIM, DIM):
        raise ValueError(f"expected a {DIM}x{DIM} density matrix, got {rho.shape}")
    t = 0.0
    traj = [(0.0, rho.copy())] if trajectory else None
    for k, e in enumerate(seq):
        if isinstance(e, Measure):
            continue
        if isinstance(e, Laser):
            rho = laser_channel(rho)
        elif trajectory and sample_step and isinstance(e, Delay) and e.duration > sample_step:
            n = int(math.floor(e.duration / sample_step))
            step = element_propagator(Delay(sample_step), opts)
            start = rho
            for j in range(1, n + 1):
                rho = step @ rho @ dagger(step)
                traj.append((t + j * sample_step, rho.copy()))
            u = element_propagator(e, opts)
            rho = u @ start @ dagger(u)
        else:
            u = element_propagator(e, opts)
            rho = u @ rho @ dagger(u)
        _check(rho, f"element {k} ({type(e).__name__})")
        t += element_duration(e, opts)
        if trajectory:
            traj.append((t, rho.copy()))
    return rho, traj


def populations(rho: np.ndarray) -> np.ndarray:
    """Diagonal of the logical block: P|00>, P|01>, P|10>, P|11>."""
    return np.real(np.diag(rho))[COMP]


def fluorescence(rho: np.ndarray, opts: SimOptions = SimOptions(),
                 rng: np.random.Generator | None = None) -> float:
    """``m_S=0`` population; with ``opts.shots`` a seeded binomial sample mean."""
    i0 = MS_INDEX[0] * 2
    p = float(np.real(rho[i0, i0] + rho[i0 + 1, i0 + 1]))
    p = min(max(p, 0.0), 1.0)
    if opts.shots is None:
        return p
    if rng is None:
        rng = np.random.default_rng(opts.seed)
    return rng.binomial(opts.shots, p) / opts.shots


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

POPULATION_COLUMNS = ("p00", "p01", "p10", "p11")


def sweep_delay(seq: Sequence, taus, observable: str = "fluor",
                opts: SimOptions = SimOptions(), rho0: np.ndarray | None = None):
    """Evaluate ``observable`` after ``seq`` for every value of its symbolic delay.

    Point ``k`` draws its shot noise from ``seed + k`` so results do not depend
    on evaluation order.
    """
    from .results import SweepResult

    taus = np.asarray(list(taus), dtype=float)
    if taus.size == 0:
        raise ValueError("empty tau grid")
    if seq.symbolic_slots != 1:
        raise ValueError(f"sequence must contain exactly one symbolic delay, found {seq.symbolic_slots}")
    if observable not in ("fluor", "populations"):
        raise ValueError(f"unsupported sweep observable {observable!r}")
    start = initial_state(opts) if rho0 is None else rho0
    cols = {"fluor": []} if observable == "fluor" else {c: [] for c in POPULATION_COLUMNS}
    for k, tau in enumerate(taus):
        rho, _ = propagate(start, seq.bind(float(tau)), opts)
        if observable == "fluor":
            rng = np.random.default_rng(opts.seed + k) if opts.shots else None
            cols["fluor"].append(fluorescence(rho, opts, rng))
        else:
            for c, v in zip(POPULATION_COLUMNS, populations(rho)):
                cols[c].append(float(v))
    return SweepResult(taus, {k: np.asarray(v) for k, v in cols.items()},
                       metadata=run_metadata(opts))


def run_metadata(opts: SimOptions) -> dict:
    from dataclasses import asdict

    return {
        "mode": opts.mode,
        "init": opts.init,
        "seed": opts.seed,
        "shots": opts.shots,
        "params": asdict(opts.params),
    }
