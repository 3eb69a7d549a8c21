"""NV electron / 13C register: parameters, Hamiltonians and gate-timing formulas.

Basis conventions
-----------------
The 6-dim space is ``electron (x) nucleus`` with electron order
``m_S = (+1, 0, -1)`` and nuclear order ``m_I = (+1/2, -1/2)``. The logical
register uses ``|0>_e = m_S 0``, ``|1>_e = m_S -1``, ``|0>_n = m_I +1/2`` and
``|1>_n = m_I -1/2``; its four states ``|00>, |01>, |10>, |11>`` sit at 6-dim
indices ``(2, 3, 4, 5)``.

All Hamiltonians are returned in rad/us (the ``2*pi`` is applied here), all
frequencies in :class:`PhysicalParams` are in MHz and all times in us.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .linalg import dagger, eig_hermitian, expm_unitary, kron

TWO_PI = 2.0 * math.pi

# spin-1 electron, order (+1, 0, -1)
S_Z = np.diag([1.0, 0.0, -1.0]).astype(complex)
S_Z2 = S_Z @ S_Z
# spin-1/2 nucleus, order (+1/2, -1/2)
I_Z = np.diag([0.5, -0.5]).astype(complex)
I_X = np.array([[0.0, 0.5], [0.5, 0.0]], dtype=complex)
I_Y = np.array([[0.0, -0.5j], [0.5j, 0.0]], dtype=complex)
ID2 = np.eye(2, dtype=complex)
ID3 = np.eye(3, dtype=complex)
# pseudo-spin of the logical electron pair, |0>_e = m_S 0 carries +1/2
S_Z_PSEUDO = np.diag([0.5, -0.5]).astype(complex)
P0_LOGICAL = np.diag([1.0, 0.0]).astype(complex)
P1_LOGICAL = np.diag([0.0, 1.0]).astype(complex)

MS_INDEX = {+1: 0, 0: 1, -1: 2}


@dataclass(frozen=True)
class BasisMap:
    electron_levels: tuple[int, ...] = (+1, 0, -1)
    nuclear_levels: tuple[float, ...] = (+0.5, -0.5)
    logical_electron: tuple[int, int] = (0, -1)
    logical_nuclear: tuple[float, float] = (+0.5, -0.5)

    def index(self, m_s: int, m_i: float) -> int:
        return self.electron_levels.index(m_s) * len(self.nuclear_levels) + self.nuclear_levels.index(m_i)

    @property
    def computational(self) -> tuple[int, int, int, int]:
        """6-dim indices of |00>, |01>, |10>, |11>."""
        return tuple(
            self.index(e, n) for e in self.logical_electron for n in self.logical_nuclear
        )

    @property
    def dim(self) -> int:
        return len(self.electron_levels) * len(self.nuclear_levels)


BASIS = BasisMap()
COMP = list(BASIS.computational)


@dataclass(frozen=True)
class PhysicalParams:
    """Spin-Hamiltonian constants (MHz, mT).

    Defaults are the values of the 13C register studied here: ``D = 2870``,
    ``nu_e = -400.110`` (includes the -2.16 MHz 14N shift for ``m_N = 1``),
    ``nu_C = 0.152``, ``A_zz = -0.152``, ``A_zx = 0.110`` and ``B0 = 14.2 mT``.
    """

    D: float = 2870.0
    nu_e: float = -400.110
    nu_C: float = 0.152
    A_zz: float = -0.152
    A_zx: float = 0.110
    B0: float = 14.2
    gamma_C: float = 0.152 / 14.2
    gamma_e: float | None = None

    def __post_init__(self):
        values = [self.D, self.nu_e, self.nu_C, self.A_zz, self.A_zx, self.B0, self.gamma_C]
        if self.gamma_e is not None:
            values.append(self.gamma_e)
        if not all(math.isfinite(v) for v in values):
            raise ValueError("physical parameters must be finite")

    def with_field(self, B0: float) -> "PhysicalParams":
        """Same coupling constants at a different field (nuclear Larmor rescaled)."""
        return replace(self, B0=B0, nu_C=self.gamma_C * B0)

    def validate(self) -> None:
        if self.A_zx == 0.0:
            raise ValueError("A_zx = 0: the free evolution generates no conditional rotation")
        if abs(self.nu_C - self.gamma_C * self.B0) > 1e-6:
            raise ValueError(
                f"nu_C = {self.nu_C} MHz inconsistent with gamma_C * B0 = {self.gamma_C * self.B0} MHz"
            )

    def nu_e_from_field(self, n14_shift: float = -2.16) -> float:
        """``gamma_e * B0 + shift``, the electron Larmor term including the 14N offset."""
        if self.gamma_e is None:
            raise ValueError("gamma_e not set")
        return self.gamma_e * self.B0 + n14_shift


PARAM_KEYS = {
    "D_MHz": "D",
    "nu_e_MHz": "nu_e",
    "nu_C_MHz": "nu_C",
    "Azz_MHz": "A_zz",
    "Azx_MHz": "A_zx",
    "B0_mT": "B0",
    "gamma_C_MHz_per_mT": "gamma_C",
    "gamma_e_MHz_per_mT": "gamma_e",
}


def load_params(path: str | Path) -> PhysicalParams:
    """Read ``key = value`` (or ``key: value``) lines; ``#`` starts a comment.

    Keys not present keep their default. Unknown keys raise ``ValueError``.
    """
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        for sep in ("=", ":"):
            if sep in line:
                key, val = (s.strip() for s in line.split(sep, 1))
                break
        else:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        if key not in PARAM_KEYS:
            raise ValueError(f"{path}:{lineno}: unknown parameter {key!r}")
        try:
            values[PARAM_KEYS[key]] = float(val)
        except ValueError:
            raise ValueError(f"{path}:{lineno}: {key} is not a number: {val!r}") from None
    return PhysicalParams(**values)


def dump_params(p: PhysicalParams) -> str:
    inv = {v: k for k, v in PARAM_KEYS.items()}
    lines = [f"{inv[k]} = {v!r}" for k, v in asdict(p).items() if v is not None]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Hamiltonians
# ---------------------------------------------------------------------------

def lab_hamiltonian(p: PhysicalParams = PhysicalParams()) -> np.ndarray:
    """Secular lab-frame Hamiltonian (6x6, rad/us)."""
    h = (
        p.D * kron(S_Z2, ID2)
        - p.nu_e * kron(S_Z, ID2)
        - p.nu_C * kron(ID3, I_Z)
        + p.A_zz * kron(S_Z, I_Z)
        + p.A_zx * kron(S_Z, I_X)
    )
    return TWO_PI * h


def subspace_hamiltonian(p: PhysicalParams = PhysicalParams()) -> np.ndarray:
    """Lab Hamiltonian projected on the logical register, ordered |00>,|01>,|10>,|11>."""
    return lab_hamiltonian(p)[np.ix_(COMP, COMP)]


def frame_generator(p: PhysicalParams = PhysicalParams()) -> np.ndarray:
    """Generator ``G`` of the interaction frame ``U_tr(t) = exp(-i G t)`` on the register (rad/us)."""
    w = p.D + p.nu_e
    g = (
        p.nu_C * kron(P0_LOGICAL, I_Z)
        + w * kron(S_Z_PSEUDO, ID2)
        - 0.5 * w * np.eye(4)
    )
    return TWO_PI * g


def _frame_transform(h: np.ndarray, gen: np.ndarray, tau: float, sign: int) -> np.ndarray:
    """``U h U^dag + sign * (-i U dU^dag/dtau)`` with ``U = exp(-i gen tau)``.

    ``dU^dag/dtau`` is evaluated from the spectral form of ``U^dag``.
    """
    w, v = eig_hermitian(gen)
    u = (v * np.exp(-1j * w * tau)) @ dagger(v)
    du_dag = (v * (1j * w * np.exp(1j * w * tau))) @ dagger(v)
    return u @ h @ dagger(u) + sign * (-1j) * (u @ du_dag)


class FrameError(RuntimeError):
    pass


FRAME_PROBE_TIMES = (0.1, 1.0, 7.0)


def interaction_frame_hamiltonian(p: PhysicalParams = PhysicalParams(),
                                  probe_times=FRAME_PROBE_TIMES) -> np.ndarray:
    """Register Hamiltonian in the rotating frame of :func:`frame_generator` (4x4, rad/us).

    Both signs of the frame term are tried; the one kept must be independent
    of the frame time and must reproduce the lab dynamics,
    ``exp(-i H_I t) = U_tr(t) exp(-i H_s t)``. With the default parameters the
    result is ``|1><1| (x) (-2 pi A_zx I_x)``; a detuned field leaves an extra
    ``2 pi delta I_z`` in the ``|1>`` branch (see :func:`resonance_defect`).
    """
    hs = subspace_hamiltonian(p)
    gen = frame_generator(p)
    scale = max(1.0, float(np.max(np.abs(hs))))
    for sign in (+1, -1):
        hs_t = [_frame_transform(hs, gen, t, sign) for t in probe_times]
        drift = max(float(np.max(np.abs(a - hs_t[0]))) for a in hs_t[1:])
        if drift > 1e-9:
            continue
        h_i = hs_t[0]
        h_i = 0.5 * (h_i + dagger(h_i))
        # Schroedinger consistency on the shortest probe time
        t = probe_times[0]
        lhs = expm_unitary(h_i, t)
        rhs = expm_unitary(gen, t) @ expm_unitary(hs, t)
        if np.max(np.abs(lhs - rhs)) <= 1e-9 * scale * max(t, 1.0):
            # entries below the arithmetic noise of the cancelled offsets are exact zeros
            h_i[np.abs(h_i) < 16 * np.finfo(float).eps * scale] = 0.0
            return h_i
    raise FrameError("no sign of the frame term gives a time-independent interaction Hamiltonian")


def interaction_frame_closed_form(p: PhysicalParams = PhysicalParams()) -> np.ndarray:
    delta = resonance_defect(p)[0]
    return TWO_PI * kron(P1_LOGICAL, -p.A_zx * I_X + delta * I_Z)


def frame_hamiltonian_6(p: PhysicalParams = PhysicalParams(), *,
                        plus_transverse: bool = False,
                        plus_detuning: float = 0.0) -> np.ndarray:
    """Delay Hamiltonian on the full 6-level space (rad/us).

    The logical block is :func:`interaction_frame_hamiltonian`. The ``m_S=+1``
    branch sits in a frame resonant with the mean of its two nuclear-split
    transitions from ``m_S=0`` (shifted by ``plus_detuning`` MHz) and shares the
    nuclear Larmor rotation of the ``m_S=0`` branch, which leaves
    ``2 pi A_zz I_z``. Its transverse hyperfine term ``2 pi A_zx I_x`` is
    included only with ``plus_transverse=True``.
    """
    h = np.zeros((6, 6), dtype=complex)
    h[np.ix_(COMP, COMP)] = interaction_frame_hamiltonian(p)
    plus = p.A_zz * I_Z - plus_detuning * ID2
    if plus_transverse:
        plus = plus + p.A_zx * I_X
    i0 = MS_INDEX[+1] * 2
    h[i0:i0 + 2, i0:i0 + 2] = TWO_PI * plus
    return h


def eigenstructure(p: PhysicalParams = PhysicalParams()) -> list[tuple[float, np.ndarray, str]]:
    """Eigenpairs of the interaction-frame Hamiltonian with basis labels.

    Labels are ``00``, ``01``, ``1psi`` (electron |1>, nucleus (|1>+|0>)/sqrt2) and
    ``1phi`` (nucleus (|1>-|0>)/sqrt2), assigned by overlap. With ``A_zx > 0``
    the ``1psi`` state carries ``-pi A_zx`` and ``1phi`` carries ``+pi A_zx``;
    only their splitting ``2 pi |A_zx|`` enters any observable.
    """
    w, v = eig_hermitian(interaction_frame_hamiltonian(p))
    s = 1 / math.sqrt(2)
    refs = {
        "00": np.array([1, 0, 0, 0]),
        "01": np.array([0, 1, 0, 0]),
        "1psi": np.array([0, 0, s, s]),
        "1phi": np.array([0, 0, -s, s]),
    }
    out = []
    for k in range(4):
        label = max(refs, key=lambda r: abs(np.vdot(refs[r], v[:, k])))
        out.append((float(w[k]), v[:, k], label))
    return out


# ---------------------------------------------------------------------------
# Gates and timing
# ---------------------------------------------------------------------------

def rx(alpha: float) -> np.ndarray:
    """``exp(i alpha I_x)``."""
    c, s = math.cos(alpha / 2), math.sin(alpha / 2)
    return np.array([[c, 1j * s], [1j * s, c]], dtype=complex)


def u_cr(alpha: float) -> np.ndarray:
    """Conditional x-rotation ``|0><0| (x) 1 + |1><1| (x) exp(i alpha I_x)``."""
    return kron(P0_LOGICAL, ID2) + kron(P1_LOGICAL, rx(alpha))


def min_gate_time(alpha: float, p: PhysicalParams = PhysicalParams()) -> float:
    """Shortest free-evolution time (us) for a conditional rotation by ``alpha``."""
    if alpha < 0:
        raise ValueError("rotation angle must be non-negative")
    if p.A_zx == 0.0:
        raise ValueError("A_zx = 0: no conditional rotation exists")
    return alpha / (TWO_PI * abs(p.A_zx))


def evolution_period(p: PhysicalParams = PhysicalParams()) -> float:
    """Period (us) of the free evolution, ``2 pi / |E3 - E4|``."""
    if p.A_zx == 0.0:
        raise ValueError("degenerate spectrum: the evolution period is undefined")
    return 1.0 / abs(p.A_zx)


def resonance_defect(p: PhysicalParams = PhysicalParams()) -> tuple[float, float]:
    """Residual I_z coefficient of the |1>_e branch (MHz) and the field (mT) cancelling it."""
    delta = -p.nu_C - p.A_zz
    b_match = abs(p.A_zz) / p.gamma_C if p.gamma_C else math.inf
    return delta, b_match


def gate_overlap(u: np.ndarray, v: np.ndarray) -> float:
    """Phase-insensitive gate overlap ``|Tr(U^dag V)| / d``."""
    return float(abs(np.trace(dagger(u) @ v)) / u.shape[0])


def free_evolution(tau: float, p: PhysicalParams = PhysicalParams()) -> np.ndarray:
    """Register propagator of a delay ``tau`` in the interaction frame."""
    return expm_unitary(interaction_frame_hamiltonian(p), tau)
