"""Error budgets for entangling gates and the excitation laser system.

Two gate families are budgeted here. The blockade gate drives one atom
conditioned on the other sitting deep inside the blockade radius; its error
trades spontaneous emission during the pulses against double-excitation
leakage and off-resonant qubit rotation. The interaction gate instead lets a
weak pair shift accumulate a conditional phase; its error trades spontaneous
emission against imperfect rotations at both the drive and qubit-splitting
scales. On top of the per-operating-point budgets this module optimizes the
drive strength (closed form and numerically), scans error landscapes over
principal quantum number and atom separation using the pair-interaction and
blockade machinery, and budgets the supporting hardware: two-photon
excitation (spontaneous emission from the intermediate state, Doppler
dephasing, AC Stark shifts), Poisson-loading statistics, and the array size
reachable within a total error budget.

Drive strengths, level shifts and splittings are cyclic frequencies in MHz;
times are microseconds. Formulas mixing rates and times convert to angular
units internally.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import optimize

from . import constants as cst
from .angular import dipole_angular_factor, reduced_c1_lsj
from .atoms import LifetimeModel, RydbergState, radial_matrix_element
from .blockade import (
    EnsembleGeometry,
    ExcitationField,
    blockade_shift,
    effective_interaction_mhz,
)
from .pair import forster_eigensystem, s_state_channels

# Scale ratio treated as a clear separation by the advisory regime flags.
REGIME_FACTOR = 3.0
# Minimum accumulated interaction phase (rad) per lifetime for the
# interaction gate to make sense at all.
MIN_PHASE_RAD = 10.0
# Hyperfine span of the low-lying intermediate p state (MHz); the two-photon
# detuning should clear it by a wide margin.
INTERMEDIATE_HYPERFINE_SPAN_MHZ = 500.0
# Blockade shifts are capped here before optimization; beyond this the gate
# error is set by the qubit splitting alone.
BLOCKADE_CAP_MHZ = 1e9

# Array-capacity prefactors, calibrated so a gate error budget of 0.001 at
# n = 100 gives 470 qubits in 2D and 7600 in 3D.
CAPACITY_2D = 470.0 / (0.001 ** (1.0 / 3.0) * 100.0 ** (2.0 / 3.0))
CAPACITY_3D = 7600.0 / (math.sqrt(0.001) * 100.0)


def _require_positive(value, name):
    if not value > 0.0:
        raise ValueError("%s must be strictly positive" % name)


@dataclass(frozen=True)
class GateParams:
    """Operating point of a two-atom gate (cyclic MHz, microseconds).

    blockade_mhz is the pair shift suppressing double excitation (blockade
    gate); interaction_mhz is the weak pair shift accumulating the
    conditional phase (interaction gate). Either may be omitted when the
    other gate family is budgeted.
    """

    rabi_mhz: float
    lifetime_us: float
    qubit_splitting_mhz: float = cst.SPECIES_OMEGA10_MHZ["Rb87"]
    blockade_mhz: Optional[float] = None
    interaction_mhz: Optional[float] = None

    def __post_init__(self):
        _require_positive(self.rabi_mhz, "rabi_mhz")
        _require_positive(self.lifetime_us, "lifetime_us")
        _require_positive(self.qubit_splitting_mhz, "qubit_splitting_mhz")
        if self.blockade_mhz is not None:
            _require_positive(self.blockade_mhz, "blockade_mhz")
        if self.interaction_mhz is not None:
            _require_positive(self.interaction_mhz, "interaction_mhz")

    @property
    def blockade_regime_ok(self):
        """True when the blockade shift clearly dominates the drive."""
        return (
            self.blockade_mhz is not None
            and self.blockade_mhz >= REGIME_FACTOR * self.rabi_mhz
        )

    @property
    def interaction_regime_ok(self):
        """True when qubit splitting >> drive >> interaction shift."""
        return (
            self.interaction_mhz is not None
            and self.rabi_mhz >= REGIME_FACTOR * self.interaction_mhz
            and self.qubit_splitting_mhz >= REGIME_FACTOR * self.rabi_mhz
        )


@dataclass(frozen=True)
class GateErrorBudget:
    """Additive gate-error decomposition.

    total_error is the exact sum of the spontaneous-emission and rotation
    terms. Optimizer outputs (optimal drive, whether the optimum was
    interior to the search bracket, the self-consistent pair shift) are
    attached when a budget comes out of an optimization.
    """

    se_error: float
    rotation_error: float
    total_error: float
    rabi_opt_mhz: Optional[float] = None
    interior_optimum: Optional[bool] = None
    regime_ok: bool = True
    interaction_mhz: Optional[float] = None


def blockade_gate_error(params):
    """Input-averaged error of a blockade-phase entangling gate.

    The spontaneous-emission term scales with the time spent in the excited
    state, 1/(drive * lifetime); the rotation term collects imperfect
    blockade (double-excitation leakage) and off-resonant excitation of the
    other qubit level.
    """
    if params.blockade_mhz is None:
        raise ValueError("blockade_mhz is required for the blockade gate")
    omega = 2.0 * math.pi * params.rabi_mhz
    b = 2.0 * math.pi * params.blockade_mhz
    w10 = 2.0 * math.pi * params.qubit_splitting_mhz
    tau = params.lifetime_us
    se = (7.0 * math.pi / (4.0 * omega * tau)) * (
        1.0 + omega**2 / w10**2 + omega**2 / (7.0 * b**2)
    )
    rot = (omega**2 / (8.0 * b**2)) * (1.0 + 6.0 * b**2 / w10**2)
    return GateErrorBudget(
        se_error=se,
        rotation_error=rot,
        total_error=se + rot,
        regime_ok=params.blockade_regime_ok,
    )


def optimal_blockade_gate(blockade_mhz, lifetime_us):
    """Closed-form optimal drive and error for the blockade gate.

    Balances only the two dominant terms (spontaneous emission against
    blockade leakage), i.e. assumes an infinite qubit splitting. Returns
    (rabi_opt_mhz, error_min); the error falls off as the -2/3 power of the
    blockade-shift--lifetime product.
    """
    _require_positive(blockade_mhz, "blockade_mhz")
    _require_positive(lifetime_us, "lifetime_us")
    b = 2.0 * math.pi * blockade_mhz
    omega_opt = (7.0 * math.pi) ** (1.0 / 3.0) * b ** (2.0 / 3.0) / lifetime_us ** (1.0 / 3.0)
    e_min = 3.0 * (7.0 * math.pi) ** (2.0 / 3.0) / 8.0 * (b * lifetime_us) ** (-2.0 / 3.0)
    return omega_opt / (2.0 * math.pi), e_min


def _minimize_log(objective, lo_mhz, hi_mhz, xatol=1e-10):
    """Bounded scalar minimization over log(drive); returns (argmin, interior)."""
    lo_t, hi_t = math.log(lo_mhz), math.log(hi_mhz)
    res = optimize.minimize_scalar(
        lambda t: objective(math.exp(t)),
        bounds=(lo_t, hi_t),
        method="bounded",
        options={"xatol": xatol},
    )
    interior = min(res.x - lo_t, hi_t - res.x) > 1e-3 * (hi_t - lo_t)
    return math.exp(res.x), interior


def minimize_blockade_gate(
    blockade_mhz,
    lifetime_us,
    qubit_splitting_mhz=cst.SPECIES_OMEGA10_MHZ["Rb87"],
):
    """Numerically minimized blockade-gate error over the drive strength.

    Uses the full budget including the finite qubit splitting; every term is
    monotone in the drive, so the total is unimodal and a bounded search on
    a generous log bracket around the closed-form guesses is exact.
    """
    _require_positive(blockade_mhz, "blockade_mhz")
    _require_positive(qubit_splitting_mhz, "qubit_splitting_mhz")
    blockade_mhz = min(blockade_mhz, BLOCKADE_CAP_MHZ)

    def objective(omega_mhz):
        params = GateParams(
            rabi_mhz=omega_mhz,
            lifetime_us=lifetime_us,
            qubit_splitting_mhz=qubit_splitting_mhz,
            blockade_mhz=blockade_mhz,
        )
        return blockade_gate_error(params).total_error

    guess, _ = optimal_blockade_gate(blockade_mhz, lifetime_us)
    if math.isfinite(qubit_splitting_mhz):
        # drive scale at which the qubit-splitting terms take over
        w10 = 2.0 * math.pi * qubit_splitting_mhz
        cap = (7.0 * math.pi * w10**2 / (6.0 * lifetime_us)) ** (1.0 / 3.0) / (2.0 * math.pi)
        scale = min(guess, cap)
    else:
        scale = guess
    omega_opt, interior = _minimize_log(objective, scale * 1e-3, max(guess, scale) * 1e3)
    params = GateParams(
        rabi_mhz=omega_opt,
        lifetime_us=lifetime_us,
        qubit_splitting_mhz=qubit_splitting_mhz,
        blockade_mhz=blockade_mhz,
    )
    budget = blockade_gate_error(params)
    return GateErrorBudget(
        se_error=budget.se_error,
        rotation_error=budget.rotation_error,
        total_error=budget.total_error,
        rabi_opt_mhz=omega_opt,
        interior_optimum=interior,
        regime_ok=budget.regime_ok,
    )


def interaction_gate_error(params):
    """Input-averaged error of a weak-interaction conditional-phase gate.

    The spontaneous-emission term covers the phase-accumulation wait
    (1/shift) plus the excitation pulses (1/drive); the rotation term
    collects the shift-induced rotation error and off-resonant excitation of
    the other qubit level. Operating points outside the ordering
    qubit splitting >> drive >> shift, or accumulating less than
    MIN_PHASE_RAD of phase per lifetime, are flagged advisory-only.
    """
    if params.interaction_mhz is None:
        raise ValueError("interaction_mhz is required for the interaction gate")
    omega = 2.0 * math.pi * params.rabi_mhz
    d = 2.0 * math.pi * params.interaction_mhz
    w10 = 2.0 * math.pi * params.qubit_splitting_mhz
    tau = params.lifetime_us
    se = (math.pi / tau) * (1.0 / d + 1.0 / omega)
    rot = 2.0 * d**2 / omega**2 + omega**2 / w10**2
    phase_ok = d * tau >= MIN_PHASE_RAD
    return GateErrorBudget(
        se_error=se,
        rotation_error=rot,
        total_error=se + rot,
        regime_ok=params.interaction_regime_ok and phase_ok,
    )


def interaction_gate_floor(
    lifetime_us, qubit_splitting_mhz=cst.SPECIES_OMEGA10_MHZ["Rb87"]
):
    """Smallest interaction-gate error reachable at given lifetime/splitting.

    Attained in the limit where the shift is chosen to balance the wait-time
    spontaneous emission against the splitting-limited rotation error.
    """
    _require_positive(lifetime_us, "lifetime_us")
    _require_positive(qubit_splitting_mhz, "qubit_splitting_mhz")
    w10 = 2.0 * math.pi * qubit_splitting_mhz
    return math.sqrt(2.0**3.5 * math.pi / (lifetime_us * w10))


def optimal_interaction_gate(
    interaction_mhz,
    lifetime_us,
    qubit_splitting_mhz=cst.SPECIES_OMEGA10_MHZ["Rb87"],
):
    """Closed-form near-optimal drive and error for a fixed pair shift.

    The drive sits at the geometric mean of the shift and splitting scales
    (up to a constant); the returned error is the wait-time
    spontaneous-emission term plus the combined rotation error at that
    drive. Returns (rabi_opt_mhz, error_opt).
    """
    _require_positive(interaction_mhz, "interaction_mhz")
    _require_positive(lifetime_us, "lifetime_us")
    _require_positive(qubit_splitting_mhz, "qubit_splitting_mhz")
    d = 2.0 * math.pi * interaction_mhz
    w10 = 2.0 * math.pi * qubit_splitting_mhz
    omega_opt = math.sqrt(2.0) / 3.0**0.25 * math.sqrt(d * w10)
    e_opt = math.pi / (d * lifetime_us) + 5.0 * d / (math.sqrt(3.0) * w10)
    return omega_opt / (2.0 * math.pi), e_opt


def minimize_interaction_gate(
    interaction_mhz,
    lifetime_us,
    qubit_splitting_mhz=cst.SPECIES_OMEGA10_MHZ["Rb87"],
):
    """Numerically minimized fixed-shift interaction-gate error.

    The budget is unimodal in the drive (falling spontaneous-emission and
    shift-rotation terms against the rising splitting-rotation term), so a
    bounded search on a log bracket around the closed-form guess is exact.
    """
    guess, _ = optimal_interaction_gate(
        interaction_mhz, lifetime_us, qubit_splitting_mhz
    )
    # drive scale when the shift-rotation term is negligible instead
    w10 = 2.0 * math.pi * qubit_splitting_mhz
    alt = (math.pi * w10**2 / (2.0 * lifetime_us)) ** (1.0 / 3.0) / (2.0 * math.pi)

    def objective(omega_mhz):
        params = GateParams(
            rabi_mhz=omega_mhz,
            lifetime_us=lifetime_us,
            qubit_splitting_mhz=qubit_splitting_mhz,
            interaction_mhz=interaction_mhz,
        )
        return interaction_gate_error(params).total_error

    omega_opt, interior = _minimize_log(
        objective, min(guess, alt) * 1e-3, max(guess, alt) * 1e3
    )
    params = GateParams(
        rabi_mhz=omega_opt,
        lifetime_us=lifetime_us,
        qubit_splitting_mhz=qubit_splitting_mhz,
        interaction_mhz=interaction_mhz,
    )
    budget = interaction_gate_error(params)
    return GateErrorBudget(
        se_error=budget.se_error,
        rotation_error=budget.rotation_error,
        total_error=budget.total_error,
        rabi_opt_mhz=omega_opt,
        interior_optimum=interior,
        regime_ok=budget.regime_ok,
        interaction_mhz=interaction_mhz,
    )


def optimize_interaction_gate(
    eig,
    r_um,
    lifetime_us,
    qubit_splitting_mhz=cst.SPECIES_OMEGA10_MHZ["Rb87"],
    polarization=0,
    ground_m=0.5,
    rabi_bounds_mhz=(1e-3, 2e4),
    grid_points=61,
):
    """Optimize the interaction gate with a drive-dependent pair shift.

    The effective pair shift saturates with drive strength, so it is
    re-evaluated from the coupling eigensystem at every trial drive and the
    optimization is self-consistent. A deterministic log-spaced scan
    brackets the minimum before local refinement; a boundary optimum is
    returned with interior_optimum=False.
    """
    _require_positive(r_um, "r_um")
    _require_positive(lifetime_us, "lifetime_us")

    def shift_at(omega_mhz):
        field = ExcitationField.uniform(
            2, omega_mhz, polarization=polarization, ground_m=ground_m
        )
        return abs(effective_interaction_mhz(field, eig, r_um))

    def budget_at(omega_mhz):
        shift = shift_at(omega_mhz)
        if shift == 0.0:
            return None, 0.0
        params = GateParams(
            rabi_mhz=omega_mhz,
            lifetime_us=lifetime_us,
            qubit_splitting_mhz=qubit_splitting_mhz,
            interaction_mhz=shift,
        )
        return interaction_gate_error(params), shift

    def objective(omega_mhz):
        budget, _ = budget_at(omega_mhz)
        return math.inf if budget is None else budget.total_error

    lo, hi = rabi_bounds_mhz
    if not 0.0 < lo < hi:
        raise ValueError("rabi_bounds_mhz must be increasing and positive")
    grid_t = np.linspace(math.log(lo), math.log(hi), grid_points)
    totals = [objective(math.exp(t)) for t in grid_t]
    i0 = int(np.argmin(totals))
    if not math.isfinite(totals[i0]):
        raise ValueError("no effective interaction at this separation")
    lo_t = grid_t[max(i0 - 1, 0)]
    hi_t = grid_t[min(i0 + 1, grid_points - 1)]
    omega_opt, _ = _minimize_log(
        objective, math.exp(lo_t), math.exp(hi_t), xatol=1e-9
    )
    interior = 0 < i0 < grid_points - 1
    budget, shift = budget_at(omega_opt)
    return GateErrorBudget(
        se_error=budget.se_error,
        rotation_error=budget.rotation_error,
        total_error=budget.total_error,
        rabi_opt_mhz=omega_opt,
        interior_optimum=interior,
        regime_ok=budget.regime_ok,
        interaction_mhz=shift,
    )


def position_phase_error(r0_um, delta_r_um):
    """Fractional conditional-phase error from a radial position spread.

    In the van der Waals regime the pair shift falls as the sixth power of
    separation, so a spread delta_R about separation R0 changes the
    accumulated phase by the fraction 6 delta_R / R0.
    """
    _require_positive(r0_um, "r0_um")
    if delta_r_um < 0.0:
        raise ValueError("delta_r_um must be non-negative")
    return 6.0 * delta_r_um / r0_um


def array_capacity(n, error_budget, dimension):
    """Largest qubit array operable within a total gate-error budget.

    Larger arrays need gates over longer distances; the reachable size grows
    with the error budget and the principal quantum number, faster in 3D
    (linear in n) than in 2D (2/3 power).
    """
    _require_positive(n, "n")
    _require_positive(error_budget, "error_budget")
    if dimension == 2:
        return CAPACITY_2D * error_budget ** (1.0 / 3.0) * n ** (2.0 / 3.0)
    if dimension == 3:
        return CAPACITY_3D * math.sqrt(error_budget) * n
    raise ValueError("dimension must be 2 or 3")


def _lifetime_for(n, lifetimes_us, temperature_k, model):
    if lifetimes_us is not None and n in lifetimes_us:
        return lifetimes_us[n]
    if model is None:
        raise ValueError(
            "lifetime for n=%d needs a quantum-defect table or an entry "
            "in lifetimes_us" % n
        )
    return model.tau_us(RydbergState(n, 0, 0.5), temperature_k)


def _eigensystem_for(n, table, eigensystems):
    if eigensystems is not None and n in eigensystems:
        return eigensystems[n]
    if table is None:
        raise ValueError(
            "channels for n=%d need a quantum-defect table or an entry "
            "in eigensystems" % n
        )
    return forster_eigensystem(s_state_channels(n, table))


def blockade_gate_landscape(
    n_values,
    r_um_values,
    table,
    lifetimes_us=None,
    qubit_splitting_mhz=cst.SPECIES_OMEGA10_MHZ["Rb87"],
    temperature_k=300.0,
    eigensystems=None,
):
    """Optimized blockade-gate error versus separation for s-state pairs.

    For each principal quantum number the four dominant coupling channels
    set the blockade shift of an axially-aligned pair; the gate drive is
    then optimized at every separation. Lifetimes come from the
    blackbody-corrected model at temperature_k unless overridden by the
    lifetimes_us mapping (n -> microseconds); prebuilt channel
    eigensystems (n -> value) skip the channel construction. table may be
    None when both overrides cover every n. Returns deterministic
    (n, r_um, GateErrorBudget) rows in grid order.
    """
    model = LifetimeModel(table) if table is not None else None
    field = ExcitationField.uniform(2, 1.0)
    rows = []
    for n in n_values:
        eig = _eigensystem_for(n, table, eigensystems)
        tau = _lifetime_for(n, lifetimes_us, temperature_k, model)
        for r in r_um_values:
            geometry = EnsembleGeometry(
                np.array([[0.0, 0.0, 0.0], [0.0, 0.0, float(r)]])
            )
            b_mhz = blockade_shift(geometry, field, eig).b_mhz
            rows.append(
                (
                    n,
                    float(r),
                    minimize_blockade_gate(b_mhz, tau, qubit_splitting_mhz),
                )
            )
    return rows


def interaction_gate_landscape(
    n_values,
    r_um_values,
    table,
    lifetimes_us=None,
    qubit_splitting_mhz=cst.SPECIES_OMEGA10_MHZ["Rb87"],
    temperature_k=300.0,
    eigensystems=None,
):
    """Optimized interaction-gate error versus separation for s-state pairs.

    Same conventions as blockade_gate_landscape, with the drive-shift
    self-consistency of optimize_interaction_gate at every grid point.
    """
    model = LifetimeModel(table) if table is not None else None
    rows = []
    for n in n_values:
        eig = _eigensystem_for(n, table, eigensystems)
        tau = _lifetime_for(n, lifetimes_us, temperature_k, model)
        for r in r_um_values:
            rows.append(
                (
                    n,
                    float(r),
                    optimize_interaction_gate(
                        eig, float(r), tau, qubit_splitting_mhz
                    ),
                )
            )
    return rows


@dataclass(frozen=True)
class GaussianBeam:
    """Focused excitation beam: power (W), intensity waist (um), wavelength (nm)."""

    power_w: float
    waist_um: float
    wavelength_nm: float

    def __post_init__(self):
        _require_positive(self.power_w, "power_w")
        _require_positive(self.waist_um, "waist_um")
        _require_positive(self.wavelength_nm, "wavelength_nm")

    @property
    def peak_intensity_w_m2(self):
        return 2.0 * self.power_w / (math.pi * (self.waist_um * 1e-6) ** 2)

    @property
    def peak_field_v_m(self):
        return math.sqrt(2.0 * self.peak_intensity_w_m2 / (cst.EPS0 * cst.C_LIGHT))

    @property
    def k_rad_m(self):
        return 2.0 * math.pi / (self.wavelength_nm * 1e-9)


@dataclass(frozen=True)
class ExcitationBudget:
    """Two-photon excitation figures at the beam focus (cyclic MHz).

    amplitude_ratio is the magnitude ratio of the second to the first
    single-photon drive; the spontaneous-emission and Doppler terms are
    probabilities clamped to [0, 1]; the Stark shifts are signed and cancel
    when the two drives are balanced.
    """

    rabi_mhz: float
    rabi1_mhz: float
    rabi2_mhz: float
    amplitude_ratio: float
    se_probability: float
    doppler_probability: float
    stark_ground_mhz: float
    stark_rydberg_mhz: float
    gamma_p_mhz: float
    far_detuned: bool


def single_photon_rabi_mhz(beam, state_a, state_b, q_pol, table):
    """Peak Rabi frequency (cyclic MHz) for one beam driving a -> b.

    state_a's Zeeman component defaults to +1/2; the final component is
    fixed by the beam polarization q_pol (net Zeeman transfer).
    """
    m_a = state_a.m if state_a.m is not None else 0.5
    m_b = m_a + q_pol
    radial = radial_matrix_element(state_a, state_b, table)
    angular = dipole_angular_factor(
        state_b.l, state_b.j, m_b, state_a.l, state_a.j, m_a, q_pol
    )
    rabi_rad_s = (
        cst.EA0_RABI_RAD_PER_VM * abs(radial * angular) * beam.peak_field_v_m
    )
    return cst.mhz_from_rad_per_s(rabi_rad_s)


def spontaneous_rate_mhz(upper, lower, wavelength_nm, table):
    """Radiative decay rate of upper -> lower as a cyclic linewidth (MHz).

    Built from the model's own radial matrix element and the reduced angular
    factor, averaged over the upper-state Zeeman components.
    """
    omega = 2.0 * math.pi * cst.C_LIGHT / (wavelength_nm * 1e-9)
    radial = radial_matrix_element(upper, lower, table)
    reduced = reduced_c1_lsj(lower.l, lower.j, upper.l, upper.j)
    rate_per_s = (
        omega**3
        * (cst.E_CHARGE * cst.A0 * radial) ** 2
        * reduced**2
        / (3.0 * math.pi * cst.EPS0 * cst.HBAR * cst.C_LIGHT**3 * (2.0 * upper.j + 1.0))
    )
    return cst.mhz_from_rad_per_s(rate_per_s)


def two_photon_budget(
    ground,
    intermediate,
    target,
    beam1,
    beam2,
    detuning_mhz,
    table,
    temperature_k=0.0,
    counterpropagating=True,
    q1=0,
    q2=0,
    species="Rb87",
):
    """Error budget of two-photon excitation through an intermediate state.

    detuning_mhz is the first beam's detuning from the intermediate state
    (cyclic MHz, nonzero); two-photon resonance is assumed. Doppler
    dephasing uses the 1-D rms thermal velocity of the species at
    temperature_k and the wavevector sum or difference of the two beams.
    """
    if detuning_mhz == 0.0:
        raise ValueError("detuning_mhz must be nonzero")
    m_g = ground.m if ground.m is not None else 0.5
    rabi1 = single_photon_rabi_mhz(beam1, ground.with_m(m_g), intermediate, q1, table)
    rabi2 = single_photon_rabi_mhz(
        beam2, intermediate.with_m(m_g + q1), target, q2, table
    )
    if rabi1 == 0.0 or rabi2 == 0.0:
        raise ValueError("excitation path has a vanishing dipole coupling")
    rabi = rabi1 * rabi2 / (2.0 * detuning_mhz)
    ratio = rabi2 / rabi1
    gamma_p = spontaneous_rate_mhz(intermediate, ground, beam1.wavelength_nm, table)
    p_se = (
        math.pi * gamma_p / (4.0 * abs(detuning_mhz)) * (ratio + 1.0 / ratio)
    )
    if counterpropagating:
        dk = abs(beam1.k_rad_m - beam2.k_rad_m)
    else:
        dk = beam1.k_rad_m + beam2.k_rad_m
    if temperature_k > 0.0:
        v_rms = cst.thermal_velocity(temperature_k, cst.SPECIES_MASS_U[species])
        p_doppler = (dk * v_rms / cst.rad_per_s_from_mhz(abs(rabi))) ** 2
    else:
        p_doppler = 0.0
    return ExcitationBudget(
        rabi_mhz=rabi,
        rabi1_mhz=rabi1,
        rabi2_mhz=rabi2,
        amplitude_ratio=ratio,
        se_probability=min(p_se, 1.0),
        doppler_probability=min(p_doppler, 1.0),
        stark_ground_mhz=rabi1**2 / (4.0 * detuning_mhz),
        stark_rydberg_mhz=-(rabi2**2) / (4.0 * detuning_mhz),
        gamma_p_mhz=gamma_p,
        far_detuned=abs(detuning_mhz) >= 10.0 * INTERMEDIATE_HYPERFINE_SPAN_MHZ,
    )


@dataclass(frozen=True)
class LoadingBudget:
    """Single-excitation preparation errors for Poisson-loaded ensembles."""

    pi_pulse_error: float
    empty_probability: float


def loading_error(mean_atoms):
    """Preparation error budget for a Poisson-loaded ensemble qubit.

    The collective drive scales with the square root of the atom number, so
    a pulse calibrated for the mean leaves a residual infidelity
    pi^2/(16 <N>); the probability that the trap loaded no atom at all is
    reported alongside.
    """
    if mean_atoms < 1.0:
        raise ValueError("mean_atoms must be at least 1")
    return LoadingBudget(
        pi_pulse_error=math.pi**2 / (16.0 * mean_atoms),
        empty_probability=math.exp(-mean_atoms),
    )
