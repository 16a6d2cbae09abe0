"""
Explicit descent-direction constructions around true solutions.

Each probe builds a perturbation dW inside the joint Frobenius ball of
radius γ, measures delta_f = loss(W* + dW) − loss(W*) and, where the
construction pins it down, the closed-form prediction. Preconditions that
fail on a particular realization (no large-enough noise, empty kernel,
singular system) give an infeasible result rather than an exception.
"""

import logging

import numpy as np

from common import linalg
from landscape.models import ProbeNameEnum, ProbeResult
from recovery.models import FactorPair, Instance, ProblemKindEnum
from recovery.services import problem
from recovery.services.loss import loss_change, measurement_changes, residuals, subgradient_from_residuals

logger = logging.getLogger(__name__)

ZETA_SAFETY = 0.9
NORM_SLACK = 1e-9
REFINE_ITERS = 300
REFINE_STEP = 0.1
REFINE_DECAY = 0.98


class ProbeError(Exception):
    """Base exception for landscape probes"""
    pass


class ProbeInapplicableError(ProbeError):
    """Probe does not apply to this kind of instance or ground truth"""
    pass


# ──────────────────────────────────────────────
# Helpers
# ──────────────────────────────────────────────

def _require_kind(inst: Instance, kind: str, name: str):
    if inst.kind != kind:
        raise ProbeInapplicableError(f"{name} needs a {kind} instance, got {inst.kind}")


def _infeasible(name, gamma, W: FactorPair, reason, **diag) -> ProbeResult:
    logger.debug(f"Probe {name} infeasible at gamma={gamma}: {reason}")
    return ProbeResult(
        name=name, gamma=gamma, dW=W.zeros_like(), delta_f=0.0,
        predicted=None, feasible=False, diag={'reason': reason, **diag},
    )


def _measured(inst, W, dW, name, gamma, predicted=None, diag=None) -> ProbeResult:
    delta = loss_change(inst, W, dW)
    diag = dict(diag or {})
    diag['norm'] = dW.norm()
    if diag['norm'] > gamma * (1.0 + NORM_SLACK):
        logger.error(f"Probe {name} produced |dW|={diag['norm']} above gamma={gamma}")
    return ProbeResult(
        name=name, gamma=gamma, dW=dW, delta_f=delta,
        predicted=predicted, feasible=True, diag=diag,
    )


def _orthogonal_rotation(inst: Instance, W: FactorPair) -> np.ndarray:
    """R′ with orthonormal rows and R·R′ᵀ = 0, so W*·R′ᵀ = 0."""
    R = problem.recover_rotation(W, inst.gt)
    return linalg.kernel_basis(R).T


def _auto_zeta(t0, sigma_min, gamma, n_st, safety):
    return min(t0, safety * sigma_min * gamma / np.sqrt(n_st))


def _sign_rhs(inst: Instance) -> np.ndarray:
    b = np.zeros(inst.m)
    St = inst.noise.St
    b[St] = np.sign(inst.noise.eps[St])
    return b


# ──────────────────────────────────────────────
# Symmetric formulations
# ──────────────────────────────────────────────

def sym_completion_probe(inst: Instance, W: FactorPair, gamma: float) -> ProbeResult:
    """
    Push the first observed diagonal entry with E[l, l] ≥ t0 down by γ²
    through the orthogonal block: dW = Ū·R′ with Ū = γ·e_l·e_0ᵀ. Only the
    (l, l) entry of the product moves, so delta_f = −γ²/m.
    """
    name = ProbeNameEnum.SYM_COMPLETION
    _require_kind(inst, ProblemKindEnum.MC_SYM, name)
    t0 = inst.noise.t0
    if inst.k <= inst.r:
        return _infeasible(name, gamma, W, 'no orthogonal block (k == r)')
    if gamma ** 2 > t0:
        return _infeasible(name, gamma, W, 'gamma^2 exceeds t0', t0=t0)

    idx, eps = inst.ens.indices, inst.noise.eps
    qualifying = np.flatnonzero((idx[:, 0] == idx[:, 1]) & (eps >= t0))
    if qualifying.size == 0:
        return _infeasible(name, gamma, W, 'no observed diagonal entry with E[l,l] >= t0')

    l = int(idx[qualifying[0], 0])
    R_perp = _orthogonal_rotation(inst, W)
    U_bar = np.zeros((inst.d1, inst.k - inst.r))
    U_bar[l, 0] = gamma
    dW = FactorPair(U_bar @ R_perp)
    return _measured(
        inst, W, dW, name, gamma,
        predicted=-gamma ** 2 / inst.m,
        diag={'l': l, 'E_ll': float(eps[qualifying[0]])},
    )


def sym_sensing_probe(inst: Instance, W: FactorPair, gamma: float) -> ProbeResult:
    """
    Align U·Uᵀ with the noise-sign aggregate Ã = |St|^{-1/2}·Σ_{St} sgn(eps_i)·A_i
    by projecting onto its top-r0 eigenspace, r0 = min(k − r, ⌊d/2⌋).

    diag carries the split of the change into the noisy part
    a_part = −(1/m)·Σ_{St} sgn(eps_i)·⟨A_i, UUᵀ⟩ and the clean part
    b_part = (1/m)·Σ_{i∉St} |⟨A_i, UUᵀ⟩|.
    """
    name = ProbeNameEnum.SYM_SENSING
    _require_kind(inst, ProblemKindEnum.MS_SYM, name)
    St = inst.noise.St
    if inst.k <= inst.r:
        return _infeasible(name, gamma, W, 'no orthogonal block (k == r)')
    if St.size == 0:
        return _infeasible(name, gamma, W, 'no measurement with |eps| >= t0')
    r0 = min(inst.k - inst.r, inst.d1 // 2)
    if r0 == 0:
        return _infeasible(name, gamma, W, 'r0 = 0')

    signs = np.sign(inst.noise.eps[St])
    A_tilde = np.tensordot(signs, inst.ens.matrices[St], axes=(0, 0)) / np.sqrt(St.size)
    value, Q = linalg.top_p_projection(linalg.sym(A_tilde), r0)

    U = np.zeros((inst.d1, inst.k - inst.r))
    U[:, :r0] = (gamma / np.sqrt(r0)) * Q
    dW = FactorPair(U @ _orthogonal_rotation(inst, W))

    changes = measurement_changes(inst, U @ U.T)
    in_st = np.zeros(inst.m, dtype=bool)
    in_st[St] = True
    a_part = -float(np.sum(np.sign(inst.noise.eps[in_st]) * changes[in_st])) / inst.m
    b_part = float(np.sum(np.abs(changes[~in_st]))) / inst.m
    return _measured(
        inst, W, dW, name, gamma,
        diag={
            'St_size': int(St.size),
            'r0': r0,
            'grassmann_value': value,
            'a_part': a_part,
            'b_part': b_part,
        },
    )


# ──────────────────────────────────────────────
# Asymmetric completion
# ──────────────────────────────────────────────

def asym_completion_first_order_probe(inst: Instance, gamma: float):
    """
    Build the witness solution W1* = [U*Σ* | 0], W2* = [V* | I]ᵀ and move the
    free block of W1 by γ·sgn(E)/√|Ψ̄| on Ψ̄ = {(x, y) ∈ Ψ : y < k − r, |E| ≥ t0}.

    Returns:
        (W_star, ProbeResult); W_star is None when k − r is out of range
    """
    name = ProbeNameEnum.ASYM_COMPLETION_FIRST_ORDER
    _require_kind(inst, ProblemKindEnum.MC_ASYM, name)
    gt, k, r = inst.gt, inst.k, inst.r
    placeholder = FactorPair(np.zeros((inst.d1, k)), np.zeros((k, inst.d2)))
    if k <= r:
        return None, _infeasible(name, gamma, placeholder, 'witness needs k > r')
    if k - r > inst.d2:
        return None, _infeasible(name, gamma, placeholder, 'k - r exceeds d2')

    W = problem.completion_witness_solution(gt, k)
    t0 = inst.noise.t0
    if gamma > t0:
        return W, _infeasible(name, gamma, W, 'gamma exceeds t0', t0=t0)

    idx, eps = inst.ens.indices, inst.noise.eps
    chosen = np.flatnonzero((idx[:, 1] < k - r) & (np.abs(eps) >= t0))
    if chosen.size == 0:
        return W, _infeasible(name, gamma, W, 'no observed entry with y < k - r and |E| >= t0')

    n = chosen.size
    dW1 = np.zeros((inst.d1, k))
    dW1[idx[chosen, 0], r + idx[chosen, 1]] = gamma * np.sign(eps[chosen]) / np.sqrt(n)
    dW = FactorPair(dW1, np.zeros((k, inst.d2)))
    result = _measured(
        inst, W, dW, name, gamma,
        predicted=-np.sqrt(n) * gamma / inst.m,
        diag={'psi_bar_size': int(n)},
    )
    return W, result


def asym_completion_coherent_probe(inst: Instance, W: FactorPair, gamma: float, Gamma=None) -> ProbeResult:
    """
    For a ground truth whose singular vector v_j equals ±e_c, set
    dW1 = Y·Σ*^{-1}·U*ᵀ·W1* with Y = y·e_jᵀ. Then dW1·W2* = ±y·e_cᵀ moves
    only column c, by σ_r·γ·sgn(E[x, c])/(Γ·√|Ψ′|) on
    Ψ′ = {(x, c) ∈ Ψ : |E[x, c]| ≥ t0}.

    A basis vector in U* is handled on the transposed problem.

    Raises:
        ProbeInapplicableError: ground truth is not coherent
    """
    name = ProbeNameEnum.ASYM_COMPLETION_COHERENT
    _require_kind(inst, ProblemKindEnum.MC_ASYM, name)
    axis = problem.coherent_axis(inst.gt)
    if axis is None:
        raise ProbeInapplicableError('coherent probe needs a coherent ground truth')

    side, j, c, sign_v = axis
    if side == 'left':
        mirrored = asym_completion_coherent_probe(
            problem.transpose_instance(inst), W.transposed(), gamma, Gamma,
        )
        mirrored.dW = mirrored.dW.transposed()
        mirrored.diag['mirrored'] = True
        return mirrored

    gt, t0 = inst.gt, inst.noise.t0
    factor_norm = max(np.linalg.norm(W.W1, 2), np.linalg.norm(W.W2, 2))
    if Gamma is None:
        Gamma = factor_norm
    if Gamma < factor_norm * (1.0 - 1e-12):
        return _infeasible(name, gamma, W, 'Gamma below the factor spectral norms',
                           Gamma=Gamma, factor_norm=factor_norm)
    if gamma > t0:
        return _infeasible(name, gamma, W, 'gamma exceeds t0', t0=t0)

    idx, eps = inst.ens.indices, inst.noise.eps
    chosen = np.flatnonzero((idx[:, 1] == c) & (np.abs(eps) >= t0))
    if chosen.size == 0:
        return _infeasible(name, gamma, W, f'no observed entry in column {c} with |E| >= t0')

    n = chosen.size
    magnitude = gt.sigma_r * gamma / (Gamma * np.sqrt(n))
    Y = np.zeros((inst.d1, gt.r))
    Y[idx[chosen, 0], j] = sign_v * magnitude * np.sign(eps[chosen])
    dW1 = (Y / gt.Sigmastar) @ gt.Ustar.T @ W.W1
    dW = FactorPair(dW1, np.zeros_like(W.W2))

    bound = -np.sqrt(n) * gt.sigma_r * gamma / (Gamma * inst.m)
    predicted = bound if magnitude <= t0 else None
    return _measured(
        inst, W, dW, name, gamma,
        predicted=predicted,
        diag={'psi_prime_size': int(n), 'Gamma': float(Gamma), 'column': c, 'bound': bound},
    )


def asym_completion_second_order_probe(inst: Instance, W: FactorPair, gamma: float) -> ProbeResult:
    """
    With S spanning ker(W1*) ∩ ker(W2*ᵀ), dW = (Y1·Sᵀ, S·Y2)/√2 leaves the
    first-order product change at zero and adds (γ²/2)·sgn(E)·e_x̄·e_ȳᵀ.
    """
    name = ProbeNameEnum.ASYM_COMPLETION_SECOND_ORDER
    _require_kind(inst, ProblemKindEnum.MC_ASYM, name)
    S = linalg.kernel_basis(np.vstack([W.W1, W.W2.T]))
    if S.shape[1] == 0:
        return _infeasible(name, gamma, W, 'trivial kernel intersection',
                           factorized_rank=problem.factorized_rank(W))
    t0 = inst.noise.t0
    if gamma ** 2 > t0:
        return _infeasible(name, gamma, W, 'gamma^2 exceeds t0', t0=t0)

    eps = inst.noise.eps
    qualifying = np.flatnonzero(np.abs(eps) >= t0)
    if qualifying.size == 0:
        return _infeasible(name, gamma, W, 'no observed entry with |E| >= t0')

    i = int(qualifying[0])
    x_bar, y_bar = (int(v) for v in inst.ens.indices[i])
    Y1 = np.zeros((inst.d1, S.shape[1]))
    Y1[x_bar, 0] = gamma
    Y2 = np.zeros((S.shape[1], inst.d2))
    Y2[0, y_bar] = gamma * np.sign(eps[i])
    root2 = np.sqrt(2.0)
    dW = FactorPair(Y1 @ S.T / root2, S @ Y2 / root2)
    return _measured(
        inst, W, dW, name, gamma,
        predicted=-gamma ** 2 / (2.0 * inst.m),
        diag={'kernel_dim': int(S.shape[1]), 'entry': [x_bar, y_bar]},
    )


# ──────────────────────────────────────────────
# Asymmetric sensing
# ──────────────────────────────────────────────

def asym_sensing_first_order_probe(inst: Instance, W: FactorPair, gamma: float,
                                   zeta=None, zeta_safety=ZETA_SAFETY) -> ProbeResult:
    """
    Solve ⟨A_i·W2*ᵀ, dW1⟩ = ζ·sgn(eps_i) on St and 0 elsewhere for the
    least-norm dW1. Clean residuals stay at their kinks and every St residual
    shrinks by ζ, so delta_f = −ζ·|St|/m.
    """
    name = ProbeNameEnum.ASYM_SENSING_FIRST_ORDER
    _require_kind(inst, ProblemKindEnum.MS_ASYM, name)
    St, t0 = inst.noise.St, inst.noise.t0
    m, d1, k = inst.m, inst.d1, inst.k
    if St.size == 0:
        return _infeasible(name, gamma, W, 'no measurement with |eps| >= t0')
    if m > d1 * k:
        return _infeasible(name, gamma, W, 'system is overdetermined (m > d1*k)')

    A_W = np.matmul(inst.ens.matrices, W.W2.T).reshape(m, d1 * k)
    try:
        u_unit, sigma_min = linalg.least_norm_solution(A_W, _sign_rhs(inst))
    except linalg.SingularSystemError as e:
        return _infeasible(name, gamma, W, 'rank-deficient system', sigma_min=e.sigma_min)

    if zeta is None:
        zeta = _auto_zeta(t0, sigma_min, gamma, St.size, zeta_safety)
    u = zeta * u_unit
    u_norm = float(np.linalg.norm(u))
    diag = {'St_size': int(St.size), 'sigma_min': sigma_min, 'zeta': zeta, 'u_norm': u_norm}
    if u_norm > gamma * (1.0 + NORM_SLACK) or zeta > t0:
        return _infeasible(name, gamma, W, 'least-norm step leaves the gamma-ball', **diag)

    dW1 = u.reshape(d1, k)
    dW = FactorPair(dW1, np.zeros_like(W.W2))
    clean = np.ones(m, dtype=bool)
    clean[St] = False
    changes = measurement_changes(inst, dW1 @ W.W2)
    diag['clean_max_change'] = float(np.max(np.abs(changes[clean]), initial=0.0))
    return _measured(inst, W, dW, name, gamma, predicted=-zeta * St.size / m, diag=diag)


def asym_sensing_first_order_probe_left(inst: Instance, W: FactorPair, gamma: float,
                                        zeta=None, zeta_safety=ZETA_SAFETY) -> ProbeResult:
    """Same construction on the left factor, run on the transposed problem."""
    result = asym_sensing_first_order_probe(
        problem.transpose_instance(inst), W.transposed(), gamma, zeta, zeta_safety,
    )
    result.name = ProbeNameEnum.ASYM_SENSING_FIRST_ORDER_LEFT
    result.dW = result.dW.transposed()
    return result


def asym_sensing_second_order_probe(inst: Instance, W: FactorPair, gamma: float, tau: float = 0.0,
                                    rng=None, zeta=None, zeta_safety=ZETA_SAFETY) -> ProbeResult:
    """
    Second-order move through S = ker(W1*(τ)) ∩ ker(W2*(τ)ᵀ) of dimension k′:
    Y2 = (γ/√k′)·V with Haar V (orthonormal rows), Y1 solving
    ⟨A_i·Vᵀ, Y1⟩ = ζ·sgn(eps_i) on St, 0 elsewhere; dW = (Y1·Sᵀ, S·Y2)/√2.

    diag reports the measured deviation term (1/m)·Σ|⟨A_i, Δ⟩| coming from
    W* − W*(τ), which vanishes when τ is below the smallest nonzero singular
    value, and the bound 4τγ·max_i‖A_i‖_F.
    """
    name = ProbeNameEnum.ASYM_SENSING_SECOND_ORDER
    _require_kind(inst, ProblemKindEnum.MS_ASYM, name)
    St, t0 = inst.noise.St, inst.noise.t0
    m, d1, d2 = inst.m, inst.d1, inst.d2

    W1_tau, _ = linalg.threshold_svd(W.W1, tau)
    W2_tau, _ = linalg.threshold_svd(W.W2, tau)
    S = linalg.kernel_basis(np.vstack([W1_tau, W2_tau.T]))
    k_prime = int(S.shape[1])
    diag = {'kernel_dim': k_prime, 'factorized_rank': problem.factorized_rank(W, tau), 'tau': tau}
    if k_prime == 0:
        return _infeasible(name, gamma, W, 'trivial kernel intersection', **diag)
    if k_prime > d2:
        return _infeasible(name, gamma, W, 'kernel dimension exceeds d2', **diag)
    if St.size == 0:
        return _infeasible(name, gamma, W, 'no measurement with |eps| >= t0', **diag)
    if m > d1 * k_prime:
        return _infeasible(name, gamma, W, 'system is overdetermined (m > d1*k\')', **diag)
    if rng is None:
        rng = np.random.default_rng(0)

    V = linalg.random_orthonormal(k_prime, d2, rng)
    Y2 = (gamma / np.sqrt(k_prime)) * V
    system = np.matmul(inst.ens.matrices, V.T).reshape(m, d1 * k_prime)
    try:
        u_unit, sigma_min = linalg.least_norm_solution(system, _sign_rhs(inst))
    except linalg.SingularSystemError as e:
        return _infeasible(name, gamma, W, 'rank-deficient system', sigma_min=e.sigma_min, **diag)

    if zeta is None:
        zeta = _auto_zeta(t0, sigma_min, gamma, St.size, zeta_safety)
    Y1 = (zeta * u_unit).reshape(d1, k_prime)
    diag.update({'St_size': int(St.size), 'sigma_min': sigma_min, 'zeta': zeta,
                 'Y1_norm': float(np.linalg.norm(Y1))})
    if np.linalg.norm(Y1) > gamma * (1.0 + NORM_SLACK) or zeta > t0:
        return _infeasible(name, gamma, W, 'least-norm step leaves the gamma-ball', **diag)

    root2 = np.sqrt(2.0)
    dW = FactorPair(Y1 @ S.T / root2, S @ Y2 / root2)
    deviation = (Y1 @ S.T @ (W.W2 - W2_tau) + (W.W1 - W1_tau) @ S @ Y2) / root2
    max_frob = float(np.max(np.linalg.norm(inst.ens.matrices.reshape(m, -1), axis=1)))
    diag['deviation_term'] = float(np.mean(np.abs(measurement_changes(inst, deviation))))
    diag['deviation_bound'] = 4.0 * tau * gamma * max_frob

    predicted = None
    if np.linalg.norm(deviation) <= 1e-10 * gamma:
        predicted = -gamma * zeta * St.size / (2.0 * np.sqrt(k_prime) * m)
    return _measured(inst, W, dW, name, gamma, predicted=predicted, diag=diag)


def asym_sensing_grassmann_probe(inst: Instance, W: FactorPair, gamma: float, tau: float = 0.0) -> ProbeResult:
    """
    Asymmetric counterpart of sym_sensing_probe. The product change
    Y1·Y2 = (γ²/2p)·L_p·R_pᵀ follows the top-p singular pairs of
    Ã = |St|^{-1/2}·Σ_{St} sgn(eps_i)·A_i and enters through p columns of the
    kernel intersection at threshold τ. Needs no underdetermined system,
    so it still applies when m exceeds d1·k′. The best p in 1..k′ is kept.
    """
    name = ProbeNameEnum.ASYM_SENSING_GRASSMANN
    _require_kind(inst, ProblemKindEnum.MS_ASYM, name)
    St = inst.noise.St
    W1_tau, _ = linalg.threshold_svd(W.W1, tau)
    W2_tau, _ = linalg.threshold_svd(W.W2, tau)
    S = linalg.kernel_basis(np.vstack([W1_tau, W2_tau.T]))
    k_prime = min(int(S.shape[1]), inst.d1, inst.d2)
    if k_prime == 0:
        return _infeasible(name, gamma, W, 'trivial kernel intersection',
                           factorized_rank=problem.factorized_rank(W, tau))
    if St.size == 0:
        return _infeasible(name, gamma, W, 'no measurement with |eps| >= t0')

    signs = np.sign(inst.noise.eps[St])
    A_tilde = np.tensordot(signs, inst.ens.matrices[St], axes=(0, 0)) / np.sqrt(St.size)
    tilde = linalg.svd(A_tilde)

    best = None
    r_old = residuals(inst, W)
    for p in range(1, k_prime + 1):
        scale = gamma / np.sqrt(2.0 * p)
        Y1 = scale * tilde.U[:, :p]
        Y2 = scale * tilde.V[:, :p].T
        dW = FactorPair(Y1 @ S[:, :p].T, S[:, :p] @ Y2)
        delta = loss_change(inst, W, dW, r_old=r_old)
        if best is None or delta < best[0]:
            best = (delta, p, dW)

    _, p, dW = best
    return _measured(
        inst, W, dW, name, gamma,
        diag={'St_size': int(St.size), 'p': p, 'kernel_dim': int(S.shape[1]),
              'singular_sum': float(np.sum(tilde.S[:p]))},
    )


# ──────────────────────────────────────────────
# Refined second-order search
# ──────────────────────────────────────────────

def _sphere_search(inst: Instance, r_old: np.ndarray, Z: FactorPair, gamma: float,
                   iters: int = REFINE_ITERS):
    """
    Projected sub-gradient search over factor pairs Z with ‖Z‖ = γ for the
    product change P = Z.product() minimizing mean(|r_old − A(P)| − |r_old|).
    Returns the best Z seen and its value.
    """
    def value(candidate):
        r_new = r_old - measurement_changes(inst, candidate.product())
        return float(np.mean(np.abs(r_new) - np.abs(r_old)))

    Z = Z.scaled(gamma / Z.norm())
    best_Z, best_value = Z, value(Z)
    step = REFINE_STEP
    for _ in range(iters):
        r_new = r_old - measurement_changes(inst, Z.product())
        G = subgradient_from_residuals(inst, Z, r_new)
        G = G - Z.scaled(G.inner(Z) / gamma ** 2)
        g_norm = G.norm()
        if g_norm == 0 or not np.isfinite(g_norm):
            break
        Z = Z - G.scaled(step * gamma / g_norm)
        Z = Z.scaled(gamma / Z.norm())
        current = value(Z)
        if current < best_value:
            best_Z, best_value = Z, current
        step *= REFINE_DECAY
    return best_Z, best_value


def sym_sensing_refined_probe(inst: Instance, W: FactorPair, gamma: float,
                              iters: int = REFINE_ITERS) -> ProbeResult:
    """
    Start from the sym_sensing_probe block U and search U on the γ-sphere
    for the most negative change of Σ|r_i − ⟨A_i, UUᵀ⟩|. The move stays in
    the orthogonal block, so the product changes by exactly UUᵀ.
    """
    name = ProbeNameEnum.SYM_SENSING_REFINED
    seed = sym_sensing_probe(inst, W, gamma)
    if not seed.feasible:
        return _infeasible(name, gamma, W, seed.diag.get('reason', 'seed probe infeasible'))

    R_perp = _orthogonal_rotation(inst, W)
    U0 = seed.dW.W1 @ R_perp.T
    r_old = residuals(inst, W)
    Z, _ = _sphere_search(inst, r_old, FactorPair(U0), gamma, iters)
    return _measured(
        inst, W, FactorPair(Z.W1 @ R_perp), name, gamma,
        diag={'seed_delta': seed.delta_f, 'iters': iters},
    )


def asym_sensing_refined_probe(inst: Instance, W: FactorPair, gamma: float, tau: float = 0.0,
                               iters: int = REFINE_ITERS) -> ProbeResult:
    """
    Start from the singular-subspace move over the whole kernel intersection
    S (p = k′) and search (Y1, Y2) on the γ-sphere; dW = (Y1·Sᵀ, S·Y2)
    changes the product by Y1·Y2 when τ = 0.
    """
    name = ProbeNameEnum.ASYM_SENSING_REFINED
    _require_kind(inst, ProblemKindEnum.MS_ASYM, name)
    St = inst.noise.St
    W1_tau, _ = linalg.threshold_svd(W.W1, tau)
    W2_tau, _ = linalg.threshold_svd(W.W2, tau)
    S = linalg.kernel_basis(np.vstack([W1_tau, W2_tau.T]))
    k_prime = min(int(S.shape[1]), inst.d1, inst.d2)
    if k_prime == 0:
        return _infeasible(name, gamma, W, 'trivial kernel intersection')
    if St.size == 0:
        return _infeasible(name, gamma, W, 'no measurement with |eps| >= t0')

    S = S[:, :k_prime]
    signs = np.sign(inst.noise.eps[St])
    tilde = linalg.svd(np.tensordot(signs, inst.ens.matrices[St], axes=(0, 0)))
    scale = gamma / np.sqrt(2.0 * k_prime)
    Z0 = FactorPair(scale * tilde.U[:, :k_prime], scale * tilde.V[:, :k_prime].T)

    # Search on the exact product change Y1·Y2, then measure the real move
    r_old = residuals(inst, W)
    Z, _ = _sphere_search(inst, r_old, Z0, gamma, iters)
    dW = FactorPair(Z.W1 @ S.T, S @ Z.W2)
    return _measured(inst, W, dW, name, gamma, diag={'kernel_dim': k_prime, 'iters': iters})


# ──────────────────────────────────────────────
# Baselines
# ──────────────────────────────────────────────

def random_direction(W: FactorPair, rng: np.random.Generator) -> FactorPair:
    """Uniform direction on the unit sphere of the factor space."""
    D1 = rng.standard_normal(W.W1.shape)
    D = FactorPair(D1) if W.symmetric else FactorPair(D1, rng.standard_normal(W.W2.shape))
    return D.scaled(1.0 / D.norm())


def evaluate_direction(inst: Instance, W: FactorPair, dW: FactorPair, name=ProbeNameEnum.DIRECTION) -> ProbeResult:
    return _measured(inst, W, dW, name, dW.norm())


def random_sphere_probe(inst: Instance, W: FactorPair, gamma: float, n: int,
                        rng: np.random.Generator, directions=()) -> ProbeResult:
    """
    Most negative delta_f over n uniform directions on the radius-γ sphere,
    plus any extra directions given (rescaled to radius γ).
    """
    if n < 1 and not directions:
        raise ValueError("random_sphere_probe needs n >= 1")
    r_old = residuals(inst, W)
    best_delta, best_dW = np.inf, W.zeros_like()

    candidates = [D for D in directions if D.norm() > 0]
    candidates = [D.scaled(1.0 / D.norm()) for D in candidates]
    for _ in range(n):
        candidates.append(random_direction(W, rng))

    for D in candidates:
        dW = D.scaled(gamma)
        delta = loss_change(inst, W, dW, r_old=r_old)
        if delta < best_delta:
            best_delta, best_dW = delta, dW

    return ProbeResult(
        name=ProbeNameEnum.RANDOM_SPHERE, gamma=gamma, dW=best_dW, delta_f=float(best_delta),
        predicted=None, feasible=True, diag={'samples': len(candidates), 'norm': best_dW.norm()},
    )
