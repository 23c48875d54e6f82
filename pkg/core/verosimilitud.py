"""
Log-verosimilitudes de las cuatro familias y valores iniciales.

Las familias infladas usan la forma separada por el indicador I_1 (y_i == 1):
    I_1 · log σ(η_i) + (1 − I_1) · [log σ(−η_i) − log(1 − f(1)) + log f(y_i)]
que es algebraicamente Σ log pmf y no pierde precisión en deflación extrema.
"""

import logging
from typing import Optional

import numpy as np

from core.distribuciones import link, log_factorial, log_pmf
from models.datos import DatosDiseno, EspecificacionModelo
from models.familia import Familia, Parametros

logger = logging.getLogger(__name__)

__all__ = [
    'log_factorial',
    'loglik_obs',
    'loglik',
    'loglik_pp',
    'loglik_ztnb',
    'loglik_oipp',
    'loglik_oiztnb',
    'starting_values',
]


def loglik_obs(familia: Familia, params: Parametros, dd: DatosDiseno) -> np.ndarray:
    """
    Contribuciones log pmf(y_i) por observación.

    Returns:
        Vector de longitud n; −inf donde los parámetros salen del dominio
        numérico (λ desborda o se anula)

    Raises:
        ValueError: Si las dimensiones no coinciden con X/Z
    """
    Z = dd.Z if familia.es_inflada else None
    if familia.es_inflada and Z is None:
        raise ValueError(f"{familia.etiqueta} requiere la matriz Z en el diseño")
    params.validar_para(familia, k=dd.k, p=dd.p if familia.es_inflada else None)

    try:
        enlazados = link(familia, params, dd.X, Z)
        with np.errstate(all='ignore'):
            contribuciones = np.asarray(log_pmf(familia, enlazados, params.alpha, dd.y))
    except (OverflowError, ValueError) as e:
        logger.debug(f"loglik fuera de dominio para {familia.etiqueta}: {e}")
        return np.full(dd.n, -np.inf)

    return np.where(np.isnan(contribuciones), -np.inf, contribuciones)


def loglik(familia: Familia, params: Parametros, dd: DatosDiseno) -> float:
    """ℓ total de la familia en `params`."""
    return float(np.sum(loglik_obs(familia, params, dd)))


# =============================================================================
# LOG-VEROSIMILITUDES POR FAMILIA
# =============================================================================

def loglik_pp(beta: np.ndarray, dd: DatosDiseno) -> float:
    """ℓ de la Poisson positiva."""
    return loglik(Familia.PP, Parametros(beta=beta), dd)


def loglik_ztnb(beta: np.ndarray, alpha: float, dd: DatosDiseno) -> float:
    """ℓ de la binomial negativa truncada en cero (θ = λ_i/α)."""
    return loglik(Familia.ZTNB, Parametros(beta=beta, alpha=alpha), dd)


def loglik_oipp(beta: np.ndarray, gamma: np.ndarray, dd: DatosDiseno) -> float:
    """ℓ de la Poisson positiva inflada en uno."""
    return loglik(Familia.OIPP, Parametros(beta=beta, gamma=gamma), dd)


def loglik_oiztnb(
    beta: np.ndarray,
    gamma: np.ndarray,
    alpha: float,
    dd: DatosDiseno
) -> float:
    """
    ℓ de la binomial negativa truncada inflada en uno.

    log Γ(α+y) − log Γ(α) se acumula como Σ_{j<y} log(α+j).
    """
    return loglik(Familia.OIZTNB, Parametros(beta=beta, gamma=gamma, alpha=alpha), dd)


# =============================================================================
# VALORES INICIALES
# =============================================================================

def alpha_inicial(y: np.ndarray) -> float:
    """
    α inicial por momentos: max(0.1, m²/(v − m)) si hay sobredispersión, 1.0 si no.
    """
    media = float(np.mean(y))
    varianza = float(np.var(y, ddof=1)) if len(y) > 1 else float('nan')
    if varianza > media:
        return max(0.1, media ** 2 / (varianza - media))
    return 1.0


def starting_values(spec: EspecificacionModelo, dd: DatosDiseno) -> Parametros:
    """
    Valores iniciales seguros.

    β = (log(media(y)), 0, ..., 0); γ = 0 (cada ω_i en su punto medio, con
    pmf(1) = 1/2); α por momentos.
    """
    familia = spec.family
    beta = np.zeros(dd.k)
    beta[0] = np.log(np.mean(dd.y))

    gamma: Optional[np.ndarray] = np.zeros(dd.p) if familia.es_inflada else None
    alpha = alpha_inicial(dd.y) if familia.usa_alpha else None

    return Parametros(beta=beta, gamma=gamma, alpha=alpha)
