"""
Estimador por Máxima Verosimilitud.

Orquesta el ajuste de un modelo:
1. Valores iniciales (o arranque anidado desde el modelo base)
2. Minimización de −ℓ/n sobre (β, γ, log α)
3. Hessiana numérica de ℓ en los parámetros naturales (β, γ, α)
4. Matriz de varianzas-covarianzas y diagnósticos
"""

import logging
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from core.distribuciones import link, matriz_pmf, y_max_adaptativo
from core.inferencia import es_definida_positiva, varcov
from core.optimizador import ResultadoOptimizacion, minimizar, numeric_hessian, pasos_diferencias
from core.verosimilitud import loglik, starting_values
from models.ajuste import ModeloAjustado, OpcionesAjuste, huella_datos
from models.datos import DatosDiseno, EspecificacionModelo
from models.familia import Parametros
from utils.loaders import get_loader

logger = logging.getLogger(__name__)

# λ̂_i por debajo de este valor se reporta como estimación en la frontera
UMBRAL_FRONTERA = 1e-6


def opciones_por_defecto() -> OpcionesAjuste:
    """Opciones del optimizador según config/ajuste.yaml (o los valores de la clase)."""
    try:
        return OpcionesAjuste.from_config(get_loader().cargar_opciones_ajuste())
    except FileNotFoundError:
        logger.warning("config/ajuste.yaml no encontrado; se usan opciones por defecto")
        return OpcionesAjuste()


def _validar_diseno(spec: EspecificacionModelo, dd: DatosDiseno) -> None:
    if spec.family.es_inflada and dd.Z is None:
        raise ValueError(f"{spec.family.etiqueta} requiere un diseño con matriz Z")
    if dd.k != len(spec.x_terms) + 1:
        raise ValueError(f"X tiene {dd.k} columnas y x_terms define {len(spec.x_terms) + 1}")


def _valores_iniciales(
    spec: EspecificacionModelo,
    dd: DatosDiseno,
    opts: OpcionesAjuste
) -> Parametros:
    """Arranque explícito, anidado o por momentos, en ese orden."""
    familia = spec.family

    if opts.warm_start is not None:
        opts.warm_start.validar_para(familia, k=dd.k, p=dd.p if familia.es_inflada else None)
        return opts.warm_start

    if familia.es_inflada and opts.nested_warm_start:
        opts_base = OpcionesAjuste(
            gradient_tolerance=opts.gradient_tolerance,
            max_iterations=opts.max_iterations,
            fd_step_scale=opts.fd_step_scale,
            hessian_step_scale=opts.hessian_step_scale,
            method=opts.method,
            max_restarts=opts.max_restarts
        )
        spec_base = spec.con_familia(familia.base)
        base, _ = _optimizar(spec_base, dd, opts_base, starting_values(spec_base, dd))
        logger.debug(f"Arranque anidado desde {familia.base.etiqueta}: beta={base.beta}")
        return Parametros(beta=base.beta, gamma=np.zeros(dd.p), alpha=base.alpha)

    return starting_values(spec, dd)


def _optimizar(
    spec: EspecificacionModelo,
    dd: DatosDiseno,
    opts: OpcionesAjuste,
    inicio: Parametros
) -> Tuple[Parametros, ResultadoOptimizacion]:
    """Minimiza −ℓ/n sobre (β, γ, log α) desde `inicio`."""
    familia = spec.family
    p = dd.p if familia.es_inflada else 0

    def objetivo(v: np.ndarray) -> float:
        try:
            params = Parametros.from_vector(familia, v, dd.k, p, log_alpha=True)
        except ValueError:
            # log α desbordó
            return np.inf
        return -loglik(familia, params, dd) / dd.n

    resultado = minimizar(
        objetivo,
        inicio.to_vector(log_alpha=True),
        metodo=opts.method,
        tolerancia=opts.gradient_tolerance,
        max_iteraciones=opts.iteraciones_para(inicio.dimension),
        escala_paso=opts.fd_step_scale,
        reinicios=opts.max_restarts
    )
    estimados = Parametros.from_vector(familia, resultado.x, dd.k, p, log_alpha=True)
    return estimados, resultado


def maximize(
    spec: EspecificacionModelo,
    dd: DatosDiseno,
    opts: Optional[OpcionesAjuste] = None
) -> ModeloAjustado:
    """
    Ajusta el modelo por máxima verosimilitud.

    La no convergencia no es una excepción: se devuelve el modelo con
    converged=False y el diagnóstico en `mensaje` y `advertencias`.

    Args:
        spec: Especificación del modelo
        dd: Datos de diseño construidos con `build_design`
        opts: Opciones del optimizador (por defecto las de config/ajuste.yaml)

    Returns:
        ModeloAjustado
    """
    opts = opts or opciones_por_defecto()
    _validar_diseno(spec, dd)
    familia = spec.family
    logger.info(f"Ajustando {familia.etiqueta} (n={dd.n}, k={dd.k}, p={dd.p})")

    inicio = _valores_iniciales(spec, dd, opts)
    estimados, resultado = _optimizar(spec, dd, opts, inicio)
    ell = loglik(familia, estimados, dd)
    advertencias: List[str] = []

    if not resultado.convergio:
        logger.warning(
            f"{familia.etiqueta} no convergió: {resultado.mensaje} "
            f"(|g|={resultado.norma_gradiente:.3g})"
        )

    lam = link(familia, estimados, dd.X, dd.Z if familia.es_inflada else None).lam
    if np.min(lam) < UMBRAL_FRONTERA:
        nota = f"λ̂ cerca de la frontera (min λ̂_i = {np.min(lam):.3g})"
        logger.warning(nota)
        advertencias.append(nota)

    matriz = _varcov_natural(spec, dd, estimados, opts, advertencias)

    x_names = dd.x_names
    z_names = dd.z_names if familia.es_inflada else None
    modelo = ModeloAjustado(
        spec=spec,
        estimates=estimados,
        loglik=ell,
        varcov=matriz,
        converged=resultado.convergio,
        iterations=resultado.iteraciones,
        n=dd.n,
        param_names=estimados.nombres(x_names, z_names),
        grad_norm=resultado.norma_gradiente,
        mensaje=resultado.mensaje,
        advertencias=advertencias,
        huella=huella_datos(dd)
    )

    logger.info(
        f"{familia.etiqueta} ajustado: loglik={ell:.6f}, convergió={modelo.converged}, "
        f"iteraciones={modelo.iterations}"
    )
    return modelo


def _varcov_natural(
    spec: EspecificacionModelo,
    dd: DatosDiseno,
    estimados: Parametros,
    opts: OpcionesAjuste,
    advertencias: List[str]
) -> Optional[np.ndarray]:
    """Hessiana numérica de ℓ en (β, γ, α) e inversión; None si es singular o no definida positiva."""
    familia = spec.family
    p = dd.p if familia.es_inflada else 0
    theta = estimados.to_vector()

    # X o Z de rango incompleto: información singular
    matrices = [('X', dd.X)] + ([('Z', dd.Z)] if familia.es_inflada else [])
    deficientes = [nombre for nombre, M in matrices if np.linalg.matrix_rank(M) < M.shape[1]]
    if deficientes and not opts.allow_pinv:
        nota = f"varcov no disponible: matriz de diseño {', '.join(deficientes)} de rango incompleto"
        logger.warning(nota)
        advertencias.append(nota)
        return None

    pasos = pasos_diferencias(theta, opts.hessian_step_scale)
    if familia.usa_alpha:
        # El paso en α no puede cruzar a α <= 0
        pasos[-1] = min(pasos[-1], theta[-1] / 2.0)

    def ell(v: np.ndarray) -> float:
        return loglik(familia, Parametros.from_vector(familia, v, dd.k, p), dd)

    hessiana = numeric_hessian(ell, theta, opts.hessian_step_scale, pasos=pasos)
    try:
        V = varcov(hessiana, opts.condition_limit, opts.allow_pinv)
    except np.linalg.LinAlgError as e:
        nota = f"varcov no disponible: {e}"
        logger.warning(nota)
        advertencias.append(nota)
        return None

    # Solo con pseudo-inversa permitida puede llegar aquí una V no definida positiva
    if not es_definida_positiva(V):
        advertencias.append("varcov no definida positiva: errores estándar no confiables")
    return V


def predicted_counts(
    fm: ModeloAjustado,
    dd: DatosDiseno,
    y_max: Optional[int] = None,
    cobertura: float = 1.0 - 1e-8
) -> pd.Series:
    """
    Conteos predichos: entrada y = Σ_i pmf(y; λ̂_i, ω̂_i, α̂).

    Args:
        fm: Modelo ajustado
        dd: Datos de diseño
        y_max: Último conteo; si es None se elige para cubrir `cobertura` de la masa
        cobertura: Masa mínima por observación en modo adaptativo

    Returns:
        Serie indexada por y = 1..y_max
    """
    familia = fm.familia
    enlazados = link(familia, fm.estimates, dd.X, dd.Z if familia.es_inflada else None)
    alpha = fm.estimates.alpha

    if y_max is None:
        y_max = y_max_adaptativo(familia, enlazados, alpha, masa=cobertura)

    conteos = matriz_pmf(familia, enlazados, alpha, y_max).sum(axis=1)
    return pd.Series(conteos, index=pd.RangeIndex(1, y_max + 1, name='y'), name=familia.etiqueta)
