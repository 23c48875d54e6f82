"""
Efectos Marginales.

Derivadas analíticas de E[y] respecto de un regresor continuo, contraste
E[y | D=1] − E[y | D=0] para dummies, agregación (efectos promedio, efecto
en las medias o en un punto) y errores estándar por método delta.

Para un regresor q con columna j en X y m en Z:
    ∂E/∂q = ∂E/∂λ · λβ_j + ∂E/∂η · γ_m
    ∂E/∂λ = ∂ω/∂λ · (1 − μ_b) + (1 − ω) μ_b'
    ∂E/∂η = (1 − L)σ(1 − σ) · (1 − μ_b)
    ∂ω/∂λ = L'(1 − σ),  L' = −f(1)·s/(1 − f(1))²,  s = ∂ log f(1)/∂λ
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Any, Optional

import numpy as np
from scipy.special import expit
from scipy.stats import norm

from core.distribuciones import enlazar, f1, mean, media_base
from core.inferencia import delta_method
from core.optimizador import numeric_gradient, pasos_diferencias
from models.ajuste import ModeloAjustado, EPS_MAQUINA
from models.datos import DatosDiseno
from models.familia import Familia, Parametros

logger = logging.getLogger(__name__)


class TipoAgregacion(Enum):
    """Modo de agregación de los efectos."""
    EFECTOS_PROMEDIO = "ae"  # En cada observación y luego promediados
    EFECTO_EN_MEDIAS = "em"  # En las medias muestrales de los regresores
    EN_PUNTO = "punto"  # En un punto dado


@dataclass
class Agregacion:
    """
    Agregación de los efectos.

    En EN_PUNTO, x_row y z_row son los valores de los regresores sin el
    intercepto (en el orden de x_terms y z_terms).
    """
    tipo: TipoAgregacion = TipoAgregacion.EFECTOS_PROMEDIO
    x_row: Optional[np.ndarray] = None
    z_row: Optional[np.ndarray] = None

    def __post_init__(self):
        """Valida que EN_PUNTO traiga el punto."""
        if self.tipo == TipoAgregacion.EN_PUNTO and self.x_row is None:
            raise ValueError("La agregación en un punto requiere x_row")

    @classmethod
    def desde_texto(cls, texto: str) -> 'Agregacion':
        """'ae' o 'em' (el modo en un punto solo está disponible desde la API)."""
        try:
            tipo = TipoAgregacion(texto.strip().lower())
        except ValueError:
            raise ValueError(f"Agregación '{texto}' no válida. Opciones: ae, em")
        return cls(tipo=tipo)

    def filas(self, spec_familia: Familia, dd: DatosDiseno) -> Dict[str, Optional[np.ndarray]]:
        """Filas de evaluación (con intercepto) para X y Z."""
        Z = dd.Z if spec_familia.es_inflada else None

        if self.tipo == TipoAgregacion.EFECTOS_PROMEDIO:
            return {'X': dd.X, 'Z': Z}

        if self.tipo == TipoAgregacion.EFECTO_EN_MEDIAS:
            return {
                'X': dd.X.mean(axis=0, keepdims=True),
                'Z': Z.mean(axis=0, keepdims=True) if Z is not None else None
            }

        x = np.concatenate(([1.0], np.asarray(self.x_row, dtype=float)))[np.newaxis, :]
        if x.shape[1] != dd.k:
            raise ValueError(f"x_row debe tener {dd.k - 1} valores, se recibieron {x.shape[1] - 1}")
        z = None
        if Z is not None:
            if self.z_row is None:
                raise ValueError("La agregación en un punto requiere z_row en familias infladas")
            z = np.concatenate(([1.0], np.asarray(self.z_row, dtype=float)))[np.newaxis, :]
            if z.shape[1] != dd.p:
                raise ValueError(f"z_row debe tener {dd.p - 1} valores, se recibieron {z.shape[1] - 1}")
        return {'X': x, 'Z': z}


@dataclass
class FilaEfecto:
    """Efecto marginal de un regresor."""
    nombre: str
    tipo: str  # 'continuo' | 'dummy'
    efecto: float
    error_estandar: Optional[float] = None
    z: Optional[float] = None
    p: Optional[float] = None


@dataclass
class EfectosMarginales:
    """Tabla de efectos marginales."""
    familia: str
    agregacion: str
    filas: List[FilaEfecto]
    advertencias: List[str] = field(default_factory=list)

    def fila(self, nombre: str) -> FilaEfecto:
        """
        Busca el efecto de un regresor.

        Raises:
            KeyError: Si el regresor no está en la tabla
        """
        for f in self.filas:
            if f.nombre == nombre:
                return f
        raise KeyError(f"Regresor '{nombre}' no está en la tabla de efectos")

    def to_dict(self) -> Dict[str, Any]:
        """Convierte a diccionario."""
        return {
            'family': self.familia,
            'aggregation': self.agregacion,
            'effects': [
                {
                    'name': f.nombre,
                    'kind': f.tipo,
                    'effect': f.efecto,
                    'se': f.error_estandar,
                    'z': f.z,
                    'p': f.p
                }
                for f in self.filas
            ],
            'advertencias': self.advertencias
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'EfectosMarginales':
        """Crea EfectosMarginales desde un diccionario."""
        filas = [
            FilaEfecto(
                nombre=e['name'],
                tipo=e['kind'],
                efecto=e['effect'],
                error_estandar=e.get('se'),
                z=e.get('z'),
                p=e.get('p')
            )
            for e in data['effects']
        ]
        return cls(
            familia=data['family'],
            agregacion=data['aggregation'],
            filas=filas,
            advertencias=data.get('advertencias', [])
        )


# =============================================================================
# DERIVADAS RESPECTO DE λ
# =============================================================================

def _score_f1(familia: Familia, lam: np.ndarray, alpha: Optional[float]) -> np.ndarray:
    """s = ∂ log f(1)/∂λ de la distribución base."""
    if familia.base == Familia.PP:
        return 1.0 / lam - 1.0 / -np.expm1(-lam)

    log1p_theta = np.log1p(lam / alpha)
    uno_menos_p = -np.expm1(-alpha * log1p_theta)
    potencia = np.exp(-(alpha + 1.0) * log1p_theta)
    return 1.0 / lam - (alpha + 1.0) / (alpha + lam) - potencia / uno_menos_p


def derivada_media_base(familia: Familia, lam: np.ndarray, alpha: Optional[float] = None) -> np.ndarray:
    """μ_b'(λ) de la distribución base truncada."""
    lam = np.asarray(lam, dtype=float)
    if familia.base == Familia.PP:
        uno_menos_e = -np.expm1(-lam)
        return (1.0 - (1.0 + lam) * np.exp(-lam)) / uno_menos_e ** 2

    log1p_theta = np.log1p(lam / alpha)
    uno_menos_p = -np.expm1(-alpha * log1p_theta)
    potencia = np.exp(-(alpha + 1.0) * log1p_theta)
    return (1.0 - lam * potencia / uno_menos_p) / uno_menos_p


def _columna(nombres: List[str], regresor: str) -> Optional[int]:
    return nombres.index(regresor) if regresor in nombres else None


def dmean(
    familia: Familia,
    params: Parametros,
    X: np.ndarray,
    Z: Optional[np.ndarray],
    x_index: Optional[int],
    z_index: Optional[int]
) -> np.ndarray:
    """
    ∂E[y_i]/∂q por fila, para un regresor en la columna x_index de X y/o z_index de Z.

    Args:
        familia: Familia del modelo
        params: Parámetros estructurales
        X: Filas de X (con intercepto)
        Z: Filas de Z (con intercepto), None en familias base
        x_index: Columna del regresor en X (None si no está)
        z_index: Columna del regresor en Z (None si no está)

    Raises:
        ValueError: Si se pide el intercepto o el regresor no está en ningún enlace
    """
    if x_index == 0 or z_index == 0:
        raise ValueError("El intercepto no tiene efecto marginal")
    if x_index is None and z_index is None:
        raise ValueError("El regresor no está en X ni en Z")

    X = np.atleast_2d(np.asarray(X, dtype=float))
    alpha = params.alpha
    lam = np.exp(X @ params.beta)
    dlam = lam * params.beta[x_index] if x_index is not None else np.zeros_like(lam)

    mu_b = media_base(familia, lam, alpha)
    dmu_b = derivada_media_base(familia, lam, alpha)

    if not familia.es_inflada:
        return dmu_b * dlam

    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    sigma = expit(Z @ params.gamma)
    f_uno = np.asarray(f1(familia, lam, alpha))
    cota = -f_uno / (1.0 - f_uno)
    omega = cota + (1.0 - cota) * sigma

    d_cota = -f_uno * _score_f1(familia, lam, alpha) / (1.0 - f_uno) ** 2
    dE_dlam = d_cota * (1.0 - sigma) * (1.0 - mu_b) + (1.0 - omega) * dmu_b
    dE_deta = (1.0 - cota) * sigma * (1.0 - sigma) * (1.0 - mu_b)

    deta = params.gamma[z_index] if z_index is not None else 0.0
    return dE_dlam * dlam + dE_deta * deta


def dmean_oipp(
    params: Parametros,
    x_row: np.ndarray,
    z_row: np.ndarray,
    x_index: Optional[int],
    z_index: Optional[int]
) -> float:
    """∂E[y]/∂q del OIPP en un punto (filas con intercepto)."""
    return float(dmean(Familia.OIPP, params, x_row, z_row, x_index, z_index)[0])


def dmean_oiztnb(
    params: Parametros,
    x_row: np.ndarray,
    z_row: np.ndarray,
    x_index: Optional[int],
    z_index: Optional[int]
) -> float:
    """∂E[y]/∂q del OIZTNB en un punto (filas con intercepto)."""
    return float(dmean(Familia.OIZTNB, params, x_row, z_row, x_index, z_index)[0])


# =============================================================================
# MEDIAS Y CONTRASTES
# =============================================================================

def media_filas(
    familia: Familia,
    params: Parametros,
    X: np.ndarray,
    Z: Optional[np.ndarray]
) -> np.ndarray:
    """E[y_i] en cada fila de X (y Z)."""
    lam = np.exp(np.atleast_2d(X) @ params.beta)
    eta = np.atleast_2d(Z) @ params.gamma if familia.es_inflada else None
    return np.atleast_1d(mean(familia, enlazar(familia, lam, params.alpha, eta=eta), params.alpha))


def _contraste_dummy(
    familia: Familia,
    params: Parametros,
    X: np.ndarray,
    Z: Optional[np.ndarray],
    x_index: Optional[int],
    z_index: Optional[int]
) -> np.ndarray:
    """E[y | D=1] − E[y | D=0] por fila, con D forzada en ambos enlaces."""
    def forzar(matriz: Optional[np.ndarray], indice: Optional[int], valor: float) -> Optional[np.ndarray]:
        if matriz is None or indice is None:
            return matriz
        copia = np.array(matriz, dtype=float, copy=True)
        copia[:, indice] = valor
        return copia

    uno = media_filas(familia, params, forzar(X, x_index, 1.0), forzar(Z, z_index, 1.0))
    cero = media_filas(familia, params, forzar(X, x_index, 0.0), forzar(Z, z_index, 0.0))
    return uno - cero


def _funcion_efecto(
    fm: ModeloAjustado,
    dd: DatosDiseno,
    regresor: str,
    agregacion: Agregacion,
    es_dummy: bool
) -> Callable[[Parametros], float]:
    """Efecto agregado como función de los parámetros."""
    familia = fm.familia
    x_index = _columna(dd.x_names, regresor)
    z_index = _columna(dd.z_names, regresor) if familia.es_inflada else None
    if x_index is None and z_index is None:
        raise ValueError(f"El regresor '{regresor}' no está en el modelo")

    filas = agregacion.filas(familia, dd)
    X, Z = filas['X'], filas['Z']

    def efecto(params: Parametros) -> float:
        if es_dummy:
            valores = _contraste_dummy(familia, params, X, Z, x_index, z_index)
        else:
            valores = dmean(familia, params, X, Z, x_index, z_index)
        return float(np.mean(valores))

    return efecto


def dummy_effect(
    fm: ModeloAjustado,
    dd: DatosDiseno,
    regressor: str,
    aggregation: Optional[Agregacion] = None,
    forzar: bool = False
) -> float:
    """
    Efecto de una dummy: E[y | D=1] − E[y | D=0] a través de ambos enlaces.

    Args:
        fm: Modelo ajustado
        dd: Datos de diseño
        regressor: Nombre de la columna dummy
        aggregation: Modo de agregación (por defecto efectos promedio)
        forzar: Tratar la columna como dummy aunque no tome solo valores {0, 1}

    Raises:
        ValueError: Si la columna no es dummy y no se fuerza
    """
    if not forzar and not dd.dummy_flags.get(regressor, False):
        raise ValueError(f"La columna '{regressor}' no es dummy (valores fuera de {{0, 1}})")

    efecto = _funcion_efecto(fm, dd, regressor, aggregation or Agregacion(), es_dummy=True)
    return efecto(fm.estimates)


# =============================================================================
# TABLA DE EFECTOS
# =============================================================================

def _pasos_jacobiano(fm: ModeloAjustado, escala: float) -> np.ndarray:
    theta = fm.estimates.to_vector()
    pasos = pasos_diferencias(theta, escala)
    if fm.familia.usa_alpha:
        pasos[-1] = min(pasos[-1], theta[-1] / 2.0)
    return pasos


def margins(
    fm: ModeloAjustado,
    dd: DatosDiseno,
    aggregation: Optional[Agregacion] = None,
    escala_paso: float = EPS_MAQUINA ** (1.0 / 3.0)
) -> EfectosMarginales:
    """
    Efectos marginales de todos los regresores (sin el intercepto).

    Continuos por derivada analítica, dummies por contraste; errores
    estándar por método delta con jacobiano por diferencias centrales.

    Args:
        fm: Modelo ajustado
        dd: Datos de diseño del ajuste
        aggregation: Modo de agregación (por defecto efectos promedio)
        escala_paso: Escala del paso del jacobiano numérico

    Returns:
        EfectosMarginales
    """
    agregacion = aggregation or Agregacion()
    familia = fm.familia
    k, p = dd.k, (dd.p if familia.es_inflada else 0)
    theta = fm.estimates.to_vector()
    pasos = _pasos_jacobiano(fm, escala_paso)

    advertencias: List[str] = []
    if fm.varcov is None:
        advertencias.append("Matriz de varianzas-covarianzas no disponible: efectos sin errores estándar")
        logger.warning(advertencias[-1])

    filas: List[FilaEfecto] = []
    for regresor in fm.spec.regresores:
        es_dummy = dd.dummy_flags.get(regresor, False)
        efecto = _funcion_efecto(fm, dd, regresor, agregacion, es_dummy)
        fila = FilaEfecto(
            nombre=regresor,
            tipo='dummy' if es_dummy else 'continuo',
            efecto=efecto(fm.estimates)
        )

        if fm.varcov is not None:
            jacobiano = numeric_gradient(
                lambda v: efecto(Parametros.from_vector(familia, v, k, p)),
                theta,
                escala_paso,
                pasos=pasos
            )
            error = float(delta_method(jacobiano[np.newaxis, :], fm.varcov)[0])
            if np.isfinite(error):
                fila.error_estandar = error
                if error > 0:
                    fila.z = fila.efecto / error
                    fila.p = float(2.0 * norm.sf(abs(fila.z)))

        filas.append(fila)
        logger.debug(f"Efecto marginal {regresor} ({fila.tipo}): {fila.efecto:.6g}")

    return EfectosMarginales(
        familia=familia.etiqueta,
        agregacion=agregacion.tipo.value,
        filas=filas,
        advertencias=advertencias
    )
