"""
Inferencia sobre modelos ajustados.

- varcov: −H⁻¹ a partir de la Hessiana numérica de ℓ
- summarize: tabla de coeficientes e inflación promedio
- signif_wald / one_wald / one_lrt: pruebas chi-cuadrado
- delta_method: errores estándar de funciones de los estimadores
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Any, Optional

import numpy as np
from scipy.stats import chi2, norm

from core.distribuciones import link
from models.ajuste import ModeloAjustado
from models.datos import DatosDiseno

logger = logging.getLogger(__name__)

# LRT negativos por encima de este valor se atribuyen a ruido del optimizador
TOLERANCIA_LRT = 1e-6


# =============================================================================
# RESULTADOS
# =============================================================================

@dataclass
class ResultadoPrueba:
    """Resultado de una prueba chi-cuadrado."""
    statistic: float
    dof: int
    p_value: float
    method: str
    notas: List[str] = field(default_factory=list)

    def __post_init__(self):
        """Valida estadístico, grados de libertad y p-valor (NaN si la prueba no está disponible)."""
        if self.statistic < 0:
            raise ValueError(f"Estadístico negativo: {self.statistic}")
        if self.dof < 1:
            raise ValueError(f"Grados de libertad deben ser positivos: {self.dof}")
        if not (0.0 <= self.p_value <= 1.0 or math.isnan(self.p_value)):
            raise ValueError(f"p-valor fuera de [0, 1]: {self.p_value}")

    @property
    def disponible(self) -> bool:
        return not math.isnan(self.statistic)

    @classmethod
    def chi_cuadrado(
        cls,
        estadistico: float,
        dof: int,
        metodo: str,
        notas: Optional[List[str]] = None
    ) -> 'ResultadoPrueba':
        """Construye el resultado con la cola superior de chi2(dof)."""
        return cls(
            statistic=float(estadistico),
            dof=int(dof),
            p_value=float(chi2.sf(estadistico, dof)),
            method=metodo,
            notas=list(notas or [])
        )

    @classmethod
    def no_disponible(cls, dof: int, metodo: str, nota: str) -> 'ResultadoPrueba':
        """Prueba que no pudo calcularse: estadístico y p-valor NaN."""
        return cls(statistic=float('nan'), dof=int(dof), p_value=float('nan'), method=metodo, notas=[nota])

    def to_dict(self) -> Dict[str, Any]:
        """Convierte a diccionario."""
        return {
            'statistic': self.statistic,
            'dof': self.dof,
            'p_value': self.p_value,
            'method': self.method,
            'notas': self.notas
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ResultadoPrueba':
        """Crea ResultadoPrueba desde un diccionario (null se lee como NaN)."""
        return cls(
            statistic=float('nan') if data['statistic'] is None else data['statistic'],
            dof=data['dof'],
            p_value=float('nan') if data['p_value'] is None else data['p_value'],
            method=data['method'],
            notas=data.get('notas', [])
        )


@dataclass
class FilaCoeficiente:
    """Fila de la tabla de coeficientes."""
    nombre: str
    estimacion: float
    error_estandar: Optional[float] = None
    z: Optional[float] = None
    p: Optional[float] = None


@dataclass
class TablaResumen:
    """
    Resumen de un modelo ajustado.

    avg_one_inflation = Σω̂_i/n y avg_abs_one_inflation = Σ|ω̂_i|/n solo
    existen en familias infladas.
    """
    familia: str
    filas: List[FilaCoeficiente]
    loglik: float
    converged: bool
    n: int
    avg_one_inflation: Optional[float] = None
    avg_abs_one_inflation: Optional[float] = None
    advertencias: List[str] = field(default_factory=list)

    def fila(self, nombre: str) -> FilaCoeficiente:
        """
        Busca una fila por nombre de parámetro.

        Raises:
            KeyError: Si no existe
        """
        for f in self.filas:
            if f.nombre == nombre:
                return f
        raise KeyError(f"Parámetro '{nombre}' no está en el resumen")

    def to_dict(self) -> Dict[str, Any]:
        """Convierte a diccionario (claves del reporte JSON)."""
        return {
            'family': self.familia,
            'estimates': {f.nombre: f.estimacion for f in self.filas},
            'se': {f.nombre: f.error_estandar for f in self.filas},
            'z': {f.nombre: f.z for f in self.filas},
            'p': {f.nombre: f.p for f in self.filas},
            'loglik': self.loglik,
            'converged': self.converged,
            'avg_one_inflation': self.avg_one_inflation,
            'avg_abs_one_inflation': self.avg_abs_one_inflation,
            'n': self.n,
            'advertencias': self.advertencias
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TablaResumen':
        """Crea TablaResumen desde un diccionario."""
        filas = [
            FilaCoeficiente(
                nombre=nombre,
                estimacion=estimacion,
                error_estandar=data['se'].get(nombre),
                z=data['z'].get(nombre),
                p=data['p'].get(nombre)
            )
            for nombre, estimacion in data['estimates'].items()
        ]
        return cls(
            familia=data['family'],
            filas=filas,
            loglik=data['loglik'],
            converged=data['converged'],
            n=data['n'],
            avg_one_inflation=data.get('avg_one_inflation'),
            avg_abs_one_inflation=data.get('avg_abs_one_inflation'),
            advertencias=data.get('advertencias', [])
        )


# =============================================================================
# MATRIZ DE VARIANZAS-COVARIANZAS
# =============================================================================

def varcov(
    hessiana: np.ndarray,
    limite_condicion: float = 1e12,
    permitir_pinv: bool = False
) -> np.ndarray:
    """
    V = −H⁻¹ con H simetrizada como (H + Hᵀ)/2.

    Args:
        hessiana: Hessiana de ℓ en el óptimo
        limite_condicion: Número de condición máximo aceptado
        permitir_pinv: Usar pseudo-inversa cuando H es singular

    Returns:
        Matriz simétrica

    Raises:
        ValueError: Si H no es cuadrada
        np.linalg.LinAlgError: Si H es singular o V no es definida positiva
            y no se permite la pseudo-inversa
    """
    H = np.atleast_2d(np.asarray(hessiana, dtype=float))
    if H.shape[0] != H.shape[1]:
        raise ValueError(f"La Hessiana debe ser cuadrada, se recibió {H.shape}")

    H = (H + H.T) / 2.0
    condicion = np.linalg.cond(H) if np.all(np.isfinite(H)) else np.inf

    if not np.isfinite(condicion) or condicion > limite_condicion:
        if not permitir_pinv:
            raise np.linalg.LinAlgError(
                f"Hessiana singular o mal condicionada (condición {condicion:.3g})"
            )
        logger.warning(f"Hessiana mal condicionada ({condicion:.3g}); se usa pseudo-inversa")
        V = -np.linalg.pinv(H)
    else:
        V = -np.linalg.inv(H)

    V = (V + V.T) / 2.0
    if not es_definida_positiva(V):
        minimo = np.min(np.linalg.eigvalsh(V)) if np.all(np.isfinite(V)) else np.nan
        mensaje = f"La matriz de varianzas-covarianzas no es definida positiva (autovalor mínimo {minimo:.3g})"
        if not permitir_pinv:
            raise np.linalg.LinAlgError(mensaje)
        logger.warning(mensaje)
    return V


def es_definida_positiva(V: np.ndarray) -> bool:
    """True si V es finita, con diagonal positiva y autovalor mínimo > 0."""
    V = np.atleast_2d(np.asarray(V, dtype=float))
    if not np.all(np.isfinite(V)) or np.any(np.diag(V) <= 0):
        return False
    return bool(np.min(np.linalg.eigvalsh((V + V.T) / 2.0)) > 0)


# =============================================================================
# RESUMEN
# =============================================================================

def summarize(fm: ModeloAjustado, dd: DatosDiseno) -> TablaResumen:
    """
    Tabla de coeficientes (estimación, EE, z, p bilateral normal).

    En familias infladas ω̂_i se recalcula con el enlace en los estimadores.
    """
    estimaciones = fm.estimates.to_vector()
    errores = fm.errores_estandar

    filas: List[FilaCoeficiente] = []
    for j, nombre in enumerate(fm.param_names):
        fila = FilaCoeficiente(nombre=nombre, estimacion=float(estimaciones[j]))
        if errores is not None and np.isfinite(errores[j]):
            fila.error_estandar = float(errores[j])
            # α está en la frontera bajo H0: α = 0; no se reporta z
            if nombre != 'alpha' and errores[j] > 0:
                fila.z = fila.estimacion / fila.error_estandar
                fila.p = float(2.0 * norm.sf(abs(fila.z)))
        filas.append(fila)

    advertencias = list(fm.advertencias)
    if errores is None:
        advertencias.append("Matriz de varianzas-covarianzas no disponible: sin errores estándar")

    promedio = promedio_abs = None
    if fm.familia.es_inflada:
        enlazados = link(fm.familia, fm.estimates, dd.X, dd.Z)
        omega = np.asarray(enlazados.omega, dtype=float)
        promedio = float(np.mean(omega))
        promedio_abs = float(np.mean(np.abs(omega)))

    return TablaResumen(
        familia=fm.familia.etiqueta,
        filas=filas,
        loglik=fm.loglik,
        converged=fm.converged,
        n=fm.n,
        avg_one_inflation=promedio,
        avg_abs_one_inflation=promedio_abs,
        advertencias=advertencias
    )


# =============================================================================
# PRUEBAS
# =============================================================================

def _wald(fm: ModeloAjustado, indices: List[int], metodo: str) -> ResultadoPrueba:
    """W = cᵀ [R V Rᵀ]⁻¹ c para los coeficientes en `indices`."""
    if fm.varcov is None:
        raise ValueError("La prueba de Wald requiere la matriz de varianzas-covarianzas")

    c = fm.estimates.to_vector()[indices]
    V = fm.varcov[np.ix_(indices, indices)]
    estadistico = float(c @ np.linalg.solve(V, c))
    return ResultadoPrueba.chi_cuadrado(max(estadistico, 0.0), len(indices), metodo)


def signif_wald(fm: ModeloAjustado, regressor: str) -> ResultadoPrueba:
    """
    Wald de H0: β_j = 0 y γ_m = 0 para un regresor (en X, Z o ambos).

    Raises:
        ValueError: Si el regresor no está en el modelo o falta varcov
    """
    indices = [
        fm.param_names.index(nombre)
        for nombre in (f"beta:{regressor}", f"gamma:{regressor}")
        if nombre in fm.param_names
    ]
    if not indices:
        raise ValueError(
            f"El regresor '{regressor}' no está en x_terms ni en z_terms del modelo"
        )
    return _wald(fm, indices, f"wald:{regressor}")


def one_wald(fm: ModeloAjustado) -> ResultadoPrueba:
    """
    Wald de no inflación en uno: H0: γ = 0, con dof = p (intercepto incluido).

    Raises:
        ValueError: Si el modelo no es de una familia inflada
    """
    if not fm.familia.es_inflada:
        raise ValueError(f"one_wald requiere una familia inflada, se recibió {fm.familia.etiqueta}")

    indices = [j for j, nombre in enumerate(fm.param_names) if nombre.startswith('gamma:')]
    return _wald(fm, indices, 'wald:no-inflacion')


def one_lrt(fm_oi: ModeloAjustado, fm_base: ModeloAjustado) -> ResultadoPrueba:
    """
    Razón de verosimilitudes de no inflación: LRT = −2(ℓ_base − ℓ_OI), dof = p.

    Valores negativos mayores que −1e−6 se llevan a 0 con advertencia.

    Raises:
        ValueError: Si los modelos no están anidados o no usan los mismos datos
        RuntimeError: Si el LRT es claramente negativo (falla del optimizador)
    """
    if not fm_oi.familia.es_inflada or fm_base.familia != fm_oi.familia.base:
        raise ValueError(
            f"Modelos no anidados: {fm_base.familia.etiqueta} no es la base de "
            f"{fm_oi.familia.etiqueta}"
        )
    if fm_oi.spec.x_terms != fm_base.spec.x_terms or fm_oi.spec.response != fm_base.spec.response:
        raise ValueError("Los modelos deben compartir respuesta y x_terms")
    if fm_oi.n != fm_base.n or (fm_oi.huella and fm_base.huella and fm_oi.huella != fm_base.huella):
        raise ValueError("Los modelos fueron ajustados con datos distintos")

    estadistico = -2.0 * (fm_base.loglik - fm_oi.loglik)
    notas: List[str] = []
    if estadistico < 0:
        if estadistico > -TOLERANCIA_LRT:
            nota = f"LRT negativo por ruido numérico ({estadistico:.3g}); se fija en 0"
            logger.warning(nota)
            notas.append(nota)
            estadistico = 0.0
        else:
            raise RuntimeError(
                f"LRT negativo ({estadistico:.6g}): el ajuste inflado no alcanzó el máximo"
            )

    dof = len(fm_oi.estimates.gamma)
    return ResultadoPrueba.chi_cuadrado(estadistico, dof, 'lrt:no-inflacion', notas)


# =============================================================================
# MÉTODO DELTA
# =============================================================================

def delta_method(jacobiano: np.ndarray, matriz_varcov: np.ndarray) -> np.ndarray:
    """
    Errores estándar por método delta: raíz de la diagonal de J V Jᵀ.

    Raises:
        ValueError: Si las columnas de J no coinciden con la dimensión de V
    """
    J = np.atleast_2d(np.asarray(jacobiano, dtype=float))
    V = np.atleast_2d(np.asarray(matriz_varcov, dtype=float))
    if J.shape[1] != V.shape[0] or V.shape[0] != V.shape[1]:
        raise ValueError(f"Jacobiano {J.shape} incompatible con varcov {V.shape}")

    varianzas = np.einsum('ij,jk,ik->i', J, V, J)
    negativas = varianzas < 0
    if negativas.any():
        logger.warning(f"Método delta: {int(negativas.sum())} varianza(s) negativa(s)")
    return np.where(negativas, np.nan, np.sqrt(np.abs(varianzas)))
