"""
Motor de Simulación Monte Carlo.

Orquesta un estudio de sesgo porcentual de los estimadores:
1. Para cada tamaño muestral y réplica, genera X (x1 ~ N(10,1), x2 ~ Bernoulli(0.5), Z = X)
2. Extrae y del proceso generador (OIPP u OIZTNB)
3. Ajusta cada familia pedida
4. Agrega el sesgo porcentual 100·media(θ̂ − θ)/θ sobre las réplicas convergidas
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Any, Optional, Tuple
import logging

import numpy as np
import pandas as pd

from core.diseno import build_design
from core.distribuciones import link
from core.estimador import maximize, opciones_por_defecto
from core.generador import Semilla, sample
from models.ajuste import OpcionesAjuste
from models.datos import ConjuntoDatos, EspecificacionModelo
from models.familia import Familia, Parametros
from utils.loaders import DataLoader

logger = logging.getLogger(__name__)

REGRESORES = ('x1', 'x2')

# Etiquetas cortas de los parámetros en el orden (β, γ, α)
ETIQUETAS_BETA = ('b0', 'b1', 'b2')
ETIQUETAS_GAMMA = ('g0', 'g1', 'g2')

CLAVES_CONFIG = {
    'dgp_family', 'beta', 'gamma', 'alpha', 'n', 'replications', 'fit_families',
    'master_seed', 'workers', 'media_x1', 'desviacion_x1', 'prob_x2'
}


@dataclass
class ConfiguracionSimulacion:
    """
    Configuración de un estudio Monte Carlo.

    `sample_sizes` admite varios n; cada combinación (n, réplica) usa su
    propio flujo aleatorio derivado de master_seed.
    """
    dgp_family: Familia
    true_params: Parametros
    sample_sizes: List[int]
    replications: int
    fit_families: List[Familia]
    master_seed: int = 0
    workers: int = 1
    media_x1: float = 10.0
    desviacion_x1: float = 1.0
    prob_x2: float = 0.5

    def __post_init__(self):
        """Valida la familia generadora, los parámetros y las familias a ajustar."""
        if not self.dgp_family.es_inflada:
            raise ValueError(f"El proceso generador debe ser OIPP u OIZTNB, no {self.dgp_family.etiqueta}")
        self.true_params.validar_para(self.dgp_family, k=len(REGRESORES) + 1, p=len(REGRESORES) + 1)

        permitidas = {self.dgp_family, self.dgp_family.base}
        fuera = [f.etiqueta for f in self.fit_families if f not in permitidas]
        if fuera:
            raise ValueError(
                f"Familias {fuera} no anidadas en {self.dgp_family.etiqueta}/{self.dgp_family.base.etiqueta}"
            )
        if not self.fit_families:
            raise ValueError("Debe ajustarse al menos una familia")
        if self.replications < 1:
            raise ValueError(f"replications debe ser positivo: {self.replications}")
        if not self.sample_sizes or min(self.sample_sizes) < 1:
            raise ValueError(f"Tamaños muestrales inválidos: {self.sample_sizes}")
        if self.workers < 1:
            raise ValueError(f"workers debe ser positivo: {self.workers}")
        if not 0.0 <= self.prob_x2 <= 1.0:
            raise ValueError(f"prob_x2 fuera de [0, 1]: {self.prob_x2}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ConfiguracionSimulacion':
        """
        Crea la configuración desde un diccionario plano.

        Raises:
            ValueError: Si hay claves desconocidas o faltan obligatorias
        """
        desconocidas = sorted(set(data) - CLAVES_CONFIG)
        if desconocidas:
            raise ValueError(f"Claves de configuración desconocidas: {desconocidas}")
        faltantes = sorted({'dgp_family', 'beta', 'gamma', 'n', 'replications'} - set(data))
        if faltantes:
            raise ValueError(f"Faltan claves de configuración: {faltantes}")

        dgp = Familia.desde_texto(str(data['dgp_family']))
        tamanos = data['n'] if isinstance(data['n'], list) else [data['n']]
        familias = data.get('fit_families') or [dgp.value, dgp.base.value]
        if not isinstance(familias, list):
            familias = [familias]

        return cls(
            dgp_family=dgp,
            true_params=Parametros(
                beta=data['beta'],
                gamma=data['gamma'],
                alpha=data.get('alpha') if dgp.usa_alpha else None
            ),
            sample_sizes=[int(n) for n in tamanos],
            replications=int(data['replications']),
            fit_families=[Familia.desde_texto(str(f)) for f in familias],
            master_seed=int(data.get('master_seed', 0)),
            workers=int(data.get('workers', 1)),
            media_x1=float(data.get('media_x1', 10.0)),
            desviacion_x1=float(data.get('desviacion_x1', 1.0)),
            prob_x2=float(data.get('prob_x2', 0.5))
        )

    def to_dict(self) -> Dict[str, Any]:
        """Convierte a diccionario plano (mismas claves que from_dict)."""
        return {
            'dgp_family': self.dgp_family.value,
            'beta': self.true_params.beta.tolist(),
            'gamma': self.true_params.gamma.tolist(),
            'alpha': self.true_params.alpha,
            'n': list(self.sample_sizes),
            'replications': self.replications,
            'fit_families': [f.value for f in self.fit_families],
            'master_seed': self.master_seed,
            'workers': self.workers,
            'media_x1': self.media_x1,
            'desviacion_x1': self.desviacion_x1,
            'prob_x2': self.prob_x2
        }

    def valores_verdaderos(self, familia: Familia) -> Dict[str, float]:
        """Valores verdaderos de los parámetros que estima `familia`."""
        valores = dict(zip(ETIQUETAS_BETA, self.true_params.beta))
        if familia.es_inflada:
            valores.update(zip(ETIQUETAS_GAMMA, self.true_params.gamma))
        # α solo tiene valor verdadero si el proceso generador es binomial negativo
        if familia.usa_alpha and self.true_params.alpha is not None:
            valores['alpha'] = self.true_params.alpha
        return {k: float(v) for k, v in valores.items()}


@dataclass
class TablaSesgos:
    """
    Resultado de un estudio Monte Carlo.

    `filas` tiene una fila por (familia, n, parámetro) con el sesgo
    porcentual, las réplicas usadas y las excluidas por no convergencia.
    `omega_promedio` es la inflación promedio empírica del proceso generador
    por tamaño muestral.
    """
    filas: pd.DataFrame
    omega_promedio: Dict[int, float]
    metadata: Dict[str, Any] = field(default_factory=dict)

    COLUMNAS = ['familia', 'n', 'parametro', 'verdadero', 'sesgo_pct',
                'replicas_usadas', 'excluidas', 'tasa_convergencia']

    def sesgo(self, familia: Familia, n: int, parametro: str) -> float:
        """
        Sesgo porcentual de una celda.

        Raises:
            KeyError: Si la celda no existe
        """
        mascara = (
            (self.filas['familia'] == familia.etiqueta)
            & (self.filas['n'] == n)
            & (self.filas['parametro'] == parametro)
        )
        if not mascara.any():
            raise KeyError(f"Celda inexistente: {familia.etiqueta}, n={n}, {parametro}")
        return float(self.filas.loc[mascara, 'sesgo_pct'].iloc[0])

    def excluidas(self, familia: Familia, n: int) -> int:
        """Réplicas excluidas (no convergidas o fallidas) para una familia y n."""
        mascara = (self.filas['familia'] == familia.etiqueta) & (self.filas['n'] == n)
        return int(self.filas.loc[mascara, 'excluidas'].iloc[0])

    def tabla_ancha(self) -> pd.DataFrame:
        """Formato por filas (familia, n) y columnas de parámetros."""
        ancha = self.filas.pivot_table(
            index=['familia', 'n'], columns='parametro', values='sesgo_pct', sort=False
        )
        orden = [c for c in ETIQUETAS_BETA + ETIQUETAS_GAMMA + ('alpha',) if c in ancha.columns]
        return ancha[orden]

    def to_dict(self) -> Dict[str, Any]:
        """Convierte a diccionario."""
        return {
            'filas': self.filas.to_dict(orient='records'),
            'omega_promedio': {str(n): w for n, w in self.omega_promedio.items()},
            'metadata': self.metadata
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TablaSesgos':
        """Crea TablaSesgos desde un diccionario."""
        return cls(
            filas=pd.DataFrame.from_records(data['filas'], columns=cls.COLUMNAS),
            omega_promedio={int(n): float(w) for n, w in data['omega_promedio'].items()},
            metadata=data.get('metadata', {})
        )


# =============================================================================
# RÉPLICA
# =============================================================================

def generar_regresores(
    rng: np.random.Generator,
    n: int,
    config: ConfiguracionSimulacion
) -> ConjuntoDatos:
    """x1 ~ N(media_x1, desviacion_x1), x2 ~ Bernoulli(prob_x2)."""
    x1 = rng.normal(config.media_x1, config.desviacion_x1, n)
    x2 = rng.binomial(1, config.prob_x2, n).astype(float)
    return ConjuntoDatos(column_names=list(REGRESORES), columns=[x1, x2])


def ejecutar_replica(
    config: ConfiguracionSimulacion,
    n: int,
    stream_id: int,
    opts: Optional[OpcionesAjuste] = None
) -> Dict[str, Any]:
    """
    Ejecuta una réplica: genera datos y ajusta cada familia.

    Returns:
        Diccionario con 'omega_promedio' y, por familia, el vector estimado
        (None si el ajuste falló o no convergió)
    """
    rng = Semilla(config.master_seed, stream_id).generador()
    regresores = generar_regresores(rng, n, config)
    X = np.column_stack([np.ones(n)] + regresores.columns)

    dgp = config.dgp_family
    y = sample(dgp, config.true_params, X, X, rng)
    omega = np.asarray(link(dgp, config.true_params, X, X).omega, dtype=float)

    datos = ConjuntoDatos(
        column_names=['y'] + list(REGRESORES),
        columns=[y.astype(float)] + regresores.columns
    )

    estimaciones: Dict[str, Optional[List[float]]] = {}
    for familia in config.fit_families:
        spec = EspecificacionModelo(
            family=familia,
            response='y',
            x_terms=REGRESORES,
            z_terms=REGRESORES if familia.es_inflada else ()
        )
        try:
            fm = maximize(spec, build_design(spec, datos), opts)
            if fm.converged:
                estimaciones[familia.value] = fm.estimates.to_vector().tolist()
            else:
                logger.warning(f"Réplica {stream_id} (n={n}): {familia.etiqueta} no convergió")
                estimaciones[familia.value] = None
        except Exception as e:
            logger.warning(f"Réplica {stream_id} (n={n}): {familia.etiqueta} falló: {e}")
            estimaciones[familia.value] = None

    logger.debug(f"Réplica {stream_id} (n={n}) completada")
    return {'omega_promedio': float(np.mean(omega)), 'estimaciones': estimaciones}


def _ejecutar_tarea(tarea: Tuple[ConfiguracionSimulacion, int, int, Optional[OpcionesAjuste]]) -> Dict[str, Any]:
    return ejecutar_replica(*tarea)


# =============================================================================
# SIMULADOR
# =============================================================================

class Simulator:
    """
    Motor principal de simulación.

    Ejecuta las réplicas (en serie o en procesos) y agrega los sesgos en el
    orden de las réplicas, independientemente del orden de terminación.
    """

    def __init__(self, loader: Optional[DataLoader] = None, opts: Optional[OpcionesAjuste] = None):
        """
        Inicializa el simulator.

        Args:
            loader: DataLoader para leer archivos de configuración
            opts: Opciones del optimizador para cada ajuste
        """
        self.loader = loader or DataLoader()
        self.opts = opts or opciones_por_defecto()
        logger.info("Simulator inicializado")

    def cargar_config(self, filepath: str) -> ConfiguracionSimulacion:
        """Lee y valida un archivo de configuración de simulación."""
        return ConfiguracionSimulacion.from_dict(self.loader.cargar_config_simulacion(filepath))

    def _tareas(self, config: ConfiguracionSimulacion) -> List[Tuple[int, int]]:
        """Pares (n, stream_id); stream_id = índice de n × réplicas + réplica."""
        return [
            (n, indice * config.replications + r)
            for indice, n in enumerate(config.sample_sizes)
            for r in range(config.replications)
        ]

    def ejecutar_estudio(self, config: ConfiguracionSimulacion) -> TablaSesgos:
        """
        Ejecuta el estudio completo.

        Returns:
            TablaSesgos
        """
        tareas = self._tareas(config)
        logger.info(
            f"Iniciando estudio {config.dgp_family.etiqueta}: n={config.sample_sizes}, "
            f"réplicas={config.replications}, familias={[f.etiqueta for f in config.fit_families]}"
        )

        argumentos = [(config, n, stream_id, self.opts) for n, stream_id in tareas]
        if config.workers > 1:
            with ProcessPoolExecutor(max_workers=config.workers) as ejecutor:
                resultados = list(ejecutor.map(_ejecutar_tarea, argumentos))
        else:
            resultados = [_ejecutar_tarea(a) for a in argumentos]

        tabla = self._agregar(config, tareas, resultados)
        logger.info("Estudio completado exitosamente")
        return tabla

    def _agregar(
        self,
        config: ConfiguracionSimulacion,
        tareas: List[Tuple[int, int]],
        resultados: List[Dict[str, Any]]
    ) -> TablaSesgos:
        """Sesgo porcentual por (familia, n, parámetro) sobre réplicas convergidas."""
        filas: List[Dict[str, Any]] = []
        omega_promedio: Dict[int, float] = {}

        for n in config.sample_sizes:
            de_n = [res for (tam, _), res in zip(tareas, resultados) if tam == n]
            omega_promedio[n] = float(np.mean([res['omega_promedio'] for res in de_n]))

            for familia in config.fit_families:
                verdaderos = config.valores_verdaderos(familia)
                etiquetas = self._etiquetas(familia)
                vectores = [
                    res['estimaciones'][familia.value]
                    for res in de_n
                    if res['estimaciones'].get(familia.value) is not None
                ]
                usadas = len(vectores)
                matriz = np.array(vectores, dtype=float).reshape(usadas, len(etiquetas))

                for j, etiqueta in enumerate(etiquetas):
                    verdadero = verdaderos.get(etiqueta)
                    # Sin valor verdadero (α de ZTNB bajo OIPP) o θ = 0 no hay sesgo porcentual
                    if verdadero is None or verdadero == 0:
                        continue
                    sesgo = (
                        100.0 * float(np.mean(matriz[:, j] - verdadero)) / verdadero
                        if usadas else float('nan')
                    )
                    filas.append({
                        'familia': familia.etiqueta,
                        'n': n,
                        'parametro': etiqueta,
                        'verdadero': verdadero,
                        'sesgo_pct': sesgo,
                        'replicas_usadas': usadas,
                        'excluidas': len(de_n) - usadas,
                        'tasa_convergencia': usadas / len(de_n)
                    })

                if usadas < len(de_n):
                    logger.warning(
                        f"{familia.etiqueta}, n={n}: {len(de_n) - usadas} réplica(s) excluida(s)"
                    )

        return TablaSesgos(
            filas=pd.DataFrame(filas, columns=TablaSesgos.COLUMNAS),
            omega_promedio=omega_promedio,
            metadata={'config': config.to_dict()}
        )

    @staticmethod
    def _etiquetas(familia: Familia) -> List[str]:
        etiquetas = list(ETIQUETAS_BETA)
        if familia.es_inflada:
            etiquetas += list(ETIQUETAS_GAMMA)
        if familia.usa_alpha:
            etiquetas.append('alpha')
        return etiquetas


# Función de conveniencia
def run_study(config: ConfiguracionSimulacion, opts: Optional[OpcionesAjuste] = None) -> TablaSesgos:
    """
    Función de conveniencia para ejecutar un estudio Monte Carlo.

    Args:
        config: Configuración del estudio
        opts: Opciones del optimizador

    Returns:
        TablaSesgos
    """
    return Simulator(opts=opts).ejecutar_estudio(config)
