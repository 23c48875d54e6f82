"""
Configuración compartida de las pruebas.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Agregar el directorio raíz al path
root_path = Path(__file__).parent.parent
sys.path.insert(0, str(root_path))

from core.diseno import build_design  # noqa: E402
from core.generador import Semilla, sample  # noqa: E402
from models.ajuste import OpcionesAjuste  # noqa: E402
from models.datos import ConjuntoDatos, EspecificacionModelo  # noqa: E402
from models.familia import Familia, Parametros  # noqa: E402
from utils.loaders import get_loader  # noqa: E402

BETA_SIM = [-2.0, 0.4, 0.2]
GAMMA_SIM = [-21.0, 2.0, 0.5]


def datos_simulados(
    familia: Familia,
    params: Parametros,
    n: int,
    semilla: int = 7
) -> ConjuntoDatos:
    """Conjunto con y, x1 ~ N(10, 1), x2 ~ Bernoulli(0.5) y Z = X."""
    rng = Semilla(semilla).generador()
    x1 = rng.normal(10.0, 1.0, n)
    x2 = rng.binomial(1, 0.5, n).astype(float)
    X = np.column_stack([np.ones(n), x1, x2])
    y = sample(familia, params, X, X if familia.es_inflada else None, rng)
    return ConjuntoDatos(column_names=['y', 'x1', 'x2'], columns=[y.astype(float), x1, x2])


def especificacion(familia: Familia) -> EspecificacionModelo:
    return EspecificacionModelo(
        family=familia,
        response='y',
        x_terms=('x1', 'x2'),
        z_terms=('x1', 'x2') if familia.es_inflada else ()
    )


@pytest.fixture
def opciones():
    """Opciones del optimizador sin depender de config/ajuste.yaml."""
    return OpcionesAjuste(gradient_tolerance=1e-6)


@pytest.fixture(scope='session')
def datos_oipp():
    """800 observaciones del proceso generador OIPP de referencia."""
    return datos_simulados(Familia.OIPP, Parametros(beta=BETA_SIM, gamma=GAMMA_SIM), 800)


@pytest.fixture(scope='session')
def diseno_oipp(datos_oipp):
    return build_design(especificacion(Familia.OIPP), datos_oipp)


@pytest.fixture(scope='session')
def datos_oiztnb():
    """800 observaciones del proceso generador OIZTNB de referencia (α = 10)."""
    return datos_simulados(Familia.OIZTNB, Parametros(beta=BETA_SIM, gamma=GAMMA_SIM, alpha=10.0), 800, semilla=11)


def requiere_fixture(nombre: str):
    """Ruta del CSV de data/fixtures o skip si no está."""
    ruta = get_loader().ruta_fixture(nombre)
    if not ruta.exists():
        pytest.skip(f"Fixture '{nombre}' no disponible en {ruta}; ver data/fixtures/README.md")
    return ruta
