"""
Ajustes de referencia sobre datos hospitalarios publicados.

Requieren los CSV de data/fixtures (ver data/fixtures/README.md); si no
están, las pruebas se saltan.
"""

import numpy as np
import pytest

from core.diseno import build_design, load_csv
from core.efectos_marginales import margins
from core.estimador import maximize, predicted_counts
from core.inferencia import one_lrt, one_wald, signif_wald, summarize
from models.ajuste import OpcionesAjuste
from models.datos import EspecificacionModelo
from models.familia import Familia
from tests.conftest import requiere_fixture

REGRESORES_MEDPAR = ('white', 'died', 'type2', 'type3')
REGRESORES_AZDRG = ('gender', 'type1', 'age75')


def _ajustar(nombre, familia, regresores):
    datos = load_csv(requiere_fixture(nombre))
    spec = EspecificacionModelo(
        family=familia,
        response='los',
        x_terms=regresores,
        z_terms=regresores if familia.es_inflada else ()
    )
    dd = build_design(spec, datos)
    return maximize(spec, dd, OpcionesAjuste()), dd


@pytest.fixture(scope='module')
def medpar_oiztnb():
    return _ajustar('medpar', Familia.OIZTNB, REGRESORES_MEDPAR)


@pytest.fixture(scope='module')
def medpar_ztnb():
    return _ajustar('medpar', Familia.ZTNB, REGRESORES_MEDPAR)


# ============================================================================
# MEDPAR
# ============================================================================

def test_medpar_coeficientes(medpar_oiztnb):
    fm, dd = medpar_oiztnb
    assert dd.n == 1495
    assert fm.converged
    np.testing.assert_allclose(fm.estimates.beta, [2.299, -0.097, -0.068, 0.234, 0.756], atol=0.01)
    assert fm.estimates.gamma[0] == pytest.approx(-4.200, abs=0.01)
    assert fm.estimates.gamma[2] == pytest.approx(2.335, abs=0.01)


def test_medpar_errores_e_inflacion(medpar_oiztnb):
    fm, dd = medpar_oiztnb
    tabla = summarize(fm, dd)
    assert tabla.fila('beta:(Intercept)').error_estandar == pytest.approx(0.072, abs=0.01)
    assert tabla.fila('gamma:died').error_estandar == pytest.approx(0.236, abs=0.01)
    assert tabla.avg_one_inflation == pytest.approx(0.042, abs=0.002)
    assert tabla.avg_abs_one_inflation == pytest.approx(0.068, abs=0.002)


def test_medpar_efectos_marginales(medpar_oiztnb):
    fm, dd = medpar_oiztnb
    efectos = margins(fm, dd)
    esperados = {'white': (-1.258, 0.734), 'died': (-2.189, 0.396), 'type2': (2.575, 0.588), 'type3': (10.142, 1.467)}
    for regresor, (efecto, error) in esperados.items():
        fila = efectos.fila(regresor)
        assert fila.tipo == 'dummy'
        assert fila.efecto == pytest.approx(efecto, abs=0.02)
        assert fila.error_estandar == pytest.approx(error, abs=0.02)


def test_medpar_pruebas(medpar_oiztnb, medpar_ztnb):
    fm, _ = medpar_oiztnb
    base, _ = medpar_ztnb
    assert fm.loglik >= base.loglik - 1e-6
    assert one_wald(fm).p_value < 0.0005
    assert one_lrt(fm, base).p_value < 0.0005
    assert signif_wald(fm, 'white').p_value == pytest.approx(0.16, abs=0.01)


def test_medpar_unos_predichos(medpar_oiztnb, medpar_ztnb):
    fm, dd = medpar_oiztnb
    base, dd_base = medpar_ztnb
    assert predicted_counts(fm, dd, y_max=10).loc[1] > predicted_counts(base, dd_base, y_max=10).loc[1]


# ============================================================================
# ARIZONA MEDICARE
# ============================================================================

def test_azdrg112_deflacion():
    fm, dd = _ajustar('azdrg112', Familia.OIZTNB, REGRESORES_AZDRG)
    tabla = summarize(fm, dd)
    assert tabla.avg_one_inflation == pytest.approx(-0.164, abs=0.005)
    assert margins(fm, dd).fila('gender').efecto == pytest.approx(-0.727, abs=0.01)
