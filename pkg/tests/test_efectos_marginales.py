"""
Tests de efectos marginales: derivadas, contrastes de dummies, agregación y errores estándar.
"""

import json

import numpy as np
import pytest

from core.efectos_marginales import (
    Agregacion,
    EfectosMarginales,
    TipoAgregacion,
    dmean,
    dmean_oipp,
    dmean_oiztnb,
    dummy_effect,
    margins,
    media_filas,
)
from core.diseno import build_design
from core.estimador import maximize
from models.ajuste import ModeloAjustado
from models.datos import DatosDiseno, EspecificacionModelo
from models.familia import Familia, Parametros
from output.exportadores.texto import a_json
from tests.conftest import BETA_SIM, datos_simulados, especificacion

H = 1e-5


def _derivada_numerica(familia, params, x_row, z_row, j):
    """Diferencia central de E[y] moviendo la columna j en X y en Z a la vez."""
    def media(desplazamiento):
        x = np.array(x_row, dtype=float)
        x[j] += desplazamiento
        z = None
        if z_row is not None:
            z = np.array(z_row, dtype=float)
            z[j] += desplazamiento
        return media_filas(familia, params, x[np.newaxis, :], None if z is None else z[np.newaxis, :])[0]

    return (media(H) - media(-H)) / (2.0 * H)


def _aleatorio(rng, familia):
    beta = rng.normal(0.0, 0.5, 3)
    gamma = rng.normal(0.0, 1.0, 3) if familia.es_inflada else None
    alpha = float(rng.choice([0.5, 1.0, 5.0])) if familia.usa_alpha else None
    x = np.concatenate(([1.0], rng.normal(0.0, 1.0, 2)))
    z = np.concatenate(([1.0], x[1:])) if familia.es_inflada else None
    return Parametros(beta=beta, gamma=gamma, alpha=alpha), x, z


# ============================================================================
# DERIVADAS
# ============================================================================

@pytest.mark.parametrize('familia', list(Familia))
def test_derivada_contra_diferencias_finitas(familia):
    rng = np.random.default_rng(17)
    for _ in range(1000):
        params, x, z = _aleatorio(rng, familia)
        analitica = dmean(familia, params, x, z, 1, 1 if familia.es_inflada else None)[0]
        numerica = _derivada_numerica(familia, params, x, z, 1)
        assert analitica == pytest.approx(numerica, rel=1e-6, abs=1e-8)


def test_derivada_solo_en_z():
    """Regresor presente solo en el enlace de inflación."""
    params = Parametros(beta=[0.3, 0.2], gamma=[-0.4, 0.0, 0.9], alpha=2.0)
    x = np.array([1.0, 0.7])
    z = np.array([1.0, 0.7, -0.5])

    def media(d):
        zz = z.copy()
        zz[2] += d
        return media_filas(Familia.OIZTNB, params, x[np.newaxis, :], zz[np.newaxis, :])[0]

    numerica = (media(H) - media(-H)) / (2.0 * H)
    assert dmean_oiztnb(params, x, z, None, 2) == pytest.approx(numerica, rel=1e-6)


def test_derivada_coeficientes_cero():
    params = Parametros(beta=[0.3, 0.0], gamma=[0.5, 0.0])
    assert dmean_oipp(params, np.array([1.0, 2.0]), np.array([1.0, 2.0]), 1, 1) == 0.0
    params_nb = Parametros(beta=[0.3, 0.0], gamma=[0.5, 0.0], alpha=1.5)
    assert dmean_oiztnb(params_nb, np.array([1.0, 2.0]), np.array([1.0, 2.0]), 1, 1) == 0.0


def test_derivada_pp_forma_cerrada():
    """Sin inflación: ∂/∂λ[λe^λ/(e^λ − 1)] · λβ_j."""
    beta = np.array([0.2, 0.7])
    x = np.array([1.0, 0.4])
    lam = float(np.exp(x @ beta))
    d_media = (np.exp(lam) * (np.exp(lam) - 1.0 - lam)) / (np.exp(lam) - 1.0) ** 2
    esperado = d_media * lam * beta[1]
    assert dmean(Familia.PP, Parametros(beta=beta), x, None, 1, None)[0] == pytest.approx(esperado, rel=1e-12)


def test_limite_oiztnb_a_oipp():
    params_p = Parametros(beta=[0.3, 0.4], gamma=[-0.2, 0.6])
    params_nb = Parametros(beta=[0.3, 0.4], gamma=[-0.2, 0.6], alpha=1e6)
    x = np.array([1.0, 0.8])
    oipp = dmean_oipp(params_p, x, x, 1, 1)
    oiztnb = dmean_oiztnb(params_nb, x, x, 1, 1)
    assert abs(oiztnb - oipp) < 1e-3


def test_derivada_intercepto():
    params = Parametros(beta=[0.3, 0.4], gamma=[-0.2, 0.6])
    with pytest.raises(ValueError):
        dmean_oipp(params, np.array([1.0, 0.5]), np.array([1.0, 0.5]), 0, None)


def test_derivada_sin_regresor():
    params = Parametros(beta=[0.3, 0.4], gamma=[-0.2, 0.6])
    with pytest.raises(ValueError):
        dmean_oipp(params, np.array([1.0, 0.5]), np.array([1.0, 0.5]), None, None)


# ============================================================================
# DUMMIES Y AGREGACIÓN
# ============================================================================

def _modelo_fijo(familia, params, dd, x_terms, z_terms) -> ModeloAjustado:
    spec = EspecificacionModelo(familia, 'y', x_terms=x_terms, z_terms=z_terms)
    return ModeloAjustado(
        spec=spec,
        estimates=params,
        loglik=0.0,
        varcov=None,
        converged=True,
        iterations=0,
        n=dd.n,
        param_names=params.nombres(dd.x_names, dd.z_names if familia.es_inflada else None)
    )


def _diseno_con_dummy(n=40, constante=False) -> DatosDiseno:
    rng = np.random.default_rng(9)
    x1 = np.full(n, 0.3) if constante else rng.normal(0.0, 1.0, n)
    d = np.full(n, 1.0) if constante else (rng.random(n) < 0.5).astype(float)
    X = np.column_stack([np.ones(n), x1, d])
    nombres = ['(Intercept)', 'x1', 'd']
    return DatosDiseno(
        y=rng.integers(1, 6, n),
        X=X,
        x_names=nombres,
        Z=X.copy(),
        z_names=list(nombres),
        dummy_flags={'x1': False, 'd': True}
    )


def test_dummy_coeficientes_cero():
    dd = _diseno_con_dummy()
    params = Parametros(beta=[0.2, 0.3, 0.0], gamma=[0.1, -0.4, 0.0], alpha=2.0)
    fm = _modelo_fijo(Familia.OIZTNB, params, dd, ('x1', 'd'), ('x1', 'd'))
    assert dummy_effect(fm, dd, 'd') == pytest.approx(0.0, abs=1e-14)


def test_dummy_pequena_coincide_con_derivada():
    """Coeficientes diminutos: la secante entre 0 y 1 coincide con la tangente."""
    dd = _diseno_con_dummy()
    params = Parametros(beta=[0.2, 0.3, 5e-7], gamma=[0.1, -0.4, -8e-7])
    fm = _modelo_fijo(Familia.OIPP, params, dd, ('x1', 'd'), ('x1', 'd'))
    contraste = dummy_effect(fm, dd, 'd')
    tangente = float(np.mean(dmean(Familia.OIPP, params, dd.X, dd.Z, 2, 2)))
    assert abs(contraste - tangente) < 1e-5


def test_dummy_columna_continua():
    dd = _diseno_con_dummy()
    params = Parametros(beta=[0.2, 0.3, 0.1], gamma=[0.1, -0.4, 0.2])
    fm = _modelo_fijo(Familia.OIPP, params, dd, ('x1', 'd'), ('x1', 'd'))
    with pytest.raises(ValueError):
        dummy_effect(fm, dd, 'x1')
    assert np.isfinite(dummy_effect(fm, dd, 'x1', forzar=True))


def test_filas_identicas_promedio_igual_a_medias():
    dd = _diseno_con_dummy(constante=True)
    params = Parametros(beta=[0.2, 0.3, 0.4], gamma=[0.1, -0.4, 0.5], alpha=3.0)
    fm = _modelo_fijo(Familia.OIZTNB, params, dd, ('x1', 'd'), ('x1', 'd'))
    promedio = margins(fm, dd, Agregacion(TipoAgregacion.EFECTOS_PROMEDIO))
    medias = margins(fm, dd, Agregacion(TipoAgregacion.EFECTO_EN_MEDIAS))
    for a, b in zip(promedio.filas, medias.filas):
        assert a.efecto == pytest.approx(b.efecto, rel=1e-12)


def test_en_punto_con_pendientes_cero():
    dd = _diseno_con_dummy()
    params = Parametros(beta=[0.2, 0.0, 0.0], gamma=[0.1, 0.0, 0.0])
    fm = _modelo_fijo(Familia.OIPP, params, dd, ('x1', 'd'), ('x1', 'd'))
    efectos = margins(fm, dd, Agregacion(TipoAgregacion.EN_PUNTO, x_row=[0.0, 0.0], z_row=[0.0, 0.0]))
    for fila in efectos.filas:
        assert fila.efecto == pytest.approx(0.0, abs=1e-14)


def test_en_punto_evalua_la_fila():
    dd = _diseno_con_dummy()
    params = Parametros(beta=[0.2, 0.3, 0.4], gamma=[0.1, -0.4, 0.5])
    fm = _modelo_fijo(Familia.OIPP, params, dd, ('x1', 'd'), ('x1', 'd'))
    efectos = margins(fm, dd, Agregacion(TipoAgregacion.EN_PUNTO, x_row=[0.5, 1.0], z_row=[0.5, 1.0]))
    fila = np.array([1.0, 0.5, 1.0])
    assert efectos.fila('x1').efecto == pytest.approx(dmean_oipp(params, fila, fila, 1, 1), rel=1e-12)


def test_en_punto_longitud_invalida():
    dd = _diseno_con_dummy()
    params = Parametros(beta=[0.2, 0.3, 0.4], gamma=[0.1, -0.4, 0.5])
    fm = _modelo_fijo(Familia.OIPP, params, dd, ('x1', 'd'), ('x1', 'd'))
    with pytest.raises(ValueError):
        margins(fm, dd, Agregacion(TipoAgregacion.EN_PUNTO, x_row=[0.5], z_row=[0.5, 1.0]))


def test_agregacion_desde_texto():
    assert Agregacion.desde_texto('ae').tipo == TipoAgregacion.EFECTOS_PROMEDIO
    assert Agregacion.desde_texto('EM').tipo == TipoAgregacion.EFECTO_EN_MEDIAS
    with pytest.raises(ValueError):
        Agregacion.desde_texto('mediana')


def test_margins_sin_varcov_advierte():
    dd = _diseno_con_dummy()
    params = Parametros(beta=[0.2, 0.3, 0.4], gamma=[0.1, -0.4, 0.5])
    fm = _modelo_fijo(Familia.OIPP, params, dd, ('x1', 'd'), ('x1', 'd'))
    efectos = margins(fm, dd)
    assert efectos.advertencias
    assert all(f.error_estandar is None for f in efectos.filas)


# ============================================================================
# TABLA CON ERRORES ESTÁNDAR
# ============================================================================

def test_margins_modelo_ajustado(diseno_oipp, opciones):
    fm = maximize(especificacion(Familia.OIPP), diseno_oipp, opciones)
    efectos = margins(fm, diseno_oipp)
    assert [f.nombre for f in efectos.filas] == ['x1', 'x2']
    assert efectos.fila('x1').tipo == 'continuo'
    assert efectos.fila('x2').tipo == 'dummy'
    for fila in efectos.filas:
        assert fila.error_estandar is not None and fila.error_estandar > 0
        assert 0.0 <= fila.p <= 1.0

    datos = json.loads(a_json(efectos.to_dict()))
    assert EfectosMarginales.from_dict(datos).to_dict() == datos


def test_margins_modelo_base(opciones):
    """Los modelos sin inflación también reportan efectos."""
    datos = datos_simulados(Familia.ZTNB, Parametros(beta=BETA_SIM, alpha=2.0), 400, semilla=3)
    spec = especificacion(Familia.ZTNB)
    dd = build_design(spec, datos)
    fm = maximize(spec, dd, opciones)
    efectos = margins(fm, dd, Agregacion.desde_texto('em'))
    assert efectos.agregacion == 'em'
    assert efectos.fila('x1').efecto > 0
