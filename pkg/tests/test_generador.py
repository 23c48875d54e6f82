"""
Tests del generador de variables aleatorias.
"""

import numpy as np
import pytest
from scipy import stats

from core.distribuciones import enlazar, mean, pmf
from core.generador import Semilla, sample
from models.familia import Familia, Parametros

N_GRANDE = 100_000


def _unos(n: int) -> np.ndarray:
    return np.ones((n, 1))


# ============================================================================
# SEMILLAS
# ============================================================================

def test_semilla_reproducible():
    params = Parametros(beta=[0.5], gamma=[0.3])
    a = sample(Familia.OIPP, params, _unos(500), _unos(500), Semilla(42, 3))
    b = sample(Familia.OIPP, params, _unos(500), _unos(500), Semilla(42, 3))
    np.testing.assert_array_equal(a, b)


def test_flujos_distintos():
    params = Parametros(beta=[1.5])
    a = sample(Familia.PP, params, _unos(500), None, Semilla(42, 0))
    b = sample(Familia.PP, params, _unos(500), None, Semilla(42).flujo(1))
    assert not np.array_equal(a, b)


@pytest.mark.parametrize('master_seed, stream_id', [(-1, 0), (2 ** 64, 0), (1, -3)])
def test_semilla_invalida(master_seed, stream_id):
    with pytest.raises(ValueError):
        Semilla(master_seed, stream_id)


# ============================================================================
# DOS ETAPAS (ω >= 0)
# ============================================================================

def test_omega_uno_solo_unos():
    params = Parametros(beta=[2.0], gamma=[0.0], alpha=1.0)
    y = sample(Familia.OIZTNB, params, _unos(1000), _unos(1000), Semilla(1), omega=1.0)
    assert np.all(y == 1)


def test_punto_medio_mitad_de_unos():
    """γ = 0: P(y = 1) = 1/2 sin importar λ."""
    params = Parametros(beta=[0.7], gamma=[0.0])
    y = sample(Familia.OIPP, params, _unos(N_GRANDE), _unos(N_GRANDE), Semilla(2))
    assert abs(np.mean(y == 1) - 0.5) < 0.005


def test_media_ztnb_geometrica():
    """λ = 1, α = 1, ω = 0: media 2."""
    params = Parametros(beta=[0.0], gamma=[0.0], alpha=1.0)
    y = sample(Familia.OIZTNB, params, _unos(N_GRANDE), _unos(N_GRANDE), Semilla(3), omega=0.0)
    assert abs(np.mean(y) - 2.0) < 0.02


def test_familias_base_sin_ceros():
    y_pp = sample(Familia.PP, Parametros(beta=[-2.0]), _unos(2000), None, Semilla(4))
    y_nb = sample(Familia.ZTNB, Parametros(beta=[-1.0], alpha=0.5), _unos(2000), None, Semilla(4))
    assert y_pp.min() >= 1
    assert y_nb.min() >= 1
    assert y_pp.dtype == np.int64


def test_inflada_sin_z():
    with pytest.raises(ValueError):
        sample(Familia.OIPP, Parametros(beta=[0.0], gamma=[0.0]), _unos(10), None, Semilla(5))


# ============================================================================
# DEFLACIÓN (ω < 0)
# ============================================================================

def test_deflacion_media_oiztnb():
    alpha = 2.0
    enlazados = enlazar(Familia.OIZTNB, np.array([3.0]), alpha, eta=np.array([-2.0]))
    assert float(enlazados.omega[0]) < 0

    params = Parametros(beta=[np.log(3.0)], gamma=[-2.0], alpha=alpha)
    y = sample(Familia.OIZTNB, params, _unos(N_GRANDE), _unos(N_GRANDE), Semilla(8))
    esperada = float(np.ravel(mean(Familia.OIZTNB, enlazados, alpha))[0])
    assert np.mean(y) == pytest.approx(esperada, rel=0.02)


# ============================================================================
# BONDAD DE AJUSTE
# ============================================================================

def _chi_cuadrado(familia, lam, alpha, eta, semilla, n=N_GRANDE):
    """p-valor chi-cuadrado de n extracciones contra la pmf; la cola se agrupa en el último intervalo."""
    inflada = familia.es_inflada
    enlazados = enlazar(familia, np.array([lam]), alpha, eta=np.array([eta]) if inflada else None)
    params = Parametros(beta=[np.log(lam)], gamma=[eta] if inflada else None, alpha=alpha)
    y = sample(familia, params, _unos(n), _unos(n) if inflada else None, Semilla(semilla))

    probabilidades = np.ravel(pmf(familia, enlazados, alpha, np.arange(1, 301)))
    # Último valor con frecuencia esperada >= 20; de ahí en adelante un solo intervalo
    ultimo = int(np.flatnonzero(n * probabilidades >= 20.0).max()) + 1
    esperadas = n * np.append(probabilidades[:ultimo - 1], 1.0 - probabilidades[:ultimo - 1].sum())
    observadas = np.append([np.sum(y == v) for v in range(1, ultimo)], np.sum(y >= ultimo))

    _, p_valor = stats.chisquare(observadas, esperadas)
    return p_valor


@pytest.mark.parametrize('familia, lam, alpha, eta, semilla', [
    (Familia.PP, 0.5, None, None, 20),
    (Familia.PP, 4.0, None, None, 21),
    (Familia.ZTNB, 2.0, 0.5, None, 22),
    (Familia.ZTNB, 5.0, 3.0, None, 23),
    (Familia.OIPP, 3.0, None, 1.0, 24),
    (Familia.OIPP, 2.0, None, -1.0, 25),
    (Familia.OIPP, 6.0, None, -3.0, 26),
    (Familia.OIZTNB, 3.0, 2.0, 0.5, 27),
    (Familia.OIZTNB, 3.0, 2.0, -2.0, 28),
])
def test_bondad_de_ajuste(familia, lam, alpha, eta, semilla):
    assert _chi_cuadrado(familia, lam, alpha, eta, semilla) > 0.001


@pytest.mark.parametrize('familia, lam, alpha, eta, deflacion', [
    (Familia.OIPP, 3.0, None, 1.0, False),
    (Familia.OIPP, 2.0, None, -1.0, True),
    (Familia.OIZTNB, 3.0, 2.0, 0.5, False),
    (Familia.OIZTNB, 3.0, 2.0, -2.0, True),
])
def test_malla_cubre_ambos_muestreadores(familia, lam, alpha, eta, deflacion):
    """Puntos inflados de la malla: mezcla en dos etapas (ω >= 0) e inversión (ω < 0)."""
    enlazados = enlazar(familia, np.array([lam]), alpha, eta=np.array([eta]))
    assert (float(enlazados.omega[0]) < 0) == deflacion


def test_generator_directo():
    """Se acepta un Generator ya construido en lugar de una Semilla."""
    rng = np.random.default_rng(9)
    y = sample(Familia.PP, Parametros(beta=[1.0]), _unos(100), None, rng)
    assert len(y) == 100
