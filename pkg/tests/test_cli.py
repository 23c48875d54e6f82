"""
Tests de la línea de comandos (main con argv explícito).
"""

import json

import numpy as np
import pandas as pd
import pytest
import yaml

from cli.comandos import ERROR_ENTRADA, EXITO, NO_CONVERGIO, lista_terminos
from cli.main import main
from core.diseno import save_csv
from tests.conftest import BETA_SIM, GAMMA_SIM

MODELO = ['--response', 'y', '--x', 'x1,x2', '--z', 'x1,x2']


@pytest.fixture
def csv_oipp(tmp_path, datos_oipp):
    ruta = tmp_path / 'oipp.csv'
    save_csv(datos_oipp, ruta)
    return ruta


# ============================================================================
# ERRORES DE ENTRADA
# ============================================================================

def test_archivo_inexistente(tmp_path, capsys):
    ruta = tmp_path / 'no_existe.csv'
    codigo = main(['fit', '--data', str(ruta), '--family', 'pp', '--response', 'y'])
    assert codigo == ERROR_ENTRADA
    assert str(ruta) in capsys.readouterr().err


def test_opcion_desconocida(csv_oipp):
    assert main(['fit', '--data', str(csv_oipp), '--family', 'pp', '--response', 'y', '--rapido']) == ERROR_ENTRADA


def test_familia_desconocida(csv_oipp):
    assert main(['fit', '--data', str(csv_oipp), '--family', 'zip', '--response', 'y']) == ERROR_ENTRADA


def test_sin_subcomando(capsys):
    assert main([]) == ERROR_ENTRADA
    assert 'subcomando' in capsys.readouterr().err


def test_columna_desconocida(csv_oipp, capsys):
    codigo = main(['fit', '--data', str(csv_oipp), '--family', 'pp', '--response', 'y', '--x', 'edad'])
    assert codigo == ERROR_ENTRADA
    assert 'edad' in capsys.readouterr().err


def test_inflada_sin_z(csv_oipp):
    assert main(['fit', '--data', str(csv_oipp), '--family', 'oipp', '--response', 'y', '--x', 'x1']) == ERROR_ENTRADA


def test_opcion_abreviada_rechazada(csv_oipp):
    """--form no se acepta como prefijo de --format."""
    codigo = main(['fit', '--data', str(csv_oipp), '--family', 'pp', '--response', 'y', '--form', 'json'])
    assert codigo == ERROR_ENTRADA


def test_opcion_global_abreviada_rechazada(csv_oipp):
    codigo = main(['--log', 'DEBUG', 'fit', '--data', str(csv_oipp), '--family', 'pp', '--response', 'y'])
    assert codigo == ERROR_ENTRADA


def test_lista_terminos():
    assert lista_terminos('a, b,,c') == ('a', 'b', 'c')
    assert lista_terminos('') == ()


# ============================================================================
# COMANDOS DE MODELO
# ============================================================================

def test_fit_json(csv_oipp, capsys):
    codigo = main(['fit', '--data', str(csv_oipp), '--family', 'oipp', *MODELO, '--format', 'json'])
    assert codigo in (EXITO, NO_CONVERGIO)
    datos = json.loads(capsys.readouterr().out)
    for clave in ('estimates', 'se', 'loglik', 'converged', 'avg_one_inflation', 'n'):
        assert clave in datos
    assert datos['n'] == 800


def test_fit_a_archivo(csv_oipp, tmp_path):
    salida = tmp_path / 'reportes' / 'fit.txt'
    codigo = main(['fit', '--data', str(csv_oipp), '--family', 'pp', '--response', 'y', '--x', 'x1,x2',
                   '--out', str(salida)])
    assert codigo in (EXITO, NO_CONVERGIO)
    assert 'beta:x1' in salida.read_text(encoding='utf-8')


def test_margins_csv(csv_oipp, capsys):
    codigo = main(['margins', '--data', str(csv_oipp), '--family', 'oipp', *MODELO,
                   '--aggregation', 'em', '--format', 'csv'])
    assert codigo in (EXITO, NO_CONVERGIO)
    lineas = capsys.readouterr().out.splitlines()
    assert len(lineas) == 3
    assert lineas[1].startswith('x1')


def test_test_json(csv_oipp, capsys):
    codigo = main(['test', '--data', str(csv_oipp), '--family', 'pp', *MODELO, '--format', 'json'])
    assert codigo in (EXITO, NO_CONVERGIO)
    pruebas = json.loads(capsys.readouterr().out)['tests']
    assert len(pruebas) == 2
    assert all(p['dof'] == 3 for p in pruebas)


def test_test_lrt_fallido_escribe_reporte(csv_oipp, tmp_path, monkeypatch, capsys):
    """Un LRT claramente negativo no aborta: se reporta no disponible y el código es 2."""
    def lrt_negativo(fm_oi, fm_base):
        raise RuntimeError("LRT negativo (-3.2): el ajuste inflado no alcanzó el máximo")

    monkeypatch.setattr('cli.comandos.one_lrt', lrt_negativo)
    salida = tmp_path / 'pruebas.json'
    codigo = main(['test', '--data', str(csv_oipp), '--family', 'oipp', *MODELO, '--format', 'json',
                   '--out', str(salida)])

    assert codigo == NO_CONVERGIO
    wald, lrt = json.loads(salida.read_text(encoding='utf-8'))['tests']
    assert wald['p_value'] is not None
    assert lrt['method'] == 'lrt:no-inflacion'
    assert lrt['statistic'] is None and lrt['p_value'] is None
    assert 'LRT negativo' in lrt['notas'][0]
    assert 'no disponible' in capsys.readouterr().err


def test_falla_numerica_es_no_convergencia(csv_oipp, monkeypatch):
    def falla(*args, **kwargs):
        raise RuntimeError("optimizador sin progreso")

    monkeypatch.setattr('cli.comandos.maximize', falla)
    assert main(['fit', '--data', str(csv_oipp), '--family', 'pp', '--response', 'y']) == NO_CONVERGIO


def test_predict_json(csv_oipp, datos_oipp, capsys):
    codigo = main(['predict', '--data', str(csv_oipp), '--family', 'oipp', *MODELO,
                   '--y-max', '6', '--format', 'json'])
    assert codigo in (EXITO, NO_CONVERGIO)
    datos = json.loads(capsys.readouterr().out)
    assert datos['y'] == [1, 2, 3, 4, 5, 6]
    assert datos['observed'][0] == float(np.sum(datos_oipp.columna('y') == 1))
    assert len(datos['predicted']) == 6


# ============================================================================
# GRÁFICO
# ============================================================================

def test_plot_escribe_csv_y_svg(csv_oipp, datos_oipp, tmp_path):
    prefijo = tmp_path / 'graficos' / 'conteos'
    codigo = main(['plot', '--data', str(csv_oipp), *MODELO, '--families', 'pp,oipp', '--out', str(prefijo)])
    assert codigo in (EXITO, NO_CONVERGIO)

    tabla = pd.read_csv(prefijo.with_suffix('.csv'), index_col='y')
    assert list(tabla.columns) == ['observado', 'PP', 'OIPP']
    assert tabla.loc[1, 'observado'] == np.sum(datos_oipp.columna('y') == 1)
    assert tabla.index.max() >= int(datos_oipp.columna('y').max())
    # Cota adaptativa: los predichos cubren toda la masa, como en predict
    assert tabla['OIPP'].sum() == pytest.approx(800, rel=1e-6)
    assert tabla['PP'].sum() == pytest.approx(800, rel=1e-6)
    assert tabla['observado'].sum() == 800

    svg = prefijo.with_suffix('.svg').read_text(encoding='utf-8')
    assert 'id="observado-1"' in svg
    assert 'id="OIPP-1"' in svg


def test_plot_solo_observados(csv_oipp, tmp_path):
    prefijo = tmp_path / 'observados'
    assert main(['plot', '--data', str(csv_oipp), '--response', 'y', '--y-max', '5', '--out', str(prefijo)]) == EXITO
    tabla = pd.read_csv(prefijo.with_suffix('.csv'), index_col='y')
    assert list(tabla.columns) == ['observado']
    assert list(tabla.index) == [1, 2, 3, 4, 5]


def test_plot_svg_determinista(csv_oipp, tmp_path):
    for nombre in ('a', 'b'):
        main(['plot', '--data', str(csv_oipp), '--response', 'y', '--y-max', '5', '--out', str(tmp_path / nombre)])
    assert (tmp_path / 'a.svg').read_bytes() == (tmp_path / 'b.svg').read_bytes()


def test_plot_demasiadas_familias(csv_oipp, tmp_path):
    codigo = main(['plot', '--data', str(csv_oipp), *MODELO, '--families', 'pp,oipp,ztnb,oiztnb,pp',
                   '--out', str(tmp_path / 'x')])
    assert codigo == ERROR_ENTRADA


# ============================================================================
# SIMULACIÓN
# ============================================================================

def test_simulate_misma_semilla(tmp_path, capsys):
    config = tmp_path / 'estudio.yaml'
    config.write_text(yaml.safe_dump({
        'dgp_family': 'oipp',
        'beta': BETA_SIM,
        'gamma': GAMMA_SIM,
        'n': [150],
        'replications': 1,
        'fit_families': ['oipp', 'pp'],
        'master_seed': 1
    }), encoding='utf-8')

    salidas = []
    for _ in range(2):
        assert main(['simulate', '--config', str(config), '--seed', '99', '--format', 'csv']) == EXITO
        salidas.append(capsys.readouterr().out)
    assert salidas[0] == salidas[1]
    assert salidas[0].splitlines()[0].startswith('familia')


def test_simulate_clave_desconocida(tmp_path, capsys):
    config = tmp_path / 'estudio.yaml'
    config.write_text("dgp_family: oipp\nsemilla: 3\n", encoding='utf-8')
    assert main(['simulate', '--config', str(config)]) == ERROR_ENTRADA
    assert 'semilla' in capsys.readouterr().err
