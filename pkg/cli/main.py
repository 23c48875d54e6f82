"""
Punto de entrada de la línea de comandos.

Uso:
    python -m cli fit --data datos.csv --family oiztnb --response los --x white,died --z white,died
    python -m cli simulate --config simulacion_oipp.yaml --format csv --out sesgos.csv
"""

import argparse
import logging
import sys
from typing import List, Optional

from cli.comandos import COMANDOS, ERROR_ENTRADA, NO_CONVERGIO

logger = logging.getLogger(__name__)


class ErrorUso(ValueError):
    """Argumentos inválidos o desconocidos."""


class ParserComandos(argparse.ArgumentParser):
    """ArgumentParser que lanza ErrorUso en lugar de terminar el proceso y no acepta prefijos de opciones."""

    def __init__(self, *args, **kwargs):
        kwargs.setdefault('allow_abbrev', False)
        super().__init__(*args, **kwargs)

    def error(self, message: str):
        raise ErrorUso(message)


def construir_parser() -> ParserComandos:
    """Parser con un subcomando por clase de COMANDOS."""
    parser = ParserComandos(prog='oitrunc', description='Regresión de conteos truncados en cero e inflados en uno')
    parser.add_argument(
        '--log-level',
        default='WARNING',
        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
        help='Nivel de logging (a stderr)'
    )
    subparsers = parser.add_subparsers(dest='comando', parser_class=ParserComandos)
    for nombre, clase in COMANDOS.items():
        comando = clase()
        sub = subparsers.add_parser(nombre, help=comando.help, description=comando.help)
        comando.add_arguments(sub)
        sub.set_defaults(instancia=comando)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Ejecuta un subcomando.

    Returns:
        Código de salida (0 éxito, 1 error de entrada, 2 no convergencia)
    """
    parser = construir_parser()
    try:
        opciones = parser.parse_args(argv)
    except ErrorUso as e:
        sys.stderr.write(f"❌ {e}\n")
        return ERROR_ENTRADA

    logging.basicConfig(
        level=getattr(logging, opciones.log_level),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr
    )

    if getattr(opciones, 'instancia', None) is None:
        sys.stderr.write("❌ Falta el subcomando. Opciones: " + ', '.join(COMANDOS) + "\n")
        return ERROR_ENTRADA

    comando = opciones.instancia
    try:
        return comando.handle(opciones)
    except FileNotFoundError as e:
        comando.error(str(e) if e.filename is None else f"Archivo no encontrado: {e.filename}")
        return ERROR_ENTRADA
    except (ValueError, OverflowError) as e:
        comando.error(str(e))
        return ERROR_ENTRADA
    except RuntimeError as e:
        # Falla numérica del ajuste
        comando.error(str(e))
        return NO_CONVERGIO


if __name__ == '__main__':
    sys.exit(main())
