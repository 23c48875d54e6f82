"""Exportadores de reportes y gráficos."""
