"""
Script para executar o harness de avaliação pela linha de comando.
Ajusta o path para permitir imports corretos.
"""

import logging
import os
import sys

project_root = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, project_root)

if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO, format='%(levelname)s %(name)s: %(message)s')
    from backend.harness.cli import main

    sys.exit(main())
