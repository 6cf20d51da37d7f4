"""
Torna o diretório raiz um pacote Python.

O nome do diretório de checkout não é necessariamente um identificador Python
válido.  Para que os subpacotes (``lift``, ``data``, ``synthesis``, ...)
possam ser importados de forma estável em testes e scripts, este ``__init__``
registra o módulo atual sob o nome alternativo ``ddrg_lab`` no dicionário
``sys.modules``.  Assim, ``import ddrg_lab.synthesis.pipeline`` funciona
independentemente de onde o repositório foi clonado.
"""

import sys as _sys

__version__ = "0.3.0"

# Registra este pacote sob o nome alternativo ``ddrg_lab`` se não existir
if 'ddrg_lab' not in _sys.modules:
    _sys.modules['ddrg_lab'] = _sys.modules[__name__]
