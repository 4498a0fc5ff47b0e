"""A non-blocking doubly-linked list with process-local cursors, plus tools to check it.

The list itself lives in :mod:`nbdll.core`. The sequential reference model is
:mod:`nbdll.seqmodel`; :mod:`nbdll.explore` and :mod:`nbdll.scenarios` run
every interleaving of small programs; :mod:`nbdll.lincheck` checks recorded
histories; :mod:`nbdll.metrics` holds the ghost-state instrumentation and
:mod:`nbdll.bench` the throughput workloads.
"""

from .core import Cursor, CursorError, ListHandle, new_list
from .values import ACK, EOL, INVALID_CURSOR

__version__ = "0.1.0"

__all__ = ["ListHandle", "Cursor", "CursorError", "new_list", "EOL", "INVALID_CURSOR", "ACK"]
