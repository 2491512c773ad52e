# Flat-file run record store for bocoa

from cache.run_store import RunStore

__all__ = ['RunStore']
