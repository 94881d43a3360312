"""
Run registry package.
"""
from .db_manager import DatabaseManager, RunRecord, SweepPoint, get_db_manager

__all__ = ['DatabaseManager', 'RunRecord', 'SweepPoint', 'get_db_manager']
