import logging
from datetime import datetime
from typing import Iterable, List, Optional, Tuple

from sqlalchemy import Boolean, Column, DateTime, Float, ForeignKey, Integer, String, create_engine
from sqlalchemy.ext.declarative import declarative_base
from sqlalchemy.orm import sessionmaker

from ..config import settings

logger = logging.getLogger(__name__)

Base = declarative_base()


class RunRecord(Base):
    __tablename__ = 'runs'

    id = Column(Integer, primary_key=True)
    command = Column(String)
    task = Column(String)
    p_lim = Column(Float)
    test_family = Column(String)
    split_mode = Column(String)
    merge_enabled = Column(Boolean)
    seed = Column(Integer)
    metric = Column(String)
    error = Column(Float)
    depth = Column(Integer)
    node_count = Column(Integer)
    created_at = Column(DateTime, default=datetime.utcnow)


class SweepPoint(Base):
    __tablename__ = 'sweep_points'

    id = Column(Integer, primary_key=True)
    run_id = Column(Integer, ForeignKey('runs.id'))
    p_lim = Column(Float)
    error = Column(Float)


class DatabaseManager:
    def __init__(self, url: str):
        self.engine = create_engine(url)
        Base.metadata.create_all(self.engine)
        self.SessionLocal = sessionmaker(bind=self.engine, expire_on_commit=False)

    def get_session(self):
        return self.SessionLocal()

    def record_run(self, run_data: dict) -> int:
        try:
            with self.get_session() as session:
                run = RunRecord(**run_data)
                session.add(run)
                session.commit()
                logger.info(f"Recorded {run.command} run {run.id}")
                return run.id
        except Exception as e:
            logger.error(f"Failed to record run: {str(e)}")
            raise

    def record_sweep(self, run_id: int, points: Iterable[Tuple[float, float]]):
        try:
            with self.get_session() as session:
                session.add_all(SweepPoint(run_id=run_id, p_lim=p_lim, error=error) for p_lim, error in points)
                session.commit()
        except Exception as e:
            logger.error(f"Failed to record sweep for run {run_id}: {str(e)}")
            raise

    def get_runs(self, command: str = None, limit: int = None) -> List[RunRecord]:
        with self.get_session() as session:
            query = session.query(RunRecord).order_by(RunRecord.id)
            if command:
                query = query.filter(RunRecord.command == command)
            if limit:
                query = query.limit(limit)
            return query.all()

    def get_sweep(self, run_id: int) -> List[SweepPoint]:
        with self.get_session() as session:
            return session.query(SweepPoint).filter(SweepPoint.run_id == run_id).order_by(SweepPoint.id).all()


_db_manager: Optional[DatabaseManager] = None


def get_db_manager() -> Optional[DatabaseManager]:
    """Run registry for DS_DB_URL, or None when no URL is configured."""
    global _db_manager
    if not settings.DS_DB_URL:
        return None
    if _db_manager is None or str(_db_manager.engine.url) != settings.DS_DB_URL:
        _db_manager = DatabaseManager(settings.DS_DB_URL)
    return _db_manager
