from typing import Optional

from dotenv import load_dotenv
from pydantic import BaseSettings

load_dotenv()


class Settings(BaseSettings):
    DS_LOG: str = "WARNING"
    DS_LOG_FILE: Optional[str] = None

    # Run registry, disabled when unset
    DS_DB_URL: Optional[str] = None

    DS_THREADS: int = 1
    DS_CHECK_INVARIANTS: bool = False

    # Training defaults
    DS_DEFAULT_P_LIM: float = 0.05
    DS_DEFAULT_SEED: int = 0
    DS_VALID_FRACTION: float = 0.1  # 90/10 train/validation protocol

    class Config:
        env_file = ".env"


settings = Settings()
