from pydantic_settings import BaseSettings

class Settings(BaseSettings):
    FRONTEND_ORIGIN: str = "*"
    ENV: str = "development"
    ENV_PORT: int = 10000
    LOG_LEVEL: str = "INFO"
    OUTPUT_DIR: str = "output"
    # Overrides SweepConfig.workers and the grid-search pool when > 0
    VITRIQ_THREADS: int = 0

    class Config:
        env_file = ".env"
        env_file_encoding = "utf-8"
        extra = "ignore"

settings = Settings()
