"""
Application Configuration Settings
Environment-level settings (credentials, logging) using pydantic-settings
"""

from pydantic_settings import BaseSettings
from typing import Optional


class Settings(BaseSettings):
    """Ambient settings; everything that shapes a run lives in the JSON run config"""

    # Endpoint credentials
    generator_api_key: Optional[str] = None
    evaluator_api_key: Optional[str] = None

    # Logging
    log_path: str = "./logs"
    log_level: str = "INFO"
    log_to_file: bool = True

    class Config:
        env_file = ".env"
        env_file_encoding = "utf-8"
        case_sensitive = False
        extra = "ignore"  # Allow extra fields from .env


settings = Settings()
