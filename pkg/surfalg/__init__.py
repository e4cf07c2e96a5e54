from surfalg.config import CONFIG, load_config

__all__ = ["CONFIG", "load_config"]
