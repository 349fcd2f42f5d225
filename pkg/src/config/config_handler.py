import os
import copy
import yaml
from typing import Any

class ConfigHandler:
    _instance = None
    _config = None

    DEFAULT_CONFIG = {
        'solver': {
            'method': 'RK45',
            'rtol': 1.0e-9,
            'atol': 1.0e-10,
            'refinement': 8,          # Sub-steps per grid interval for the residual check
        },
        'oracle': {
            'nodes_smooth': 80,       # Gauss-Hermite nodes per axis, integer lambda
            'nodes_kinked': 64,       # Gauss-Legendre nodes per split piece, other lambda
            'min_nodes': 20,
            'max_t_quadrature': 5.0,
            'max_t_monte_carlo': 10.0,
            'mc_samples': 200000,
            'mc_batches': 20,
            'mc_min_samples': 10000,
            'seed': 42,
        },
        'cli': {
            'time_grid': 'log:0.01:1000:200',
            'workers': 0,             # 0 means all available cores
            'precision': 17,
            'tau_count': 301,
            't_final': 15.0,
            'region_width': 1.0,
        },
        'logging': {
            'enable_logging': False,
            'to_file': False,
            'log_file': 'csdecay.log',
        },
    }

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super(ConfigHandler, cls).__new__(cls)
        return cls._instance

    def __init__(self):
        if self._config is None:
            self._load_config()

    def _load_config(self):
        config_path = os.environ.get('CSDECAY_CONFIG', 'config.yaml')
        config = copy.deepcopy(self.DEFAULT_CONFIG)
        if os.path.exists(config_path):
            with open(config_path, 'r') as f:
                loaded = yaml.safe_load(f) or {}
            for section, values in loaded.items():
                config.setdefault(section, {}).update(values or {})
        else:
            with open(config_path, 'w') as f:
                yaml.dump(self.DEFAULT_CONFIG, f, default_flow_style=False, sort_keys=False)
        ConfigHandler._config = config

    @classmethod
    def reset(cls):
        # Forget the loaded file so the next instance reads it again (tests switch files)
        cls._config = None

    def get(self, section: str, key: str) -> Any:
        # Special case: worker count honours the environment and resolves 0 to all cores
        if section == 'cli' and key == 'workers':
            override = os.environ.get('CSDECAY_WORKERS')
            workers = int(override) if override else int(self._config.get('cli', {}).get('workers', 0))
            return workers if workers > 0 else (os.cpu_count() or 1)
        return self._config.get(section, {}).get(key)
