"""

Config Discovery for GAAM

Handles finding run and sweep configuration files given as a direct path, in
the project-local directory or among the package defaults.

License: BSD 3-Clause

"""

#
# IMPORTS
#
import shutil
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple

from gaam.constants import DEFAULT_CONFIG_NAME


#
# CONSTANTS
#
LOCAL_CONFIG_DIR: str = "gaam_config"
PACKAGE_CONFIG_DIR: str = "config"
CONFIG_KINDS: Tuple[str, ...] = ("runs", "sweeps")
EXAMPLE_SOURCES: Dict[str, str] = {"runs": "default.yaml", "sweeps": "demo.yaml"}

ConfigKind = Literal["runs", "sweeps"]


#
# PUBLIC
#
def find_config_path(config_name: Optional[str] = None, kind: ConfigKind = "runs") -> Tuple[str, str]:
    """Find the full path to a configuration file.

    Config discovery priority:
    1. If no config_name provided, use the default run config
    2. An existing file path is used as is
    3. Check local project directory: ./gaam_config/<kind>/config_name[.yaml]
    4. Check package configs directory: config/<kind>/config_name[.yaml]

    Versioned configs "name/version" resolve to <kind>/name/version.yaml.

    Args:
        config_name: Name or path of the config (with or without .yaml extension).
        kind: 'runs' or 'sweeps'.

    Returns:
        Tuple of (config_path, status_message). config_path is an empty string
        if not found.
    """
    if config_name is None:
        config_name = DEFAULT_CONFIG_NAME

    direct = Path(config_name)
    if direct.is_file():
        return str(direct), f"Using config file: {direct}"

    config_name = _normalize_config_name(config_name)
    local_path = _check_config(Path(LOCAL_CONFIG_DIR), kind, config_name)
    if local_path:
        return local_path, f"Using local config: {local_path}"

    package_dir = _get_package_config_dir()
    if package_dir:
        package_path = _check_config(package_dir, kind, config_name)
        if package_path:
            return package_path, f"Using package config: {config_name}"

    return "", f"Config '{config_name}' not found in {LOCAL_CONFIG_DIR}/{kind}/ or package config/{kind}/"


def get_available_configs(kind: ConfigKind = "runs") -> Dict[str, List[str]]:
    """Get lists of available configuration files.

    Returns:
        Dictionary with 'local' and 'package' keys containing config names.
        Versioned configs are listed as "name/version".
    """
    configs: Dict[str, List[str]] = {"local": [], "package": []}
    configs["local"] = _list_configs(Path(LOCAL_CONFIG_DIR) / kind)
    package_dir = _get_package_config_dir()
    if package_dir:
        configs["package"] = _list_configs(package_dir / kind)
    return configs


def init_config_with_example() -> bool:
    """Create gaam_config/runs and gaam_config/sweeps with an example of each.

    Existing example files are left untouched.

    Returns:
        True if successful, False on error.
    """
    package_dir = _get_package_config_dir()
    if not package_dir:
        return False
    try:
        for kind in CONFIG_KINDS:
            target_dir = Path(LOCAL_CONFIG_DIR) / kind
            target_dir.mkdir(parents=True, exist_ok=True)
            source = package_dir / kind / EXAMPLE_SOURCES[kind]
            target = target_dir / "example.yaml"
            if not source.exists():
                return False
            if not target.exists():
                shutil.copy2(source, target)
        return True
    except OSError:
        return False


#
# INTERNAL
#
def _normalize_config_name(config_name: str) -> str:
    if not config_name.endswith(('.yaml', '.yml')):
        return f"{config_name}.yaml"
    return config_name


def _check_config(base_dir: Path, kind: str, config_name: str) -> Optional[str]:
    """Return base_dir/kind/config_name (or its .yml twin) if it is a file."""
    path = base_dir / kind / config_name
    if path.is_file():
        return str(path)
    if config_name.endswith('.yaml'):
        yml_path = base_dir / kind / config_name.replace('.yaml', '.yml')
        if yml_path.is_file():
            return str(yml_path)
    return None


def _list_configs(directory: Path) -> List[str]:
    names: List[str] = []
    if not directory.is_dir():
        return names
    for pattern in ("*.yaml", "*.yml"):
        names.extend(p.stem for p in directory.glob(pattern))
    for subdir in sorted(p for p in directory.iterdir() if p.is_dir()):
        for pattern in ("*.yaml", "*.yml"):
            names.extend(f"{subdir.name}/{p.stem}" for p in subdir.glob(pattern))
    return sorted(names)


def _get_package_config_dir() -> Optional[Path]:
    """Path to the package config directory (sibling of the gaam package), if present."""
    config_dir = Path(__file__).parent.parent / PACKAGE_CONFIG_DIR
    if config_dir.is_dir():
        return config_dir
    return None
