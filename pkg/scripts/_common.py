"""Small helpers shared by the experiment scripts."""

import argparse
import dataclasses
from pathlib import Path


def parse_into(cfg_cls, description: str):
    """Expose every dataclass field as a --flag with the field's default."""
    ap = argparse.ArgumentParser(description=description)
    for f in dataclasses.fields(cfg_cls):
        default = f.default
        kind = type(default) if default is not None else str
        if kind is tuple:
            ap.add_argument(f"--{f.name}", type=float, nargs="+", default=list(default))
        else:
            ap.add_argument(f"--{f.name}", type=kind, default=default)
    args = vars(ap.parse_args())
    return cfg_cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in args.items()})


def out_path(directory: str, name: str) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    return d / name
