"""Run configuration, stored as flat ``key = value`` text."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

from .errors import FormatError


@dataclass
class Config:
    # sequence maxima and sizes; defaults are the full-size settings
    t: int = 300
    q: int = 20
    c: int = 10
    cn: int = 2
    e: int = 218
    h: int = 200

    word_dim: int = 100
    char_dim: int = 8
    char_out: int = 100
    char_width: int = 5
    pos_dim: int = 16
    max_word_len: int = 20
    fuzzy_min_len: int = 4
    share_char_filters: bool = True

    seed: int = 1
    epochs: int = 30
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    # stop once dev accuracy reaches this value; unset means run every epoch
    early_stop_acc: Optional[float] = None

    train_path: Optional[str] = None
    dev_path: Optional[str] = None
    word_vectors: Optional[str] = None
    checkpoint: Optional[str] = None
    trace: Optional[str] = None
    dump_attention: Optional[str] = None

    def __post_init__(self):
        self.validate()

    @property
    def limits(self) -> tuple[int, int, int]:
        return self.t, self.q, self.c

    def validate(self) -> None:
        if self.cn != 2:
            raise FormatError(f"config: cn must be 2, got {self.cn}")
        for name in ("t", "q", "c", "h", "word_dim", "char_dim", "char_out",
                     "char_width", "pos_dim", "max_word_len"):
            if getattr(self, name) <= 0:
                raise FormatError(f"config: {name} must be positive")
        expected = self.word_dim + self.char_out + self.pos_dim + 2
        if self.e != expected:
            raise FormatError(
                f"config: e={self.e} but word_dim+char_out+pos_dim+2 = {expected}")
        if self.h % 2:
            raise FormatError(f"config: h={self.h} must be even (forward + backward halves)")
        if self.epochs < 0:
            raise FormatError("config: epochs must be >= 0")

    def replace(self, **changes) -> "Config":
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            val = getattr(self, f.name)
            if val is None:
                continue
            lines.append(f"{f.name} = {str(val).lower() if isinstance(val, bool) else val}")
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def from_text(cls, text: str, source: str = "<config>") -> "Config":
        types = {f.name: f.type for f in fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise FormatError(f"{source}: line {lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in types:
                raise FormatError(f"{source}: line {lineno}: unknown key {key!r}")
            values[key] = _convert(types[key], val, f"{source}: line {lineno}")
        return cls(**values)

    @classmethod
    def from_file(cls, path) -> "Config":
        cfg = cls.from_text(Path(path).read_text(encoding="utf-8"), str(path))
        # relative paths resolve against the config file's directory
        base = Path(path).resolve().parent
        for name in ("train_path", "dev_path", "word_vectors", "checkpoint", "trace",
                     "dump_attention"):
            val = getattr(cfg, name)
            if val is not None and not Path(val).is_absolute():
                setattr(cfg, name, str(base / val))
        return cfg


def _convert(type_name, raw: str, where: str):
    type_name = str(type_name)
    if raw.lower() in ("none", "") and "Optional" in type_name:
        return None
    try:
        if "bool" in type_name:
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return raw.lower() in ("true", "1", "yes")
        if "int" in type_name:
            return int(raw)
        if "float" in type_name:
            return float(raw)
    except ValueError:
        raise FormatError(f"{where}: cannot parse {raw!r} as {type_name}") from None
    return raw
