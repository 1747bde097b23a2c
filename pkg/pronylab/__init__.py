"""超解像の安定性を検証するための数値実験ライブラリ."""

__version__ = "0.1.0"
