"""MCP ツールモジュール."""
