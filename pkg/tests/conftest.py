"""pytest の共通設定."""
import pytest

from pronylab.settings import reset_settings


def pytest_addoption(parser):
    """デプロイ済みサーバーの統合テスト用オプション."""
    parser.addoption("--url", action="store", default=None, help="MCP server base URL")
    parser.addoption("--token", action="store", default=None, help="Bearer token for the MCP server")


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch):
    """環境変数を消して設定のシングルトンを毎回作り直す."""
    monkeypatch.delenv("PRONYLAB_THREADS", raising=False)
    monkeypatch.delenv("LOG_LEVEL", raising=False)
    reset_settings()
    yield
    reset_settings()
