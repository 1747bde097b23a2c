"""HTTP で起動した MCP サーバーの統合テスト."""
import pytest
import httpx


class TestHttpMCPServer:
    """HTTP トランスポートの MCP サーバーの統合テスト."""

    @pytest.fixture
    def server_url(self, request):
        """サーバーの URL を取得する（コマンドライン引数から）."""
        url = request.config.getoption("--url", default=None)
        if not url:
            pytest.skip("--url option not provided")
        return url

    @pytest.fixture
    def headers(self, request):
        """認証ヘッダー（--token があれば Bearer）."""
        token = request.config.getoption("--token", default=None)
        return {"Authorization": f"Bearer {token}"} if token else {}

    @staticmethod
    def tool_call(name: str, arguments: dict, request_id: int = 1) -> dict:
        return {
            "jsonrpc": "2.0",
            "id": request_id,
            "method": "tools/call",
            "params": {"name": name, "arguments": arguments},
        }

    @pytest.mark.asyncio
    async def test_server_health(self, server_url, headers):
        """サーバーが応答することを確認する."""
        async with httpx.AsyncClient(timeout=30.0) as client:
            response = await client.get(f"{server_url}/mcp", headers=headers)
            # GET には 405 か 404 が返る
            assert response.status_code in [200, 404, 405, 406]

    @pytest.mark.asyncio
    async def test_list_theorems(self, server_url, headers):
        """定理 ID の一覧を取得する."""
        async with httpx.AsyncClient(timeout=30.0) as client:
            response = await client.post(
                f"{server_url}/mcp", json=self.tool_call("mcp_list_theorems", {}), headers=headers
            )
            assert response.status_code == 200
            result = response.json()
            assert "result" in result or "error" in result

            if "result" in result:
                data = result["result"]
                assert data["count"] == len(data["theorems"])

    @pytest.mark.asyncio
    async def test_table_constants(self, server_url, headers):
        """κ = √(5/3) の定数表を取得する."""
        async with httpx.AsyncClient(timeout=30.0) as client:
            response = await client.post(
                f"{server_url}/mcp", json=self.tool_call("mcp_table_constants", {}, 2), headers=headers
            )
            assert response.status_code == 200
            result = response.json()

            if "error" in result:
                pytest.skip(f"Tool call failed: {result['error']}")

            assert result["result"]["improved_node"] == pytest.approx(1.86, rel=5e-3)

    @pytest.mark.asyncio
    async def test_small_check(self, server_url, headers):
        """3 試行の検証がサーバー上で完了する."""
        async with httpx.AsyncClient(timeout=120.0) as client:
            response = await client.post(
                f"{server_url}/mcp",
                json=self.tool_call("mcp_check", {"theorem": "univariate", "config": {"trials": 3}}, 3),
                headers=headers,
            )
            assert response.status_code == 200
            result = response.json()

            if "error" in result:
                pytest.skip(f"Tool call failed: {result['error']}")

            assert result["result"]["summary"]["trials"] == 3


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
