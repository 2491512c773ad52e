"""
Tests for the web API module.

Feature: bocoa
"""

import json

import pytest
from hypothesis import given, strategies as st, settings

from cache import RunStore
from core.configs import config_names
from core.testbed import TestFunctionId
from core.validation import SEED_ENV_VAR
from tests.test_base import TestBase
from web.app import create_app


class ApiTestBase(TestBase):
    """Creates an app backed by a temporary run store."""

    def setup_method(self):
        super().setup_method()
        self.store = RunStore(self.get_test_out_dir())
        self.app = create_app(run_store=self.store)
        self.client = self.app.test_client()

    def post(self, url, payload):
        return self.client.post(url, data=json.dumps(payload), content_type='application/json')


class TestCatalogEndpoints(ApiTestBase):
    """Tests for the read-only endpoints."""

    def test_health(self):
        response = self.client.get('/api/health')
        assert response.status_code == 200
        assert response.get_json() == {"status": "success", "runs": 0}

    def test_configs(self):
        data = self.client.get('/api/configs').get_json()
        assert [c["name"] for c in data["configs"]] == config_names()

    def test_functions(self):
        data = self.client.get('/api/functions').get_json()
        assert len(data["functions"]) == len(TestFunctionId)
        assert data["functions"][0]["fid"] == "f1"
        assert data["dims"] == [2, 3, 5, 10]


class TestErrorHandlers(ApiTestBase):
    """Tests for error responses."""

    def test_404_not_found(self):
        response = self.client.get('/api/nonexistent')
        assert response.status_code == 404
        assert response.get_json()["status"] == "error"

    def test_405_method_not_allowed(self):
        response = self.client.get('/api/run')
        assert response.status_code == 405

    def test_non_json_body(self):
        response = self.client.post('/api/run', data="not json", content_type='text/plain')
        assert response.status_code == 400


class TestRunEndpoint(ApiTestBase):
    """Tests for POST /api/run and GET /api/runs/<id>."""

    def test_random_run_is_stored(self):
        response = self.post('/api/run', {"config": "random", "function": "f1", "d": 2, "budget": 12})
        assert response.status_code == 200
        data = response.get_json()
        assert data["status"] == "success"
        assert len(data["values"]) == 12
        run_id = data["provenance"]["run_id"]
        assert self.store.run_ids() == [run_id]

        fetched = self.client.get(f'/api/runs/{run_id}').get_json()
        assert fetched["record"]["values"] == data["values"]
        assert self.client.get('/api/health').get_json()["runs"] == 1

    def test_bo_run(self):
        response = self.post('/api/run', {"config": "S", "function": "f1", "d": 2, "seed": 2})
        assert response.status_code == 200
        data = response.get_json()
        assert len(data["values"]) == 60
        assert len(data["iterations"]) == 60 - 6

    def test_seed_override(self, monkeypatch):
        monkeypatch.setenv(SEED_ENV_VAR, "5")
        data = self.post('/api/run', {"config": "random", "function": "f2", "d": 2, "budget": 5}).get_json()
        assert data["provenance"]["seed"] == 5

    @pytest.mark.parametrize("payload", [
        {"config": "Bogus", "function": "f1", "d": 2},
        {"config": "M", "function": "f77", "d": 2},
        {"config": "M", "function": "f1", "d": 4},
        {"config": "M", "function": "f1", "d": "2"},
        {"config": "M", "function": "f1", "d": True},
        {"config": "M", "function": "f1"},
        {"config": "random", "function": "f1", "d": 2, "budget": 0},
    ])
    def test_invalid_payloads(self, payload):
        response = self.post('/api/run', payload)
        assert response.status_code == 400
        assert response.get_json()["status"] == "error"

    def test_unknown_run(self):
        assert self.client.get('/api/runs/missing').status_code == 404

    def test_invalid_run_id(self):
        assert self.client.get('/api/runs/.hidden').status_code == 400


class TestRegressEndpoint(ApiTestBase):
    """Tests for POST /api/regress."""

    def test_regress(self):
        response = self.post('/api/regress', {"variant": "default", "function": "f1", "d": 2, "instances": 1})
        assert response.status_code == 200
        data = response.get_json()
        assert data["fid"] == "f1"
        assert data["n_instances"] == 1
        assert -1.0 <= data["q2_mean"] <= 1.0

    @pytest.mark.parametrize("payload", [
        {"variant": "linear", "function": "f1", "d": 2},
        {"variant": "default", "function": "f1", "d": 2, "instances": 0},
        {"variant": "default", "function": "f1", "d": 2, "instances": 16},
    ])
    def test_invalid(self, payload):
        assert self.post('/api/regress', payload).status_code == 400


class TestErtdEndpoint(ApiTestBase):
    """Tests for POST /api/ertd."""

    def test_example(self):
        data = self.post('/api/ertd', {"first_hits": [5, None], "max_evals": 90}).get_json()
        assert data["proportions"][3] == 0.0
        assert data["proportions"][4] == 0.5
        assert data["final"] == 0.5

    @given(st.lists(st.one_of(st.none(), st.integers(min_value=1, max_value=50)), min_size=1, max_size=20),
           st.integers(min_value=1, max_value=60))
    @settings(max_examples=30, deadline=None)
    def test_property_monotone_response(self, hits, max_evals):
        """
        **Feature: bocoa, Property 23: ERTD over the API**

        The API returns one non-decreasing proportion per evaluation.
        """
        data = self.post('/api/ertd', {"first_hits": hits, "max_evals": max_evals}).get_json()
        proportions = data["proportions"]
        assert len(proportions) == max_evals
        assert all(b >= a for a, b in zip(proportions, proportions[1:]))

    @pytest.mark.parametrize("payload", [
        {"first_hits": "5", "max_evals": 10},
        {"first_hits": [0], "max_evals": 10},
        {"first_hits": [1.5], "max_evals": 10},
        {"first_hits": [], "max_evals": 10},
        {"first_hits": [1]},
    ])
    def test_invalid(self, payload):
        assert self.post('/api/ertd', payload).status_code == 400
