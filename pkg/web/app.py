"""
Flask application for the bocoa web API.

This module provides a small JSON API over the optimization library:
single BO or random-search runs, single regression experiments and ERTD
computation. Runs are persisted through a RunStore.
"""

from flask import Flask, request, jsonify
from flask_cors import CORS
from typing import Any, Dict, Optional
import traceback

from cache.run_store import RunStore
from core.bo_loop import RANDOM_CONFIG_NAME, random_search_baseline, run
from core.configs import CONFIG_REGISTRY, UnknownConfigError, config_from_name, config_names
from core.formatting import format_for_web
from core.logging_config import ProgressLogger
from core.metrics import DegenerateMetricError, RegressionVariant, ertd, regression_experiment
from core.testbed import SUPPORTED_DIMS, TestFunctionId, UnknownFunctionError, make_instance
from core.validation import resolve_seed, ValidationResult


MAX_WEB_INSTANCES = 15


def _error(message: str, code: int = 400):
    return jsonify({"status": "error", "error": message}), code


def _int_field(data: Dict[str, Any], name: str, default: Optional[int] = None) -> int:
    value = data.get(name, default)
    if value is None:
        raise ValueError(f"Invalid input: '{name}' is required")
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"Invalid input: '{name}' must be an integer")
    return value


def _problem_fields(data: Dict[str, Any]):
    fid = TestFunctionId.parse(str(data.get("function", "")))
    d = _int_field(data, "d")
    if d not in SUPPORTED_DIMS:
        raise ValueError(f"Invalid dims: [{d}] not in {list(SUPPORTED_DIMS)}")
    return fid, d


def create_app(out_dir: str = "results", run_store: RunStore = None) -> Flask:
    """
    Create and configure the Flask application.

    Args:
        out_dir: Directory for run records when run_store is None
        run_store: Optional RunStore instance

    Returns:
        Configured Flask application
    """
    app = Flask(__name__)

    # Configure CORS for frontend
    CORS(app, resources={r"/api/*": {"origins": "*"}})

    if run_store is None:
        run_store = RunStore(out_dir)
    app.config['RUN_STORE'] = run_store

    # Initialize logging for web runs
    app.config['SESSION_LOGGER'] = ProgressLogger("web_session", log_dir=str(run_store.root / "logs"))

    @app.errorhandler(404)
    def not_found(error):
        return jsonify({
            "status": "error",
            "error": "Not found"
        }), 404

    @app.errorhandler(405)
    def method_not_allowed(error):
        return jsonify({
            "status": "error",
            "error": "Method not allowed"
        }), 405

    @app.errorhandler(Exception)
    def handle_exception(error):
        """Handle all uncaught exceptions."""
        from werkzeug.exceptions import HTTPException
        if isinstance(error, HTTPException):
            return jsonify({"status": "error", "error": error.description}), error.code
        app.logger.error(f"Unhandled exception: {error}")
        app.logger.error(traceback.format_exc())
        return jsonify({
            "status": "error",
            "error": "An unexpected error occurred",
            "details": str(error)
        }), 500

    @app.route('/api/health', methods=['GET'])
    def api_health():
        return jsonify({"status": "success", "runs": len(app.config['RUN_STORE'].run_ids())}), 200

    @app.route('/api/configs', methods=['GET'])
    def api_configs():
        """List the registered BO configurations."""
        return jsonify({
            "status": "success",
            "configs": [CONFIG_REGISTRY[name].to_dict() for name in config_names()],
        }), 200

    @app.route('/api/functions', methods=['GET'])
    def api_functions():
        return jsonify({
            "status": "success",
            "functions": [{
                "fid": fid.label,
                "title": fid.title,
                "group": fid.group.value,
                "separable": fid.separable,
            } for fid in TestFunctionId],
            "dims": list(SUPPORTED_DIMS),
        }), 200

    @app.route('/api/run', methods=['POST'])
    def api_run():
        """
        Execute one optimization run and store its record.

        Request body (JSON):
            - config (str): Configuration name, or "random"
            - function (str): Test function, e.g. "f1"
            - d (int): Dimension
            - instance_seed (int, optional): Instance seed (default 1)
            - seed (int, optional): Run seed (default 1, BOCOA_SEED overrides)
            - budget (int, optional): Budget of the random baseline (default 30 d)

        Examples:
            POST /api/run
            {"config": "S", "function": "f1", "d": 2}
        """
        data = request.get_json(silent=True)
        if data is None:
            return _error("Request body must be JSON")
        try:
            fid, d = _problem_fields(data)
            instance_seed = _int_field(data, "instance_seed", 1)
            seed = resolve_seed(_int_field(data, "seed", 1))
            if isinstance(seed, ValidationResult):
                return _error(seed.error_message)
            name = str(data.get("config", ""))
            instance = make_instance(fid, d, instance_seed)
            if name == RANDOM_CONFIG_NAME:
                budget = _int_field(data, "budget", 30 * d)
                if budget < 1:
                    return _error("Invalid input: 'budget' must be positive")
                result = random_search_baseline(instance, budget, seed)
            else:
                config = config_from_name(name, d)
                config.check_dimension(d)
                result = run(config, instance, seed)
        except (ValueError, UnknownFunctionError, UnknownConfigError) as e:
            return _error(str(e))

        app.config['RUN_STORE'].put(result)
        app.config['SESSION_LOGGER'].info(f"✅ Run {result.run_id}: best {result.best_value:.6g}",
                                             run_id=result.run_id)
        response = format_for_web(result)
        response["status"] = "success"
        return jsonify(response), 200

    @app.route('/api/runs/<run_id>', methods=['GET'])
    def api_get_run(run_id: str):
        try:
            record = app.config['RUN_STORE'].get(run_id)
        except ValueError as e:
            return _error(str(e))
        if record is None:
            return _error(f"Run {run_id} not found", 404)
        return jsonify({"status": "success", "record": record}), 200

    @app.route('/api/regress', methods=['POST'])
    def api_regress():
        """
        Run one regression experiment.

        Request body (JSON):
            - variant (str): GP variant, e.g. "default"
            - function (str): Test function
            - d (int): Dimension
            - instances (int, optional): Number of instances (default 3, max 15)
            - seed (int, optional): Experiment seed (default 1)
        """
        data = request.get_json(silent=True)
        if data is None:
            return _error("Request body must be JSON")
        try:
            variant = RegressionVariant(str(data.get("variant", "default")).lower())
            fid, d = _problem_fields(data)
            instances = _int_field(data, "instances", 3)
            if not 1 <= instances <= MAX_WEB_INSTANCES:
                return _error(f"Invalid instances: must be between 1 and {MAX_WEB_INSTANCES}")
            seed = _int_field(data, "seed", 1)
        except (ValueError, UnknownFunctionError) as e:
            return _error(str(e))

        entry = regression_experiment(variant, fid, d, instances, seed)
        return jsonify({
            "status": "success",
            "variant": entry.variant.value,
            "fid": entry.fid.label,
            "d": entry.d,
            "q2_mean": entry.q2_mean,
            "q2_sd": entry.q2_sd,
            "q2_raw_mean": entry.q2_raw_mean,
            "ks_mean": entry.ks_mean,
            "ks_sd": entry.ks_sd,
            "n_instances": entry.n_instances,
            "skipped": entry.skipped,
        }), 200

    @app.route('/api/ertd', methods=['POST'])
    def api_ertd():
        """
        ERTD of posted first-hit indices.

        Request body (JSON):
            - first_hits (list): 1-based first-hit index per problem, null if unsolved
            - max_evals (int): Length of the evaluation axis
        """
        data = request.get_json(silent=True)
        if data is None:
            return _error("Request body must be JSON")
        hits = data.get("first_hits")
        if not isinstance(hits, list):
            return _error("Invalid input: 'first_hits' must be a list")
        if any(h is not None and (isinstance(h, bool) or not isinstance(h, int) or h < 1) for h in hits):
            return _error("Invalid input: first hits must be positive integers or null")
        try:
            curve = ertd(hits, _int_field(data, "max_evals"))
        except (ValueError, DegenerateMetricError) as e:
            return _error(str(e))
        return jsonify({
            "status": "success",
            "evals": curve.evals.tolist(),
            "proportions": curve.proportions.tolist(),
            "final": curve.final,
        }), 200

    return app
