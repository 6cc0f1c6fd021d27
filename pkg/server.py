import asyncio
from quart import Quart, jsonify, request
from cvqed.codecs.report_writers import to_jsonable
from cvqed.commands import cmd_groundstate, cmd_renorm, cmd_scatter
from cvqed.common.constants import VERSION
from cvqed.common.errors import BudgetExceeded, ConfigError, CvqedError
from cvqed.common.logging import get_logger
from cvqed.config import RunConfig
from cvqed.lattice import LatticeConfig, dispersion_table
from cvqed.scattering import thread_count

L = get_logger(__name__)
app = Quart(__name__)

# Bounds concurrent heavy jobs; created lazily inside the running loop.
job_semaphore: asyncio.Semaphore = None


def _semaphore() -> asyncio.Semaphore:
    global job_semaphore
    if job_semaphore is None:
        job_semaphore = asyncio.Semaphore(thread_count())
    return job_semaphore


def _error(e: Exception, what: str):
    if isinstance(e, ConfigError):
        status = 400
    elif isinstance(e, BudgetExceeded):
        status = 503
    elif isinstance(e, CvqedError):
        status = 422
    else:
        status = 500
    L.error(f"Error {what}: {e}")
    return jsonify({"status": "error", "message": f"Failed {what}: {e}"}), status


async def _config_from_body() -> RunConfig:
    body = await request.get_json(silent=True)
    if body is not None and not isinstance(body, dict):
        raise ConfigError("Request body must be a JSON object")
    return RunConfig(body or {})


@app.route("/api/version", methods=["GET"])
async def get_version():
    return jsonify({"version": VERSION})


@app.route("/api/dispersion", methods=["GET"])
async def get_dispersion():
    try:
        try:
            dim = int(request.args.get("dim", 1))
            extent = int(request.args.get("extent", 2))
            mass = float(request.args.get("mass", 1.0))
        except ValueError as e:
            raise ConfigError(f"Malformed query parameter: {e}") from e
        cfg = LatticeConfig(dim, extent, mass)
        return jsonify(to_jsonable({"status": "success", "dispersion": dispersion_table(cfg)}))
    except Exception as e:
        return _error(e, "computing the dispersion")


@app.route("/api/renorm", methods=["POST"])
async def post_renorm():
    try:
        body = await request.get_json(silent=True) or {}
        if not isinstance(body, dict):
            raise ConfigError("Request body must be a JSON object")
        section = {key: body[key] for key in ("constants", "m", "kernel", "literal", "spacing") if key in body}
        config = RunConfig({"renorm": section})
        async with _semaphore():
            result = await asyncio.to_thread(cmd_renorm, config)
        return jsonify(to_jsonable({"status": "success", **result.document}))
    except Exception as e:
        return _error(e, "evaluating constants")


@app.route("/api/groundstate", methods=["POST"])
async def post_groundstate():
    try:
        config = await _config_from_body()
        async with _semaphore():
            result = await asyncio.to_thread(cmd_groundstate, config, True)
        document = {
            "status": "success",
            **result.document,
            "circuit": result.artifacts.get("groundstate_circuit.txt"),
        }
        return jsonify(to_jsonable(document))
    except Exception as e:
        return _error(e, "preparing the ground state")


@app.route("/api/scatter", methods=["POST"])
async def post_scatter():
    try:
        config = await _config_from_body()
        async with _semaphore():
            result = await cmd_scatter(config)
        return jsonify(to_jsonable({"status": "success", **result.document}))
    except Exception as e:
        return _error(e, "running the scattering pipeline")


# To run this application, you will need an ASGI server like Hypercorn.
# Example: hypercorn server:app
if __name__ == "__main__":
    L.info("Starting Quart server...")
    app.run(host="127.0.0.1", port=8053, debug=True)
