from flask import Flask, request, jsonify, Response
import json
import os
import logging
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

from main import ACTIONS, configure_logging, execute_command, get_report_store

configure_logging()
logger = logging.getLogger(__name__)

app = Flask(__name__)


def json_response(payload, status=200):
    # Payloads may carry Fractions and group elements
    return Response(json.dumps(payload, default=str), status=status, mimetype='application/json')


@app.route('/health')
def health():
    return jsonify({'status': 'ok', 'commands': list(ACTIONS)})


@app.route('/api/<command>', methods=['POST'])
def run_command(command):
    """Run one valkit command; the JSON body carries the same keys as the CLI flags"""
    data = request.get_json(silent=True) or {}
    if not isinstance(data, dict):
        return json_response({'success': False, 'error': 'request body must be a JSON object'}, 400)

    record = bool(data.pop('record', False))
    logger.info(f"🔍 API {command} {data.get('action', '')}")
    result = execute_command(command, data)

    if not result['success']:
        return json_response(result, 400)

    if record and command != 'history':
        try:
            result['report_id'] = get_report_store().save_report(command, data, result, data.get('seed'))
        except Exception as e:
            logger.error(f"❌ Could not record {command} report: {e}")
    return json_response(result)


@app.route('/api/history')
def history():
    limit = request.args.get('limit', 10, type=int)
    command = request.args.get('command')
    result = execute_command('history', {'action': 'list', 'limit': limit, 'command_filter': command})
    return json_response(result, 200 if result['success'] else 400)


if __name__ == '__main__':
    port = int(os.environ.get('PORT', 5000))
    app.run(host='0.0.0.0', port=port, debug=False)
