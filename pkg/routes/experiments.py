import json
from pathlib import Path

import pandas as pd
from flask import Blueprint, current_app, jsonify, request

from database import get_db, list_runs, run_summary
from engine.config import CASE_STUDIES

experiments_bp = Blueprint('experiments', __name__)

TABLES = {
    'indicators': 'indicators.csv',
    'shares': 'shares.csv',
    'improvements': 'improvements.csv',
    'reference': 'reference_front.csv',
}


@experiments_bp.route('/api/runs')
def runs():
    try:
        conn = get_db()
        return jsonify({
            'runs': list_runs(conn, request.args.get('case'), request.args.get('status')),
            'summary': run_summary(conn),
        })
    except Exception as e:
        return jsonify({'error': str(e)}), 500


@experiments_bp.route('/api/<case>/<table>')
def table(case, table):
    if case not in CASE_STUDIES:
        return jsonify({'error': f"unknown case study '{case}'"}), 404
    if table not in TABLES:
        return jsonify({'error': f"unknown table '{table}'", 'tables': sorted(TABLES)}), 404
    path = Path(current_app.config['OUTPUT_DIR']) / case / TABLES[table]
    if not path.exists():
        return jsonify({'error': f"no {table} for case '{case}' yet"}), 404
    frame = pd.read_csv(path, float_precision='round_trip')
    # to_json maps NaN to null
    return current_app.response_class(
        json.dumps({'case': case, 'table': table, 'rows': json.loads(frame.to_json(orient='records'))}),
        mimetype='application/json',
    )
