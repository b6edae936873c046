from flask import Blueprint, current_app, jsonify

from engine.config import CASE_STUDIES, EVOLUTION_LEVELS, FUZZINESS_LEVELS

main_bp = Blueprint('main', __name__)


@main_bp.route('/api/status')
def status():
    return jsonify({
        'status': 'running',
        'app': 'Architecture Refactoring Optimizer',
        'version': '1.0.0',
        'case_studies': list(CASE_STUDIES),
        'grid': {
            'brf': ['yes', 'no'],
            'fuzziness': [0 if f is None else f for f in FUZZINESS_LEVELS],
            'evolutions': list(EVOLUTION_LEVELS),
        },
        'output_dir': str(current_app.config['OUTPUT_DIR']),
    })
