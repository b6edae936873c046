import json

from flask import Blueprint, jsonify, request

from engine.antipatterns import detect, pas_objective
from engine.errors import ConfigError, ModelError, ModelValidationError, RefactoringOptimizerError
from engine.fixtures import load_case_study
from engine.harness import solution_space_size
from engine.lqn import render as render_lqn, solve, to_lqn
from engine.model import lint, load_model, to_document
from engine.refactoring import target_counts
from engine.reliability import scenario_reliability, system_reliability

models_bp = Blueprint('models', __name__)


def _model_from_request(data):
    """Model from a {'case': name} or {'model': document} body"""
    if data is None:
        raise ModelError("request body must be JSON")
    if 'case' in data:
        return load_case_study(data['case'])
    if 'model' in data:
        return load_model(json.dumps(data['model']))
    raise ModelError("request needs either 'case' or 'model'")


def _error(e):
    body = {'error': str(e)}
    if isinstance(e, ModelValidationError):
        body['violations'] = e.violations
    return jsonify(body), 400


@models_bp.route('/api/fixtures/<case>')
def fixture(case):
    try:
        return jsonify(to_document(load_case_study(case)))
    except ConfigError as e:
        return jsonify({'error': str(e)}), 404


@models_bp.route('/api/validate', methods=['POST'])
def validate_model():
    try:
        model = _model_from_request(request.get_json(silent=True))
        return jsonify({
            'valid': True,
            'warnings': lint(model),
            'counts': {
                'components': len(model.components),
                'nodes': len(model.nodes),
                'links': len(model.links),
                'scenarios': len(model.scenarios),
                'messages': sum(len(s.messages) for s in model.scenarios),
            },
        })
    except (ModelError, ConfigError) as e:
        return _error(e)


@models_bp.route('/api/reliability', methods=['POST'])
def reliability():
    try:
        model = _model_from_request(request.get_json(silent=True))
        return jsonify({
            'reliability': system_reliability(model),
            'scenarios': {s.id: scenario_reliability(model, s.id) for s in model.scenarios},
        })
    except (ModelError, ConfigError) as e:
        return _error(e)


@models_bp.route('/api/space', methods=['POST'])
def space():
    data = request.get_json(silent=True)
    try:
        model = _model_from_request(data)
        length = int(data.get('length', 4))
        omega = solution_space_size(model, length)
        return jsonify({
            'length': length,
            'targets': target_counts(model),
            # exceeds the JSON number range for realistic models
            'omega': str(omega),
            'omega_float': float(omega),
        })
    except (ValueError, TypeError) as e:
        return jsonify({'error': f"invalid length: {e}"}), 400
    except RefactoringOptimizerError as e:
        return _error(e)


@models_bp.route('/api/analyze', methods=['POST'])
def analyze():
    data = request.get_json(silent=True)
    try:
        model = _model_from_request(data)
        fuzziness = float(data.get('fuzziness', 0.95))
        lqn = to_lqn(model)
        indices = solve(lqn)
        occurrences = detect(model, indices, fuzziness) if fuzziness > 0 else []
        return jsonify({
            'indices': indices.to_dict(),
            'antipatterns': [o.to_dict() for o in occurrences],
            'pas': pas_objective(occurrences),
            'lqn': render_lqn(lqn),
        })
    except (ValueError, TypeError) as e:
        return jsonify({'error': f"invalid fuzziness: {e}"}), 400
    except RefactoringOptimizerError as e:
        return _error(e)
    except Exception as e:
        return jsonify({'error': str(e)}), 500
