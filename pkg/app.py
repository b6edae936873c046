import logging
import os

from flask import Flask
from flask_cors import CORS

from database import init_app as init_database

logger = logging.getLogger(__name__)

ENV_PREFIX = 'REFACTOR_'


def create_app(config=None):
    app = Flask(__name__)
    app.config['SECRET_KEY'] = os.environ.get('REFACTOR_SECRET_KEY', 'dev')
    app.config['OUTPUT_DIR'] = 'results'

    # REFACTOR_OUTPUT_DIR, REFACTOR_DATABASE, ... override the defaults
    for key, value in os.environ.items():
        if key.startswith(ENV_PREFIX) and key != 'REFACTOR_SECRET_KEY':
            app.config[key[len(ENV_PREFIX):]] = value
    if config:
        app.config.update(config)
    app.config.setdefault('DATABASE', os.path.join(app.config['OUTPUT_DIR'], 'ledger.db'))

    CORS(app)

    try:
        init_database(app)
    except Exception as e:
        logger.warning("Run ledger initialization failed: %s", e)
        logger.warning("API will continue without the run ledger")

    from routes.main import main_bp
    from routes.models import models_bp
    from routes.experiments import experiments_bp

    app.register_blueprint(main_bp)
    app.register_blueprint(models_bp, url_prefix='/models')
    app.register_blueprint(experiments_bp, url_prefix='/experiments')

    return app


if __name__ == '__main__':
    logging.basicConfig(level=logging.INFO)
    app = create_app()
    app.run(debug=True, host='127.0.0.1', port=5000)
