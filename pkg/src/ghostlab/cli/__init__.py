from ghostlab.cli.config import RunConfig, load_config
from ghostlab.cli.main import main
