"""Print the run-configuration JSON schema."""

import json

from varfrac.config import CONFIG_SCHEMA

if __name__ == "__main__":
    print(json.dumps(CONFIG_SCHEMA, indent=2))
