#  fusekit - multi-sensor fusion and state estimation toolkit
#  Copyright (c) 2026. All rights reserved.
import os
from pathlib import Path

project_path = Path(os.path.dirname(os.path.realpath(__file__))).parent
