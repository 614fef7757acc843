#  fusekit - multi-sensor fusion and state estimation toolkit
#  Copyright (c) 2026. All rights reserved.

import sys

from fusekit.cli import main

sys.exit(main())
