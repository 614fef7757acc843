#  fusekit - multi-sensor fusion and state estimation toolkit
#  Copyright (c) 2026. All rights reserved.

__version__ = "1.0.0"
