#  fusekit - multi-sensor fusion and state estimation toolkit
#  Copyright (c) 2026. All rights reserved.

import sys
import traceback

from fusekit.cli import main
from fusekit.utils import FusekitProperties

if __name__ == '__main__':
    return_val = 0

    # trigger configuration properties to load
    FusekitProperties.get_property(None, None)

    try:
        return_val = main(sys.argv[1:])
    except Exception:
        info = sys.exc_info()
        sys.stderr.write("Uncaught exception:\n{0}: {1}\n".format(info[0], info[1]))
        traceback.print_tb(info[2], file=sys.stderr)
        return_val = 4
    finally:
        sys.exit(return_val)
