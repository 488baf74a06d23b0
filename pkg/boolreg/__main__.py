# SPDX-License-Identifier: LGPL-2.1+

import sys

from .main import main

sys.exit(main())
