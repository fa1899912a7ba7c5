import sys

from onebitmiso.cli import main

sys.exit(main())
