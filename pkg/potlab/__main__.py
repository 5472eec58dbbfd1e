import sys

from potlab.cli import main

sys.exit(main())
