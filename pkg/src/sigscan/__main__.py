import sys

from sigscan.cli import main

sys.exit(main())
