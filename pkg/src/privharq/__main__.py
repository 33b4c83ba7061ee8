import sys

from privharq.cli import main

sys.exit(main())
