import sys

from vtbound.cli import main

sys.exit(main())
